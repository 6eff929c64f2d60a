"""Concentration bounds for vector-valued Lipschitz functions and their
empirical validation on finite Markov chains."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ConclabError,
    DataError,
    DimensionError,
    InternalError,
    ModelError,
    ParameterError,
    PreconditionError,
)
from .measures import (  # noqa: E402
    FiniteMeasure,
    kl_divergence,
    lp_norm,
    nonstationarity_index,
    tau_p_empirical,
    tau_p_upper,
    tv_distance,
)
from .markov import (  # noqa: E402
    MarkovChainModel,
    dobrushin,
    expected_deviation,
    plugin_estimator,
    plugin_lipschitz,
    simulate,
    stationary,
)
from .transport import (  # noqa: E402
    Coupling,
    FiniteMetricSpace,
    chain_path_law,
    hamming_space,
    tci_check,
    w1_exact,
)
from .bounds import (  # noqa: E402
    ChainBoundInputs,
    ConcentrationInputs,
    approach1_bound,
    approach1_complexity,
    approach2_bound,
    approach2_complexity,
    approach3_bound,
    approach3_complexity,
    covering_bound,
    gaussian_bound,
    marton_sigma2,
    mgf_check,
    optimize_approach3_bound,
    optimize_approach3_complexity,
    paulin_lift,
    vector_tail_bound,
)
from .experiments import (  # noqa: E402
    TailReport,
    compare_bounds,
    complexity_table,
    exact_tail,
    mc_tail,
)
