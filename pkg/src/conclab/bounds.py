"""Closed-form tail bounds and sample-complexity formulas.

Two families live here:

* the vector-valued concentration bound for a Lipschitz map into R^k under a
  transportation cost inequality with constant ``sigma2`` (a covering branch,
  a Gaussian-smoothing branch and their minimum), and
* the three tail bounds for the plug-in stationary-measure estimator of a
  contracting Markov chain, with the matching sample-size requirements.

The chain bounds are coded directly from their closed forms rather than
composed from the generic helpers, so the two routes can check each other.
Probability bounds are available raw (possibly above 1) and clamped to
``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._streams import check_seed, map_blocks
from .errors import ModelError, ParameterError
from .markov import (
    EXACT_PATH_LIMIT,
    MarkovChainModel,
    enumerate_paths,
    expected_plugin,
    num_paths,
    occupation_counts,
    path_probabilities,
    plugin_lipschitz,
    simulate_batch,
)
from .measures import lp_norm, tau_p_upper

ETA_MIN = 1e-6
GOLDEN_ITERATIONS = 200
GRID_POINTS = 1000
R_MARGIN = 1e-9


# ---------------------------------------------------------------------------
# input bundles


@dataclass(frozen=True)
class ConcentrationInputs:
    """Parameters of the vector-valued concentration bound.

    ``eta`` is the net parameter in ``(0, 1]``; ``tau_p`` rescales the
    threshold for deviations measured in an l_p norm (1 for l_2).
    """

    k: int
    sigma2: float
    lip: float
    eps: float
    eta: float = 0.5
    tau_p: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        for name in ("sigma2", "lip", "tau_p"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ParameterError(f"eps must be >= 0, got {self.eps!r}")
        if not (0 < self.eta <= 1):
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta!r}")

    def with_eta(self, eta: float) -> "ConcentrationInputs":
        return ConcentrationInputs(self.k, self.sigma2, self.lip, self.eps, eta, self.tau_p)

    @property
    def scale(self) -> float:
        """``sigma2 * lip**2 * tau_p**2``, the variance proxy of the rescaled problem."""
        return self.sigma2 * self.lip**2 * self.tau_p**2


@dataclass(frozen=True)
class ChainBoundInputs:
    """Parameters shared by the three chain tail bounds.

    With ``stationary`` set the chain is declared to start from ``pi``; the
    bounds then skip the nonstationary lift and report the base bound
    ``(lifted / index)**2`` directly.
    """

    K: int
    n: int
    r: float
    p: float
    eps: float
    index: float = 1.0
    delta: float = 0.05
    stationary: bool = False

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if not (0 <= self.r < 1):
            raise ParameterError(f"Dobrushin coefficient r must lie in [0, 1), got {self.r!r}")
        if not (self.p >= 1):
            raise ParameterError(f"norm index p must be >= 1, got {self.p!r}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ParameterError(f"eps must be >= 0, got {self.eps!r}")
        if not (self.index >= 1):
            raise ParameterError(f"nonstationarity index must be >= 1, got {self.index!r}")
        if not (0 < self.delta < 1):
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.stationary and self.index != 1:
            raise ParameterError(f"a stationary start has index 1, got {self.index!r}")

    @property
    def inv_p(self) -> float:
        return 0.0 if math.isinf(self.p) else 1.0 / self.p


def _unlift(inp: ChainBoundInputs, log_lifted: float) -> float:
    # invert index * sqrt(base) when the chain starts from pi
    return 2.0 * (log_lifted - math.log(inp.index)) if inp.stationary else log_lifted


def _log_delta(inp: ChainBoundInputs) -> float:
    # requiring base <= delta is requiring the lifted form <= sqrt(delta)
    return 0.5 * math.log(inp.delta) if inp.stationary else math.log(inp.delta)


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _exp(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


# ---------------------------------------------------------------------------
# one-dimensional minimization over the net parameter


def minimize_eta(
    objective: Callable[[float], float], lo: float = ETA_MIN, hi: float = 1.0
) -> tuple[float, float]:
    """Minimize ``objective`` over ``[lo, hi]``; returns ``(eta, value)``.

    The log-bounds minimized here can have an interior local minimum and a
    competing minimum at ``eta = 1``, so a mixed linear/geometric grid picks
    the basin and golden-section search refines inside the neighbouring
    grid cells.
    """
    grid = np.unique(
        np.concatenate([np.linspace(lo, hi, GRID_POINTS), np.geomspace(lo, hi, GRID_POINTS)])
    )
    values = np.array([objective(float(x)) for x in grid])
    values = np.where(np.isnan(values), math.inf, values)
    i = int(np.argmin(values))
    best_x, best_v = float(grid[i]), float(values[i])
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, len(grid) - 1)])
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(GOLDEN_ITERATIONS):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = objective(d)
    for x, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


# ---------------------------------------------------------------------------
# vector-valued concentration bound


def log_covering_bound(inp: ConcentrationInputs) -> float:
    t = inp.eps * (1.0 - inp.eta)
    return inp.k * math.log1p(2.0 / inp.eta) - t * t / (2.0 * inp.scale)


def covering_bound(inp: ConcentrationInputs) -> float:
    """``(1 + 2/eta)**k * exp(-(eps/tau)**2 (1-eta)**2 / (2 sigma2 lip**2))``.

    The prefactor is the cardinality bound of an eta-net of the unit sphere.
    """
    return _exp(log_covering_bound(inp))


def log_gaussian_bound(inp: ConcentrationInputs) -> float:
    return 0.5 * inp.k * math.log(2.0) - inp.eps**2 / (4.0 * inp.scale)


def gaussian_bound(inp: ConcentrationInputs) -> float:
    """``2**(k/2) * exp(-(eps/tau)**2 / (4 sigma2 lip**2))``."""
    return _exp(log_gaussian_bound(inp))


class VectorTailBound(NamedTuple):
    raw: float
    clamped: float
    eta: float
    branch: str


def vector_tail_bound(inp: ConcentrationInputs, optimize_eta: bool = True) -> VectorTailBound:
    """Minimum of the covering and Gaussian branches.

    With ``optimize_eta`` the covering branch is evaluated at the net
    parameter minimizing it; otherwise ``inp.eta`` is used as given.
    """
    if optimize_eta:
        eta, _ = minimize_eta(lambda e: log_covering_bound(inp.with_eta(e)))
        inp = inp.with_eta(eta)
    cov, gau = covering_bound(inp), gaussian_bound(inp)
    raw, branch = (cov, "covering") if cov <= gau else (gau, "gaussian")
    return VectorTailBound(raw, _clamp(raw), inp.eta, branch)


# ---------------------------------------------------------------------------
# chain ingredients


def marton_sigma2(n: int, r: float) -> float:
    """TCI constant ``n / (4 (1-r)**2)`` of a length-``n`` path of an r-contracting chain.

    With this value ``sqrt(2 sigma2 D)`` equals ``sqrt(n D / (2 (1-r)**2))``
    under the Hamming metric on paths.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if not (0 <= r < 1):
        raise ParameterError(f"Dobrushin coefficient r must lie in [0, 1), got {r!r}")
    return n / (4.0 * (1.0 - r) ** 2)


def paulin_lift(base_tail: float, index: float, clamp: bool = True) -> float:
    """Tail bound for a non-stationary start: ``index * sqrt(base_tail)``."""
    if not (0 <= base_tail <= 1) and clamp:
        raise ParameterError(f"base_tail must lie in [0, 1], got {base_tail!r}")
    if not (index >= 1):
        raise ParameterError(f"index must be >= 1, got {index!r}")
    value = index * math.sqrt(base_tail)
    return _clamp(value) if clamp else value


# ---------------------------------------------------------------------------
# approach 1: scalar bound on the norm of the deviation


def approach1_bound(inp: ChainBoundInputs, expected_dev: float, clamp: bool = True) -> float | None:
    """``index * exp(-2**(-2/p) n (eps - E)**2 (1-r)**2)``; ``None`` when ``eps <= E``."""
    if expected_dev < 0:
        raise ParameterError(f"expected_dev must be >= 0, got {expected_dev!r}")
    gap = inp.eps - expected_dev
    if gap <= 0:
        return None
    log_b = math.log(inp.index) - 2.0 ** (-2.0 * inp.inv_p) * inp.n * gap**2 * (1 - inp.r) ** 2
    value = _exp(_unlift(inp, log_b))
    return _clamp(value) if clamp else value


def _over_square(num: float, denom: float) -> float:
    # num / denom**2 without underflowing denom**2 for tiny eps
    with np.errstate(over="ignore", divide="ignore"):
        scale = np.float64(1.0) / denom
        return float(num * scale * scale)


def approach1_complexity(inp: ChainBoundInputs, expected_dev: float) -> float | None:
    if expected_dev < 0:
        raise ParameterError(f"expected_dev must be >= 0, got {expected_dev!r}")
    gap = inp.eps - expected_dev
    if gap <= 0:
        return None
    lead = 2.0 ** (2.0 * inp.inv_p) * (math.log(inp.index) - _log_delta(inp))
    return _over_square(lead, gap * (1 - inp.r))


# ---------------------------------------------------------------------------
# approach 2: union bound over coordinates


def approach2_bound(inp: ChainBoundInputs, clamp: bool = True) -> float:
    """``sqrt(2K) * index * exp(-K**(-2/p) n eps**2 (1-r)**2)``."""
    log_b = (
        0.5 * math.log(2.0 * inp.K)
        + math.log(inp.index)
        - inp.K ** (-2.0 * inp.inv_p) * inp.n * inp.eps**2 * (1 - inp.r) ** 2
    )
    value = _exp(_unlift(inp, log_b))
    return _clamp(value) if clamp else value


def approach2_complexity(inp: ChainBoundInputs) -> float:
    if inp.eps <= 0:
        raise ParameterError("sample complexity needs eps > 0")
    log_terms = 0.5 * math.log(2.0 * inp.K) + math.log(inp.index) - _log_delta(inp)
    lead = inp.K ** (2.0 * inp.inv_p) * log_terms
    return _over_square(lead, inp.eps * (1 - inp.r))


# ---------------------------------------------------------------------------
# approach 3: the vector-valued bound


def _check_eta_tau(eta: float, tau: float):
    if not (0 < eta <= 1):
        raise ParameterError(f"eta must lie in (0, 1], got {eta!r}")
    if not (tau > 0 and math.isfinite(tau)):
        raise ParameterError(f"tau must be a positive finite number, got {tau!r}")


def _resolve_tau(inp: ChainBoundInputs, tau: float | None) -> float:
    return tau_p_upper(inp.p, inp.K) if tau is None else tau


def log_approach3_bound(inp: ChainBoundInputs, eta: float, tau: float) -> float:
    _check_eta_tau(eta, tau)
    lifted = (
        math.log(inp.index)
        + 0.5 * inp.K * math.log1p(2.0 / eta)
        - inp.n * inp.eps**2 * (1 - eta) ** 2 * (1 - inp.r) ** 2 / (2.0 * tau**2)
    )
    return _unlift(inp, lifted)


def approach3_bound(
    inp: ChainBoundInputs, eta: float, tau: float | None = None, clamp: bool = True
) -> float:
    """``index * (1 + 2/eta)**(K/2) * exp(-n eps**2 (1-eta)**2 (1-r)**2 / (2 tau**2))``.

    ``tau`` defaults to the norm-equivalence bound ``tau_p_upper(p, K)``.
    """
    value = _exp(log_approach3_bound(inp, eta, _resolve_tau(inp, tau)))
    return _clamp(value) if clamp else value


def optimize_approach3_bound(
    inp: ChainBoundInputs, tau: float | None = None, clamp: bool = True
) -> tuple[float, float]:
    """Approach-3 bound at the minimizing net parameter; returns ``(bound, eta)``."""
    tau = _resolve_tau(inp, tau)
    eta, log_b = minimize_eta(lambda e: log_approach3_bound(inp, e, tau))
    value = _exp(log_b)
    return (_clamp(value) if clamp else value), eta


def approach3_complexity(inp: ChainBoundInputs, eta: float, tau: float | None = None) -> float:
    tau = _resolve_tau(inp, tau)
    _check_eta_tau(eta, tau)
    if inp.eps <= 0:
        raise ParameterError("sample complexity needs eps > 0")
    if eta == 1:
        return math.inf
    bracket = (
        0.5 * inp.K * math.log1p(2.0 / eta)
        + math.log(inp.index)
        - _log_delta(inp)
    )
    return _over_square(2.0 * tau**2 * bracket, inp.eps * (1 - eta) * (1 - inp.r))


def optimize_approach3_complexity(
    inp: ChainBoundInputs, tau: float | None = None
) -> tuple[float, float]:
    """Smallest approach-3 sample size over the net parameter; returns ``(n, eta)``."""
    tau = _resolve_tau(inp, tau)
    eta, log_n = minimize_eta(
        lambda e: math.log(approach3_complexity(inp, e, tau)) if e < 1 else math.inf
    )
    return math.exp(log_n), eta


def approach_rows(
    inp: ChainBoundInputs,
    eps_grid: Sequence[float],
    expected_dev: float,
    tau: float | None = None,
) -> list[dict]:
    """Rows ``eps, approach1, approach2, approach3, eta_used, clamped_flags`` for CSV output.

    ``clamped_flags`` holds one character per approach: ``1`` if the raw
    bound exceeded 1, ``0`` if not, ``-`` if the bound does not apply.
    """
    rows = []
    for eps in eps_grid:
        cur = replace(inp, eps=eps)
        raw1 = approach1_bound(cur, expected_dev, clamp=False)
        raw2 = approach2_bound(cur, clamp=False)
        raw3, eta = optimize_approach3_bound(cur, tau, clamp=False)
        flags = "".join(
            "-" if v is None else ("1" if v > 1 else "0") for v in (raw1, raw2, raw3)
        )
        rows.append(
            {
                "eps": eps,
                "approach1": None if raw1 is None else _clamp(raw1),
                "approach2": _clamp(raw2),
                "approach3": _clamp(raw3),
                "eta_used": eta,
                "clamped_flags": flags,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# sub-Gaussian marginals of the plug-in estimator


def dual_exponent(p: float) -> float:
    if not (p >= 1):
        raise ParameterError(f"norm index p must be >= 1, got {p!r}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass
class MGFRow:
    lam: float
    empirical: float
    bound: float
    stderr: float
    violation: bool

    @property
    def margin(self) -> float:
        return self.bound - self.empirical


@dataclass
class MGFReport:
    rows: list[MGFRow]
    exact: bool
    sigma2: float
    lip: float
    h_dual_norm: float
    q: float
    seed: int

    @property
    def num_violations(self) -> int:
        return sum(row.violation for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "exact": self.exact,
            "sigma2": self.sigma2,
            "lip": self.lip,
            "h_dual_norm": self.h_dual_norm,
            "q": self.q,
            "seed": self.seed,
            "num_violations": self.num_violations,
            "rows": [
                {
                    "lambda": row.lam,
                    "empirical": row.empirical,
                    "bound": row.bound,
                    "margin": row.margin,
                    "stderr": row.stderr,
                    "violation": row.violation,
                }
                for row in self.rows
            ],
        }


def mgf_check(
    chain: MarkovChainModel,
    n: int,
    p: float,
    h: Sequence[float],
    lambdas: Sequence[float],
    trials: int = 100_000,
    seed: int = 0,
) -> MGFReport:
    """Compare the MGF of ``<h, pi_hat - E pi_hat>`` with its sub-Gaussian bound.

    The bound is ``exp(lam**2 ||h||_q**2 sigma2 L**2 / 2)`` with
    ``sigma2 = marton_sigma2(n, r)`` and ``L = plugin_lipschitz(p, n)``.  The
    expectation is exact over all paths when ``K**n <= 4096`` and a Monte Carlo
    mean otherwise; ``E pi_hat`` is always exact, from the marginal laws
    ``rho P**k``.  A Monte Carlo violation needs an excess over 3 standard
    errors.
    """
    h = np.asarray(h, dtype=float).ravel()
    if h.size != chain.K:
        raise ParameterError(f"h has length {h.size}, chain has K={chain.K}")
    q = dual_exponent(p)
    h_norm = lp_norm(h, q)
    if h_norm <= 0:
        raise ParameterError("h must be non-zero")
    r = chain.r
    if r >= 1 - R_MARGIN:
        raise ModelError(f"chain is not contracting (Dobrushin coefficient r={r})")
    seed = check_seed(seed)
    sigma2 = marton_sigma2(n, r)
    lip = plugin_lipschitz(p, n)
    mean = expected_plugin(chain, n)
    lams = [float(x) for x in lambdas]

    exact = num_paths(chain.K, n) <= EXACT_PATH_LIMIT
    if exact:
        paths = enumerate_paths(chain.K, n)
        prob = path_probabilities(chain, paths)
        proj = (occupation_counts(paths, chain.K) / n - mean) @ h
    else:
        if trials < 1:
            raise ParameterError(f"trials must be >= 1, got {trials!r}")

        def block(rng, size):
            paths = simulate_batch(chain, n, size, rng)
            return (occupation_counts(paths, chain.K) / n - mean) @ h

        proj = np.concatenate(map_blocks(block, trials, seed, key=(3,)))

    rows = []
    for lam in lams:
        bound = math.exp(lam**2 * h_norm**2 * sigma2 * lip**2 / 2.0)
        vals = np.exp(lam * proj)
        if exact:
            emp, se = math.fsum(prob * vals), 0.0
            bad = emp > bound * (1 + 1e-12)
        else:
            emp = math.fsum(vals) / len(vals)
            se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
            bad = emp - bound > 3 * se
        rows.append(MGFRow(lam, emp, bound, se, bool(bad)))
    return MGFReport(rows, exact, sigma2, lip, h_norm, q, seed)
