"""Empirical validation of the chain tail bounds.

Exact tail probabilities come from enumerating every trajectory; beyond the
enumeration cap Monte Carlo estimates with Clopper-Pearson intervals stand in.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, stats

from . import __version__
from ._streams import check_seed, map_blocks
from .bounds import (
    R_MARGIN,
    ChainBoundInputs,
    approach1_bound,
    approach1_complexity,
    approach2_bound,
    approach2_complexity,
    approach3_complexity,
    optimize_approach3_bound,
    optimize_approach3_complexity,
)
from .errors import ModelError, ParameterError
from .markov import (
    EXACT_PATH_LIMIT,
    PATH_CAP,
    MarkovChainModel,
    enumerate_paths,
    expected_deviation,
    num_paths,
    occupation_counts,
    path_probabilities,
    simulate_batch,
)
from .measures import lp_norm_rows, nonstationarity_index, tau_p_upper, tv_distance

ROUND_DIGITS = 12
CP_LEVEL = 0.99
TAIL_COLUMNS = ["eps", "empirical", "half_width", "exact_flag", "bound1", "bound2", "bound3", "eta_used"]


def _tail_event(dev: np.ndarray, eps: float) -> np.ndarray:
    # rounding keeps exact-rational deviations such as 0.25 from flipping
    return np.round(dev, ROUND_DIGITS) >= round(eps, ROUND_DIGITS)


def _deviations(chain: MarkovChainModel, paths: np.ndarray, n: int, p: float) -> np.ndarray:
    return lp_norm_rows(occupation_counts(paths, chain.K) / n - chain.pi.weights, p)


def _check_tail_args(n: int, p: float, eps: float):
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if not (p >= 1):
        raise ParameterError(f"norm index p must be >= 1, got {p!r}")
    if not (eps >= 0 and math.isfinite(eps)):
        raise ParameterError(f"eps must be >= 0, got {eps!r}")


def exact_tail(
    chain: MarkovChainModel, n: int, p: float, eps: float, use_stationary: bool = False
) -> float:
    """``P(||pi_hat - pi||_p >= eps)`` summed over all ``K**n`` trajectories.

    Paths are weighted by the law of the chain started from ``rho``, or from
    ``pi`` when ``use_stationary`` is set.
    """
    _check_tail_args(n, p, eps)
    paths = enumerate_paths(chain.K, n, cap=PATH_CAP)
    init = chain.pi if use_stationary else chain.rho
    prob = path_probabilities(chain, paths, initial=init)
    hit = _tail_event(_deviations(chain, paths, n, p), eps)
    return min(1.0, math.fsum(prob[hit]))


def clopper_pearson(successes: int, trials: int, level: float = CP_LEVEL) -> tuple[float, float]:
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def mc_tail(
    chain: MarkovChainModel,
    n: int,
    p: float,
    eps: float,
    trials: int = 100_000,
    seed: int = 0,
    use_stationary: bool = False,
    stream: int = 0,
) -> tuple[float, float]:
    """Monte Carlo tail estimate with a 99% Clopper-Pearson half-width.

    The half-width is the larger distance from the estimate to either end of
    the interval.  ``stream`` separates independent runs sharing one seed.
    """
    _check_tail_args(n, p, eps)
    if trials < 1000:
        raise ParameterError(f"trials must be >= 1000, got {trials!r}")
    check_seed(seed)
    init = chain.pi if use_stationary else chain.rho

    def block(rng, size):
        paths = simulate_batch(chain, n, size, rng, initial=init)
        return int(_tail_event(_deviations(chain, paths, n, p), eps).sum())

    hits = sum(map_blocks(block, trials, seed, key=(4, stream)))
    est = hits / trials
    lo, hi = clopper_pearson(hits, trials)
    return est, max(est - lo, hi - est)


@dataclass
class TailReport:
    eps: float
    empirical: float
    half_width: float
    exact_flag: bool
    bound1: float | None
    bound2: float
    bound3: float
    eta_used: float
    n: int
    K: int
    p: float
    r: float
    index: float
    seed: int

    def bounds(self) -> list[float]:
        return [b for b in (self.bound1, self.bound2, self.bound3) if b is not None]


def _contraction(chain: MarkovChainModel) -> float:
    r = chain.r
    if r >= 1 - R_MARGIN:
        raise ModelError(f"chain is not contracting: Dobrushin coefficient r={r!r}")
    return r


def compare_bounds(
    chain: MarkovChainModel,
    n: int,
    p: float,
    eps_grid: Sequence[float],
    trials: int = 100_000,
    seed: int = 0,
    use_stationary: bool = False,
) -> list[TailReport]:
    """Tail probability next to the three bounds for every ``eps`` in the grid.

    The tail is exact when ``K**n <= 4096``.  Approach 1 uses the exact mean
    deviation when affordable, else its Monte Carlo 99% upper confidence
    limit.  Approach 3 uses the optimal net parameter and
    ``tau = tau_p_upper(p, K)``.  A non-stationary start pays the
    nonstationarity lift; a stationary one uses the base bounds directly.
    """
    seed = check_seed(seed)
    pi = chain.pi
    r = _contraction(chain)
    stationary_start = use_stationary or tv_distance(chain.rho, pi) <= 1e-12
    index = 1.0 if stationary_start else nonstationarity_index(chain.rho, pi)
    if math.isinf(index):
        raise ModelError("initial measure is not absolutely continuous w.r.t. pi")
    exact = num_paths(chain.K, n) <= EXACT_PATH_LIMIT
    dev_est, dev_half = expected_deviation(chain, n, p, trials=max(trials, 100), seed=seed)
    expected_dev = dev_est + dev_half
    tau = tau_p_upper(p, chain.K)

    reports = []
    for i, eps in enumerate(eps_grid):
        eps = float(eps)
        if exact:
            emp, half = exact_tail(chain, n, p, eps, use_stationary=stationary_start), 0.0
        else:
            emp, half = mc_tail(chain, n, p, eps, trials, seed, stationary_start, stream=i)
        inp = ChainBoundInputs(chain.K, n, r, p, eps, index, stationary=stationary_start)
        b3, eta = optimize_approach3_bound(inp, tau)
        reports.append(
            TailReport(
                eps=eps,
                empirical=emp,
                half_width=half,
                exact_flag=exact,
                bound1=approach1_bound(inp, expected_dev),
                bound2=approach2_bound(inp),
                bound3=b3,
                eta_used=eta,
                n=n,
                K=chain.K,
                p=p,
                r=r,
                index=index,
                seed=seed,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# sample-complexity comparison


def parse_index_rule(rule) -> tuple[str, float]:
    """Normalize ``"power:m"``, ``"exp"`` or ``"value:v"`` (or the tuple forms)."""
    if isinstance(rule, str):
        kind, _, arg = rule.partition(":")
        rule = (kind, float(arg)) if arg else (kind,)
    kind = rule[0]
    if kind == "exp" and len(rule) == 1:
        return "exp", 0.0
    if kind in ("power", "value") and len(rule) == 2:
        value = float(rule[1])
        if kind == "value" and not value >= 1:
            raise ParameterError(f"explicit index must be >= 1, got {value!r}")
        if kind == "power" and not value >= 0:
            raise ParameterError(f"power-law exponent m must be >= 0, got {value!r}")
        return kind, value
    raise ParameterError(f"index rule must be power:m, exp or value:v, got {rule!r}")


def index_for(K: int, rule: tuple[str, float]) -> float:
    kind, value = rule
    if kind == "power":
        return K ** (value / 2.0)
    if kind == "exp":
        return math.exp(K / 2.0)
    return value


def envelope_complexity(inp: ChainBoundInputs) -> float:
    """Smallest ``n`` meeting the approach-1 requirement with ``E = K / sqrt(n)``.

    The requirement ``n >= f(n)`` has a right-hand side decreasing in ``n``,
    so the crossing is unique and found by root bracketing.
    """
    if inp.eps <= 0:
        raise ParameterError("sample complexity needs eps > 0")
    start = (inp.K / inp.eps) ** 2

    def gap(n):
        return n - approach1_complexity(
            replace(inp, n=1),
            inp.K / math.sqrt(n),
        )

    lo = start * (1 + 1e-9)
    hi = 2 * start
    while gap(hi) < 0:
        hi *= 2
    return float(optimize.brentq(gap, lo, hi, xtol=1e-9, rtol=1e-14))


@dataclass
class ComplexityRow:
    K: int
    index: float
    n1: float
    n2: float
    n3: float
    eta3: float
    ratio23: float
    ratio23_logK: float
    ratio23_K: float


def complexity_table(
    K_list: Iterable[int],
    p: float,
    eps: float,
    delta: float,
    r: float,
    index_rule="power:1",
    eta_mode="optimize",
    expected_dev: float | None = None,
) -> list[ComplexityRow]:
    """Sample sizes required by each approach, one row per state count.

    ``n1`` uses ``expected_dev`` when given, else the ``K/sqrt(n)`` envelope.
    ``eta_mode`` is ``"optimize"`` or a fixed net parameter.  Rows are sorted
    by ``K`` so the table does not depend on the order of ``K_list``.
    """
    rule = parse_index_rule(index_rule)
    Ks = sorted({int(K) for K in K_list})
    if not Ks or Ks[0] < 2:
        raise ParameterError("K_list needs state counts >= 2")
    rows = []
    for K in Ks:
        index = index_for(K, rule)
        inp = ChainBoundInputs(K, 1, r, p, eps, index, delta)
        n1 = envelope_complexity(inp) if expected_dev is None else approach1_complexity(inp, expected_dev)
        n2 = approach2_complexity(inp)
        tau = tau_p_upper(p, K)
        if eta_mode == "optimize":
            n3, eta = optimize_approach3_complexity(inp, tau)
        else:
            eta = float(eta_mode)
            n3 = approach3_complexity(inp, eta, tau)
        rows.append(
            ComplexityRow(
                K=K,
                index=index,
                n1=math.nan if n1 is None else n1,
                n2=n2,
                n3=n3,
                eta3=eta,
                ratio23=n2 / n3,
                ratio23_logK=n2 / (n3 * math.log(K)),
                ratio23_K=n2 / (n3 * K),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def chain_hash(chain: MarkovChainModel) -> str:
    blob = json.dumps(chain.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def provenance(config: dict, seed: int | None = None, chain: MarkovChainModel | None = None) -> dict:
    out = {"config": config, "seed": seed, "versions": _versions()}
    if chain is not None:
        out["chain_hash"] = chain_hash(chain)
    return out


def _versions() -> dict:
    import scipy

    return {"conclab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str], config: dict | None = None) -> str:
    """CSV text; a leading ``#`` comment line carries the resolved config when given."""
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def tail_reports_to_csv(reports: Sequence[TailReport], config: dict | None = None) -> str:
    return rows_to_csv([asdict(r) for r in reports], TAIL_COLUMNS, config)


def tail_reports_to_json(reports: Sequence[TailReport], prov: dict) -> str:
    return json.dumps({"provenance": prov, "rows": [asdict(r) for r in reports]}, sort_keys=True, indent=2)
