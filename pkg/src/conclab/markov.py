"""Finite ergodic Markov chains and the plug-in stationary-measure estimator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.sparse.csgraph import breadth_first_order, connected_components

from ._streams import check_seed, map_blocks
from .errors import (
    CapacityError,
    DataError,
    DimensionError,
    InternalError,
    ModelError,
    ParameterError,
)
from .measures import FiniteMeasure, lp_norm_rows, tv_distance

ROW_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-10
MAX_CONDITION = 1e12
CROSS_CHECK_TOL = 1e-8
POWER_STEPS = 200
EXACT_PATH_LIMIT = 4096
PATH_CAP = 100_000
Z_99 = float(stats.norm.ppf(0.995))


def _cumulative(probs: np.ndarray) -> np.ndarray:
    """Cumulative sums for inverse-CDF sampling along the last axis.

    Entries from the last positive-probability state onward are pinned to 1
    so that a uniform draw in [0, 1) never lands on a zero-probability tail.
    """
    cum = np.cumsum(probs, axis=-1)
    cum = np.atleast_2d(cum)
    p2 = np.atleast_2d(probs)
    for row, prow in zip(cum, p2):
        last = int(np.flatnonzero(prow > 0)[-1])
        row[last:] = 1.0
    return cum if probs.ndim > 1 else cum[0]


@dataclass(frozen=True, eq=False)
class MarkovChainModel:
    """Chain ``(P, rho)`` on states ``0, ..., K-1``."""

    P: np.ndarray
    rho: FiniteMeasure

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise DataError(f"transition matrix must be square and non-empty, got shape {P.shape}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise DataError("transition matrix entries must be finite and non-negative")
        sums = P.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise DataError(f"row {int(bad[0])} of P sums to {sums[bad[0]]!r}, not 1")
        rho = self.rho if isinstance(self.rho, FiniteMeasure) else FiniteMeasure(self.rho)
        if rho.support_size != P.shape[0]:
            raise DimensionError(
                f"rho has {rho.support_size} states but P has {P.shape[0]}"
            )
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "rho", rho)

    @property
    def K(self) -> int:
        return int(self.P.shape[0])

    @cached_property
    def pi(self) -> FiniteMeasure:
        return stationary(self)

    @cached_property
    def r(self) -> float:
        return dobrushin(self)

    def with_initial(self, rho: FiniteMeasure) -> "MarkovChainModel":
        return MarkovChainModel(self.P, rho)

    def stationary_chain(self) -> "MarkovChainModel":
        return MarkovChainModel(self.P, self.pi)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "P": [[float(x) for x in row] for row in self.P],
            "rho": [float(x) for x in self.rho.weights],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MarkovChainModel":
        """Build a chain from ``{"K": int, "P": [[...]], "rho": [...]}``.

        ``rho`` may be omitted or given as ``"stationary"`` to start at the
        invariant measure.
        """
        try:
            P = np.asarray(data["P"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"chain JSON needs a numeric 'P' matrix: {exc}") from None
        K = data.get("K", P.shape[0] if P.ndim else 0)
        if int(K) != K or P.ndim != 2 or P.shape[0] != K:
            raise DimensionError(f"chain JSON K={K!r} does not match P of shape {P.shape}")
        rho = data.get("rho", "stationary")
        if isinstance(rho, str):
            if rho != "stationary":
                raise DataError(f"unknown rho keyword {rho!r}")
            provisional = cls(P, FiniteMeasure.uniform(int(K)))
            return cls(P, provisional.pi)
        return cls(P, FiniteMeasure(np.asarray(rho, dtype=float)))

    @classmethod
    def from_json(cls, text: str) -> "MarkovChainModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"chain JSON does not parse: {exc}") from None
        if not isinstance(data, dict):
            raise DataError("chain JSON must be an object")
        return cls.from_dict(data)


def ergodicity_failure(P: np.ndarray) -> str | None:
    """Return ``None`` for an ergodic transition matrix, else a reason string."""
    adj = np.asarray(P) > 0
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    if n_comp != 1:
        return f"reducible ({n_comp} communicating classes)"
    order, preds = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.full(len(adj), -1)
    level[0] = 0
    for v in order[1:]:
        level[v] = level[preds[v]] + 1
    src, dst = np.nonzero(adj)
    period = reduce(math.gcd, (level[src] + 1 - level[dst]).tolist(), 0)
    if abs(period) != 1:
        return f"periodic (period {abs(period)})"
    return None


def _power_limit(P: np.ndarray) -> np.ndarray:
    """Row of ``P^(2^m)`` by repeated squaring, up to ``POWER_STEPS`` squarings."""
    M = P.copy()
    for _ in range(POWER_STEPS):
        nxt = M @ M
        nxt /= nxt.sum(axis=1, keepdims=True)
        if np.max(np.abs(nxt - M)) < 1e-15:
            M = nxt
            break
        M = nxt
    return M.mean(axis=0)


def stationary(chain: MarkovChainModel) -> FiniteMeasure:
    """Unique invariant measure of an ergodic chain.

    Solved directly with one balance equation replaced by normalization, then
    cross-checked against the limit of repeated squaring of ``P``.
    """
    P = chain.P
    reason = ergodicity_failure(P)
    if reason is not None:
        raise ModelError(f"chain is not ergodic: {reason}")
    K = chain.K
    A = P.T - np.eye(K)
    A[-1, :] = 1.0
    b = np.zeros(K)
    b[-1] = 1.0
    cond = np.linalg.cond(A)
    if not cond < MAX_CONDITION:
        raise ModelError(
            f"chain mixes too slowly to resolve in double precision (condition number {cond:.3e})"
        )
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise InternalError(f"stationary solve failed: {exc}") from None
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    # one refinement step keeps the residual at the 1e-16 level for stiff chains
    pi = pi @ P
    pi /= pi.sum()
    residual = float(np.abs(pi @ P - pi).sum())
    if residual > STATIONARY_RESIDUAL_TOL:
        raise InternalError(f"stationary residual {residual:.3e} exceeds tolerance")
    check = _power_limit(P)
    gap = float(np.max(np.abs(check - pi)))
    if gap > CROSS_CHECK_TOL:
        raise InternalError(
            f"linear solve and power iteration disagree by {gap:.3e}; "
            f"solve={pi.tolist()}, power={check.tolist()}"
        )
    return FiniteMeasure(pi)


def dobrushin(chain: MarkovChainModel) -> float:
    """Dobrushin contraction coefficient: largest TV distance between rows of ``P``."""
    P = chain.P
    K = chain.K
    if K == 1:
        return 0.0
    diffs = 0.5 * np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(min(1.0, diffs.max()))


def simulate_batch(
    chain: MarkovChainModel,
    n: int,
    size: int,
    rng: np.random.Generator,
    initial: FiniteMeasure | None = None,
) -> np.ndarray:
    """Simulate ``size`` independent length-``n`` trajectories, shape ``(size, n)``."""
    init = chain.rho if initial is None else initial
    cum0 = _cumulative(init.weights)
    cumP = _cumulative(chain.P)
    K = chain.K
    u = rng.random((size, n))
    out = np.empty((size, n), dtype=np.int64)
    # inverse CDF: first index whose cumulative weight exceeds u
    x = np.minimum(np.searchsorted(cum0, u[:, 0], side="right"), K - 1)
    out[:, 0] = x
    for k in range(1, n):
        x = np.minimum((u[:, k, None] >= cumP[x]).sum(axis=1), K - 1)
        out[:, k] = x
    return out


def simulate(chain: MarkovChainModel, n: int, seed: int) -> np.ndarray:
    """One trajectory ``X_0, ..., X_{n-1}``; deterministic given ``seed``."""
    if n < 1:
        raise ParameterError(f"trajectory length n must be >= 1, got {n!r}")
    rng = np.random.default_rng(check_seed(seed))
    return simulate_batch(chain, n, 1, rng)[0]


def occupation_counts(paths: np.ndarray, K: int) -> np.ndarray:
    """Per-row visit counts of each state, shape ``(len(paths), K)``."""
    paths = np.atleast_2d(paths)
    N = paths.shape[0]
    flat = (np.arange(N)[:, None] * K + paths).ravel()
    return np.bincount(flat, minlength=N * K).reshape(N, K)


def plugin_estimator(traj: Sequence[int], K: int) -> FiniteMeasure:
    """Empirical occupation frequencies of a trajectory over states ``0..K-1``."""
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K!r}")
    x = np.asarray(traj)
    if x.ndim != 1 or x.size == 0:
        raise DataError("trajectory must be a non-empty 1-D sequence of states")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.mod(x, 1) == 0):
            raise DataError("trajectory states must be integers")
        x = x.astype(np.int64)
    if x.min() < 0 or x.max() >= K:
        raise DataError(f"trajectory state outside [0, {K - 1}]")
    return FiniteMeasure(np.bincount(x, minlength=K) / x.size)


def plugin_lipschitz(p: float, n: int) -> float:
    """Lipschitz constant ``2**(1/p) / n`` of the plug-in map under Hamming distance."""
    if not (p >= 1):
        raise ParameterError(f"norm index p must be >= 1, got {p!r}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return 2.0**inv_p / n


def num_paths(K: int, n: int) -> int:
    return int(K) ** int(n)


def enumerate_paths(K: int, n: int, cap: int = PATH_CAP) -> np.ndarray:
    """All ``K**n`` trajectories in lexicographic order, shape ``(K**n, n)``."""
    total = num_paths(K, n)
    if total > cap:
        raise CapacityError(f"K**n = {K}**{n} = {total} paths exceeds cap {cap}")
    idx = np.arange(total)
    powers = K ** np.arange(n - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % K


def path_probabilities(
    chain: MarkovChainModel, paths: np.ndarray, initial: FiniteMeasure | None = None
) -> np.ndarray:
    init = chain.rho if initial is None else initial
    prob = init.weights[paths[:, 0]].copy()
    for k in range(1, paths.shape[1]):
        prob *= chain.P[paths[:, k - 1], paths[:, k]]
    return prob


def expected_plugin(chain: MarkovChainModel, n: int, initial: FiniteMeasure | None = None) -> np.ndarray:
    """Exact mean of the plug-in estimator, ``(1/n) sum_k rho P^k``."""
    dist = (chain.rho if initial is None else initial).weights.copy()
    total = np.zeros(chain.K)
    for _ in range(n):
        total += dist
        dist = dist @ chain.P
    return total / n


def expected_deviation(
    chain: MarkovChainModel, n: int, p: float, trials: int = 10_000, seed: int = 0
) -> tuple[float, float]:
    """Mean of ``||pi_hat - pi||_p`` for the chain started at stationarity.

    Returns ``(estimate, half_width)``.  When ``K**n <= 4096`` the mean is
    computed exactly by enumeration and the half-width is 0; otherwise it is a
    Monte Carlo mean with a normal-approximation 99% half-width.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    if trials < 100:
        raise ParameterError(f"trials must be >= 100, got {trials!r}")
    if not (p >= 1):
        raise ParameterError(f"norm index p must be >= 1, got {p!r}")
    pi = chain.pi
    K = chain.K
    if num_paths(K, n) <= EXACT_PATH_LIMIT:
        paths = enumerate_paths(K, n)
        prob = path_probabilities(chain, paths, initial=pi)
        dev = lp_norm_rows(occupation_counts(paths, K) / n - pi.weights, p)
        return math.fsum(prob * dev), 0.0

    def block(rng, size):
        paths = simulate_batch(chain, n, size, rng, initial=pi)
        return lp_norm_rows(occupation_counts(paths, K) / n - pi.weights, p)

    dev = np.concatenate(map_blocks(block, trials, seed, key=(1,)))
    mean = math.fsum(dev) / trials
    half = Z_99 * float(np.std(dev, ddof=1)) / math.sqrt(trials)
    return mean, half
