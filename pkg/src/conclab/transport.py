"""Exact L1-Wasserstein distance on finite metric spaces and TCI verification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ._streams import check_seed, substream
from .errors import (
    CapacityError,
    DimensionError,
    DataError,
    InternalError,
    ParameterError,
    PreconditionError,
)
from .markov import PATH_CAP, MarkovChainModel, enumerate_paths, path_probabilities
from .measures import FiniteMeasure, kl_divergence

METRIC_TOL = 1e-9
MARGINAL_TOL = 1e-9
RATIO_GUARD = 1e-14
VIOLATION_TOL = 1e-9
VALIDATE_LIMIT = 1024
MIDPOINT_PAIR_LIMIT = 500


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Points ``0..size-1`` with a symmetric distance matrix.

    Metric axioms are verified on construction up to ``1e-9``.  The cubic
    triangle-inequality check is skipped for spaces larger than 1024 points
    unless ``validate=True`` is passed explicitly; ``validate=False`` skips it
    at any size.
    """

    dist: np.ndarray
    validate: bool | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise DataError(f"distance matrix must be square and non-empty, got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise DataError("distances must be finite and non-negative")
        if np.any(np.abs(np.diag(d)) > METRIC_TOL):
            raise DataError("distance matrix must have a zero diagonal")
        if np.any(np.abs(d - d.T) > METRIC_TOL):
            raise DataError("distance matrix must be symmetric")
        check = self.validate if self.validate is not None else d.shape[0] <= VALIDATE_LIMIT
        if check:
            for k in range(d.shape[0]):
                if np.any(d > d[:, k, None] + d[None, k, :] + METRIC_TOL):
                    raise DataError(f"triangle inequality fails through point {k}")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def size(self) -> int:
        return int(self.dist.shape[0])

    @classmethod
    def discrete(cls, size: int) -> "FiniteMetricSpace":
        """The 0/1 metric ``1{x != y}``."""
        if size < 1:
            raise ParameterError("size must be >= 1")
        return cls(1.0 - np.eye(size), validate=False)


@dataclass(frozen=True, eq=False)
class Coupling:
    joint: np.ndarray

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.joint.sum(axis=1), self.joint.sum(axis=0)

    def check(self, mu: FiniteMeasure, nu: FiniteMeasure, tol: float = MARGINAL_TOL) -> bool:
        rows, cols = self.marginals()
        return bool(
            np.all(self.joint >= 0)
            and np.max(np.abs(rows - mu.weights)) <= tol
            and np.max(np.abs(cols - nu.weights)) <= tol
            and abs(self.joint.sum() - 1.0) <= tol
        )


def _transport_lp(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> np.ndarray:
    m, n = cost.shape
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    A_eq = sparse.vstack([rows, cols]).tocsc()
    b_eq = np.concatenate([a, b])
    res = linprog(
        cost.ravel(),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise InternalError(
            f"transportation LP failed (status {res.status}): {res.message}; "
            f"sizes {m}x{n}, masses {a.sum():.17g}/{b.sum():.17g}"
        )
    return np.clip(res.x.reshape(m, n), 0.0, None)


def w1_exact(
    mu: FiniteMeasure, nu: FiniteMeasure, space: FiniteMetricSpace
) -> tuple[float, Coupling]:
    """Exact ``W1(mu, nu)`` and one optimal coupling.

    Solved as a minimum-cost transportation problem restricted to the two
    supports with the HiGHS dual simplex, which returns a vertex of the
    transportation polytope.  Ties among optimal couplings are broken
    arbitrarily.
    """
    if mu.support_size != nu.support_size or mu.support_size != space.size:
        raise DimensionError(
            f"sizes disagree: mu {mu.support_size}, nu {nu.support_size}, space {space.size}"
        )
    a, b = mu.weights, nu.weights
    src = np.flatnonzero(a > 0)
    dst = np.flatnonzero(b > 0)
    joint = np.zeros((space.size, space.size))
    if len(src) == 1 or len(dst) == 1:
        # only one admissible coupling
        block = np.outer(a[src], b[dst])
    else:
        block = _transport_lp(a[src], b[dst], space.dist[np.ix_(src, dst)])
    joint[np.ix_(src, dst)] = block
    coupling = Coupling(joint)
    if not coupling.check(mu, nu):
        rows, cols = coupling.marginals()
        raise InternalError(
            "optimal coupling violates marginals: "
            f"row err {np.max(np.abs(rows - a)):.3e}, col err {np.max(np.abs(cols - b)):.3e}"
        )
    return float(np.sum(joint * space.dist)), coupling


def hamming_space(base_size: int, seq_len: int, cap: int = PATH_CAP) -> FiniteMetricSpace:
    """All ``base_size**seq_len`` sequences under unnormalized Hamming distance.

    Points are indexed lexicographically, matching :func:`chain_path_law`.
    The matrix is dense, so memory grows with the square of the point count.
    """
    if base_size < 1 or seq_len < 1:
        raise ParameterError("base_size and seq_len must be >= 1")
    if base_size**seq_len > cap:
        raise CapacityError(
            f"{base_size}**{seq_len} = {base_size**seq_len} points exceeds cap {cap}"
        )
    pts = enumerate_paths(base_size, seq_len, cap=cap)
    dist = np.zeros((len(pts), len(pts)))
    for k in range(seq_len):
        dist += pts[:, k, None] != pts[None, :, k]
    return FiniteMetricSpace(dist, validate=False)


def chain_path_law(chain: MarkovChainModel, n: int, cap: int = PATH_CAP) -> FiniteMeasure:
    """Law of ``(X_0, ..., X_{n-1})`` under ``(P, rho)`` over lexicographic paths."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    paths = enumerate_paths(chain.K, n, cap=cap)
    return FiniteMeasure(path_probabilities(chain, paths))


@dataclass
class TCIReport:
    """Outcome of a brute-force check of ``W1(mu, nu) <= sqrt(2 sigma2 D(mu||nu))``."""

    max_ratio: float
    num_violations: int
    worst_mu: list[float]
    sigma2: float
    seed: int
    num_evaluated: int
    num_skipped: int
    violations: list[tuple[str, float]]

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "num_violations": self.num_violations,
            "worst_mu": self.worst_mu,
            "sigma2": self.sigma2,
            "seed": self.seed,
            "num_evaluated": self.num_evaluated,
            "num_skipped": self.num_skipped,
            "violations": [list(v) for v in self.violations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _battery(size: int) -> list[tuple[str, np.ndarray]]:
    eye = np.eye(size)
    out = [(f"vertex[{i}]", eye[i]) for i in range(size)]
    pairs = list(combinations(range(size), 2))
    if len(pairs) > MIDPOINT_PAIR_LIMIT:
        pairs = [(i, i + 1) for i in range(size - 1)]
    out += [(f"midpoint[{i},{j}]", 0.5 * (eye[i] + eye[j])) for i, j in pairs]
    return out


def tci_check(
    nu: FiniteMeasure,
    space: FiniteMetricSpace,
    sigma2: float,
    num_samples: int,
    seed: int = 0,
) -> TCIReport:
    """Search for measures violating the transportation cost inequality.

    Tests a fixed battery (simplex vertices and edge midpoints) followed by
    ``num_samples`` flat-Dirichlet draws; draw ``i`` uses its own substream
    of ``seed``.  Ratios with ``D(mu||nu) < 1e-14`` are skipped.
    """
    if np.any(nu.weights <= 0):
        raise PreconditionError("tci_check needs a strictly positive reference measure nu")
    if not sigma2 > 0:
        raise ParameterError(f"sigma2 must be > 0, got {sigma2!r}")
    if num_samples < 1:
        raise ParameterError(f"num_samples must be >= 1, got {num_samples!r}")
    if nu.support_size != space.size:
        raise DimensionError(f"nu has {nu.support_size} points, space has {space.size}")
    seed = check_seed(seed)
    candidates = _battery(space.size)
    alpha = np.ones(space.size)
    for i in range(num_samples):
        candidates.append((f"dirichlet[{i}]", substream(seed, 2, i).dirichlet(alpha)))

    best, worst = -math.inf, None
    skipped = 0
    violations = []
    for label, w in candidates:
        mu = FiniteMeasure(w)
        div = kl_divergence(mu, nu)
        if div < RATIO_GUARD:
            skipped += 1
            continue
        dist, _ = w1_exact(mu, nu, space)
        ratio = dist / math.sqrt(2.0 * sigma2 * div)
        if ratio > best:
            best, worst = ratio, mu
        if ratio > 1.0 + VIOLATION_TOL:
            violations.append((label, ratio))
    return TCIReport(
        max_ratio=best if worst is not None else 0.0,
        num_violations=len(violations),
        worst_mu=[] if worst is None else [float(x) for x in worst.weights],
        sigma2=float(sigma2),
        seed=seed,
        num_evaluated=len(candidates) - skipped,
        num_skipped=skipped,
        violations=violations,
    )
