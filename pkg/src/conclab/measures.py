"""Finite probability measures and the divergences used to compare them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DimensionError, ParameterError

NORMALIZATION_TOL = 1e-12
RENORMALIZE_TOL = 1e-9
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Probability vector over the indexed support ``0, ..., support_size - 1``.

    Weights whose sum drifts from 1 by less than ``1e-9`` are silently
    renormalized; larger drift raises :class:`DataError`.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise DataError("measure needs at least one support point")
        if not np.all(np.isfinite(w)):
            raise DataError("measure weights must be finite")
        if np.any(w < 0):
            raise DataError(f"measure weights must be non-negative, min={w.min()!r}")
        drift = abs(w.sum() - 1.0)
        if drift > RENORMALIZE_TOL:
            raise DataError(f"measure weights sum to {w.sum()!r}, not 1")
        if drift > NORMALIZATION_TOL:
            w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def support_size(self) -> int:
        return int(self.weights.size)

    def __len__(self):
        return self.support_size

    def __repr__(self):
        return f"FiniteMeasure({np.array2string(self.weights, precision=6)})"

    @classmethod
    def uniform(cls, size: int) -> "FiniteMeasure":
        if size < 1:
            raise ParameterError("size must be >= 1")
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, index: int) -> "FiniteMeasure":
        if not 0 <= index < size:
            raise ParameterError(f"index {index} outside support of size {size}")
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w)

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self.weights])

    @classmethod
    def from_json(cls, text: str) -> "FiniteMeasure":
        data = json.loads(text)
        if not isinstance(data, list):
            raise DataError("measure JSON must be an array of weights")
        return cls(np.asarray(data, dtype=float))


def _check_pair(mu: FiniteMeasure, nu: FiniteMeasure):
    if mu.support_size != nu.support_size:
        raise DimensionError(
            f"support sizes differ: {mu.support_size} vs {nu.support_size}"
        )


def kl_divergence(mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    """Relative entropy D(mu || nu) in nats; ``inf`` without absolute continuity."""
    _check_pair(mu, nu)
    m, n = mu.weights, nu.weights
    pos = m > 0
    if np.any(n[pos] == 0):
        return math.inf
    # clamp tiny negative values from rounding
    return max(0.0, float(np.sum(m[pos] * np.log(m[pos] / n[pos]))))


def tv_distance(mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    _check_pair(mu, nu)
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def nonstationarity_index(rho: FiniteMeasure, pi: FiniteMeasure) -> float:
    """Return the index ``||rho/pi||_{2,pi} = sqrt(sum_i rho_i^2 / pi_i)``.

    It equals 1 for ``rho == pi``, is at most ``1/sqrt(min pi)`` for strictly
    positive ``pi`` and is infinite when ``rho`` charges a state ``pi`` does not.
    """
    _check_pair(rho, pi)
    r, p = rho.weights, pi.weights
    pos = r > 0
    if np.any(p[pos] == 0):
        return math.inf
    value = math.sqrt(float(np.sum(r[pos] ** 2 / p[pos])))
    # Cauchy-Schwarz gives >= 1 exactly; keep rounding from dipping below
    return max(1.0, value)


def _check_p(p: float):
    if not (p >= 1):
        raise ParameterError(f"norm index p must be >= 1 (or inf), got {p!r}")


def lp_norm(v: Iterable[float], p: float) -> float:
    _check_p(p)
    a = np.abs(np.asarray(v, dtype=float))
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(np.sqrt(np.dot(a, a)))
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((a / scale) ** p) ** (1.0 / p))


def lp_norm_rows(rows: np.ndarray, p: float) -> np.ndarray:
    """Row-wise l_p norms of a 2-D array."""
    _check_p(p)
    a = np.abs(np.asarray(rows, dtype=float))
    if math.isinf(p):
        return a.max(axis=1)
    if p == 1:
        return a.sum(axis=1)
    if p == 2:
        return np.sqrt(np.einsum("ij,ij->i", a, a))
    return np.sum(a**p, axis=1) ** (1.0 / p)


def tau_p_upper(p: float, k: int) -> float:
    """Norm-equivalence bound ``k ** max(0, 1/p - 1/2)`` on the l_p / l_2 ratio."""
    _check_p(p)
    if k < 1:
        raise ParameterError(f"dimension k must be >= 1, got {k!r}")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return float(k) ** max(0.0, inv_p - 0.5)


@dataclass(frozen=True)
class TauEstimate:
    value: float
    all_skipped: bool
    num_used: int


def tau_p_empirical(
    points: Sequence[Sequence[float]], center: Sequence[float], p: float
) -> TauEstimate:
    """Largest ``||y - center||_p / ||y - center||_2`` over the supplied points.

    Points within ``1e-12`` (Euclidean) of ``center`` carry no information
    about the ratio and are skipped.
    """
    _check_p(p)
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ParameterError("tau_p_empirical needs at least one point")
    c = np.asarray(center, dtype=float).ravel()
    pts = pts.reshape(len(pts), -1)
    if pts.shape[1] != c.size:
        raise DimensionError(
            f"points have dimension {pts.shape[1]}, center has {c.size}"
        )
    best = 0.0
    used = 0
    for y in pts:
        diff = y - c
        l2 = lp_norm(diff, 2)
        if l2 <= DEGENERATE_TOL:
            continue
        used += 1
        best = max(best, lp_norm(diff, p) / l2)
    return TauEstimate(value=best, all_skipped=used == 0, num_used=used)
