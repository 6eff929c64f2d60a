"""Slow, independent reference computations used by the test suite.

Nothing here imports the code paths it checks.
"""

import functools
import itertools
import math

import numpy as np


def _constraints(m, n):
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    return A[:-1]  # one constraint is redundant


@functools.lru_cache(maxsize=None)
def _bases(m, n):
    """Every basis of the ``m x n`` transportation polytope with its inverse.

    A basis is a set of ``m + n - 1`` cells with independent constraint
    columns, i.e. a spanning tree of the row/column graph; it must touch
    every row and column, which prunes most subsets before the rank test.
    Inverses of these 0/1 tree matrices have entries in {-1, 0, 1}.
    """
    k = m + n - 1
    flat = itertools.chain.from_iterable(itertools.combinations(range(m * n), k))
    combos = np.fromiter(flat, dtype=np.int16).reshape(-1, k)
    cell = np.array([(1 << i) | (1 << (m + j)) for i in range(m) for j in range(n)], dtype=np.int64)
    combos = combos[np.bitwise_or.reduce(cell[combos], axis=1) == (1 << (m + n)) - 1]
    A = _constraints(m, n)
    kept, inverses = [], []
    for chunk in np.array_split(combos, max(1, len(combos) // 50_000)):
        M = A[:, chunk].transpose(1, 0, 2)
        ok = np.abs(np.linalg.det(M)) > 0.5  # determinants are 0 or +-1
        kept.append(chunk[ok])
        inverses.append(np.rint(np.linalg.inv(M[ok])).astype(np.int8))
    return np.concatenate(kept), np.concatenate(inverses)


def transport_bfs_oracle(a, b, cost):
    """Minimum transport cost by enumerating every basic feasible solution."""
    a, b, cost = np.asarray(a, float), np.asarray(b, float), np.asarray(cost, float)
    m, n = cost.shape
    rhs = np.concatenate([a, b])[:-1]
    cells, inverses = _bases(m, n)
    x = inverses @ rhs
    feasible = np.all(x >= -1e-12, axis=1)
    return float((x[feasible] * cost.ravel()[cells[feasible]]).sum(axis=1).min())


def kantorovich_dual_oracle(a, b, dist):
    """W1 as the maximum of ``sum f (a - b)`` over 1-Lipschitz ``f`` with ``f[0] = 0``.

    Enumerates every vertex of the dual polytope: each is cut out by
    ``N - 1`` active constraints ``f_i - f_j = d_ij``.
    """
    a, b, dist = np.asarray(a, float), np.asarray(b, float), np.asarray(dist, float)
    N = len(a)
    if N == 1:
        return 0.0
    pairs = [(i, j) for i in range(N) for j in range(N) if i != j]
    G = np.zeros((len(pairs), N - 1))
    h = np.zeros(len(pairs))
    for row, (i, j) in enumerate(pairs):
        if i:
            G[row, i - 1] += 1
        if j:
            G[row, j - 1] -= 1
        h[row] = dist[i, j]
    c = (a - b)[1:]
    best = -math.inf
    for active in itertools.combinations(range(len(pairs)), N - 1):
        M = G[list(active)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        f = np.linalg.solve(M, h[list(active)])
        if np.all(G @ f <= h + 1e-10):
            best = max(best, float(c @ f))
    return best


def random_metric(rng, size):
    """Shortest-path closure of random positive weights: always a metric."""
    w = rng.uniform(0.1, 1.0, (size, size))
    d = np.minimum(w, w.T)
    np.fill_diagonal(d, 0.0)
    for k in range(size):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


def path_tail_bruteforce(P, init, pi, n, p, eps):
    """Tail probability by looping over every trajectory in pure Python."""
    K = len(init)
    total = 0.0
    for path in itertools.product(range(K), repeat=n):
        prob = init[path[0]]
        for s, t in zip(path, path[1:]):
            prob *= P[s][t]
        freq = [path.count(i) / n for i in range(K)]
        diffs = [abs(f - q) for f, q in zip(freq, pi)]
        dev = max(diffs) if math.isinf(p) else sum(x**p for x in diffs) ** (1 / p)
        if round(dev, 12) >= round(eps, 12):
            total += prob
    return total
