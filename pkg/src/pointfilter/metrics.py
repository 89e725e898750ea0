"""OSPA distance between point sets, with an exact Hungarian assignment."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def hungarian(cost):
    """Minimum-cost perfect matching on a square cost matrix.

    Shortest augmenting path with row/column potentials, O(n^3). Returns
    ``(cols, total)`` where row ``i`` is matched to column ``cols[i]``.
    Among equal-cost columns the lowest index is taken first, so an all-equal
    matrix yields the identity.
    """
    a = np.asarray(cost, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("cost matrix must be finite")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    # 1-based columns; column 0 is a virtual source
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        row_of[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            free = ~used
            free[0] = False
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free[1:] & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[row_of[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    cols = np.empty(n, dtype=int)
    cols[row_of[1:] - 1] = np.arange(n)
    return cols, float(a[np.arange(n), cols].sum())


@dataclass
class OspaResult:
    total: float
    loc: float
    card: float
    matched_pairs: list = field(default_factory=list)


def _as_points(X, d=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros((0, d if d is not None else (X.shape[-1] if X.ndim == 2 else 0)))
    return np.atleast_2d(X)


def ospa(X, Y, p: float = 1.0, c: float = 100.0) -> OspaResult:
    """OSPA distance of order ``p`` with cutoff ``c``.

    ``loc`` and ``card`` are the localisation and cardinality parts, each
    carried through the outer ``1/p`` root on its own; for ``p = 1`` they add
    up to ``total``. ``matched_pairs`` lists ``(index in X, index in Y)``.
    """
    if p < 1 or c <= 0:
        raise ValueError("OSPA needs p >= 1 and c > 0")
    X = _as_points(X)
    Y = _as_points(Y)
    m, n = X.shape[0], Y.shape[0]
    if m == 0 and n == 0:
        return OspaResult(0.0, 0.0, 0.0, [])
    if m and n and X.shape[1] != Y.shape[1]:
        raise ValueError("point sets have different dimensions")
    swapped = m > n
    if swapped:
        X, Y, m, n = Y, X, n, m
    D = np.full((n, n), c ** p)
    if m:
        dist = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
        D[:m] = np.minimum(dist, c) ** p
    cols, _ = hungarian(D)
    loc_sum = float(D[np.arange(m), cols[:m]].sum())
    card_sum = c ** p * (n - m)
    pairs = [(i, int(cols[i])) for i in range(m)]
    if swapped:
        pairs = sorted((j, i) for i, j in pairs)
    return OspaResult(total=((loc_sum + card_sum) / n) ** (1 / p),
                      loc=(loc_sum / n) ** (1 / p),
                      card=(card_sum / n) ** (1 / p),
                      matched_pairs=pairs)


def ospa_series(truth, estimates, p: float = 1.0, c: float = 100.0):
    """Per-frame OSPA and its frame averages.

    ``truth`` items may be point arrays or objects with a ``positions``
    attribute. Returns ``(results, {"ospa": .., "loc": .., "card": ..})``.
    """
    truth = list(truth)
    estimates = list(estimates)
    if len(truth) != len(estimates):
        raise ValueError(f"{len(truth)} truth frames but {len(estimates)} estimate frames")
    results = [ospa(getattr(t, "positions", t), e, p, c) for t, e in zip(truth, estimates)]
    if not results:
        return results, {"ospa": 0.0, "loc": 0.0, "card": 0.0}
    avg = {"ospa": float(np.mean([r.total for r in results])),
           "loc": float(np.mean([r.loc for r in results])),
           "card": float(np.mean([r.card for r in results]))}
    return results, avg
