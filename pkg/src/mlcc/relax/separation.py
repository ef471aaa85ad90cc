"""Separation oracle for the triangle inequalities of the metric polytope."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..instance import pair_index, pairs_to_matrix
from .lp import LinearRow


class TriangleCut(NamedTuple):
    """The row ``x[i,k] <= x[i,j] + x[j,k]`` violated by ``violation``."""

    i: int
    j: int
    k: int
    violation: float

    def row(self, n: int) -> LinearRow:
        return LinearRow(
            (pair_index(n, self.i, self.k), pair_index(n, self.i, self.j), pair_index(n, self.j, self.k)),
            (1.0, -1.0, -1.0),
            "<=",
            0.0,
        )


def n_from_pairs(num: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * num)) / 2))
    if n * (n - 1) // 2 != num:
        raise ValueError(f"{num} is not a triangular number of pairs")
    return n if num else 0


def separate_triangles(x, eps: float = 1e-7, max_cuts: int = 5000) -> list[TriangleCut]:
    """Most violated triangle rows of the pair vector ``x``, worst first.

    An empty result certifies that every triangle inequality holds within ``eps``.
    """
    x = np.asarray(x, dtype=float)
    n = n_from_pairs(x.size)
    D = pairs_to_matrix(n, x)
    found_i, found_j, found_k, found_v = [], [], [], []
    diag = np.arange(n)
    for j in range(n):
        excess = D - D[:, j][:, None] - D[j, :][None, :]
        excess[j, :] = -np.inf
        excess[:, j] = -np.inf
        excess[diag, diag] = -np.inf
        iu, ku = np.nonzero(np.triu(excess > eps, 1))
        if iu.size:
            found_i.append(iu)
            found_j.append(np.full(iu.size, j))
            found_k.append(ku)
            found_v.append(excess[iu, ku])
    if not found_v:
        return []
    i = np.concatenate(found_i)
    j = np.concatenate(found_j)
    k = np.concatenate(found_k)
    v = np.concatenate(found_v)
    # stable ordering: violation descending, then (i, j, k)
    order = np.lexsort((k, j, i, -v))[:max_cuts]
    return [TriangleCut(int(i[t]), int(j[t]), int(k[t]), float(v[t])) for t in order]


def max_triangle_violation(x) -> float:
    """Largest ``x[i,k] - x[i,j] - x[j,k]`` over all triples (0 if none positive)."""
    x = np.asarray(x, dtype=float)
    n = n_from_pairs(x.size)
    if n < 3:
        return 0.0
    D = pairs_to_matrix(n, x)
    worst = 0.0
    for j in range(n):
        excess = D - D[:, j][:, None] - D[j, :][None, :]
        excess[j, :] = -np.inf
        excess[:, j] = -np.inf
        np.fill_diagonal(excess, -np.inf)
        worst = max(worst, float(excess.max()))
    return worst
