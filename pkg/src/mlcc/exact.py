"""Exhaustive search over all set partitions, for small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import Deadline, check_deadline
from .instance import Clustering, MultilayerInstance, Norm, pair_endpoints

DEFAULT_CAP = 12
_CHUNK = 1 << 16


@lru_cache(maxsize=None)
def bell(n: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def restricted_growth_strings(n: int) -> np.ndarray:
    """All restricted-growth strings of length ``n`` as a ``(Bell(n), n)`` array.

    Row ``s`` satisfies ``s[0] = 0`` and ``s[k] <= 1 + max(s[:k])``; each row is
    one set partition in canonical labelling.
    """
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        counts = top.astype(np.int64) + 2
        parent = np.repeat(np.arange(len(rows)), counts)
        start = np.cumsum(counts) - counts
        value = (np.arange(parent.size) - np.repeat(start, counts)).astype(np.int8)
        rows = np.hstack([rows[parent], value[:, None]])
        top = np.maximum(top[parent], value)
    return rows


@dataclass(frozen=True)
class ExactResult:
    opt_value: float
    opt_clusterings: tuple[Clustering, ...]
    evaluated: int


def brute_force(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    n_cap: int = DEFAULT_CAP,
    *,
    rtol: float = 1e-12,
    deadline: Deadline | None = None,
) -> ExactResult:
    """Minimum objective over every partition, with all minimisers.

    Partitions whose objective is within ``rtol`` (relative) of the minimum
    count as optimal.
    """
    norm = Norm.parse(norm)
    n = instance.n
    if n > n_cap:
        raise ValueError(f"brute force is capped at n={n_cap} (Bell({n_cap}) = {bell(n_cap)}), got n={n}")
    rgs = restricted_growth_strings(n)
    iu, ju = pair_endpoints(n)
    wp, wm = instance.plus.T, instance.minus.T  # (P, L)
    values = np.empty(len(rgs))
    for start in range(0, len(rgs), _CHUNK):
        check_deadline(deadline)
        block = rgs[start : start + _CHUNK]
        same = (block[:, iu] == block[:, ju]).astype(float)
        dis = (1.0 - same) @ wp + same @ wm  # (chunk, L)
        if norm.is_inf:
            values[start : start + len(block)] = dis.max(axis=1)
        elif norm.p == 1:
            values[start : start + len(block)] = dis.sum(axis=1)
        else:
            top = dis.max(axis=1, keepdims=True)
            scaled = np.divide(dis, top, out=np.zeros_like(dis), where=top > 0)
            values[start : start + len(block)] = top[:, 0] * np.sum(scaled**norm.p, axis=1) ** (1.0 / norm.p)
    best = float(values.min())
    hits = np.nonzero(values <= best + rtol * max(abs(best), 1e-300))[0]
    opts = tuple(Clustering(tuple(int(v) for v in rgs[h])) for h in hits)
    return ExactResult(best, opts, len(rgs))


def exact_clustering(instance: MultilayerInstance, norm="inf", n_cap: int = DEFAULT_CAP, **kw) -> Clustering:
    """One optimal clustering (the first in restricted-growth order)."""
    return brute_force(instance, norm, n_cap, **kw).opt_clusterings[0]
