"""Seeded random instances shared by the test modules."""

from __future__ import annotations

import numpy as np

from mlcc import Mode, MultilayerInstance
from mlcc.instance import num_pairs


def random_general(seed: int, n: int, L: int, density: float = 0.7) -> MultilayerInstance:
    """Each pair is ``+``, ``-`` or unlabelled; weights uniform in (0, 1]."""
    rng = np.random.default_rng(seed)
    P = num_pairs(n)
    w = 1.0 - rng.random((L, P))
    kind = rng.random((L, P))
    labelled = kind < density
    is_plus = rng.random((L, P)) < 0.5
    plus = np.where(labelled & is_plus, w, 0.0)
    minus = np.where(labelled & ~is_plus, w, 0.0)
    return MultilayerInstance(n, plus, minus, Mode.GENERAL)


def random_probability(seed: int, n: int, L: int) -> MultilayerInstance:
    rng = np.random.default_rng(seed)
    plus = rng.random((L, num_pairs(n)))
    return MultilayerInstance(n, plus, 1.0 - plus, Mode.PROBABILITY)


def suite(count: int, seed0: int = 0, mode: str = "general"):
    """``count`` seeded instances with n in 4..8, L in 1..3 and p cycling over 1, 2, inf."""
    rng = np.random.default_rng(seed0)
    ps = (1.0, 2.0, float("inf"))
    for k in range(count):
        n = int(rng.integers(4, 9))
        L = int(rng.integers(1, 4))
        make = random_general if mode == "general" else random_probability
        yield k, make(seed0 * 100_003 + k, n, L), ps[k % 3]
