"""Baselines: Pick-a-Best, Aggregate and Aggregate-Pr.

All three return clusterings meant to be scored on the original multilayer
objective.
"""

from __future__ import annotations

import math

from .errors import Deadline
from .instance import Clustering, Mode, MultilayerInstance, Norm, canonicalize_general
from .pivot import best_candidate, kwik_cluster, layer_candidates, lp_kwik_cluster
from .region_growing import DEFAULT_C, region_grow
from .relax import solve_relaxation


def _single_layer_region_grow(single: MultilayerInstance, c: float, deadline: Deadline | None) -> Clustering:
    canon, _ = canonicalize_general(single.with_mode(Mode.GENERAL))
    return region_grow(canon, solve_relaxation(canon, 1, deadline=deadline), c, deadline=deadline)


def pick_a_best(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    c: float = DEFAULT_C,
    *,
    deadline: Deadline | None = None,
) -> Clustering:
    """Region-grow every layer on its own LP; keep the best candidate (first on ties)."""
    candidates = layer_candidates(
        instance, lambda inst, l: _single_layer_region_grow(inst.layer(l), c, deadline), deadline
    )
    return best_candidate(instance, norm, candidates)[1]


def aggregate_layers(instance: MultilayerInstance) -> MultilayerInstance:
    """One layer holding the per-pair sums of ``w+`` and of ``w-``."""
    return MultilayerInstance(
        instance.n, instance.plus.sum(axis=0, keepdims=True), instance.minus.sum(axis=0, keepdims=True), Mode.GENERAL
    )


def average_layers(instance: MultilayerInstance) -> MultilayerInstance:
    """One layer holding the per-pair means; keeps the probability constraint."""
    return MultilayerInstance(
        instance.n, instance.plus.mean(axis=0, keepdims=True), instance.minus.mean(axis=0, keepdims=True), instance.mode
    )


def aggregate(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    c: float = DEFAULT_C,
    *,
    deadline: Deadline | None = None,
) -> Clustering:
    """Sum the layers, canonicalise, and region-grow the single-layer LP."""
    return _single_layer_region_grow(aggregate_layers(instance), c, deadline)


def aggregate_pr(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    variant: str = "lp_kwik",
    seed: int | None = None,
    *,
    solution=None,
    deadline: Deadline | None = None,
) -> Clustering:
    """Average the layers and run KwikCluster (``"kwik"``) or its LP version (``"lp_kwik"``).

    ``solution`` may carry a precomputed relaxation of the averaged layer so
    repeated seeded runs share one LP solve.
    """
    instance.require_probability("aggregate_pr")
    avg = average_layers(instance)
    if variant == "kwik":
        return kwik_cluster(avg, 0, seed)
    if variant == "lp_kwik":
        if solution is None:
            solution = solve_relaxation(avg, 1, deadline=deadline)
        return lp_kwik_cluster(avg, solution, seed)
    raise ValueError(f"unknown Aggregate-Pr variant {variant!r}")
