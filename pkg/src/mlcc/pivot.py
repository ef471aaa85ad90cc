"""Pivot-based algorithms for instances under the probability constraint.

* :func:`kwik_cluster` - random pivot, join every element with ``w+ >= 1/2``.
* :func:`lp_kwik_cluster` - random pivot, join ``j`` with probability ``1 - x[i, j]``.
* :func:`pick_best` - solve each layer on its own, keep the candidate with the
  best multilayer objective; ``(alpha + 2)``-approximate for an
  ``alpha``-approximate single-layer solver.
* :func:`threshold_round` - deterministic rounding of the relaxation; every
  layer pays at most 4 times its fractional cost.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import Deadline, check_deadline
from .exact import exact_clustering
from .instance import Clustering, MultilayerInstance, Norm, objective, pairs_to_matrix
from .region_growing import Certificate, DEFAULT_C, region_grow
from .relax import PseudoMetric, RelaxationSolution, solve_relaxation

SUB_SOLVERS = ("exact", "lp_kwik", "kwik", "region_grow")
# approximation ratio of each single-layer solver under the probability constraint
ALPHA = {"exact": 1.0, "lp_kwik": 2.5, "kwik": 5.0}


def _matrix(solution) -> np.ndarray:
    if isinstance(solution, RelaxationSolution):
        return solution.metric.x
    if isinstance(solution, PseudoMetric):
        return solution.x
    return np.asarray(solution, dtype=float)


def _pick_pivot(active: list[int], rng: np.random.Generator, rule: str) -> int:
    if rule == "lowest":
        return active[0]
    if rule == "random":
        return active[int(rng.integers(len(active)))]
    raise ValueError(f"unknown pivot rule {rule!r}")


def kwik_cluster(
    instance: MultilayerInstance,
    layer: int = 0,
    seed: int | None = None,
    pivot_rule: str = "random",
) -> Clustering:
    """KwikCluster on one layer: the pivot takes every active ``j`` with ``w+(i, j) >= 1/2``."""
    instance.require_probability("kwik_cluster")
    W = pairs_to_matrix(instance.n, instance.plus[layer])
    rng = np.random.default_rng(seed)
    active = list(range(instance.n))
    labels = [-1] * instance.n
    cid = 0
    while active:
        i = _pick_pivot(active, rng, pivot_rule)
        members = [j for j in active if j == i or W[i, j] >= 0.5]
        for j in members:
            labels[j] = cid
        cid += 1
        taken = set(members)
        active = [j for j in active if j not in taken]
    return Clustering(tuple(labels))


def lp_kwik_cluster(
    instance: MultilayerInstance,
    solution=None,
    seed: int | None = None,
    layer: int = 0,
    pivot_rule: str = "random",
) -> Clustering:
    """LP-guided KwikCluster: each active ``j`` joins pivot ``i`` with probability ``1 - x[i, j]``.

    ``solution`` is the relaxation of the chosen layer; it is solved here
    (``p = 1``) when omitted.
    """
    instance.require_probability("lp_kwik_cluster")
    if solution is None:
        solution = solve_relaxation(instance.layer(layer), 1)
    X = _matrix(solution)
    rng = np.random.default_rng(seed)
    active = list(range(instance.n))
    labels = [-1] * instance.n
    cid = 0
    while active:
        i = _pick_pivot(active, rng, pivot_rule)
        others = [j for j in active if j != i]
        draws = rng.random(len(others))
        members = [i] + [j for j, u in zip(others, draws) if u < 1.0 - X[i, j]]
        for j in members:
            labels[j] = cid
        cid += 1
        taken = set(members)
        active = [j for j in active if j not in taken]
    return Clustering(tuple(labels))


def single_layer_solver(name: str, *, seed: int | None = None, c: float = DEFAULT_C,
                        deadline: Deadline | None = None) -> Callable[[MultilayerInstance, int], Clustering]:
    """Return ``f(instance, layer) -> Clustering`` for a named single-layer strategy."""
    if name == "kwik":
        return lambda inst, l: kwik_cluster(inst, l, seed)
    if name == "lp_kwik":
        return lambda inst, l: lp_kwik_cluster(inst, solve_relaxation(inst.layer(l), 1, deadline=deadline), seed)
    if name == "exact":
        return lambda inst, l: exact_clustering(inst.layer(l), 1, deadline=deadline)
    if name == "region_grow":
        def solve(inst, l):
            single = inst.layer(l)
            return region_grow(single, solve_relaxation(single, 1, deadline=deadline), c, deadline=deadline)
        return solve
    raise ValueError(f"unknown sub-solver {name!r}; choose from {SUB_SOLVERS}")


def best_candidate(instance: MultilayerInstance, norm, candidates: Sequence[Clustering]) -> tuple[int, Clustering]:
    """Index and value of the candidate with the smallest objective (first on ties)."""
    values = [objective(instance, cand, norm) for cand in candidates]
    best = int(np.argmin(values))
    return best, candidates[best]


def layer_candidates(instance, solver, deadline: Deadline | None = None) -> list[Clustering]:
    out = []
    for l in range(instance.L):
        check_deadline(deadline)
        out.append(solver(instance, l))
    return out


def pick_best(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    sub_solver: str = "lp_kwik",
    seed: int | None = None,
    *,
    deadline: Deadline | None = None,
) -> Clustering:
    """Solve every layer alone and return the candidate best for the multilayer objective.

    Each layer's sub-solver run uses the same ``seed``, so identical layers
    yield identical candidates.
    """
    instance.require_probability("pick_best")
    solver = single_layer_solver(sub_solver, seed=seed, deadline=deadline)
    return best_candidate(instance, norm, layer_candidates(instance, solver, deadline))[1]


def threshold_round(
    instance: MultilayerInstance,
    solution,
    pivot_rule: str = "lowest",
    *,
    seed: int | None = None,
    certify: bool = True,
) -> Clustering:
    """Round a relaxation by thresholding pivot distances at 1/2 and 1/4.

    The pivot's closed ball of radius 1/2 joins it when the average distance of
    that ball to the pivot is below 1/4; otherwise the pivot is a singleton
    (also when the ball holds nobody else).
    """
    instance.require_probability("threshold_round")
    X = _matrix(solution)
    rng = np.random.default_rng(seed)
    active = list(range(instance.n))
    labels = [-1] * instance.n
    cid = 0
    while active:
        i = _pick_pivot(active, rng, pivot_rule)
        near = [j for j in active if j != i and X[i, j] <= 0.5]
        members = [i]
        if near and np.mean(X[i, near]) < 0.25:
            members += near
        for j in members:
            labels[j] = cid
        cid += 1
        taken = set(members)
        active = [j for j in active if j not in taken]
    result = Clustering(tuple(labels))
    if certify:
        certify_threshold(instance, X, result).raise_if_failed()
    return result


def certify_threshold(instance: MultilayerInstance, solution, clustering: Clustering, tol: float = 1e-6) -> Certificate:
    """Check ``Disagree_l <= 4 * g_l(x)`` on every layer."""
    X = _matrix(solution)
    iu, ju = np.triu_indices(instance.n, 1)
    x = X[iu, ju]
    frac = instance.plus @ x + instance.minus @ (1 - x)
    same = clustering.same_pairs()
    dis = instance.plus[:, ~same].sum(axis=1) + instance.minus[:, same].sum(axis=1)
    cert = Certificate()
    cert.checks["layer_factor_4"] = bool(np.all(dis <= 4 * frac + tol))
    cert.details.update(disagreement=dis, fractional=frac)
    return cert
