"""Metric-polytope relaxations of multilayer correlation clustering.

Every layer contributes the affine cost

    g_l(x) = sum_pairs w+_l x + w-_l (1 - x)

over one variable per unordered pair. The relaxation minimises the l_p norm
of ``(g_1, ..., g_L)`` over the metric polytope (box plus triangle
inequalities). ``p = inf`` and ``p = 1`` are linear programs; finite
``p > 1`` is minimised in the power domain ``F = sum_l g_l^p`` with an
away-step Frank-Wolfe loop whose linear subproblems are the same LPs.
Triangle inequalities are added lazily (row generation) in all cases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import Deadline, NotConverged, check_deadline
from ..instance import MultilayerInstance, Norm, lp_norm, num_pairs, pairs_to_matrix, matrix_to_pairs
from .lp import LinearProgramSpec, LinearRow, LPSolution, solve_lp
from .separation import TriangleCut, max_triangle_violation, separate_triangles

log = logging.getLogger(__name__)

SEPARATION_EPS = 1e-7
METRIC_TOL = 1e-6
REFINE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class PseudoMetric:
    """Symmetric ``n x n`` distances in ``[0, 1]`` with zero diagonal."""

    n: int
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.shape != (self.n, self.n):
            raise ValueError(f"expected a {self.n}x{self.n} matrix, got {x.shape}")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @classmethod
    def from_pairs(cls, n: int, values) -> "PseudoMetric":
        return cls(n, pairs_to_matrix(n, values))

    @classmethod
    def zeros(cls, n: int) -> "PseudoMetric":
        return cls(n, np.zeros((n, n)))

    @property
    def pairs(self) -> np.ndarray:
        return matrix_to_pairs(self.x)

    def __getitem__(self, ij) -> float:
        return float(self.x[ij])

    def triangle_residual(self) -> float:
        return max_triangle_violation(self.pairs)

    def problems(self, tol: float = METRIC_TOL) -> list[str]:
        """Human-readable list of broken pseudometric properties (empty if none)."""
        out = []
        x = self.x
        if np.abs(np.diag(x)).max(initial=0.0) > 0:
            out.append("nonzero diagonal")
        if not np.allclose(x, x.T, atol=0, rtol=0):
            out.append("not symmetric")
        if (x < -tol).any() or (x > 1 + tol).any():
            out.append("entries outside [0, 1]")
        res = self.triangle_residual()
        if res > tol:
            out.append(f"triangle inequality violated by {res:.3g}")
        return out


@dataclass
class SolverLog:
    iterations: int = 0  # LP solves for p in {1, inf}; Frank-Wolfe steps otherwise
    rounds: int = 0  # row-generation rounds summed over all LP solves
    cuts: int = 0  # triangle rows in the final cut pool
    residual: float = 0.0  # largest triangle violation of the returned metric
    gap: float = 0.0  # final Frank-Wolfe gap (power domain, unscaled)
    converged: bool = True
    lp_values: list[float] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)


@dataclass(eq=False)
class RelaxationSolution:
    metric: PseudoMetric
    lower_bound: float
    per_layer_cost: np.ndarray
    norm: Norm
    log: SolverLog

    @property
    def value(self) -> float:
        """Norm of the fractional per-layer costs at the returned point."""
        return lp_norm(self.per_layer_cost, self.norm)


def layer_costs(instance: MultilayerInstance, x: np.ndarray) -> np.ndarray:
    """Fractional per-layer costs ``g_l(x)`` for a pair vector ``x``."""
    x = np.asarray(x, dtype=float)
    return instance.minus.sum(axis=1) + (instance.plus - instance.minus) @ x


class _CutPool:
    """Triangle rows collected so far, shared by every LP of one relaxation."""

    def __init__(self, n: int):
        self.n = n
        self.keys: set[tuple[int, int, int]] = set()

    def add(self, spec: LinearProgramSpec, cuts) -> int:
        added = 0
        for cut in cuts:
            key = (cut.i, cut.j, cut.k)
            if key not in self.keys:
                self.keys.add(key)
                spec.add_row(cut.row(self.n))
                added += 1
        return added


def _solve_with_cuts(
    spec: LinearProgramSpec,
    pool: _CutPool,
    P: int,
    *,
    eps: float,
    max_cuts: int,
    max_rounds: int,
    backend: str,
    deadline: Deadline | None,
    slog: SolverLog,
) -> LPSolution:
    """Row generation: solve, separate, add the worst cuts, repeat."""
    sol = None
    for _ in range(max_rounds):
        check_deadline(deadline)
        sol = solve_lp(spec, backend=backend)
        slog.rounds += 1
        slog.lp_values.append(sol.value)
        cuts = separate_triangles(sol.x[:P], eps, max_cuts)
        if not cuts:
            return sol
        if pool.add(spec, cuts) == 0:
            log.warning("separated cuts already in pool (violation %.3g); accepting point", cuts[0].violation)
            return sol
    raise NotConverged(
        f"row generation did not converge in {max_rounds} rounds",
        best=sol,
        residual=separate_triangles(sol.x[:P], eps, 1)[0].violation,
    )


def _clean(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    x[x < 1e-10] = 0.0
    x[x > 1 - 1e-10] = 1.0
    return x


def solve_relaxation(
    instance: MultilayerInstance,
    norm: "Norm | float | str" = math.inf,
    *,
    eps: float = SEPARATION_EPS,
    max_cuts: int = 5000,
    max_rounds: int = 200,
    max_iter: int = 5000,
    fw_tol: float = 1e-5,
    backend: str = "highs",
    refine: bool = True,
    deadline: Deadline | None = None,
) -> RelaxationSolution:
    """Solve the convex relaxation of ``instance`` under ``norm``.

    Returns the fractional pseudometric with a certified lower bound on the
    optimal clustering objective. Raises :class:`NotConverged` (carrying the
    best solution found) if an iteration cap is hit.

    For ``p = inf`` the optimal face is usually large, since only the worst
    layer is pinned. With ``refine`` a second LP picks, within that face, a
    point of least total layer cost; the bound is unchanged.
    """
    norm = Norm.parse(norm)
    n = instance.n
    P = num_pairs(n)
    slog = SolverLog()
    const = instance.minus.sum(axis=1)
    C = instance.plus - instance.minus

    def finish(x: np.ndarray, lower_bound: float) -> RelaxationSolution:
        x = _clean(x)
        slog.residual = max_triangle_violation(x)
        slog.cuts = len(pool.keys)
        return RelaxationSolution(
            PseudoMetric.from_pairs(n, x), max(0.0, float(lower_bound)), layer_costs(instance, x), norm, slog
        )

    pool = _CutPool(n)
    if P == 0:
        return finish(np.zeros(0), lp_norm(const, norm))

    kw = dict(eps=eps, max_cuts=max_cuts, max_rounds=max_rounds, backend=backend, deadline=deadline, slog=slog)

    if norm.is_inf:
        spec = build_lp(instance, norm)
        sol = _solve_with_cuts(spec, pool, P, **kw)
        slog.iterations = 1
        if refine:
            # second stage: among points with max layer cost t*, minimise the total cost
            spec.upper[P] = sol.value + REFINE_SLACK * (1.0 + abs(sol.value))
            spec.objective = np.append(C.sum(axis=0), 0.0)
            side = SolverLog()
            second = _solve_with_cuts(spec, pool, P, **dict(kw, slog=side))
            slog.rounds += side.rounds
            slog.iterations = 2
            return finish(second.x[:P], sol.value)
        return finish(sol.x[:P], sol.value)

    spec = build_lp(instance, Norm(1))
    sol = _solve_with_cuts(spec, pool, P, **kw)
    slog.iterations = 1
    if norm.p == 1:
        return finish(sol.x, sol.value + const.sum())

    return _frank_wolfe(instance, norm, sol.x, spec, pool, finish, kw, max_iter=max_iter, fw_tol=fw_tol)


def triangle_rows(n: int) -> list[LinearRow]:
    """All ``3 * C(n, 3)`` triangle rows of the metric polytope."""
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for a, b, c in ((i, j, k), (i, k, j), (j, i, k)):
                    # x[a,c] <= x[a,b] + x[b,c], with b the middle element
                    rows.append(TriangleCut(min(a, c), b, max(a, c), 0.0).row(n))
    return rows


def build_lp(instance: MultilayerInstance, norm: "Norm | float | str", with_triangles: bool = False) -> LinearProgramSpec:
    """The linear relaxation for ``p = inf`` (variables: pairs then ``t``) or ``p = 1``.

    For ``p = 1`` the objective omits the constant ``sum_l sum_pairs w-``.
    Triangle rows are left out unless ``with_triangles`` is set.
    """
    norm = Norm.parse(norm)
    n, P = instance.n, num_pairs(instance.n)
    const = instance.minus.sum(axis=1)
    C = instance.plus - instance.minus
    tri = triangle_rows(n) if with_triangles else []
    if norm.is_inf:
        t_max = float(instance.total_weight().max())
        rows = []
        for l in range(instance.L):
            nz = np.nonzero(C[l])[0]
            rows.append(LinearRow(tuple(nz.tolist()) + (P,), tuple(C[l, nz].tolist()) + (-1.0,), "<=", -float(const[l])))
        obj = np.zeros(P + 1)
        obj[P] = 1.0
        return LinearProgramSpec(P + 1, obj, rows + tri, np.zeros(P + 1), np.append(np.ones(P), t_max))
    if norm.p == 1:
        return LinearProgramSpec(P, C.sum(axis=0), tri, np.zeros(P), np.ones(P))
    raise ValueError("only p = 1 and p = inf relaxations are linear programs")


def _line_search(g: np.ndarray, delta: np.ndarray, p: float, gamma_max: float, tol: float = 1e-9) -> float:
    """Exact minimiser of ``sum (g + t*delta)^p`` on ``[0, gamma_max]`` by bisection on the derivative."""

    def slope(t: float) -> float:
        return float(np.sum(delta * np.maximum(g + t * delta, 0.0) ** (p - 1)))

    if slope(0.0) >= 0:
        return 0.0
    if slope(gamma_max) <= 0:
        return gamma_max
    lo, hi = 0.0, gamma_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _frank_wolfe(instance, norm, x0, spec, pool, finish, kw, *, max_iter, fw_tol):
    slog: SolverLog = kw["slog"]
    p = norm.p
    P = x0.size
    const = instance.minus.sum(axis=1)
    C = instance.plus - instance.minus
    # work with g / scale so the power domain stays O(1)
    scale = float(layer_costs(instance, x0).max())
    if scale <= 0:
        return finish(x0, 0.0)
    Cs, cs = C / scale, const / scale

    def F(x):
        return float(np.sum((cs + Cs @ x) ** p))

    active: dict[bytes, list] = {x0.tobytes(): [x0.copy(), 1.0]}
    x = x0.copy()
    best_lb = 0.0
    gap = math.inf
    for it in range(1, max_iter + 1):
        check_deadline(kw["deadline"])
        g = cs + Cs @ x
        fx = float(np.sum(g**p))
        slog.objective_history.append(fx * scale**p)
        grad = p * (g ** (p - 1)) @ Cs
        spec.objective = grad
        s = _solve_with_cuts(spec, pool, P, **kw).x.copy()
        # tiny negative gaps are LP round-off; clamp so the bound stays valid
        gap = max(float(grad @ (x - s)), 0.0)
        best_lb = max(best_lb, fx - gap)
        slog.iterations = it
        if gap <= fw_tol * (1.0 + fx):
            break
        # away vertex: worst active vertex along the gradient
        keys = list(active)
        scores = [float(grad @ active[k][0]) for k in keys]
        away_key = keys[int(np.argmax(scores))]
        v, alpha_v = active[away_key]
        away_gap = float(grad @ (v - x))
        if gap >= away_gap or len(active) == 1:
            d, gamma_max, fw_step = s - x, 1.0, True
        else:
            d, gamma_max, fw_step = x - v, alpha_v / (1.0 - alpha_v), False
        gamma = _line_search(g, Cs @ d, p, gamma_max)
        if gamma > 0 and F(x + gamma * d) > fx:
            gamma = 0.0
        if gamma == 0.0:
            if not fw_step:
                # fall back to a plain Frank-Wolfe step
                d, gamma_max, fw_step = s - x, 1.0, True
                gamma = _line_search(g, Cs @ d, p, 1.0)
                if gamma > 0 and F(x + gamma * d) > fx:
                    gamma = 0.0
            if gamma == 0.0:
                log.debug("Frank-Wolfe stalled at gap %.3g", gap)
                break
        if fw_step:
            for item in active.values():
                item[1] *= 1.0 - gamma
            key = s.tobytes()
            if gamma >= 1.0:
                active = {key: [s, 1.0]}
            else:
                active.setdefault(key, [s, 0.0])[1] += gamma
        else:
            for item in active.values():
                item[1] *= 1.0 + gamma
            active[away_key][1] -= gamma
            if gamma >= gamma_max or active[away_key][1] <= 1e-15:
                del active[away_key]
        active = {k: a for k, a in active.items() if a[1] > 1e-15}
        total = sum(a[1] for a in active.values())
        x = sum(a[0] * (a[1] / total) for a in active.values())
    else:
        g = cs + Cs @ x
        fx = float(np.sum(g**p))
        slog.converged = False
        slog.gap = gap * scale**p
        best = finish(x, scale * max(best_lb, 0.0) ** (1.0 / p))
        raise NotConverged(f"Frank-Wolfe gap {gap:.3g} after {max_iter} iterations", best=best, residual=slog.gap)
    slog.gap = gap * scale**p
    slog.converged = gap <= fw_tol * (1.0 + fx)
    return finish(x, scale * max(best_lb, 0.0) ** (1.0 / p))
