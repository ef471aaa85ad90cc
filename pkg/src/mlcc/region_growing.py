"""Region-growing rounding of a pseudometric into a clustering.

Balls are cut around pivots; the radius of each ball is the breakpoint that
minimises the worst per-layer ratio of ``+`` weight crossing the ball
boundary to the ball's fractional volume. With ``c > 2`` the rounding loses
at most ``max(2 c L ln(n+1), c / (c-2))`` against the relaxation, which
:func:`certify_region_growing` checks on concrete runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CertificateError, Deadline, check_deadline
from .instance import Clustering, MultilayerInstance, Norm, lp_norm, pairs_to_matrix
from .relax import PseudoMetric, RelaxationSolution

DEFAULT_C = 3.0
CERT_RTOL = 1e-9
CERT_ATOL = 1e-9


def _matrix(metric) -> np.ndarray:
    if isinstance(metric, RelaxationSolution):
        metric = metric.metric
    if isinstance(metric, PseudoMetric):
        return metric.x
    return np.asarray(metric, dtype=float)


def lemma_bound(c: float, L: int, n: int) -> float:
    """Worst-case ratio cut/vol guaranteed at the chosen radius: ``c L ln(n+1)``."""
    return c * L * math.log(n + 1)


def approximation_factor(c: float, L: int, n: int) -> float:
    """``max(2 c L ln(n+1), c / (c-2))``."""
    return max(2 * c * L * math.log(n + 1), c / (c - 2))


def ball(metric, active: Sequence[int], i: int, r: float) -> list[int]:
    """Members of ``active`` at distance strictly less than ``r`` from ``i``."""
    X = _matrix(metric)
    active = np.asarray(active, dtype=int)
    return sorted(active[X[i, active] < r].tolist())


def plus_mass(instance: MultilayerInstance, metric) -> np.ndarray:
    """Per-layer fractional ``+`` cost ``F_l = sum w+ x``."""
    X = _matrix(metric)
    iu, ju = np.triu_indices(instance.n, 1)
    return instance.plus @ X[iu, ju]


def _plus_matrix(instance: MultilayerInstance) -> np.ndarray:
    return pairs_to_matrix(instance.n, instance.plus)


def cut_value(instance: MultilayerInstance, metric, active: Sequence[int], layer: int, B: Sequence[int]) -> float:
    """``+`` weight on layer ``layer`` between ``B`` and ``active \\ B``."""
    W = _plus_matrix(instance)[layer]
    B = np.asarray(sorted(set(B)), dtype=int)
    rest = np.asarray(sorted(set(active) - set(B.tolist())), dtype=int)
    if B.size == 0 or rest.size == 0:
        return 0.0
    return float(W[np.ix_(B, rest)].sum())


def volume(
    instance: MultilayerInstance,
    metric,
    active: Sequence[int],
    layer: int,
    i: int,
    r: float,
    B: Sequence[int] | None = None,
) -> float:
    """Fractional volume of the ball ``B = ball(i, r)`` within ``active``.

    ``F_l / n`` plus the ``w+ x`` mass of pairs inside the ball plus
    ``w+ (r - x[i, j])`` for every boundary pair ``(j in B, k outside)``.
    """
    X = _matrix(metric)
    W = _plus_matrix(instance)[layer]
    if B is None:
        B = ball(X, active, i, r)
    F = float(plus_mass(instance, X)[layer])
    B = np.asarray(sorted(set(B)), dtype=int)
    rest = np.asarray(sorted(set(active) - set(B.tolist())), dtype=int)
    inside = 0.5 * float((W[np.ix_(B, B)] * X[np.ix_(B, B)]).sum()) if B.size else 0.0
    boundary = 0.0
    if B.size and rest.size:
        boundary = float((W[np.ix_(B, rest)] * (r - X[i, B])[:, None]).sum())
    return F / instance.n + inside + boundary


class RadiusChoice(NamedTuple):
    radius: float
    ratio: float  # worst cut/vol over layers with F_l > 0 at ``radius``


def _prefix_block(M: np.ndarray) -> np.ndarray:
    """``S[..., k] = sum_{a, b < k} M[..., a, b]`` for k = 0..m."""
    C2 = M.cumsum(axis=-2).cumsum(axis=-1)
    m = M.shape[-1]
    out = np.zeros(M.shape[:-2] + (m + 1,))
    out[..., 1:] = C2[..., np.arange(m), np.arange(m)]
    return out


def _ratios(W, X, F, n, active, i, c):
    """Breakpoints and the max-over-layers cut/vol ratio at each of them."""
    active = np.asarray(active, dtype=int)
    d = X[i, active]
    order = np.lexsort((active != i, d))
    ids = active[order]
    ds = d[order]
    live = np.nonzero(F > 0)[0]
    inv_c = 1.0 / c
    breaks = np.unique(ds[(ds > 0) & (ds < inv_c)])
    breaks = np.append(breaks, inv_c)
    if live.size == 0:
        return breaks, np.zeros_like(breaks), ids, ds
    M = W[np.ix_(live, ids, ids)]
    XA = X[np.ix_(ids, ids)]
    rows = M.sum(axis=2)
    zero = np.zeros((live.size, 1))
    row_prefix = np.concatenate([zero, rows.cumsum(axis=1)], axis=1)
    drow_prefix = np.concatenate([zero, (rows * ds).cumsum(axis=1)], axis=1)
    within = _prefix_block(M)
    inside = 0.5 * _prefix_block(M * XA)
    dwithin = _prefix_block(M * ds[:, None])
    k = np.searchsorted(ds, breaks, side="left")  # ball size at each breakpoint
    cut = row_prefix[:, k] - within[:, k]
    boundary = breaks * cut - (drow_prefix[:, k] - dwithin[:, k])
    vol = F[live][:, None] / n + inside[:, k] + boundary
    cut = np.maximum(cut, 0.0)
    if (vol <= 0).any():
        raise CertificateError("ball volume vanished for a layer with positive mass")
    return breaks, (cut / vol).max(axis=0), ids, ds


def choose_radius(
    instance: MultilayerInstance,
    metric,
    active: Sequence[int],
    i: int,
    c: float = DEFAULT_C,
    *,
    certify: bool = True,
    _cache: dict | None = None,
) -> RadiusChoice:
    """Radius in ``(0, 1/c]`` minimising the worst per-layer cut/volume ratio.

    Only the right ends of the intervals where the ball is constant need to be
    tried, since the ratio is nonincreasing inside each interval. Ties go to
    the smallest radius; with no layer of positive mass the radius is ``1/c``.
    """
    if c <= 2:
        raise ValueError(f"c must exceed 2, got {c}")
    X = _matrix(metric)
    if _cache is None:
        _cache = {}
    if "W" not in _cache:
        _cache["W"] = _plus_matrix(instance)
        _cache["F"] = plus_mass(instance, X)
    breaks, ratios, _, _ = _ratios(_cache["W"], X, _cache["F"], instance.n, active, i, c)
    best = int(np.argmin(ratios))
    choice = RadiusChoice(float(breaks[best]), float(ratios[best]))
    bound = lemma_bound(c, instance.L, instance.n)
    if certify and choice.ratio > bound * (1 + CERT_RTOL) + CERT_ATOL:
        raise CertificateError(f"radius ratio {choice.ratio:.6g} exceeds c L ln(n+1) = {bound:.6g}")
    return choice


@dataclass(frozen=True)
class BallStep:
    pivot: int
    radius: float
    ratio: float
    members: tuple[int, ...]


@dataclass(frozen=True)
class RegionGrowingResult:
    clustering: Clustering
    steps: tuple[BallStep, ...]
    c: float

    @property
    def max_ratio(self) -> float:
        return max((s.ratio for s in self.steps), default=0.0)


def grow_regions(
    instance: MultilayerInstance,
    solution,
    c: float = DEFAULT_C,
    pivot_rule: str = "lowest",
    *,
    seed: int | None = None,
    certify: bool = True,
    deadline: Deadline | None = None,
) -> RegionGrowingResult:
    """Cut balls around pivots until every element is clustered.

    ``solution`` is a :class:`RelaxationSolution`, a :class:`PseudoMetric` or
    a plain distance matrix. ``pivot_rule`` is ``"lowest"`` (smallest id
    first) or ``"random"`` (uniform, seeded by ``seed``).
    """
    if c <= 2:
        raise ValueError(f"c must exceed 2, got {c}")
    X = _matrix(solution)
    n = instance.n
    if X.shape != (n, n):
        raise ValueError("metric and instance disagree on n")
    if pivot_rule not in ("lowest", "random"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    rng = np.random.default_rng(seed)
    cache: dict = {}
    active = list(range(n))
    labels = [-1] * n
    steps = []
    while active:
        check_deadline(deadline)
        i = active[0] if pivot_rule == "lowest" else active[int(rng.integers(len(active)))]
        choice = choose_radius(instance, X, active, i, c, certify=certify, _cache=cache)
        members = ball(X, active, i, choice.radius)
        for v in members:
            labels[v] = len(steps)
        steps.append(BallStep(i, choice.radius, choice.ratio, tuple(members)))
        taken = set(members)
        active = [v for v in active if v not in taken]
    return RegionGrowingResult(Clustering(tuple(labels)), tuple(steps), c)


def region_grow(instance, solution, c: float = DEFAULT_C, pivot_rule: str = "lowest", **kw) -> Clustering:
    return grow_regions(instance, solution, c, pivot_rule, **kw).clustering


@dataclass
class Certificate:
    """Outcome of checking proven inequalities on one concrete run."""

    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise CertificateError("failed: " + ", ".join(self.failed()))


def _le(a, b) -> bool:
    return bool(np.all(np.asarray(a) <= np.asarray(b) * (1 + CERT_RTOL) + 1e-7))


def certify_region_growing(
    instance: MultilayerInstance,
    solution,
    clustering: Clustering,
    c: float = DEFAULT_C,
    norm: "Norm | float | str | None" = None,
) -> Certificate:
    """Check the per-layer ``+``/``-`` cost bounds and the overall ratio.

    * layers with positive ``+`` mass: separated ``+`` weight
      <= ``2 c L ln(n+1)`` times the mass;
    * layers with zero mass: no ``+`` pair separated;
    * every layer: joined ``-`` weight <= ``c/(c-2)`` times ``sum w- (1 - x)``;
    * joined pairs are closer than ``2/c``;
    * objective <= factor times the norm of the fractional layer costs.
    """
    X = _matrix(solution)
    n, L = instance.n, instance.L
    iu, ju = np.triu_indices(n, 1)
    x = X[iu, ju]
    same = clustering.same_pairs()
    plus_cost = instance.plus[:, ~same].sum(axis=1)
    minus_cost = instance.minus[:, same].sum(axis=1)
    F = instance.plus @ x
    minus_frac = instance.minus @ (1 - x)
    big = 2 * c * L * math.log(n + 1)
    pos = F > 0
    cert = Certificate()
    cert.checks["plus_bound"] = _le(plus_cost[pos], big * F[pos])
    cert.checks["plus_zero_mass"] = bool(np.all(plus_cost[~pos] <= 1e-12))
    cert.checks["minus_bound"] = _le(minus_cost, c / (c - 2) * minus_frac)
    cert.checks["joined_close"] = bool(np.all(x[same] < 2 / c + 1e-6))
    if norm is None:
        norm = solution.norm if isinstance(solution, RelaxationSolution) else Norm(math.inf)
    frac = lp_norm(F + minus_frac, norm)
    obj = lp_norm(plus_cost + minus_cost, norm)
    cert.checks["objective_bound"] = _le(obj, approximation_factor(c, L, n) * frac)
    cert.details.update(plus_cost=plus_cost, plus_mass=F, minus_cost=minus_cost, minus_mass=minus_frac,
                        objective=obj, fractional=frac)
    return cert
