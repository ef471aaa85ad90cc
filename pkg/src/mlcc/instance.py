"""Multilayer correlation clustering instances, clusterings and objectives.

Elements are the integers ``0..n-1``. Every unordered pair ``{u, v}`` with
``u < v`` gets a position in a flat pair index (row-major upper triangle,
the order of ``numpy.triu_indices(n, 1)``); per-layer weights are stored as
``(L, n*(n-1)/2)`` float64 arrays so that objectives and relaxations are
vectorised over pairs. A pair that is never set has weight zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InstanceFormatError, ModeError

TOL = 1e-9
MAX_P = 64.0


class Mode(str, enum.Enum):
    GENERAL = "general"
    PROBABILITY = "probability"
    PROBABILITY_TRIANGLE = "probability+triangle"

    @property
    def is_probability(self) -> bool:
        return self is not Mode.GENERAL


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=64)
def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n, 1)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def pair_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return arrays ``(u, v)`` with ``u < v`` for every pair index."""
    return _pair_arrays(n)


def pair_index(n: int, u: int, v: int) -> int:
    if u == v:
        raise ValueError("pairs need distinct elements")
    if u > v:
        u, v = v, u
    if u < 0 or v >= n:
        raise IndexError(f"pair ({u}, {v}) out of range for n={n}")
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def pairs_to_matrix(n: int, values: np.ndarray) -> np.ndarray:
    """Expand a pair vector (or a stack of them) into symmetric matrices."""
    values = np.asarray(values, dtype=float)
    iu, ju = pair_endpoints(n)
    out = np.zeros(values.shape[:-1] + (n, n))
    out[..., iu, ju] = values
    out[..., ju, iu] = values
    return out


def matrix_to_pairs(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    iu, ju = pair_endpoints(matrix.shape[-1])
    return matrix[..., iu, ju].copy()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MultilayerInstance:
    """Element count, per-layer ``(w+, w-)`` pair weights and a declared mode."""

    n: int
    plus: np.ndarray
    minus: np.ndarray
    mode: Mode = Mode.GENERAL

    def __post_init__(self):
        plus, minus = _frozen(self.plus), _frozen(self.minus)
        if plus.ndim == 1:
            plus, minus = _frozen(plus[None, :]), _frozen(minus[None, :])
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if plus.shape != minus.shape or plus.shape[1] != num_pairs(self.n):
            raise ValueError(
                f"weight arrays must have shape (L, {num_pairs(self.n)}); got {plus.shape} and {minus.shape}"
            )
        if plus.shape[0] < 1:
            raise ValueError("an instance needs at least one layer")
        if (plus < 0).any() or (minus < 0).any() or not (np.isfinite(plus).all() and np.isfinite(minus).all()):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def L(self) -> int:
        return self.plus.shape[0]

    @classmethod
    def from_pairs(
        cls,
        n: int,
        layers: Sequence[Mapping[tuple[int, int], tuple[float, float]]],
        mode: Mode | str = Mode.GENERAL,
        default: tuple[float, float] | None = None,
    ) -> "MultilayerInstance":
        """Build from one ``{(u, v): (w+, w-)}`` dict per layer.

        Unlisted pairs take ``default``, which is ``(0, 0)`` in general mode
        and ``(0.5, 0.5)`` in the probability modes.
        """
        mode = Mode(mode)
        if default is None:
            default = (0.5, 0.5) if mode.is_probability else (0.0, 0.0)
        P = num_pairs(n)
        plus = np.full((len(layers), P), float(default[0]))
        minus = np.full((len(layers), P), float(default[1]))
        for l, layer in enumerate(layers):
            for (u, v), (wp, wm) in layer.items():
                k = pair_index(n, u, v)
                plus[l, k] = wp
                minus[l, k] = wm
        return cls(n, plus, minus, mode)

    def weights(self, layer: int, u: int, v: int) -> tuple[float, float]:
        k = pair_index(self.n, u, v)
        return float(self.plus[layer, k]), float(self.minus[layer, k])

    def total_weight(self) -> np.ndarray:
        """Per-layer sum of all ``+`` and ``-`` weights."""
        return self.plus.sum(axis=1) + self.minus.sum(axis=1)

    def layer(self, l: int) -> "MultilayerInstance":
        """Single-layer instance holding layer ``l`` only."""
        if not 0 <= l < self.L:
            raise IndexError(f"layer {l} out of range for L={self.L}")
        return MultilayerInstance(self.n, self.plus[l : l + 1], self.minus[l : l + 1], self.mode)

    def with_mode(self, mode: Mode | str) -> "MultilayerInstance":
        return MultilayerInstance(self.n, self.plus, self.minus, Mode(mode))

    def require_probability(self, what: str) -> None:
        if not self.mode.is_probability:
            raise ModeError(f"{what} needs a probability-constraint instance, got mode={self.mode.value}")

    def __eq__(self, other):
        if not isinstance(other, MultilayerInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.mode == other.mode
            and np.array_equal(self.plus, other.plus)
            and np.array_equal(self.minus, other.minus)
        )

    __hash__ = None


@dataclass(frozen=True)
class Clustering:
    """A partition of ``0..n-1`` given by dense cluster labels.

    Labels are renumbered on construction in order of first appearance, so
    cluster ``0`` holds element ``0`` and clusters are sorted by their
    smallest element. Two clusterings are equal iff they are the same
    partition.
    """

    labels: tuple[int, ...]

    def __post_init__(self):
        relabel: dict[int, int] = {}
        canon = tuple(relabel.setdefault(int(c), len(relabel)) for c in self.labels)
        object.__setattr__(self, "labels", canon)

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]], n: int | None = None) -> "Clustering":
        clusters = [list(c) for c in clusters]
        if n is None:
            n = sum(len(c) for c in clusters)
        labels = [-1] * n
        for cid, members in enumerate(clusters):
            for v in members:
                if labels[v] != -1:
                    raise ValueError(f"element {v} appears in two clusters")
                labels[v] = cid
        if -1 in labels:
            raise ValueError(f"element {labels.index(-1)} is not covered")
        return cls(tuple(labels))

    @classmethod
    def singletons(cls, n: int) -> "Clustering":
        return cls(tuple(range(n)))

    @classmethod
    def one_cluster(cls, n: int) -> "Clustering":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    def same(self, u: int, v: int) -> bool:
        return self.labels[u] == self.labels[v]

    def clusters(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.labels):
            out[c].append(v)
        return out

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def same_pairs(self) -> np.ndarray:
        """Boolean vector over the pair index: True where both ends share a cluster."""
        lab = self.as_array()
        iu, ju = pair_endpoints(self.n)
        return lab[iu] == lab[ju]

    def __str__(self) -> str:
        return " | ".join(" ".join(map(str, c)) for c in self.clusters())


@dataclass(frozen=True)
class Norm:
    """The l_p norm used to reduce a disagreement vector (``p`` may be ``inf``)."""

    p: float = math.inf

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if math.isfinite(p) and p > MAX_P:
            raise ValueError(f"finite p is capped at {MAX_P:g} to keep powers representable, got {p}")
        object.__setattr__(self, "p", p)

    @classmethod
    def parse(cls, text: "str | float | Norm") -> "Norm":
        if isinstance(text, Norm):
            return text
        if isinstance(text, str) and text.strip().lower() in {"inf", "infinity", "max"}:
            return cls(math.inf)
        return cls(float(text))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    def __call__(self, values) -> float:
        return lp_norm(values, self)

    def __str__(self) -> str:
        return "inf" if self.is_inf else f"{self.p:g}"


def lp_norm(values, norm: "Norm | float | str") -> float:
    norm = Norm.parse(norm) if not isinstance(norm, Norm) else norm
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    if norm.is_inf:
        return float(v.max())
    if norm.p == 1:
        return float(v.sum())
    # power-domain sum with a scale factor so moderate p does not overflow
    scale = v.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((v / scale) ** norm.p) ** (1.0 / norm.p))


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str  # "coexistence" | "probability" | "triangle"
    layer: int
    elements: tuple[int, ...]
    amount: float

    def __str__(self) -> str:
        what = {"coexistence": "both + and - weights nonzero",
                "probability": "w+ + w- != 1",
                "triangle": "w-(u,w) > w-(u,v) + w-(v,w)"}[self.kind]
        return f"layer {self.layer} {self.elements}: {what} (off by {self.amount:.3g})"


def triangle_violations(n: int, values: np.ndarray, tol: float) -> list[tuple[int, int, int, float]]:
    """All ``(u, v, w, excess)`` with ``values[u,w] > values[u,v] + values[v,w] + tol``.

    ``values`` is a pair vector; ``v`` is the middle element and ``u < w``.
    """
    D = pairs_to_matrix(n, values)
    out = []
    idx = np.arange(n)
    for v in range(n):
        excess = D - D[:, v][:, None] - D[v, :][None, :]
        mask = excess > tol
        mask[v, :] = False
        mask[:, v] = False
        mask[idx, idx] = False
        mask = np.triu(mask, 1)
        for u, w in zip(*np.nonzero(mask)):
            out.append((int(u), v, int(w), float(excess[u, w])))
    return out


def validate(instance: MultilayerInstance, tol: float = TOL) -> list[Violation]:
    """Return every constraint of the declared mode that the instance breaks."""
    out: list[Violation] = []
    iu, ju = pair_endpoints(instance.n)
    for l in range(instance.L):
        wp, wm = instance.plus[l], instance.minus[l]
        if instance.mode is Mode.GENERAL:
            both = np.minimum(wp, wm)
            for k in np.nonzero(both > 0)[0]:
                out.append(Violation("coexistence", l, (int(iu[k]), int(ju[k])), float(both[k])))
        else:
            off = np.abs(wp + wm - 1.0)
            for k in np.nonzero(off > tol)[0]:
                out.append(Violation("probability", l, (int(iu[k]), int(ju[k])), float(off[k])))
        if instance.mode is Mode.PROBABILITY_TRIANGLE:
            for u, v, w, ex in triangle_violations(instance.n, wm, tol):
                out.append(Violation("triangle", l, (u, v, w), ex))
    return out


# --------------------------------------------------------------------------
# objective


def _check_clustering(instance: MultilayerInstance, clustering: Clustering) -> None:
    if clustering.n != instance.n:
        raise ValueError(f"clustering covers {clustering.n} elements, instance has {instance.n}")


def disagreements(instance: MultilayerInstance, clustering: Clustering) -> np.ndarray:
    """Per-layer disagreement vector of ``clustering`` (length ``L``)."""
    _check_clustering(instance, clustering)
    same = clustering.same_pairs()
    return instance.plus[:, ~same].sum(axis=1) + instance.minus[:, same].sum(axis=1)


def disagreement(instance: MultilayerInstance, clustering: Clustering, layer: int) -> float:
    if not 0 <= layer < instance.L:
        raise IndexError(f"layer {layer} out of range for L={instance.L}")
    _check_clustering(instance, clustering)
    same = clustering.same_pairs()
    return float(instance.plus[layer, ~same].sum() + instance.minus[layer, same].sum())


def objective(instance: MultilayerInstance, clustering: Clustering, norm: "Norm | float | str" = math.inf) -> float:
    return lp_norm(disagreements(instance, clustering), norm)


def canonicalize_general(instance: MultilayerInstance) -> tuple[MultilayerInstance, np.ndarray]:
    """Remove coexisting labels by subtracting ``min(w+, w-)`` from both weights.

    Returns the canonical instance and the per-layer offset such that, for every
    clustering, original disagreement = canonical disagreement + offset.
    """
    both = np.minimum(instance.plus, instance.minus)
    offsets = both.sum(axis=1)
    canon = MultilayerInstance(instance.n, instance.plus - both, instance.minus - both, Mode.GENERAL)
    return canon, offsets


# --------------------------------------------------------------------------
# file format
#
#   # comment
#   mlcc <mode> n=<n> L=<L>
#   <layer> <u> <v> <w+> <w->
#
# Unlisted pairs are (0, 0) in general mode and (0.5, 0.5) otherwise. Floats
# are written with 17 significant digits, which round-trips float64 exactly.


def dumps(instance: MultilayerInstance) -> str:
    default = (0.5, 0.5) if instance.mode.is_probability else (0.0, 0.0)
    lines = [f"mlcc {instance.mode.value} n={instance.n} L={instance.L}"]
    iu, ju = pair_endpoints(instance.n)
    for l in range(instance.L):
        wp, wm = instance.plus[l], instance.minus[l]
        keep = np.nonzero((wp != default[0]) | (wm != default[1]))[0]
        for k in keep:
            lines.append(f"{l} {iu[k]} {ju[k]} {wp[k]:.17g} {wm[k]:.17g}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> MultilayerInstance:
    header = None
    layers: list[dict] = []
    n = 0
    mode = Mode.GENERAL
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if header is None:
            if tok[0] != "mlcc" or len(tok) != 4:
                raise InstanceFormatError("expected header 'mlcc <mode> n=<n> L=<L>'", lineno)
            try:
                mode = Mode(tok[1])
                fields = dict(t.split("=", 1) for t in tok[2:])
                n, L = int(fields["n"]), int(fields["L"])
            except (ValueError, KeyError) as exc:
                raise InstanceFormatError(f"bad header: {exc}", lineno) from None
            header = (n, L)
            layers = [{} for _ in range(L)]
            continue
        if len(tok) != 5:
            raise InstanceFormatError(f"expected 5 fields, got {len(tok)}", lineno)
        try:
            l, u, v = int(tok[0]), int(tok[1]), int(tok[2])
            wp, wm = float(tok[3]), float(tok[4])
        except ValueError as exc:
            raise InstanceFormatError(str(exc), lineno) from None
        if not 0 <= l < header[1]:
            raise InstanceFormatError(f"layer {l} out of range", lineno)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise InstanceFormatError(f"bad pair ({u}, {v})", lineno)
        layers[l][(min(u, v), max(u, v))] = (wp, wm)
    if header is None:
        raise InstanceFormatError("missing header")
    try:
        return MultilayerInstance.from_pairs(n, layers, mode)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def read_instance(path: str | Path) -> MultilayerInstance:
    return loads(Path(path).read_text(encoding="utf-8"))


def write_instance(instance: MultilayerInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance), encoding="utf-8")
