"""Weighted multilayer networks and instance generation from them."""

from __future__ import annotations

import logging
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import InstanceFormatError
from ..instance import Mode, MultilayerInstance, num_pairs

log = logging.getLogger(__name__)


@dataclass
class MultilayerNetwork:
    """Vertices ``0..n-1`` and one ``{(u, v): weight}`` edge map per layer (``u < v``)."""

    n: int
    layers: list[dict[tuple[int, int], float]]
    self_loops: int = 0

    @property
    def L(self) -> int:
        return len(self.layers)

    def num_edges(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def max_weight(self) -> float:
        return max((w for layer in self.layers for w in layer.values()), default=0.0)


def parse_edgelist(lines: Iterable[str], num_layers: int) -> MultilayerNetwork:
    """Parse ``u v layer weight`` lines.

    Vertex ids and layer ids are each 1-based unless their minimum is 0.
    Duplicate ``(u, v, layer)`` lines are summed and self-loops are dropped.
    Blank lines and lines starting with ``#`` or ``%`` are ignored.
    """
    raw = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text[0] in "#%":
            continue
        tok = text.split()
        if len(tok) != 4:
            raise InstanceFormatError(f"expected 'u v layer weight', got {len(tok)} fields", lineno)
        try:
            u, v, layer = int(tok[0]), int(tok[1]), int(tok[2])
            w = float(tok[3])
        except ValueError as exc:
            raise InstanceFormatError(str(exc), lineno) from None
        if not w > 0 or not np.isfinite(w):
            raise InstanceFormatError(f"weight must be positive, got {tok[3]}", lineno)
        if min(u, v, layer) < 0:
            raise InstanceFormatError("ids must be nonnegative", lineno)
        raw.append((lineno, u, v, layer, w))

    layers: list[dict[tuple[int, int], float]] = [{} for _ in range(num_layers)]
    if not raw:
        return MultilayerNetwork(0, layers)
    id_base = 0 if min(min(r[1], r[2]) for r in raw) == 0 else 1
    layer_base = 0 if min(r[3] for r in raw) == 0 else 1
    n = max(max(r[1], r[2]) for r in raw) - id_base + 1
    loops = 0
    for lineno, u, v, layer, w in raw:
        l = layer - layer_base
        if l >= num_layers:
            raise InstanceFormatError(f"layer {layer} exceeds layer count {num_layers}", lineno)
        u, v = u - id_base, v - id_base
        if u == v:
            loops += 1
            continue
        key = (min(u, v), max(u, v))
        layers[l][key] = layers[l].get(key, 0.0) + w
    if loops:
        log.warning("dropped %d self-loop(s)", loops)
    return MultilayerNetwork(n, layers, loops)


def ingest_edgelist(path: str | Path, num_layers: int) -> MultilayerNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_edgelist(fh, num_layers)


def generate_instance(network: MultilayerNetwork, mode: Mode | str = Mode.GENERAL, seed: int | None = 0) -> MultilayerInstance:
    """Turn a weighted network into a clustering instance.

    Weights are divided by the global maximum. Edges become ``+`` labels
    (general mode: ``w+ = w``; probability mode: ``w+ = 0.5 + w/2``). Each
    non-edge gets, with probability 1/2, a ``-`` label drawn uniformly from
    the layer's edge weights (probability mode: ``w- = 0.5 + draw/2``), and
    otherwise no label (probability mode: ``0.5 / 0.5``). Layers are visited
    in order and pairs lexicographically, with a ``random.Random(seed)`` stream.
    """
    mode = Mode(mode)
    if network.n == 0 or network.num_edges() == 0:
        raise ValueError("cannot generate an instance from an empty network")
    n, L, P = network.n, network.L, num_pairs(network.n)
    w_max = network.max_weight()
    rng = random.Random(seed)
    prob = mode.is_probability
    plus = np.zeros((L, P))
    minus = np.zeros((L, P))
    iu, ju = np.triu_indices(n, 1)
    for l, edges in enumerate(network.layers):
        norm_edges = {key: w / w_max for key, w in sorted(edges.items())}
        pool = list(norm_edges.values())
        if not pool:
            warnings.warn(f"layer {l} has no edges; its non-edges get no random '-' labels", RuntimeWarning, stacklevel=2)
        for k in range(P):
            key = (int(iu[k]), int(ju[k]))
            w = norm_edges.get(key)
            if w is not None:
                if prob:
                    plus[l, k] = 0.5 + w / 2
                    minus[l, k] = 1.0 - plus[l, k]
                else:
                    plus[l, k] = w
                continue
            coin = rng.random() < 0.5
            if coin and pool:
                draw = rng.choice(pool)
                if prob:
                    minus[l, k] = 0.5 + draw / 2
                    plus[l, k] = 1.0 - minus[l, k]
                else:
                    minus[l, k] = draw
            elif prob:
                plus[l, k] = minus[l, k] = 0.5
    return MultilayerInstance(n, plus, minus, mode)


def planted_network(
    n: int,
    L: int,
    seed: int = 0,
    communities: int = 3,
    p_in: float = 0.6,
    p_out: float = 0.1,
    max_weight: int = 5,
    shuffle: float = 0.1,
) -> MultilayerNetwork:
    """Synthetic multilayer network with a planted partition.

    Each layer reuses the planted communities but reassigns a ``shuffle``
    fraction of vertices at random, so layers agree only partly. Edge weights
    are integers in ``1..max_weight``.
    """
    rng = np.random.default_rng(seed)
    base = rng.integers(communities, size=n)
    layers = []
    for _ in range(L):
        member = base.copy()
        moved = rng.random(n) < shuffle
        member[moved] = rng.integers(communities, size=int(moved.sum()))
        edges = {}
        for u in range(n):
            for v in range(u + 1, n):
                p = p_in if member[u] == member[v] else p_out
                if rng.random() < p:
                    edges[(u, v)] = float(rng.integers(1, max_weight + 1))
        layers.append(edges)
    return MultilayerNetwork(n, layers)


def write_edgelist(network: MultilayerNetwork, path: str | Path) -> None:
    """Write 1-based ``u v layer weight`` lines."""
    lines = []
    for l, edges in enumerate(network.layers):
        for (u, v), w in sorted(edges.items()):
            lines.append(f"{u + 1} {v + 1} {l + 1} {w:.17g}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
