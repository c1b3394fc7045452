"""Weighted multigraphs with oriented edges, plus the canonical coalition graphs.

Every edge has an identity (its index in the edge table) and two orientations.
Parallel edges and self-loops are allowed.  Node and edge ids are dense integers
assigned in construction order and never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

MAX_HYPERCUBE_PLAYERS = 20
MAX_MERGER_PLAYERS = 8


class GraphError(ValueError):
    """Raised for malformed graphs or graphs that violate an operation's precondition."""


class OrientedEdge(NamedTuple):
    edge: int
    forward: bool = True

    def reverse(self) -> "OrientedEdge":
        return OrientedEdge(self.edge, not self.forward)


@dataclass(frozen=True, eq=False)
class WeightedMultigraph:
    """Immutable weighted multigraph.

    ``tails[e]`` and ``heads[e]`` are the initial and terminal node of the
    forward orientation of edge ``e``; the reverse orientation swaps them.
    One weight per edge serves both orientations.
    """

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for name in ("tails", "heads", "weights"):
            arr = getattr(self, name)
            arr.setflags(write=False)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.node_count)))

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def initial(self, oe: OrientedEdge) -> int:
        return int(self.tails[oe.edge] if oe.forward else self.heads[oe.edge])

    def terminal(self, oe: OrientedEdge) -> int:
        return int(self.heads[oe.edge] if oe.forward else self.tails[oe.edge])

    def weight(self, oe: OrientedEdge | int) -> float:
        e = oe.edge if isinstance(oe, OrientedEdge) else oe
        return float(self.weights[e])

    @cached_property
    def is_loop(self) -> np.ndarray:
        mask = self.tails == self.heads
        mask.setflags(write=False)
        return mask

    @cached_property
    def _outgoing(self) -> tuple[tuple[OrientedEdge, ...], ...]:
        out: list[list[OrientedEdge]] = [[] for _ in range(self.node_count)]
        for e in range(self.edge_count):
            out[int(self.tails[e])].append(OrientedEdge(e, True))
            out[int(self.heads[e])].append(OrientedEdge(e, False))
        return tuple(tuple(lst) for lst in out)

    def outgoing(self, s: int) -> tuple[OrientedEdge, ...]:
        self._check_node(s)
        return self._outgoing[s]

    @cached_property
    def total_weight(self) -> np.ndarray:
        """Sum of weights over oriented edges leaving each node (loops count twice)."""
        w = np.zeros(self.node_count)
        np.add.at(w, self.tails, self.weights)
        np.add.at(w, self.heads, self.weights)
        w.setflags(write=False)
        return w

    def is_connected(self) -> bool:
        if self.node_count <= 1:
            return True
        adj = sparse.coo_matrix(
            (np.ones(self.edge_count), (self.tails, self.heads)),
            shape=(self.node_count, self.node_count),
        )
        n_comp, _ = connected_components(adj, directed=False)
        return n_comp == 1

    def require_connected(self) -> None:
        if not self.is_connected():
            raise GraphError("graph is disconnected; anchored solutions are not unique")

    def _check_node(self, s: int) -> None:
        if not 0 <= s < self.node_count:
            raise GraphError(f"node {s} out of range [0, {self.node_count})")

    @cached_property
    def hypercube_players(self) -> int | None:
        return _detect_hypercube(self)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for a, b, w in zip(self.tails, self.heads, self.weights):
            yield int(a), int(b), float(w)


def construct_graph(
    nodes: int,
    edges: Sequence[tuple[int, int, float]] | Sequence[tuple[int, int]],
    labels: Sequence[str] | None = None,
) -> WeightedMultigraph:
    """Build a multigraph; edge ``k`` of the input becomes EdgeId ``k``.

    Edges may be given as ``(a, b)`` (weight 1.0) or ``(a, b, w)``.
    """
    if nodes < 1:
        raise GraphError("a graph needs at least one node")
    tails, heads, weights = [], [], []
    for k, edge in enumerate(edges):
        if len(edge) == 2:
            a, b = edge
            w = 1.0
        else:
            a, b, w = edge
        if not (0 <= a < nodes and 0 <= b < nodes):
            raise GraphError(f"edge {k} endpoint out of range: ({a}, {b})")
        w = float(w)
        if not w > 0 or not np.isfinite(w):
            raise GraphError(f"edge {k} has nonpositive weight {w}")
        tails.append(int(a))
        heads.append(int(b))
        weights.append(w)
    if labels is not None and len(labels) != nodes:
        raise GraphError("label count does not match node count")
    return WeightedMultigraph(
        node_count=int(nodes),
        tails=np.asarray(tails, dtype=np.int64),
        heads=np.asarray(heads, dtype=np.int64),
        weights=np.asarray(weights, dtype=np.float64),
        labels=tuple(labels) if labels is not None else (),
    )


def incident_oriented_edges(g: WeightedMultigraph, s: int) -> tuple[OrientedEdge, ...]:
    """Oriented edges whose initial node is ``s``; a self-loop contributes both orientations."""
    return g.outgoing(s)


# -- coalition hypercube ---------------------------------------------------

def coalition_label(mask: int, players: int) -> str:
    members = [str(i + 1) for i in range(players) if mask >> i & 1]
    return "{" + ",".join(members) + "}"


def build_hypercube(players: int) -> tuple[WeightedMultigraph, np.ndarray]:
    """Coalition graph on ``2**players`` subsets with unit-weight inclusion edges.

    Node ids coincide with subset bitmasks (bit ``i`` is player ``i + 1``), so the
    returned mapping is the identity.  Edges are listed by increasing base subset,
    then by player.
    """
    if not 1 <= players <= MAX_HYPERCUBE_PLAYERS:
        raise GraphError(f"player count must be in [1, {MAX_HYPERCUBE_PLAYERS}], got {players}")
    n = 1 << players
    masks = np.arange(n, dtype=np.int64)
    bits = np.int64(1) << np.arange(players, dtype=np.int64)
    absent = (masks[:, None] & bits[None, :]) == 0
    rows, cols = np.nonzero(absent)
    tails = masks[rows]
    heads = tails | bits[cols]
    g = WeightedMultigraph(
        node_count=n,
        tails=tails,
        heads=heads,
        weights=np.ones(len(tails)),
        labels=tuple(coalition_label(m, players) for m in range(n)),
    )
    g.__dict__["hypercube_players"] = players
    return g, masks


def hypercube_players(g: WeightedMultigraph) -> int | None:
    """Return N if ``g`` is exactly the coalition graph built by :func:`build_hypercube`."""
    return g.hypercube_players


def _detect_hypercube(g: WeightedMultigraph) -> int | None:
    n = g.node_count
    if n < 2 or n & (n - 1):
        return None
    players = n.bit_length() - 1
    if players > MAX_HYPERCUBE_PLAYERS or g.edge_count != players * (n >> 1):
        return None
    ref, _ = build_hypercube(players)
    if (
        np.array_equal(ref.tails, g.tails)
        and np.array_equal(ref.heads, g.heads)
        and np.all(g.weights == 1.0)
    ):
        return players
    return None


def edge_players(g: WeightedMultigraph) -> np.ndarray:
    """Player index (0-based) joining along each forward hypercube edge."""
    diff = g.heads ^ g.tails
    return np.log2(diff).astype(np.int64)


# -- merger (set partition) graph -------------------------------------------

Partition = tuple[tuple[int, ...], ...]


def set_partitions(n: int) -> list[Partition]:
    """All set partitions of {1..n}, canonical form, lexicographically sorted."""
    result: list[list[list[int]]] = []

    def grow(k: int, blocks: list[list[int]]) -> None:
        if k > n:
            result.append([list(b) for b in blocks])
            return
        for b in blocks:
            b.append(k)
            grow(k + 1, blocks)
            b.pop()
        blocks.append([k])
        grow(k + 1, blocks)
        blocks.pop()

    grow(1, [])
    canon = {tuple(sorted(tuple(sorted(b)) for b in p)) for p in result}
    return sorted(canon)


def partition_label(p: Partition) -> str:
    return "".join("{" + ",".join(map(str, b)) + "}" for b in p)


def _merge(p: Partition, a: int, b: int) -> Partition:
    merged = tuple(sorted(p[a] + p[b]))
    rest = [blk for k, blk in enumerate(p) if k not in (a, b)]
    return tuple(sorted(rest + [merged]))


def build_merger_graph(players: int) -> tuple[WeightedMultigraph, dict[Partition, int]]:
    """Partition graph: P -- Q iff Q is obtained from P by merging exactly two blocks.

    The forward orientation of each edge is the merge direction.
    """
    if not 2 <= players <= MAX_MERGER_PLAYERS:
        raise GraphError(f"player count must be in [2, {MAX_MERGER_PLAYERS}], got {players}")
    parts = set_partitions(players)
    index = {p: k for k, p in enumerate(parts)}
    edges = set()
    for p in parts:
        for a in range(len(p)):
            for b in range(a + 1, len(p)):
                edges.add((index[p], index[_merge(p, a, b)]))
    g = construct_graph(
        len(parts),
        [(a, b, 1.0) for a, b in sorted(edges)],
        labels=[partition_label(p) for p in parts],
    )
    return g, index
