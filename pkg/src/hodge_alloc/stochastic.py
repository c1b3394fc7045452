"""Reversible random walks on weighted multigraphs and their path integrals.

The walk leaves node ``s`` along oriented edge ``e`` with probability
``lambda(e) / sum of lambda over oriented edges leaving s``; a self-loop offers
both of its orientations.

Randomness comes from a counter-based generator: the uniform used by episode
``k`` at step ``n`` is a SplitMix64 hash of ``(seed, k, n)``.  Episodes are
therefore independent of scheduling, chunking and thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .graph import GraphError, OrientedEdge, WeightedMultigraph
from .hodge import flow_value

DEFAULT_MAX_STEPS = 10**7
MAX_DISCARD_FRACTION = 0.01
MAX_NOLOOP_PATHS = 10**6

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


class SimulationError(RuntimeError):
    pass


class StepCapExceeded(SimulationError):
    def __init__(self, episode: int, cap: int):
        super().__init__(f"episode {episode} did not reach the target within {cap} steps")
        self.episode = episode
        self.cap = cap


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HODGE_ALLOC_THREADS", "1")))
    except ValueError:
        return 1


# -- counter-based uniforms ---------------------------------------------------

def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _stream_keys(seed: int, episodes: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        key = _mix(np.array([int(seed) & _MASK64], dtype=np.uint64) + _GOLDEN)
        ep = episodes.astype(np.uint64) + np.uint64(1)
        return _mix(key ^ (ep * _GOLDEN))


def counter_uniforms(streams: np.ndarray, step: int) -> np.ndarray:
    """Uniforms in [0, 1) for each stream key at the given step."""
    with np.errstate(over="ignore"):
        x = _mix(streams + np.uint64(step + 1) * _GOLDEN)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# -- walk data ------------------------------------------------------------------

@dataclass(frozen=True)
class WalkConfig:
    seed: int
    episodes: int = 1
    max_steps_per_episode: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.max_steps_per_episode < 1:
            raise ValueError("max_steps_per_episode must be >= 1")


@dataclass(frozen=True)
class SamplePath:
    edges: tuple[OrientedEdge, ...]
    nodes: tuple[int, ...]

    @classmethod
    def from_edges(cls, g: WeightedMultigraph, start: int, edges: Iterable[OrientedEdge]) -> "SamplePath":
        edges = tuple(edges)
        nodes = [start]
        for oe in edges:
            if g.initial(oe) != nodes[-1]:
                raise GraphError(f"edge {oe} does not continue the path at node {nodes[-1]}")
            nodes.append(g.terminal(oe))
        return cls(edges, tuple(nodes))

    @property
    def length(self) -> int:
        return len(self.edges)

    def reversed(self) -> "SamplePath":
        return SamplePath(tuple(e.reverse() for e in reversed(self.edges)), self.nodes[::-1])


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    standard_error: float
    episodes: int
    discarded: int = 0


class _WalkTables:
    """Flat per-node tables of outgoing oriented edges for vectorized stepping."""

    def __init__(self, g: WeightedMultigraph):
        edge, forward, dest, keys = [], [], [], []
        start = np.zeros(g.node_count + 1, dtype=np.int64)
        for s in range(g.node_count):
            out = g.outgoing(s)
            start[s + 1] = start[s] + len(out)
            if not out:
                continue
            w = np.array([g.weights[oe.edge] for oe in out])
            cum = np.cumsum(w) / w.sum()
            cum[-1] = 1.0
            for oe, c in zip(out, cum):
                edge.append(oe.edge)
                forward.append(oe.forward)
                dest.append(g.terminal(oe))
                keys.append(s + c)
        self.start = start
        self.edge = np.asarray(edge, dtype=np.int64)
        self.forward = np.asarray(forward, dtype=bool)
        self.sign = np.where(self.forward, 1.0, -1.0)
        self.dest = np.asarray(dest, dtype=np.int64)
        self.keys = np.asarray(keys, dtype=np.float64)

    def step(self, nodes: np.ndarray, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.keys, nodes + u, side="right")
        return np.minimum(idx, self.start[nodes + 1] - 1)


_TABLES: "dict[int, tuple[WeightedMultigraph, _WalkTables]]" = {}


def _tables(g: WeightedMultigraph) -> _WalkTables:
    hit = _TABLES.get(id(g))
    if hit is not None and hit[0] is g:
        return hit[1]
    t = _WalkTables(g)
    if len(_TABLES) > 64:
        _TABLES.clear()
    _TABLES[id(g)] = (g, t)
    return t


def transition_probabilities(g: WeightedMultigraph, s: int) -> tuple[tuple[OrientedEdge, ...], np.ndarray]:
    """Oriented edges leaving ``s`` and their probabilities."""
    out = g.outgoing(s)
    if not out:
        raise GraphError(f"node {s} is isolated")
    w = np.array([g.weights[oe.edge] for oe in out])
    return out, w / w.sum()


def node_transition_matrix(g: WeightedMultigraph) -> np.ndarray:
    """Dense node-to-node transition matrix (parallel edges and loop orientations summed)."""
    P = np.zeros((g.node_count, g.node_count))
    np.add.at(P, (g.tails, g.heads), g.weights)
    np.add.at(P, (g.heads, g.tails), g.weights)
    tot = g.total_weight
    if np.any(tot == 0):
        raise GraphError("graph has isolated nodes")
    return P / tot[:, None]


def stationary_distribution(g: WeightedMultigraph) -> np.ndarray:
    return g.total_weight / g.total_weight.sum()


# -- simulation engine ---------------------------------------------------------

@dataclass
class _WalkResult:
    integrals: np.ndarray  # (episodes, targets), nan where discarded
    discarded: np.ndarray  # (episodes,) bool
    paths: list[list[int]] | None  # table indices of oriented edges per episode


def _run_walks(
    g: WeightedMultigraph,
    f: np.ndarray | None,
    start: int,
    targets: np.ndarray,
    seed: int,
    episode_ids: np.ndarray,
    max_steps: int,
    record: bool = False,
) -> _WalkResult:
    tab = _tables(g)
    k = len(episode_ids)
    n_t = len(targets)
    integrals = np.full((k, n_t), np.nan)
    discarded = np.zeros(k, dtype=bool)
    oriented_f = None if f is None else tab.sign * f[tab.edge]

    pos = np.arange(k)
    streams = _stream_keys(seed, episode_ids)
    node = np.full(k, start, dtype=np.int64)
    acc = np.zeros(k)
    pending = np.ones((k, n_t), dtype=bool)
    rec_pos: list[np.ndarray] = []
    rec_idx: list[np.ndarray] = []

    step = 0
    while len(pos):
        if step >= max_steps:
            discarded[pos] = True
            break
        u = counter_uniforms(streams, step)
        idx = tab.step(node, u)
        if oriented_f is not None:
            acc = acc + oriented_f[idx]
        node = tab.dest[idx]
        if record:
            rec_pos.append(pos)
            rec_idx.append(idx)
        step += 1
        hit = pending & (node[:, None] == targets[None, :])
        if hit.any():
            rows, cols = np.nonzero(hit)
            integrals[pos[rows], cols] = acc[rows]
            pending[rows, cols] = False
            alive = pending.any(axis=1)
            if not alive.all():
                pos, streams, node, acc, pending = (
                    pos[alive], streams[alive], node[alive], acc[alive], pending[alive]
                )

    paths = None
    if record:
        paths = [[] for _ in range(k)]
        if rec_pos:
            all_pos = np.concatenate(rec_pos)
            all_idx = np.concatenate(rec_idx)
            order = np.argsort(all_pos, kind="stable")
            all_pos, all_idx = all_pos[order], all_idx[order]
            bounds = np.searchsorted(all_pos, np.arange(k + 1))
            for e in range(k):
                paths[e] = all_idx[bounds[e]:bounds[e + 1]].tolist()
    return _WalkResult(integrals, discarded, paths)


def _check_walk_inputs(g: WeightedMultigraph, nodes: Iterable[int]) -> None:
    for s in nodes:
        g._check_node(int(s))
    g.require_connected()
    if g.node_count > 1 and np.any(g.total_weight == 0):
        raise GraphError("graph has isolated nodes")
    if g.edge_count == 0:
        raise GraphError("graph has no edges; the walk cannot move")


def _to_path(g: WeightedMultigraph, start: int, idx: Sequence[int]) -> SamplePath:
    tab = _tables(g)
    edges = [OrientedEdge(int(tab.edge[i]), bool(tab.forward[i])) for i in idx]
    return SamplePath.from_edges(g, start, edges)


def sample_path(g: WeightedMultigraph, start: int, target: int, cfg: WalkConfig, episode: int = 0) -> SamplePath:
    """First-passage (first-return if ``start == target``) path for one episode."""
    _check_walk_inputs(g, (start, target))
    res = _run_walks(
        g, None, start, np.array([target]), cfg.seed, np.array([episode]),
        cfg.max_steps_per_episode, record=True,
    )
    if res.discarded[0]:
        raise StepCapExceeded(episode, cfg.max_steps_per_episode)
    return _to_path(g, start, res.paths[0])


def sample_paths(g: WeightedMultigraph, start: int, target: int, cfg: WalkConfig) -> list[SamplePath]:
    """Paths for episodes ``0 .. cfg.episodes - 1``; capped episodes are skipped."""
    _check_walk_inputs(g, (start, target))
    res = _run_walks(
        g, None, start, np.array([target]), cfg.seed, np.arange(cfg.episodes),
        cfg.max_steps_per_episode, record=True,
    )
    return [_to_path(g, start, p) for p, d in zip(res.paths, res.discarded) if not d]


def path_integral(f, path: SamplePath) -> float:
    f = np.asarray(f, dtype=np.float64)
    return math.fsum(flow_value(f, oe) for oe in path.edges)


def _summarize(samples: np.ndarray, discarded: int, episodes: int) -> ValueEstimate:
    if discarded > MAX_DISCARD_FRACTION * episodes:
        raise SimulationError(
            f"{discarded} of {episodes} episodes hit the step cap (limit {MAX_DISCARD_FRACTION:.0%})"
        )
    kept = len(samples)
    mean = math.fsum(samples.tolist()) / kept
    if kept > 1:
        var = math.fsum(((samples - mean) ** 2).tolist()) / (kept - 1)
        se = math.sqrt(var / kept)
    else:
        se = 0.0
    return ValueEstimate(mean=mean, standard_error=se, episodes=kept, discarded=discarded)


def estimate_values(
    g: WeightedMultigraph, f, start: int, targets: Sequence[int], cfg: WalkConfig
) -> list[ValueEstimate]:
    """Monte Carlo path-integral estimates for several targets from one set of walks.

    Each episode runs until every target has been reached at least once (after
    step 0); the running integral at each first passage is that target's sample.
    """
    targets = np.asarray(targets, dtype=np.int64)
    _check_walk_inputs(g, [start, *targets.tolist()])
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.edge_count,):
        raise GraphError(f"edge flow has shape {f.shape}, graph has {g.edge_count} edges")

    chunks = np.array_split(np.arange(cfg.episodes), min(thread_count(), cfg.episodes))
    run = lambda ids: _run_walks(g, f, start, targets, cfg.seed, ids, cfg.max_steps_per_episode)
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(chunks[0])]
    integrals = np.concatenate([p.integrals for p in parts])
    discarded = np.concatenate([p.discarded for p in parts])
    n_disc = int(discarded.sum())
    kept = integrals[~discarded]
    return [_summarize(kept[:, t], n_disc, cfg.episodes) for t in range(len(targets))]


def estimate_value(g: WeightedMultigraph, f, start: int, target: int, cfg: WalkConfig) -> ValueEstimate:
    return estimate_values(g, f, start, [target], cfg)[0]


# -- loops: erasure, enumeration, exact weights ------------------------------------

def loop_erase(g: WeightedMultigraph, path: SamplePath) -> SamplePath:
    """Chronological loop erasure.

    A path that returns to its start (first return) keeps its final step: the
    prefix before the return is erased and the closing edge appended.
    """
    if not path.edges:
        return path
    closing = path.nodes[-1] == path.nodes[0]
    body = path.edges[:-1] if closing else path.edges
    nodes = [path.nodes[0]]
    edges: list[OrientedEdge] = []
    where = {path.nodes[0]: 0}
    for oe in body:
        y = g.terminal(oe)
        if y in where:
            k = where[y]
            for dropped in nodes[k + 1:]:
                del where[dropped]
            del nodes[k + 1:]
            del edges[k:]
        else:
            where[y] = len(nodes)
            nodes.append(y)
            edges.append(oe)
    if closing:
        edges.append(path.edges[-1])
    return SamplePath.from_edges(g, path.nodes[0], edges)


def enumerate_noloop_paths(
    g: WeightedMultigraph, start: int, target: int, limit: int = MAX_NOLOOP_PATHS
) -> list[SamplePath]:
    """All paths from ``start`` to ``target`` visiting no node twice.

    The only allowed repetition is ``start == target`` as the two endpoints.
    Parallel edges give distinct paths.
    """
    g._check_node(start)
    g._check_node(target)
    found: list[SamplePath] = []
    edges: list[OrientedEdge] = []
    visited = {start}

    def extend(x: int) -> None:
        for oe in g.outgoing(x):
            y = g.terminal(oe)
            if y == target:
                found.append(SamplePath.from_edges(g, start, edges + [oe]))
                if len(found) > limit:
                    raise SimulationError(f"more than {limit} loop-free paths")
            elif y not in visited:
                visited.add(y)
                edges.append(oe)
                extend(y)
                edges.pop()
                visited.discard(y)

    extend(start)
    return found


class _GreenCache:
    """Diagonal Green's function entries of the walk killed outside a node set."""

    def __init__(self, g: WeightedMultigraph):
        self.P = node_transition_matrix(g)
        self._cache: dict[tuple[frozenset, int], float] = {}

    def __call__(self, domain: frozenset, x: int) -> float:
        if x not in domain:
            return 1.0
        key = (domain, x)
        if key not in self._cache:
            idx = sorted(domain)
            sub = self.P[np.ix_(idx, idx)]
            rhs = np.zeros(len(idx))
            rhs[idx.index(x)] = 1.0
            col = np.linalg.solve(np.eye(len(idx)) - sub, rhs)
            self._cache[key] = float(col[idx.index(x)])
        return self._cache[key]


def noloop_weights(
    g: WeightedMultigraph, start: int, target: int, paths: Sequence[SamplePath] | None = None
) -> tuple[list[SamplePath], np.ndarray]:
    """Probability that a first-passage path loop-erases to each loop-free path.

    For a loop-free path ``x_0 .. x_k`` with oriented edges ``e_1 .. e_k``::

        mu = prod_j p(e_{j+1}) * G_j(x_j, x_j)

    where ``G_j`` is the expected number of visits to ``x_j`` by a walk started
    there and killed on reaching the target or any of ``x_0 .. x_{j-1}``.
    """
    g.require_connected()
    if paths is None:
        paths = enumerate_noloop_paths(g, start, target)
    green = _GreenCache(g)
    everything = frozenset(range(g.node_count))
    weights = np.empty(len(paths))
    for n, path in enumerate(paths):
        mu = 1.0
        removed = {target}
        for j, oe in enumerate(path.edges):
            x = path.nodes[j]
            mu *= green(everything - removed, x)
            mu *= g.weights[oe.edge] / g.total_weight[x]
            removed.add(x)
        weights[n] = mu
    return list(paths), weights


def reduced_value(g: WeightedMultigraph, f, start: int, target: int) -> float:
    """Finite weighted sum over loop-free paths equal to the expected path integral."""
    paths, weights = noloop_weights(g, start, target)
    return math.fsum(w * path_integral(f, p) for p, w in zip(paths, weights))
