"""Discrete exterior calculus on weighted multigraphs.

Vertex functions are float arrays indexed by node id.  Edge flows are float
arrays indexed by edge id holding the value on the *forward* orientation; the
reverse orientation is the negation and is never stored.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .games import CoalitionGame, check_player
from .graph import GraphError, OrientedEdge, WeightedMultigraph, edge_players, hypercube_players


def _vertex(g: WeightedMultigraph, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (g.node_count,):
        raise GraphError(f"vertex function has shape {v.shape}, graph has {g.node_count} nodes")
    return v


def _flow(g: WeightedMultigraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.edge_count,):
        raise GraphError(f"edge flow has shape {f.shape}, graph has {g.edge_count} edges")
    return f


def flow_value(f: np.ndarray, oe: OrientedEdge) -> float:
    """Evaluate a flow on an oriented edge (alternating: reverse gives the negation)."""
    val = float(f[oe.edge])
    return val if oe.forward else -val


def gradient(g: WeightedMultigraph, v) -> np.ndarray:
    """``dv(e) = v(terminal(e)) - v(initial(e))`` on forward orientations; 0 on loops."""
    v = _vertex(g, v)
    return v[g.heads] - v[g.tails]


def divergence(g: WeightedMultigraph, f) -> np.ndarray:
    """Weighted net inflow at each node, loops excluded.

    ``d*f(S) = sum over oriented e with terminal S and initial != S of lambda(e) f(e)``.
    """
    f = _flow(g, f)
    wf = np.where(g.is_loop, 0.0, g.weights * f)
    out = np.zeros(g.node_count)
    np.add.at(out, g.heads, wf)
    np.subtract.at(out, g.tails, wf)
    return out


def laplacian_apply(g: WeightedMultigraph, v) -> np.ndarray:
    return divergence(g, gradient(g, v))


def incidence_matrix(g: WeightedMultigraph) -> sparse.csr_matrix:
    """Sparse ``E x V`` matrix of the gradient: -1 at the tail, +1 at the head.

    Self-loop rows are identically zero.
    """
    e = np.arange(g.edge_count)
    keep = ~g.is_loop
    rows = np.concatenate([e[keep], e[keep]])
    cols = np.concatenate([g.tails[keep], g.heads[keep]])
    data = np.concatenate([-np.ones(keep.sum()), np.ones(keep.sum())])
    return sparse.csr_matrix((data, (rows, cols)), shape=(g.edge_count, g.node_count))


def laplacian_matrix(g: WeightedMultigraph) -> sparse.csr_matrix:
    """Assembled ``D^T W D``."""
    D = incidence_matrix(g)
    W = sparse.diags(g.weights)
    return (D.T @ W @ D).tocsr()


def edge_inner_product(g: WeightedMultigraph, f, h) -> float:
    f = _flow(g, f)
    h = _flow(g, h)
    return float(np.dot(g.weights * f, h))


def vertex_inner_product(u, v) -> float:
    return float(np.dot(np.asarray(u, float), np.asarray(v, float)))


def _require_hypercube(g: WeightedMultigraph, players: int) -> None:
    n = hypercube_players(g)
    if n is None:
        raise GraphError("operation requires a coalition hypercube graph")
    if n != players:
        raise GraphError(f"hypercube has {n} players, game has {players}")


def partial_gradient(g: WeightedMultigraph, v: CoalitionGame | np.ndarray, player: int) -> np.ndarray:
    """Gradient restricted to edges along which ``player`` (1-based) joins; zero elsewhere."""
    values = v.values if isinstance(v, CoalitionGame) else np.asarray(v, float)
    players = g.node_count.bit_length() - 1
    _require_hypercube(g, players)
    if isinstance(v, CoalitionGame) and v.players != players:
        raise GraphError(f"hypercube has {players} players, game has {v.players}")
    check_player(player, players)
    grad = gradient(g, values)
    return np.where(edge_players(g) == player - 1, grad, 0.0)
