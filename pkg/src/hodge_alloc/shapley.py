"""Shapley values, f-Shapley values of edge flows, and alpha-weighted marginal flows."""

from __future__ import annotations

from itertools import permutations
from math import factorial

import numpy as np

from .games import CoalitionGame, GameError, check_player, popcounts
from .graph import GraphError, WeightedMultigraph, edge_players
from .poisson import hypercube

MAX_SUBSET_PLAYERS = 20
MAX_PERMUTATION_PLAYERS = 9


def _subset_weights(players: int) -> np.ndarray:
    """``|S|! (N-1-|S|)! / N!`` indexed by ``|S|``."""
    n = players
    return np.array([factorial(k) * factorial(n - 1 - k) / factorial(n) for k in range(n)])


def shapley(v: CoalitionGame) -> np.ndarray:
    """Shapley value by the subset-sum formula."""
    if v.players > MAX_SUBSET_PLAYERS:
        raise GameError(f"subset formula supports at most {MAX_SUBSET_PLAYERS} players")
    sizes = popcounts(v.players)
    weights = _subset_weights(v.players)
    phi = np.empty(v.players)
    for i in range(1, v.players + 1):
        bit = 1 << (i - 1)
        masks = np.flatnonzero((np.arange(1 << v.players) & bit) == 0)
        marg = v.values[masks | bit] - v.values[masks]
        phi[i - 1] = np.dot(weights[sizes[masks]], marg)
    return phi


def _permutation_paths(players: int):
    """Yield, per ordering, the list of (coalition mask before joining, joining player)."""
    for order in permutations(range(players)):
        mask = 0
        steps = []
        for j in order:
            steps.append((mask, j))
            mask |= 1 << j
        yield steps


def shapley_by_permutation(v: CoalitionGame) -> np.ndarray:
    """Average marginal contribution over all ``N!`` joining orders (``N <= 9``)."""
    if v.players > MAX_PERMUTATION_PLAYERS:
        raise GameError(f"permutation formula supports at most {MAX_PERMUTATION_PLAYERS} players")
    total = np.zeros(v.players)
    for steps in _permutation_paths(v.players):
        for mask, j in steps:
            total[j] += v.values[mask | 1 << j] - v.values[mask]
    return total / factorial(v.players)


def _hypercube_edge_index(g: WeightedMultigraph, players: int) -> dict[tuple[int, int], int]:
    if g.hypercube_players != players:
        raise GraphError("flow must live on the coalition hypercube")
    return {(int(t), int(p)): e for e, (t, p) in enumerate(zip(g.tails, edge_players(g)))}


def f_shapley(f, players: int) -> float:
    """Permutation average of the flow summed along each joining path."""
    if players > MAX_PERMUTATION_PLAYERS:
        raise GameError(f"f-Shapley supports at most {MAX_PERMUTATION_PLAYERS} players")
    g = hypercube(players)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.edge_count,):
        raise GraphError(f"flow has shape {f.shape}, hypercube has {g.edge_count} edges")
    index = _hypercube_edge_index(g, players)
    total = 0.0
    for steps in _permutation_paths(players):
        total += sum(f[index[mask, j]] for mask, j in steps)
    return total / factorial(players)


def alpha_flow(v: CoalitionGame, player: int, alpha: float) -> np.ndarray:
    """Marginal flow giving the joiner ``alpha`` of each gain and the rest an equal share.

    On edge ``(S, S + j)`` the flow is ``alpha * dv`` if ``j`` is ``player`` and
    ``(1 - alpha) / (N - 1) * dv`` otherwise.
    """
    n = v.players
    check_player(player, n)
    if n == 1 and alpha != 1:
        raise GameError("alpha != 1 needs at least two players")
    g = hypercube(n)
    grad = v.values[g.heads] - v.values[g.tails]
    own = edge_players(g) == player - 1
    other = 0.0 if n == 1 else (1.0 - alpha) / (n - 1)
    return np.where(own, alpha * grad, other * grad)


def alpha_shapley(v: CoalitionGame, player: int, alpha: float) -> float:
    return f_shapley(alpha_flow(v, player, alpha), v.players)
