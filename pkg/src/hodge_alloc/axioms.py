"""Game transforms and executable checks of the five allocation axioms.

An allocation table is an ``(N, 2**N)`` array whose row ``i - 1`` holds player
``i``'s allocation at every coalition state.  An allocation map is any callable
``CoalitionGame -> table``; the default is :func:`component_games`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .games import CoalitionGame, GameError, check_player
from .poisson import component_games

AllocationMap = Callable[[CoalitionGame], np.ndarray]
DEFAULT_TOL = 1e-9

Witness = tuple[Optional[int], Optional[int], Optional[int]]


def swap_state(S: int, i: int, j: int) -> int:
    """Exchange the memberships of players ``i`` and ``j`` (1-based) in mask ``S``."""
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    has_i, has_j = bool(S & bi), bool(S & bj)
    if has_i == has_j:
        return S
    return S ^ (bi | bj)


def _swap_masks(players: int, i: int, j: int) -> np.ndarray:
    masks = np.arange(1 << players)
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    differ = ((masks & bi) > 0) != ((masks & bj) > 0)
    return np.where(differ, masks ^ (bi | bj), masks)


def swap_game(v: CoalitionGame, i: int, j: int) -> CoalitionGame:
    check_player(i, v.players)
    check_player(j, v.players)
    return CoalitionGame(v.players, v.values[_swap_masks(v.players, i, j)])


def restriction_mapping(players: int, i: int) -> dict[int, int]:
    """Order-preserving relabeling of ``[N] - {i}`` onto ``[N - 1]``."""
    return {p: p - (p > i) for p in range(1, players + 1) if p != i}


def _embed_masks(players: int, i: int) -> np.ndarray:
    """For each mask of the restricted game, the matching mask of the full game."""
    small = np.arange(1 << (players - 1))
    low = (1 << (i - 1)) - 1
    return (small & low) | ((small & ~low) << 1)


def restrict_game(v: CoalitionGame, i: int) -> CoalitionGame:
    """The game on the other ``N - 1`` players, relabeled order-preservingly."""
    if v.players < 2:
        raise GameError("cannot restrict a one-player game")
    check_player(i, v.players)
    return CoalitionGame(v.players - 1, v.values[_embed_masks(v.players, i)])


@dataclass
class AxiomResult:
    name: str
    passed: bool
    violation: float
    witness: Witness = (None, None, None)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        i, j, S = self.witness
        out = {
            "passed": self.passed,
            "violation": self.violation,
            "witness": {"i": i, "j": j, "S": S},
        }
        out.update(self.details)
        return out


@dataclass
class AxiomReport:
    results: dict[str, AxiomResult]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> AxiomResult:
        return self.results[name]

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "axioms": {k: r.to_dict() for k, r in self.results.items()},
        }


class _Worst:
    """Track the largest violation and where it occurred."""

    def __init__(self):
        self.value = 0.0
        self.witness: Witness = (None, None, None)

    def update(self, diffs: np.ndarray, witness_of: Callable[[int], Witness]) -> None:
        if diffs.size == 0:
            return
        k = int(np.argmax(diffs))
        if diffs[k] > self.value:
            self.value = float(diffs[k])
            self.witness = witness_of(k)

    def result(self, name: str, tol: float, **details) -> AxiomResult:
        return AxiomResult(name, self.value <= tol, self.value, self.witness, details)


def _check_table(v: CoalitionGame, table: np.ndarray) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if table.shape != (v.players, 1 << v.players):
        raise GameError(f"allocation table shape {table.shape} does not match a {v.players}-player game")
    return table


def check_efficiency(v: CoalitionGame, table: np.ndarray, tol: float = DEFAULT_TOL) -> AxiomResult:
    table = _check_table(v, table)
    worst = _Worst()
    worst.update(np.abs(v.values - table.sum(axis=0)), lambda S: (None, None, S))
    return worst.result("A1", tol)


def check_symmetry(
    v: CoalitionGame, table: np.ndarray, tol: float = DEFAULT_TOL, allocation: AllocationMap = component_games
) -> AxiomResult:
    """``Phi_i[v^ij](S^ij) == Phi_j[v](S)``, recomputing the allocation of every swapped game."""
    table = _check_table(v, table)
    n = v.players
    worst = _Worst()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            swapped = _check_table(v, allocation(swap_game(v, i, j)))
            sw = _swap_masks(n, i, j)
            diffs = np.abs(swapped[i - 1, sw] - table[j - 1])
            worst.update(diffs, lambda S, i=i, j=j: (i, j, S))
    return worst.result("A2", tol)


def check_null_player(
    v: CoalitionGame, table: np.ndarray, tol: float = DEFAULT_TOL, allocation: AllocationMap = component_games
) -> AxiomResult:
    table = _check_table(v, table)
    n = v.players
    worst = _Worst()
    nulls = [i for i in range(1, n + 1) if v.is_null_player(i, tol)]
    mappings = {}
    for i in nulls:
        worst.update(np.abs(table[i - 1]), lambda S, i=i: (i, None, S))
        if n == 1:
            continue
        bit = 1 << (i - 1)
        without = _embed_masks(n, i)
        restricted = _check_table(restrict_game(v, i), allocation(restrict_game(v, i)))
        relabel = restriction_mapping(n, i)
        mappings[str(i)] = {str(k): m for k, m in relabel.items()}
        for j in range(1, n + 1):
            if j == i:
                continue
            row = table[j - 1]
            worst.update(np.abs(row[without | bit] - row[without]), lambda k, i=i, j=j: (i, j, int(without[k])))
            worst.update(
                np.abs(row[without] - restricted[relabel[j] - 1]),
                lambda k, i=i, j=j: (i, j, int(without[k])),
            )
    return worst.result("A3", tol, null_players=nulls, relabelings=mappings)


def check_reflection(v: CoalitionGame, table: np.ndarray, tol: float = DEFAULT_TOL) -> AxiomResult:
    """``Phi_i(S+i+j) - Phi_i(S+i) == -(Phi_i(S+j) - Phi_i(S))`` for ``S`` avoiding ``i, j``."""
    table = _check_table(v, table)
    n = v.players
    masks = np.arange(1 << n)
    worst = _Worst()
    for i in range(1, n + 1):
        bi = 1 << (i - 1)
        row = table[i - 1]
        for j in range(1, n + 1):
            if j == i:
                continue
            bj = 1 << (j - 1)
            S = masks[(masks & (bi | bj)) == 0]
            diffs = np.abs(row[S | bi | bj] - row[S | bi] + row[S | bj] - row[S])
            worst.update(diffs, lambda k, i=i, j=j, S=S: (i, j, int(S[k])))
    return worst.result("A5", tol)


def check_reflection_pairs(v: CoalitionGame, table: np.ndarray, tol: float = DEFAULT_TOL) -> AxiomResult:
    """Equivalent pairwise form: ``Phi_i(S+i) + Phi_i(S)`` is the same for all ``S`` avoiding ``i``.

    The witness ``(i, None, S)`` names the state deviating most from ``S = {}``.
    """
    table = _check_table(v, table)
    n = v.players
    masks = np.arange(1 << n)
    worst = _Worst()
    for i in range(1, n + 1):
        bi = 1 << (i - 1)
        row = table[i - 1]
        S = masks[(masks & bi) == 0]
        level = row[S | bi] + row[S]
        worst.update(np.abs(level - level[0]), lambda k, i=i, S=S: (i, None, int(S[k])))
    return worst.result("A5'", tol)


def check_axioms(
    v: CoalitionGame,
    table: np.ndarray,
    tol: float = DEFAULT_TOL,
    allocation: AllocationMap = component_games,
) -> AxiomReport:
    """Check A1, A2, A3, A5 and A5' for ``table`` as the allocation of ``v``.

    Linearity (A4) relates several games and is checked by :func:`check_linearity`.
    """
    table = _check_table(v, table)
    results = {
        "A1": check_efficiency(v, table, tol),
        "A2": check_symmetry(v, table, tol, allocation),
        "A3": check_null_player(v, table, tol, allocation),
        "A5": check_reflection(v, table, tol),
        "A5'": check_reflection_pairs(v, table, tol),
    }
    return AxiomReport(results, tol)


def check_linearity(
    v: CoalitionGame,
    w: CoalitionGame,
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    allocation: AllocationMap = component_games,
) -> AxiomResult:
    if v.players != w.players:
        raise GameError("linearity check needs games with the same player count")
    combined = allocation(a * v + b * w)
    separate = a * allocation(v) + b * allocation(w)
    worst = _Worst()
    diffs = np.abs(combined - separate)
    n_states = 1 << v.players
    worst.update(diffs.ravel(), lambda k: (k // n_states + 1, None, k % n_states))
    return worst.result("A4", tol)
