"""Coalition games on bitmask-encoded subsets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .graph import MAX_HYPERCUBE_PLAYERS


class GameError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoalitionGame:
    """Value function on all ``2**players`` subsets, indexed by bitmask.

    Bit ``i`` of a mask stands for player ``i + 1``.  ``values[0]`` must be 0.
    """

    players: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.players <= MAX_HYPERCUBE_PLAYERS:
            raise GameError(f"player count must be in [1, {MAX_HYPERCUBE_PLAYERS}]")
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (1 << self.players,):
            raise GameError(
                f"expected {1 << self.players} coalition values, got shape {values.shape}"
            )
        if values[0] != 0.0:
            raise GameError(f"value of the empty coalition must be 0, got {values[0]}")
        if not np.all(np.isfinite(values)):
            raise GameError("coalition values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, players: int, fn: Callable[[frozenset[int]], float]) -> "CoalitionGame":
        """Build from ``fn(S)`` where ``S`` is a frozenset of 1-based players."""
        values = [0.0]
        for mask in range(1, 1 << players):
            values.append(float(fn(members(mask))))
        return cls(players, np.array(values))

    @property
    def grand(self) -> int:
        return (1 << self.players) - 1

    def __call__(self, coalition: int | Iterable[int]) -> float:
        mask = coalition if isinstance(coalition, (int, np.integer)) else to_mask(coalition)
        return float(self.values[mask])

    def __add__(self, other: "CoalitionGame") -> "CoalitionGame":
        _same_players(self, other)
        return CoalitionGame(self.players, self.values + other.values)

    def __sub__(self, other: "CoalitionGame") -> "CoalitionGame":
        _same_players(self, other)
        return CoalitionGame(self.players, self.values - other.values)

    def __mul__(self, scalar: float) -> "CoalitionGame":
        return CoalitionGame(self.players, float(scalar) * self.values)

    __rmul__ = __mul__

    def marginal(self, player: int) -> np.ndarray:
        """``v(S + i) - v(S)`` for every mask ``S`` (zero where ``i`` is in ``S``)."""
        check_player(player, self.players)
        bit = 1 << (player - 1)
        masks = np.arange(1 << self.players)
        out = self.values[masks | bit] - self.values[masks]
        return out

    def is_null_player(self, player: int, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.marginal(player))) <= tol)


def _same_players(a: CoalitionGame, b: CoalitionGame) -> None:
    if a.players != b.players:
        raise GameError(f"games have different player counts ({a.players} vs {b.players})")


def check_player(player: int, players: int) -> None:
    if not 1 <= player <= players:
        raise GameError(f"player {player} out of range [1, {players}]")


def to_mask(coalition: Iterable[int]) -> int:
    mask = 0
    for i in coalition:
        if i < 1:
            raise GameError(f"players are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def members(mask: int) -> frozenset[int]:
    return frozenset(i + 1 for i in range(int(mask).bit_length()) if mask >> i & 1)


def popcounts(players: int) -> np.ndarray:
    masks = np.arange(1 << players, dtype=np.int64)
    counts = np.zeros_like(masks)
    for i in range(players):
        counts += (masks >> i) & 1
    return counts


def glove_game() -> CoalitionGame:
    """Player 1 holds a left glove, players 2 and 3 right gloves; a pair is worth 1."""
    return CoalitionGame.from_function(3, lambda s: 1.0 if 1 in s and (2 in s or 3 in s) else 0.0)


def pure_bargaining_game(players: int) -> CoalitionGame:
    """Worth 1 for the grand coalition and 0 for every proper subset."""
    values = np.zeros(1 << players)
    values[-1] = 1.0
    return CoalitionGame(players, values)


def additive_game(weights: Iterable[float]) -> CoalitionGame:
    w = list(weights)
    return CoalitionGame.from_function(len(w), lambda s: sum(w[i - 1] for i in s))
