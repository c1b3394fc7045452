"""Strategic games, threat powers, and the Kohlberg-Neyman value.

Matrix games are solved with a small dense simplex (Bland's rule) so results do
not depend on an external LP backend.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from math import factorial, prod

import numpy as np

from .games import CoalitionGame, GameError
from .poisson import hypercube, solve_flows
from .shapley import MAX_PERMUTATION_PLAYERS, alpha_flow
from .stochastic import thread_count

PIVOT_EPS = 1e-12
DUALITY_TOL = 1e-8


class LPError(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategicGame:
    """``payoffs[i]`` is player ``i + 1``'s payoff tensor of shape ``actions``."""

    actions: tuple[int, ...]
    payoffs: np.ndarray

    def __post_init__(self):
        actions = tuple(int(m) for m in self.actions)
        if not actions or any(m < 1 for m in actions):
            raise GameError("every player needs at least one action")
        payoffs = np.array(self.payoffs, dtype=np.float64)
        n = len(actions)
        if payoffs.size != n * prod(actions):
            raise GameError(f"expected {n} payoff tensors with {prod(actions)} entries each")
        payoffs = payoffs.reshape((n,) + actions)
        if not np.all(np.isfinite(payoffs)):
            raise GameError("payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "payoffs", payoffs)

    @property
    def players(self) -> int:
        return len(self.actions)

    @classmethod
    def from_flat(cls, actions, payoffs) -> "StrategicGame":
        """Per-player payoff lists flattened row-major (first player's action slowest)."""
        return cls(tuple(actions), np.asarray(payoffs, dtype=np.float64))


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _simplex_max(A: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximize ``c @ y`` subject to ``A @ y <= 1``, ``y >= 0``.

    Returns the primal optimum and the dual prices of the constraints.  The
    origin is feasible, so no phase one is needed.  Bland's rule prevents cycling.
    """
    m, n = A.shape
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = 1.0
    tab[m, :n] = -c
    basis = list(range(n, n + m))
    for _ in range(50 * (n + m) + 1000):
        entering = next((k for k in range(n + m) if tab[m, k] < -PIVOT_EPS), None)
        if entering is None:
            break
        col = tab[:m, entering]
        rows = [r for r in range(m) if col[r] > PIVOT_EPS]
        if not rows:
            raise LPError("linear program is unbounded")
        ratios = [tab[r, -1] / col[r] for r in rows]
        best = min(ratios)
        leaving = min(
            (r for r, q in zip(rows, ratios) if q <= best + PIVOT_EPS * max(1.0, abs(best))),
            key=lambda r: basis[r],
        )
        tab[leaving] /= tab[leaving, entering]
        for r in range(m + 1):
            if r != leaving and tab[r, entering] != 0.0:
                tab[r] -= tab[r, entering] * tab[leaving]
        basis[leaving] = entering
    else:
        raise LPError("simplex iteration limit reached")
    y = np.zeros(n + m)
    for r, b in enumerate(basis):
        y[b] = tab[r, -1]
    return y[:n], tab[m, n:n + m].copy()


def matrix_game_value(M) -> MatrixGameSolution:
    """Value and optimal mixed strategies of the zero-sum game ``M`` (row player maximizes)."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0:
        raise LPError("empty payoff matrix")
    m, n = M.shape
    if m == 1 or n == 1:
        if m == 1:
            k = int(np.argmin(M[0]))
            row, col = np.ones(1), np.eye(n)[k]
        else:
            k = int(np.argmax(M[:, 0]))
            row, col = np.eye(m)[k], np.ones(1)
        return MatrixGameSolution(float(M[row.argmax(), col.argmax()]), row, col)

    shift = 1.0 - M.min()
    P = M + shift
    y, prices = _simplex_max(P, np.ones(n))
    total = y.sum()
    if not total > 0:
        raise LPError("degenerate matrix game")
    col = np.clip(y / total, 0.0, None)
    row = np.clip(prices / prices.sum(), 0.0, None)
    col /= col.sum()
    row /= row.sum()
    value = 1.0 / total - shift
    gap = (row @ M).min(), (M @ col).max()
    if gap[0] < value - DUALITY_TOL * max(1.0, abs(value)) or gap[1] > value + DUALITY_TOL * max(1.0, abs(value)):
        raise LPError(f"duality gap too large: row guarantees {gap[0]}, column concedes {gap[1]}, value {value}")
    return MatrixGameSolution(float(value), row, col)


def threat_matrix(G: StrategicGame, coalition: int) -> np.ndarray:
    """Payoff-difference matrix with joint actions of ``coalition`` as rows.

    Rows and columns enumerate joint pure actions in row-major order over the
    members (lowest player slowest).  For the grand coalition there is a single
    column, for the empty coalition a single row.
    """
    n = G.players
    inside = [i for i in range(n) if coalition >> i & 1]
    outside = [i for i in range(n) if not coalition >> i & 1]
    sign = np.array([1.0 if coalition >> i & 1 else -1.0 for i in range(n)])
    diff = np.tensordot(sign, G.payoffs, axes=1)
    diff = np.transpose(diff, inside + outside)
    rows = prod(G.actions[i] for i in inside)
    return diff.reshape(rows, -1)


def threat_power(G: StrategicGame, coalition: int) -> float:
    if not 0 <= coalition < 1 << G.players:
        raise GameError(f"coalition mask {coalition} out of range")
    return matrix_game_value(threat_matrix(G, coalition)).value


def threat_powers(G: StrategicGame) -> np.ndarray:
    """Threat power of every coalition, indexed by mask."""
    masks = range(1 << G.players)
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(lambda S: threat_power(G, S), masks)))
    return np.array([threat_power(G, S) for S in masks])


def induced_coalition_game(G: StrategicGame, powers: np.ndarray | None = None) -> CoalitionGame:
    """``v(S) = (threat(S) + threat(N)) / 2``."""
    if powers is None:
        powers = threat_powers(G)
    values = (powers + powers[-1]) / 2.0
    return CoalitionGame(G.players, values)


def kn_value(G: StrategicGame, powers: np.ndarray | None = None) -> np.ndarray:
    """Permutation average of each player's threat power on joining."""
    n = G.players
    if n > MAX_PERMUTATION_PLAYERS:
        raise GameError(f"at most {MAX_PERMUTATION_PLAYERS} players")
    if powers is None:
        powers = threat_powers(G)
    gamma = np.zeros(n)
    for order in permutations(range(n)):
        mask = 0
        for i in order:
            mask |= 1 << i
            gamma[i] += powers[mask]
    return gamma / factorial(n)


def extended_kn_value(G: StrategicGame, alpha: float = 1.0, powers: np.ndarray | None = None) -> np.ndarray:
    """Allocation table at every coalition state, ``(N, 2**N)``, from alpha flows of the induced game."""
    v = induced_coalition_game(G, powers)
    flows = np.stack([alpha_flow(v, i, alpha) for i in range(1, v.players + 1)])
    return solve_flows(hypercube(v.players), flows, 0)
