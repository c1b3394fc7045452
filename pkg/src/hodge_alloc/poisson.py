"""Anchored graph Poisson solves: ``d*d V = d*f`` with ``V(base) = 0``.

Anchoring drops the base column from the weighted incidence system, which turns
the singular Laplacian into a square symmetric positive definite matrix on a
connected graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .games import CoalitionGame
from .graph import GraphError, WeightedMultigraph, build_hypercube
from .hodge import divergence, incidence_matrix, laplacian_apply, partial_gradient

DENSE_LIMIT = 2048
DIRECT_LIMIT = 1 << 14
CG_RTOL = 1e-12
FAILURE_RTOL = 1e-8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PoissonSolution:
    values: np.ndarray
    base: int
    residual_norm: float


class AnchoredLaplacian:
    """Factorization of the Laplacian with the ``base`` row and column removed."""

    def __init__(self, g: WeightedMultigraph, base: int):
        g._check_node(base)
        g.require_connected()
        self.g = g
        self.base = base
        n = g.node_count
        self._keep = np.flatnonzero(np.arange(n) != base)
        D0 = incidence_matrix(g)[:, self._keep]
        L0 = (D0.T @ sparse.diags(g.weights) @ D0).tocsc()
        m = n - 1
        if m == 0:
            self._solve = lambda b: np.zeros((0,) + b.shape[1:])
        elif m <= DENSE_LIMIT:
            factor = linalg.cho_factor(L0.toarray(), lower=True)
            self._solve = lambda b: linalg.cho_solve(factor, b)
        elif m <= DIRECT_LIMIT:
            lu = splinalg.splu(L0)
            self._solve = lu.solve
        else:
            self._solve = lambda b: _cg_columns(L0, b)

    def solve_divergence(self, rhs: np.ndarray) -> np.ndarray:
        """Solve given ``d*f`` directly; ``rhs`` may be ``(V,)`` or ``(V, k)``."""
        rhs = np.asarray(rhs, dtype=np.float64)
        out = np.zeros_like(rhs)
        out[self._keep] = self._solve(rhs[self._keep])
        return out


def _cg_columns(A, b: np.ndarray) -> np.ndarray:
    cols = b[:, None] if b.ndim == 1 else b
    out = np.empty_like(cols)
    diag = A.diagonal()
    precond = sparse.diags(1.0 / diag)
    for k in range(cols.shape[1]):
        x, info = splinalg.cg(A, cols[:, k], rtol=CG_RTOL, atol=0.0, M=precond, maxiter=10 * A.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
        out[:, k] = x
    return out[:, 0] if b.ndim == 1 else out


@lru_cache(maxsize=32)
def anchored_laplacian(g: WeightedMultigraph, base: int) -> AnchoredLaplacian:
    return AnchoredLaplacian(g, base)


def _residual(g: WeightedMultigraph, values: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.linalg.norm(laplacian_apply(g, values) - rhs))


def _check_residual(residual: float, rhs: np.ndarray) -> None:
    scale = max(float(np.linalg.norm(rhs)), 1.0)
    if not residual <= FAILURE_RTOL * scale:
        raise SolverError(f"Poisson residual {residual:.3e} exceeds tolerance")


def solve_poisson(g: WeightedMultigraph, f, base: int) -> PoissonSolution:
    """Unique ``V`` with ``d*d V = d*f`` and ``V(base) = 0`` on a connected graph.

    Raises :class:`GraphError` for disconnected graphs and :class:`SolverError`
    if the residual exceeds ``1e-8`` relative to ``max(||d*f||, 1)``.
    """
    rhs = divergence(g, f)
    values = anchored_laplacian(g, int(base)).solve_divergence(rhs)
    residual = _residual(g, values, rhs)
    _check_residual(residual, rhs)
    return PoissonSolution(values=values, base=int(base), residual_norm=residual)


def hodge_allocation(g: WeightedMultigraph, f, start: int) -> np.ndarray:
    """Expected path integral of ``f`` from ``start`` to every node.

    The reversible walk's first-passage expectation is the anchored Poisson
    solution, so this returns ``solve_poisson(g, f, start).values``.
    """
    return solve_poisson(g, f, start).values


def solve_flows(g: WeightedMultigraph, flows: np.ndarray, base: int) -> np.ndarray:
    """Anchored solutions for several flows at once; ``flows`` is ``(k, E)``, result ``(k, V)``."""
    flows = np.atleast_2d(np.asarray(flows, dtype=np.float64))
    if flows.shape[1] != g.edge_count:
        raise GraphError(f"flows have {flows.shape[1]} columns, graph has {g.edge_count} edges")
    rhs = np.stack([divergence(g, f) for f in flows], axis=1)
    values = anchored_laplacian(g, int(base)).solve_divergence(rhs).T
    for k in range(values.shape[0]):
        _check_residual(_residual(g, values[k], rhs[:, k]), rhs[:, k])
    return values


@lru_cache(maxsize=8)
def _hypercube(players: int) -> WeightedMultigraph:
    return build_hypercube(players)[0]


def hypercube(players: int) -> WeightedMultigraph:
    """Shared hypercube instance so factorizations are reused across games."""
    return _hypercube(players)


def component_games(v: CoalitionGame) -> np.ndarray:
    """Per-player component games, shape ``(N, 2**N)``; row ``i - 1`` is player ``i``."""
    g = hypercube(v.players)
    flows = np.stack([partial_gradient(g, v, i) for i in range(1, v.players + 1)])
    return solve_flows(g, flows, 0)
