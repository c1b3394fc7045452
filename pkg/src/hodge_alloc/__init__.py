"""Allocations at every coalition state from graph Poisson equations and random walks."""

from .axioms import AxiomReport, AxiomResult, check_axioms, check_linearity, restrict_game, swap_game
from .fixtures import load_fixture
from .games import CoalitionGame, GameError, additive_game, glove_game, pure_bargaining_game
from .graph import (
    GraphError,
    OrientedEdge,
    WeightedMultigraph,
    build_hypercube,
    build_merger_graph,
    construct_graph,
)
from .hodge import divergence, gradient, laplacian_apply, partial_gradient
from .io import FormatError
from .poisson import SolverError, component_games, hodge_allocation, solve_poisson
from .shapley import alpha_flow, alpha_shapley, f_shapley, shapley, shapley_by_permutation
from .stochastic import (
    SimulationError,
    WalkConfig,
    estimate_value,
    estimate_values,
    loop_erase,
    noloop_weights,
    reduced_value,
    sample_path,
)
from .strategic import (
    LPError,
    StrategicGame,
    extended_kn_value,
    kn_value,
    matrix_game_value,
    threat_power,
    threat_powers,
)

__version__ = "0.1.0"
