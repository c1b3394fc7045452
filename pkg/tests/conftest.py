from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hodge_alloc.games import CoalitionGame
from hodge_alloc.graph import construct_graph

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_multigraph(rng: np.random.Generator, nodes: int, extra: int = 4, loops: int = 1):
    """Connected weighted multigraph: a random spanning tree plus parallel edges and loops."""
    edges = []
    order = rng.permutation(nodes)
    for k in range(1, nodes):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.append((a, b, float(rng.uniform(0.5, 3.0))))
    for _ in range(extra):
        a, b = (int(x) for x in rng.integers(nodes, size=2))
        edges.append((a, b, float(rng.uniform(0.5, 3.0))))
    if edges and extra:
        a, b, _ = edges[int(rng.integers(len(edges)))]
        edges.append((a, b, float(rng.uniform(0.5, 3.0))))
    for _ in range(loops):
        a = int(rng.integers(nodes))
        edges.append((a, a, float(rng.uniform(0.5, 3.0))))
    return construct_graph(nodes, edges)


def random_game(rng: np.random.Generator, players: int) -> CoalitionGame:
    values = rng.normal(size=1 << players)
    values[0] = 0.0
    return CoalitionGame(players, values)


@st.composite
def multigraphs(draw, max_nodes: int = 8):
    nodes = draw(st.integers(2, max_nodes))
    seed = draw(st.integers(0, 2**32 - 1))
    extra = draw(st.integers(0, 6))
    loops = draw(st.integers(0, 2))
    return random_multigraph(np.random.default_rng(seed), nodes, extra, loops)


@st.composite
def games(draw, min_players: int = 1, max_players: int = 4):
    n = draw(st.integers(min_players, max_players))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_game(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
