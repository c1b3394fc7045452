"""Small worked examples shipped with the package."""

from __future__ import annotations

import json
from importlib import resources

from ..io import FormatError, game_from_dict, graph_from_dict, strategic_from_dict

FIXTURES = ("glove", "delta2", "delta3", "merger3", "kn_constant")


def fixture_dict(name: str) -> dict:
    if name not in FIXTURES:
        raise FormatError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files(__name__).joinpath(f"{name}.json").read_text()
    return json.loads(text)


def parse_any(d: dict, where: str):
    """Dispatch on the keys present: graph, strategic game, or coalition game."""
    if isinstance(d, dict) and "edges" in d:
        return graph_from_dict(d, where)
    if isinstance(d, dict) and "actions" in d:
        return strategic_from_dict(d, where)
    return game_from_dict(d, where)


def load_fixture(name: str):
    return parse_any(fixture_dict(name), name)
