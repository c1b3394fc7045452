"""JSON file formats for graphs, flows, coalition games and strategic games."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .games import CoalitionGame, GameError
from .graph import GraphError, WeightedMultigraph, construct_graph
from .strategic import StrategicGame


class FormatError(ValueError):
    """Malformed input file; the message names the offending location."""


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest repr that round-trips."""
    return json.dumps(_plain(obj), allow_nan=False)


def _require(d: Any, key: str, where: str):
    if not isinstance(d, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if key not in d:
        raise FormatError(f"{where}: missing key {key!r}")
    return d[key]


# -- graph -------------------------------------------------------------------------

def graph_to_dict(g: WeightedMultigraph) -> dict:
    return {
        "nodes": g.node_count,
        "labels": list(g.labels),
        "edges": [{"a": a, "b": b, "w": w} for a, b, w in g.edges()],
    }


def graph_from_dict(d: dict, where: str = "graph") -> WeightedMultigraph:
    nodes = _require(d, "nodes", where)
    raw = _require(d, "edges", where)
    if not isinstance(nodes, int) or not isinstance(raw, list):
        raise FormatError(f"{where}: 'nodes' must be an integer and 'edges' a list")
    edges = []
    for k, e in enumerate(raw):
        loc = f"{where}.edges[{k}]"
        a, b = _require(e, "a", loc), _require(e, "b", loc)
        w = e.get("w", 1.0)
        if not isinstance(a, int) or not isinstance(b, int) or not isinstance(w, (int, float)):
            raise FormatError(f"{loc}: endpoints must be integers and weight a number")
        edges.append((a, b, float(w)))
    labels = d.get("labels")
    try:
        return construct_graph(nodes, edges, labels=labels if labels else None)
    except GraphError as exc:
        raise FormatError(f"{where}: {exc}") from exc


# -- flows -------------------------------------------------------------------------

def flow_to_dict(f) -> dict:
    return {"edge_values": [float(x) for x in f]}


def flow_from_dict(d: dict, g: WeightedMultigraph | None = None, where: str = "flow") -> np.ndarray:
    vals = _require(d, "edge_values", where)
    if not isinstance(vals, list) or not all(isinstance(x, (int, float)) for x in vals):
        raise FormatError(f"{where}: 'edge_values' must be a list of numbers")
    f = np.asarray(vals, dtype=np.float64)
    if g is not None and f.shape != (g.edge_count,):
        raise FormatError(f"{where}: {len(f)} edge values for a graph with {g.edge_count} edges")
    return f


# -- coalition game ------------------------------------------------------------------

def game_to_dict(v: CoalitionGame) -> dict:
    return {"players": v.players, "values": {str(m): float(x) for m, x in enumerate(v.values)}}


def game_from_dict(d: dict, where: str = "game") -> CoalitionGame:
    n = _require(d, "players", where)
    raw = _require(d, "values", where)
    if not isinstance(n, int) or not isinstance(raw, dict):
        raise FormatError(f"{where}: 'players' must be an integer and 'values' an object")
    if not 1 <= n <= 20:
        raise FormatError(f"{where}: player count {n} out of range [1, 20]")
    values = np.full(1 << n, np.nan)
    for key, x in raw.items():
        try:
            mask = int(key)
        except ValueError:
            raise FormatError(f"{where}.values: key {key!r} is not a decimal bitmask") from None
        if not 0 <= mask < 1 << n:
            raise FormatError(f"{where}.values: mask {mask} out of range for {n} players")
        if not isinstance(x, (int, float)):
            raise FormatError(f"{where}.values[{key!r}]: not a number")
        values[mask] = float(x)
    missing = np.flatnonzero(np.isnan(values))
    if len(missing):
        raise FormatError(f"{where}.values: missing coalitions {missing[:5].tolist()}")
    try:
        return CoalitionGame(n, values)
    except GameError as exc:
        raise FormatError(f"{where}: {exc}") from exc


# -- strategic game ------------------------------------------------------------------

def strategic_to_dict(G: StrategicGame) -> dict:
    return {
        "players": G.players,
        "actions": list(G.actions),
        "payoffs": [G.payoffs[i].ravel().tolist() for i in range(G.players)],
    }


def strategic_from_dict(d: dict, where: str = "strategic game") -> StrategicGame:
    n = _require(d, "players", where)
    actions = _require(d, "actions", where)
    payoffs = _require(d, "payoffs", where)
    if not isinstance(actions, list) or len(actions) != n:
        raise FormatError(f"{where}: 'actions' must list one count per player")
    if not isinstance(payoffs, list) or len(payoffs) != n:
        raise FormatError(f"{where}: 'payoffs' must hold one flattened tensor per player")
    try:
        return StrategicGame.from_flat(actions, payoffs)
    except (GameError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc
