"""Command-line entry point.

Reports go to stdout and depend only on inputs, flags and ``--seed``.  A run
manifest with input digests and wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from .axioms import check_axioms
from .fixtures import fixture_dict
from .games import GameError
from .graph import GraphError, build_hypercube, build_merger_graph
from .io import (
    FormatError,
    dumps,
    flow_from_dict,
    game_from_dict,
    graph_from_dict,
    graph_to_dict,
    load_json,
    strategic_from_dict,
)
from .poisson import SolverError, component_games, hypercube, solve_flows, solve_poisson
from .shapley import alpha_flow, alpha_shapley, shapley, shapley_by_permutation
from .stochastic import SimulationError, WalkConfig, estimate_value, noloop_weights, path_integral
from .strategic import LPError, extended_kn_value, kn_value, matrix_game_value, threat_matrix, threat_powers

DOMAIN_ERRORS = (FormatError, GraphError, GameError, SolverError, SimulationError, LPError)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


class _Inputs:
    """Loads input files and remembers their digests for the manifest."""

    def __init__(self):
        self.digests: dict[str, str] = {}

    def raw(self, source: str):
        if source.startswith("fixture:"):
            name = source.split(":", 1)[1]
            d = fixture_dict(name)
            self.digests[source] = hashlib.sha256(dumps(d).encode()).hexdigest()
            return d
        path = Path(source)
        if path.is_file():
            self.digests[source] = hashlib.sha256(path.read_bytes()).hexdigest()
        return load_json(path)

    def game(self, source):
        return game_from_dict(self.raw(source), source)

    def graph(self, source):
        return graph_from_dict(self.raw(source), source)

    def strategic(self, source):
        return strategic_from_dict(self.raw(source), source)


def _state_order(players: int) -> list[int]:
    """Nonempty coalitions by size, then lexicographically by members."""
    masks = range(1, 1 << players)
    return sorted(masks, key=lambda m: (bin(m).count("1"), [i for i in range(players) if m >> i & 1]))


def _decimal(x: float) -> str:
    """Shortest round-trip repr, with small exact rationals recognized."""
    frac = Fraction(x).limit_denominator(10**6)
    if frac.denominator > 1 and abs(float(frac) - x) <= 1e-12 * max(1.0, abs(x)):
        return f"{float(frac)!r}"
    return repr(float(x))


def _table_tsv(players: int, table: np.ndarray, row_name: str = "v") -> str:
    order = _state_order(players)
    labels = ["{" + ",".join(str(i + 1) for i in range(players) if m >> i & 1) + "}" for m in order]
    lines = ["\t".join([f"N={players}"] + labels)]
    for i, row in enumerate(table, start=1):
        lines.append("\t".join([f"{row_name}_{i}"] + [_decimal(row[m]) for m in order]))
    return "\n".join(lines)


# -- subcommands --------------------------------------------------------------------

def cmd_shapley(args, inputs: _Inputs):
    v = inputs.game(args.game)
    if args.alpha is not None:
        players = [args.player] if args.player is not None else range(1, v.players + 1)
        phi = [alpha_shapley(v, i, args.alpha) for i in players]
        out = {"alpha": args.alpha, "phi": phi}
        if args.player is not None:
            out = {"alpha": args.alpha, "player": args.player, "phi": phi[0]}
        return out
    if args.player is not None:
        raise GameError("--player needs --alpha")
    phi = shapley_by_permutation(v) if args.method == "permutation" else shapley(v)
    return {"phi": phi}


def cmd_components(args, inputs: _Inputs):
    v = inputs.game(args.game)
    if args.alpha is None:
        table = component_games(v)
    else:
        flows = np.stack([alpha_flow(v, i, args.alpha) for i in range(1, v.players + 1)])
        table = solve_flows(hypercube(v.players), flows, 0)
    if args.format == "tsv":
        return _table_tsv(v.players, table)
    return {"players": v.players, "components": table}


def cmd_hodge(args, inputs: _Inputs):
    g = inputs.graph(args.graph)
    f = flow_from_dict(inputs.raw(args.flow), g, args.flow)
    sol = solve_poisson(g, f, args.base)
    return {"base": sol.base, "values": sol.values, "residual": sol.residual_norm}


def cmd_montecarlo(args, inputs: _Inputs):
    g = inputs.graph(args.graph)
    f = flow_from_dict(inputs.raw(args.flow), g, args.flow)
    cfg = WalkConfig(seed=args.seed, episodes=args.episodes, max_steps_per_episode=args.max_steps)
    est = estimate_value(g, f, args.start, args.target, cfg)
    return {"mean": est.mean, "stderr": est.standard_error, "episodes": est.episodes, "discarded": est.discarded}


def cmd_reduce(args, inputs: _Inputs):
    g = inputs.graph(args.graph)
    f = flow_from_dict(inputs.raw(args.flow), g, args.flow)
    paths, weights = noloop_weights(g, args.start, args.target)
    integrals = [path_integral(f, p) for p in paths]
    value = float(np.dot(weights, integrals)) if paths else 0.0
    return {
        "value": value,
        "paths": [
            {"nodes": list(p.nodes), "edges": [[oe.edge, oe.forward] for oe in p.edges], "weight": w, "integral": s}
            for p, w, s in zip(paths, weights, integrals)
        ],
    }


def cmd_axioms(args, inputs: _Inputs):
    v = inputs.game(args.game)
    return check_axioms(v, component_games(v), args.tol).to_dict()


def cmd_threat(args, inputs: _Inputs):
    G = inputs.strategic(args.game)
    if not 0 <= args.coalition < 1 << G.players:
        raise GameError(f"coalition mask {args.coalition} out of range")
    sol = matrix_game_value(threat_matrix(G, args.coalition))
    return {
        "coalition": args.coalition,
        "threat": sol.value,
        "row_strategy": sol.row_strategy,
        "col_strategy": sol.col_strategy,
    }


def cmd_kn_value(args, inputs: _Inputs):
    G = inputs.strategic(args.game)
    powers = threat_powers(G)
    out = {"gamma": kn_value(G, powers), "threat": powers}
    if args.alpha is not None:
        out["alpha"] = args.alpha
        out["table"] = extended_kn_value(G, args.alpha, powers)
    return out


def cmd_build_graph(args, inputs: _Inputs):
    if args.kind == "hypercube":
        g, _ = build_hypercube(args.players)
    else:
        g, _ = build_merger_graph(args.players)
    return graph_to_dict(g)


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hodge-alloc",
        description="Coalition-state allocations via graph Poisson equations and random walks.",
    )
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shapley", help="Shapley or alpha-Shapley values of a coalition game")
    p.add_argument("--game", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--player", type=int)
    p.add_argument("--method", choices=("subset", "permutation"), default="subset")
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("components", help="allocation of every player at every coalition state")
    p.add_argument("--game", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("hodge", help="anchored Poisson solve for an edge flow")
    p.add_argument("--graph", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--base", type=int, default=0)
    p.set_defaults(func=cmd_hodge)

    p = sub.add_parser("montecarlo", help="Monte Carlo path-integral estimate")
    p.add_argument("--graph", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-steps", type=int, default=10**7)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("reduce", help="finite loop-free path reduction of the value")
    p.add_argument("--graph", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("axioms", help="check the allocation axioms for a game's component games")
    p.add_argument("--game", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("threat", help="threat power of one coalition in a strategic game")
    p.add_argument("--game", required=True)
    p.add_argument("--coalition", type=int, required=True)
    p.set_defaults(func=cmd_threat)

    p = sub.add_parser("kn-value", help="Kohlberg-Neyman value, optionally extended to all states")
    p.add_argument("--game", required=True)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_kn_value)

    p = sub.add_parser("build-graph", help="emit a canonical graph as JSON")
    p.add_argument("--kind", choices=("hypercube", "merger"), required=True)
    p.add_argument("--players", type=int, required=True)
    p.set_defaults(func=cmd_build_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = _Inputs()
    t0 = time.perf_counter()
    try:
        report = args.func(args, inputs)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report if isinstance(report, str) else dumps(report)
    sys.stdout.write(text + "\n")
    manifest = {
        "subcommand": args.command,
        "inputs": inputs.digests,
        "seed": getattr(args, "seed", None),
        "version": _version(),
        "wall_time": time.perf_counter() - t0,
    }
    print(json.dumps({"manifest": manifest}), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
