"""Command-line front end.

Subcommands: rate, pack, simulate, analyze, optimize, export-dot.
Graphs come in as JSON files; results leave as JSON (default), DOT, or
plain text.  Output is deterministic: identical inputs, flags and seed
produce byte-identical bytes.

Exit codes: 0 success, 2 input/validation error, 3 a resource cap was
hit, 4 internal failure (heuristic gave up; partial state is emitted).
Caps can be overridden with QNET_STP_CAPS, e.g.
``QNET_STP_CAPS="partitions=10,trees=50000"``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .errors import (
    HeuristicFailedError,
    InternalError,
    LimitError,
    QNetError,
    SchemaError,
    ValidationError,
)
from .netgraph import (
    PARTITION_CAP_NODES,
    TREE_ENUMERATION_CAP,
    WeightedGraph,
    format_rational,
    parse_graph,
    parse_rational,
)
from .packing import (
    BACKTRACK_CAP,
    ORACLE_ROUND_CAP,
    TreePacking,
    basic_algorithm,
    brute_force_packing,
    general_algorithm,
    packing_rate,
)
from .planner import best_additions, bottleneck_report
from .protocol import AUDIT_BIT_CAP, run_packing_protocol, secrecy_audit
from .rate_core import SUBSET_CAP_NODES, nwt_rate

#: Color cycle for per-tree DOT subgraphs (ColorBrewer Dark2).
DOT_PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a",
    "#66a61e", "#e6ab02", "#a6761d", "#666666",
)

DEFAULT_CAPS = {
    "partitions": PARTITION_CAP_NODES,
    "subsets": SUBSET_CAP_NODES,
    "lp": 16,
    "trees": TREE_ENUMERATION_CAP,
    "audit": AUDIT_BIT_CAP,
    "backtrack": BACKTRACK_CAP,
    "oracle_rounds": ORACLE_ROUND_CAP,
}


def read_caps(env: Optional[str] = None) -> dict[str, int]:
    """Merge QNET_STP_CAPS overrides ("key=value,...") onto the defaults."""
    caps = dict(DEFAULT_CAPS)
    raw = os.environ.get("QNET_STP_CAPS", "") if env is None else env
    if not raw.strip():
        return caps
    for item in raw.split(","):
        if "=" not in item:
            raise SchemaError(f"cap override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in caps:
            raise SchemaError(
                f"unknown cap {key!r}; known caps: {', '.join(sorted(caps))}"
            )
        try:
            caps[key] = int(value)
        except ValueError:
            raise SchemaError(f"cap {key!r} needs an integer, got {value.strip()!r}")
        if caps[key] < 1:
            raise SchemaError(f"cap {key!r} must be positive")
    return caps


def load_graph(path: str) -> WeightedGraph:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return parse_graph(text)


# ---------------------------------------------------------------------------
# DOT emission
# ---------------------------------------------------------------------------

def graph_dot(g: WeightedGraph, name: str = "network") -> str:
    lines = [f"graph {name} {{", "  node [shape=circle];"]
    for node in g.sorted_nodes():
        lines.append(f'  "{node}";')
    for e in g.edges:
        label = format_rational(e.rate)
        lines.append(f'  "{e.u}" -- "{e.v}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def packing_dot(g: WeightedGraph, pk: TreePacking, name: str = "packing") -> str:
    """One colored subgraph per distinct tree, nodes prefixed per tree."""
    lines = [f"graph {name} {{"]
    if pk.mode == "multigraph":
        lines.append(f'  label="{pk.tree_count} trees over {pk.rounds} rounds";')
    for i, tree in enumerate(pk.trees):
        color = DOT_PALETTE[i % len(DOT_PALETTE)]
        if pk.mode == "weighted":
            tag = f"weight {format_rational(pk.weights[i])}"
        else:
            tag = f"x{pk.multiplicities[i]}"
        lines.append(f"  subgraph cluster_t{i} {{")
        lines.append(f'    label="tree {i} ({tag})";')
        lines.append(f'    color="{color}";')
        lines.append(f'    node [shape=circle, color="{color}"];')
        for node in sorted(tree.vertices()):
            lines.append(f'    "t{i}_{node}" [label="{node}"];')
        for u, v in tree.edges:
            lines.append(f'    "t{i}_{u}" -- "t{i}_{v}" [color="{color}"];')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_rate(args, caps) -> int:
    g = load_graph(args.input)
    report = nwt_rate(g, max_nodes=caps["partitions"])
    if args.format == "text":
        sys.stdout.write(format_rational(report.rate) + "\n")
    else:
        emit(report.to_json_dict())
    return 0


def _make_packing(g, method: str, rounds: Optional[int], caps):
    if method == "oracle":
        n = rounds if rounds is not None else g.node_count - 1
        return brute_force_packing(
            g, n, max_rounds=caps["oracle_rounds"], max_trees=caps["trees"]
        )
    if rounds is not None:
        raise SchemaError("--rounds only applies to --method oracle")
    if method == "basic":
        return basic_algorithm(g, backtrack_cap=caps["backtrack"])
    return general_algorithm(g, backtrack_cap=caps["backtrack"])


def cmd_pack(args, caps) -> int:
    g = load_graph(args.input)
    outcome = _make_packing(g, args.method, args.rounds, caps)
    if args.format == "dot":
        sys.stdout.write(packing_dot(g, outcome.packing))
    elif args.format == "text":
        pk = outcome.packing
        sys.stdout.write(f"rate {format_rational(outcome.achieved_rate)}\n")
        if pk.mode == "multigraph":
            sys.stdout.write(f"trees {pk.tree_count} rounds {pk.rounds}\n")
        for i, tree in enumerate(pk.trees):
            tag = (
                f"x{pk.multiplicities[i]}"
                if pk.mode == "multigraph"
                else format_rational(pk.weights[i])
            )
            edges = " ".join(f"({u},{v})" for u, v in tree.edges)
            sys.stdout.write(f"  {tag}: {edges}\n")
    else:
        emit(outcome.to_json_dict())
    return 0


def cmd_simulate(args, caps) -> int:
    g = load_graph(args.input)
    if args.rounds is not None:
        if args.rounds < 1:
            raise SchemaError(f"round count must be positive, got {args.rounds}")
        outcome = brute_force_packing(
            g, args.rounds, max_rounds=caps["oracle_rounds"], max_trees=caps["trees"]
        )
    else:
        outcome = general_algorithm(g, backtrack_cap=caps["backtrack"])
    pk = outcome.packing
    transcript = run_packing_protocol(g, pk, args.seed)
    doc = transcript.to_json_dict()
    doc["packing"] = pk.to_json_dict()
    doc["rate"] = format_rational(packing_rate(pk))
    if args.audit:
        report = secrecy_audit(g, pk, max_bits=caps["audit"])
        audit_doc = report.to_json_dict()
        audit_doc.pop("histograms", None)
        audit_doc["secrecy"] = "uniform" if report.uniform else "nonuniform"
        doc["audit"] = audit_doc
    emit(doc)
    return 0


def cmd_analyze(args, caps) -> int:
    g = load_graph(args.input)
    report = bottleneck_report(
        g, max_nodes=caps["partitions"], subset_cap=caps["subsets"]
    )
    if args.format == "text":
        sys.stdout.write(report.narrative + "\n")
    else:
        emit(report.to_json_dict())
    return 0


def parse_candidates(raw: str) -> list[tuple[str, str, object]]:
    """Parse "1-4,2-6" (optionally "u-v:rate") into candidate triples."""
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        link, _, rate = item.partition(":")
        parts = link.split("-")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise SchemaError(f"candidate {item!r} is not of the form u-v or u-v:rate")
        out.append((parts[0], parts[1], parse_rational(rate) if rate else 1))
    return out


def cmd_optimize(args, caps) -> int:
    g = load_graph(args.input)
    candidates = parse_candidates(args.candidates) if args.candidates else []
    plan = best_additions(
        g,
        candidates,
        args.budget,
        exhaustive=args.exhaustive,
        max_nodes=caps["partitions"],
    )
    if args.format == "text":
        sys.stdout.write(f"initial rate {format_rational(plan.initial_rate)}\n")
        for step in plan.steps:
            sys.stdout.write(
                f"+ ({step.edge[0]},{step.edge[1]}) rate "
                f"{format_rational(step.added_rate)} -> "
                f"{format_rational(step.rate_after)}\n"
            )
        sys.stdout.write(f"final rate {format_rational(plan.final_rate)}\n")
    else:
        doc = plan.to_json_dict()
        for step_doc, step in zip(doc["steps"], plan.steps):
            step_doc["dot"] = graph_dot(step.graph)
        emit(doc)
    return 0


def cmd_export_dot(args, caps) -> int:
    g = load_graph(args.input)
    sys.stdout.write(graph_dot(g))
    return 0


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnet-stp",
        description="Conference-key rates and spanning-tree packings for QKD networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="exact conference key rate of a network")
    p.add_argument("input", help="graph JSON file")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("pack", help="compute a spanning-tree packing")
    p.add_argument("input", help="graph JSON file")
    p.add_argument("--method", choices=["basic", "general", "oracle"], default="general")
    p.add_argument("--rounds", type=int, help="round count (oracle method only)")
    p.add_argument("--format", choices=["json", "dot", "text"], default="json")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("simulate", help="run the keying protocol over a packing")
    p.add_argument("input", help="graph JSON file")
    p.add_argument("--rounds", type=int, help="pack exactly this many rounds (exact oracle)")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
    p.add_argument("--audit", action="store_true", help="exhaustive secrecy audit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="bottleneck structure report")
    p.add_argument("input", help="graph JSON file")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", help="plan link additions")
    p.add_argument("input", help="graph JSON file")
    p.add_argument("--candidates", default="", help='candidate links, e.g. "1-4,2-6"')
    p.add_argument("--budget", type=int, default=1, help="number of links to add")
    p.add_argument("--exhaustive", action="store_true", help="try all candidate subsets")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("export-dot", help="graph as DOT")
    p.add_argument("input", help="graph JSON file")
    p.set_defaults(func=cmd_export_dot)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        caps = read_caps()
        return args.func(args, caps)
    except HeuristicFailedError as exc:
        doc = {"error": {"code": exc.code, "message": str(exc)}}
        if exc.partial is not None:
            doc["partial"] = exc.partial
        emit(doc)
        return 4
    except QNetError as exc:
        emit({"error": {"code": exc.code, "message": str(exc)}})
        if isinstance(exc, ValidationError):
            return 2
        if isinstance(exc, LimitError):
            return 3
        return 4


if __name__ == "__main__":
    sys.exit(main())
