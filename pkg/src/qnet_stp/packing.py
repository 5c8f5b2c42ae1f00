"""Edge-disjoint spanning-tree packings of rate-weighted networks.

A packing assigns spanning trees to a network without exceeding any
edge's capacity.  Two equivalent representations are supported:

* ``weighted`` -- trees with rational weights, edge usage
  ``sum of weights of trees containing the edge <= rate``;
* ``multigraph`` -- trees with integer multiplicities over ``rounds``
  rounds, usage ``<= floor(rounds * rate)`` per edge.

The packing rate (weight sum, or tree count per round) never exceeds the
partition bound from :mod:`.rate_core`, and equals it for an optimal
packing.  Besides validation and conversions this module provides:

* :func:`basic_algorithm` -- greedy maximum-weight-tree extraction for
  integer-rate networks without bottlenecks (with a bounded search over
  the next-to-last tree, falling back to the oracle);
* :func:`general_algorithm` -- recursive reduction of bottleneck
  networks: split off the first violating subset, pack the contraction
  and the remainder separately, and splice the results;
* :func:`brute_force_packing` -- exact optimum by exhaustive search over
  enumerated trees (the test oracle);
* :func:`reweight_by_lp` -- optimal weights for a fixed tree list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .errors import (
    DisconnectedError,
    HeuristicFailedError,
    InvalidPackingError,
    MergeFailedError,
    OracleLimitError,
    PreconditionFailedError,
    SchemaError,
    TrivialNetworkError,
)
from .netgraph import (
    EdgeKey,
    Multigraph,
    SpanningTree,
    VertexPartition,
    WeightedGraph,
    contract,
    enumerate_spanning_trees,
    format_rational,
    induced_subgraph,
    is_connected,
    is_spanning_tree,
)
from .rate_core import PARTITION_CAP_NODES, _require_rateable, check_no_bottleneck, nwt_rate

#: Candidate budget for the next-to-last greedy tree search.
BACKTRACK_CAP = 10_000

#: Largest round count the exhaustive oracle accepts.
ORACLE_ROUND_CAP = 8


# ---------------------------------------------------------------------------
# packing containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreePacking:
    """A collection of spanning trees with weights or multiplicities.

    Canonical form: trees sorted lexicographically, duplicates merged,
    zero-weight entries dropped.  Build instances via :meth:`weighted`
    or :meth:`multigraph`.
    """

    mode: str
    trees: tuple[SpanningTree, ...]
    weights: tuple[Fraction, ...] = ()
    multiplicities: tuple[int, ...] = ()
    rounds: Optional[int] = None
    source: str = "manual"

    @classmethod
    def weighted(cls, trees, weights, source: str = "manual") -> TreePacking:
        trees = [SpanningTree.of(t.edges) if isinstance(t, SpanningTree) else SpanningTree.of(t)
                 for t in trees]
        weights = [Fraction(w) for w in weights]
        if len(trees) != len(weights):
            raise InvalidPackingError("one weight per tree required")
        if any(w < 0 for w in weights):
            raise InvalidPackingError("negative tree weight")
        merged: dict[SpanningTree, Fraction] = {}
        for t, w in zip(trees, weights):
            merged[t] = merged.get(t, Fraction(0)) + w
        kept = sorted((t for t, w in merged.items() if w > 0), key=lambda t: t.edges)
        return cls(
            mode="weighted",
            trees=tuple(kept),
            weights=tuple(merged[t] for t in kept),
            source=source,
        )

    @classmethod
    def multigraph(cls, trees, multiplicities, rounds: int, source: str = "manual") -> TreePacking:
        if not isinstance(rounds, int) or rounds < 1:
            raise SchemaError(f"round count must be a positive integer, got {rounds!r}")
        trees = [SpanningTree.of(t.edges) if isinstance(t, SpanningTree) else SpanningTree.of(t)
                 for t in trees]
        mults = [int(m) for m in multiplicities]
        if len(trees) != len(mults):
            raise InvalidPackingError("one multiplicity per tree required")
        if any(m < 0 for m in mults):
            raise InvalidPackingError("negative tree multiplicity")
        merged: dict[SpanningTree, int] = {}
        for t, m in zip(trees, mults):
            merged[t] = merged.get(t, 0) + m
        kept = sorted((t for t, m in merged.items() if m > 0), key=lambda t: t.edges)
        return cls(
            mode="multigraph",
            trees=tuple(kept),
            multiplicities=tuple(merged[t] for t in kept),
            rounds=rounds,
            source=source,
        )

    @property
    def tree_count(self) -> int:
        """Number of tree instances (multiplicities counted)."""
        if self.mode == "multigraph":
            return sum(self.multiplicities)
        return len(self.trees)

    def instances(self) -> Iterator[tuple[int, int, SpanningTree]]:
        """Yield ``(tree_index, copy_index, tree)`` in deterministic order."""
        if self.mode == "multigraph":
            for idx, (tree, mult) in enumerate(zip(self.trees, self.multiplicities)):
                for copy in range(mult):
                    yield idx, copy, tree
        else:
            for idx, tree in enumerate(self.trees):
                yield idx, 0, tree

    def edge_usage(self) -> dict[EdgeKey, Fraction]:
        """Total weight (or multiplicity) laid on each edge."""
        usage: dict[EdgeKey, Fraction] = {}
        amounts = self.weights if self.mode == "weighted" else self.multiplicities
        for tree, amount in zip(self.trees, amounts):
            for key in tree.edges:
                usage[key] = usage.get(key, Fraction(0)) + amount
        return usage

    def to_json_dict(self) -> dict:
        doc: dict = {"mode": self.mode, "trees": [t.to_json_list() for t in self.trees]}
        if self.mode == "weighted":
            doc["weights"] = [format_rational(w) for w in self.weights]
        else:
            doc["multiplicities"] = list(self.multiplicities)
            doc["rounds"] = self.rounds
        return doc


@dataclass(frozen=True)
class PackingValidation:
    ok: bool
    violated_edge: Optional[EdgeKey] = None
    reason: str = ""


@dataclass(frozen=True)
class PackingOutcome:
    """A packing plus how it was obtained and how good it is."""

    packing: TreePacking
    achieved_rate: Fraction
    optimal: Optional[bool]
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "achieved_rate": format_rational(self.achieved_rate),
            "optimal": self.optimal,
            "packing": self.packing.to_json_dict(),
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# validation, rate, conversions
# ---------------------------------------------------------------------------

def validate_packing(g: WeightedGraph, pk: TreePacking) -> PackingValidation:
    """Check tree shape and per-edge capacity; report the first offence."""
    for tree in pk.trees:
        if not is_spanning_tree(g, tree):
            bad = next((key for key in tree.edges if not g.has_edge(*key)), None)
            return PackingValidation(
                ok=False,
                violated_edge=bad,
                reason=f"tree {list(tree.edges)} is not a spanning tree of the network",
            )
    usage = pk.edge_usage()
    if pk.mode == "weighted":
        capacity = {e.key: e.rate for e in g.edges}
    else:
        capacity = {k: Fraction(m) for k, m in Multigraph(g, pk.rounds).multiplicities().items()}
    for key in sorted(usage):
        if usage[key] > capacity[key]:
            return PackingValidation(
                ok=False,
                violated_edge=key,
                reason=(
                    f"edge {key} carries {usage[key]} but has capacity {capacity[key]}"
                ),
            )
    return PackingValidation(ok=True)


def packing_rate(pk: TreePacking) -> Fraction:
    """Weight sum (weighted mode) or trees-per-round (multigraph mode)."""
    if pk.mode == "weighted":
        return sum(pk.weights, Fraction(0))
    return Fraction(sum(pk.multiplicities), pk.rounds)


def weighted_from_multigraph(pk: TreePacking) -> TreePacking:
    """Convert multiplicities over rounds into weights (rate preserved)."""
    if pk.mode != "multigraph":
        raise InvalidPackingError("expected a multigraph-mode packing")
    return TreePacking.weighted(
        pk.trees,
        [Fraction(m, pk.rounds) for m in pk.multiplicities],
        source=pk.source,
    )


def multigraph_from_weighted(pk: TreePacking) -> TreePacking:
    """Convert weights into multiplicities over the least usable round count."""
    if pk.mode != "weighted":
        raise InvalidPackingError("expected a weighted-mode packing")
    rounds = math.lcm(*(w.denominator for w in pk.weights)) if pk.weights else 1
    return TreePacking.multigraph(
        pk.trees,
        [int(w * rounds) for w in pk.weights],
        rounds,
        source=pk.source,
    )


def reweight_by_lp(g: WeightedGraph, trees: Sequence[SpanningTree]) -> TreePacking:
    """Best weights for a fixed tree list (exact LP).

    Maximizes the weight sum subject to every edge's capacity; trees that
    end up with zero weight are dropped.  With the full tree list of the
    network this attains the partition-bound rate.
    """
    from .lp_core import _simplex_max

    tree_list = [SpanningTree.of(t.edges) for t in trees]
    for t in tree_list:
        if not is_spanning_tree(g, t):
            raise InvalidPackingError(f"tree {list(t.edges)} is not a spanning tree of the network")
    tree_list = sorted(set(tree_list), key=lambda t: t.edges)
    rows = [
        [Fraction(int(e.key in t.edges)) for t in tree_list]
        for e in g.edges
    ]
    limits = [e.rate for e in g.edges]
    _, weights, _, _, _ = _simplex_max(rows, limits, [Fraction(1)] * len(tree_list))
    return TreePacking.weighted(tree_list, weights, source="manual")


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------

def brute_force_packing(
    g: WeightedGraph,
    rounds: int,
    *,
    max_rounds: int = ORACLE_ROUND_CAP,
    max_trees: int = 10**6,
) -> PackingOutcome:
    """Exact maximum multigraph packing for ``rounds`` rounds.

    Enumerates every spanning tree and searches multiplicity assignments
    exhaustively (with memoization and capacity bounds), so the returned
    tree count is the true maximum for the multigraph whose edge
    multiplicities are ``floor(rounds * rate)``.  Ties resolve to the
    lexicographically smallest tree multiset.

    Raises:
        OracleLimitError: ``rounds`` above ``max_rounds`` or too many trees.
    """
    if not isinstance(rounds, int) or rounds < 1:
        raise SchemaError(f"round count must be a positive integer, got {rounds!r}")
    if rounds > max_rounds:
        raise OracleLimitError(f"{rounds} rounds exceed the oracle cap of {max_rounds}")
    _require_rateable(g)
    caps_map = Multigraph(g, rounds).multiplicities()
    usable = [(key, cap) for key, cap in sorted(caps_map.items()) if cap > 0]
    capacity_graph = WeightedGraph(
        g.node_ids, [(k[0], k[1], Fraction(c)) for k, c in usable]
    ) if usable else None
    if capacity_graph is None or not is_connected(capacity_graph, positive_only=True):
        empty = TreePacking.multigraph([], [], rounds, source="oracle")
        return PackingOutcome(
            packing=empty,
            achieved_rate=Fraction(0),
            optimal=_optimal_flag(g, Fraction(0)),
            diagnostics={"oracle_states": 0, "tree_candidates": 0},
        )
    trees = list(enumerate_spanning_trees(capacity_graph, max_trees=max_trees))
    key_index = {key: i for i, (key, _) in enumerate(usable)}
    tree_edges = [tuple(key_index[k] for k in t.edges) for t in trees]
    start_caps = tuple(cap for _, cap in usable)
    need = g.node_count - 1
    incident: dict[str, tuple[int, ...]] = {
        v: tuple(i for i, (key, _) in enumerate(usable) if v in key) for v in g.node_ids
    }

    def upper_bound(caps: tuple[int, ...]) -> int:
        by_volume = sum(caps) // need
        by_degree = min(sum(caps[i] for i in idxs) for idxs in incident.values())
        return min(by_volume, by_degree)

    memo: dict[tuple[int, tuple[int, ...]], tuple[int, tuple[int, ...]]] = {}

    def explore(i: int, caps: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
        if i == len(trees):
            return 0, ()
        bound = upper_bound(caps)
        if bound == 0:
            return 0, (0,) * (len(trees) - i)
        state = (i, caps)
        hit = memo.get(state)
        if hit is not None:
            return hit
        best_k, best_choice = -1, ()
        max_fit = min(caps[e] for e in tree_edges[i])
        for count in range(max_fit, -1, -1):
            if count:
                reduced = list(caps)
                for e in tree_edges[i]:
                    reduced[e] -= count
                reduced = tuple(reduced)
            else:
                reduced = caps
            sub_k, sub_choice = explore(i + 1, reduced)
            if count + sub_k > best_k:
                best_k, best_choice = count + sub_k, (count,) + sub_choice
                if best_k == bound:
                    break
        result = (best_k, best_choice)
        memo[state] = result
        return result

    k, choice = explore(0, start_caps)
    chosen = [(t, m) for t, m in zip(trees, choice) if m > 0]
    packing = TreePacking.multigraph(
        [t for t, _ in chosen], [m for _, m in chosen], rounds, source="oracle"
    )
    rate = Fraction(k, rounds)
    return PackingOutcome(
        packing=packing,
        achieved_rate=rate,
        optimal=_optimal_flag(g, rate),
        diagnostics={"oracle_states": len(memo), "tree_candidates": len(trees)},
    )


def _optimal_flag(g: WeightedGraph, rate: Fraction) -> Optional[bool]:
    if g.node_count > PARTITION_CAP_NODES:
        return None
    return rate == nwt_rate(g).rate


# ---------------------------------------------------------------------------
# greedy algorithm (no bottleneck, integer rates)
# ---------------------------------------------------------------------------

def _integer_rates(g: WeightedGraph) -> dict[EdgeKey, int]:
    rates = {}
    for e in g.edges:
        if e.rate.denominator != 1:
            raise PreconditionFailedError(
                f"edge ({e.u},{e.v}) has non-integer rate {e.rate}; "
                "this algorithm needs integer rates"
            )
        rates[e.key] = int(e.rate)
    return rates


def _max_weight_tree(g: WeightedGraph, weight: dict[EdgeKey, int]) -> Optional[SpanningTree]:
    """Kruskal on descending weight (ties to the smaller edge key)."""
    order = sorted((k for k, w in weight.items() if w > 0), key=lambda k: (-weight[k], k))
    parent = {v: v for v in g.node_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    picked = []
    for key in order:
        ru, rv = find(key[0]), find(key[1])
        if ru != rv:
            parent[ru] = rv
            picked.append(key)
            if len(picked) == g.node_count - 1:
                return SpanningTree.of(picked)
    return None


def _unit_residual_tree(g: WeightedGraph, weight: dict[EdgeKey, int]) -> Optional[SpanningTree]:
    """The remaining weight, iff it is exactly one spanning tree of unit weights."""
    positive = [k for k, w in weight.items() if w > 0]
    if len(positive) != g.node_count - 1 or any(weight[k] != 1 for k in positive):
        return None
    tree = SpanningTree.of(positive)
    return tree if is_spanning_tree(g, tree) else None


def basic_algorithm(
    g: WeightedGraph,
    *,
    backtrack_cap: int = BACKTRACK_CAP,
) -> PackingOutcome:
    """Greedy optimal packing for integer rates without bottlenecks.

    Over ``N - 1`` rounds each edge offers ``(N - 1) * rate`` uses and
    exactly ``sum of rates`` trees fit.  Trees are extracted one at a
    time by maximum weight; the next-to-last tree is chosen by searching
    the remaining trees in descending weight order for one whose removal
    leaves precisely one unit-weight spanning tree.  If the search budget
    runs out the exhaustive oracle finishes the job (flagged in
    diagnostics).

    Raises:
        PreconditionFailedError: non-integer rates or a bottleneck subset.
        HeuristicFailedError: greedy and oracle both failed (carries the
            trees found so far).
    """
    _require_rateable(g)
    rates = _integer_rates(g)
    cert = check_no_bottleneck(g)
    if not cert.ok:
        raise PreconditionFailedError(
            f"bottleneck at subset {cert.violating_subset}; use the general algorithm"
        )
    n = g.node_count - 1
    total_trees = sum(rates.values())
    weight = {k: n * r for k, r in rates.items() if r > 0}
    diagnostics: dict = {"backtracks": 0, "fallback": False}
    chosen: list[SpanningTree] = []

    def fallback(reason: str) -> PackingOutcome:
        diagnostics["fallback"] = True
        diagnostics["fallback_reason"] = reason
        try:
            oracle = brute_force_packing(g, n)
        except OracleLimitError as exc:
            raise HeuristicFailedError(
                f"greedy failed ({reason}) and the oracle hit a cap: {exc}",
                partial=tuple(chosen),
            ) from exc
        merged = dict(oracle.diagnostics)
        merged.update(diagnostics)
        return PackingOutcome(
            packing=oracle.packing,
            achieved_rate=oracle.achieved_rate,
            optimal=oracle.optimal,
            diagnostics=merged,
        )

    for _ in range(max(total_trees - 2, 0)):
        tree = _max_weight_tree(g, weight)
        if tree is None:
            return fallback("positive-weight edges no longer span the network")
        chosen.append(tree)
        for key in tree.edges:
            weight[key] -= 1

    if total_trees == 1:
        tree = _max_weight_tree(g, weight)
        if tree is None:
            return fallback("positive-weight edges no longer span the network")
        chosen.append(tree)
    else:
        support = WeightedGraph(
            g.node_ids,
            [(k[0], k[1], Fraction(w)) for k, w in weight.items() if w > 0],
        )
        if not is_connected(support, positive_only=True):
            return fallback("positive-weight edges no longer span the network")
        try:
            candidates = sorted(
                enumerate_spanning_trees(support),
                key=lambda t: (-sum(weight[k] for k in t.edges), t.edges),
            )
        except OracleLimitError:
            return fallback("too many candidate trees to search")
        done = False
        for candidate in candidates[:backtrack_cap]:
            diagnostics["backtracks"] += 1
            for key in candidate.edges:
                weight[key] -= 1
            last = _unit_residual_tree(g, weight)
            if last is not None:
                chosen.append(candidate)
                chosen.append(last)
                done = True
                break
            for key in candidate.edges:
                weight[key] += 1
        if not done:
            return fallback("no next-to-last tree leaves a clean final tree")

    packing = TreePacking.multigraph(
        chosen, [1] * len(chosen), n, source="heuristic"
    )
    # duplicates merged by the constructor; rate is the tree count per round
    return PackingOutcome(
        packing=packing,
        achieved_rate=Fraction(total_trees, n),
        optimal=True,  # no bottleneck: the all-singletons bound is attained
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# general algorithm (bottlenecks via contraction)
# ---------------------------------------------------------------------------

def general_algorithm(
    g: WeightedGraph,
    *,
    backtrack_cap: int = BACKTRACK_CAP,
) -> PackingOutcome:
    """Optimal-rate packing for integer rates, bottlenecks included.

    While some subset violates the bottleneck test, split on the first
    violator ``I``: contract everything outside ``I`` to one node and
    solve that network, solve the remainder network on its own, then
    splice each contracted tree (its edges at the merged node re-expanded
    to concrete cross edges with remaining capacity, lexicographically
    first) onto the matching remainder tree, pairing instances by sorted
    index over a common round count.

    Raises:
        PreconditionFailedError: non-integer rates.
        HeuristicFailedError: a merge failed and the oracle also could not
            finish.
    """
    _require_rateable(g)
    _integer_rates(g)
    diagnostics: dict = {"recursion_depth": 0, "backtracks": 0, "fallback": False, "splits": []}
    try:
        packing = _general_pack(g, diagnostics, 0, backtrack_cap)
    except (MergeFailedError, DisconnectedError) as exc:
        diagnostics["fallback"] = True
        diagnostics["fallback_reason"] = str(exc)
        rounds = nwt_rate(g).rate.denominator
        try:
            oracle = brute_force_packing(g, rounds)
        except OracleLimitError as limit:
            raise HeuristicFailedError(
                f"splice failed ({exc}) and the oracle hit a cap: {limit}", partial=None
            ) from limit
        packing = oracle.packing
    rate = packing_rate(packing)
    return PackingOutcome(
        packing=packing,
        achieved_rate=rate,
        optimal=_optimal_flag(g, rate),
        diagnostics=diagnostics,
    )


def _general_pack(
    g: WeightedGraph, diagnostics: dict, depth: int, backtrack_cap: int
) -> TreePacking:
    diagnostics["recursion_depth"] = max(diagnostics["recursion_depth"], depth)
    cert = check_no_bottleneck(g)
    if cert.ok:
        outcome = basic_algorithm(g, backtrack_cap=backtrack_cap)
        diagnostics["backtracks"] += outcome.diagnostics.get("backtracks", 0)
        if outcome.diagnostics.get("fallback"):
            diagnostics["fallback"] = True
            diagnostics["fallback_reason"] = outcome.diagnostics.get("fallback_reason", "")
        return outcome.packing
    subset = cert.violating_subset
    rest = tuple(v for v in g.sorted_nodes() if v not in set(subset))
    diagnostics["splits"].append({"subset": list(subset), "depth": depth})
    merged_label = "+".join(rest) if len(rest) > 1 else rest[0]
    contracted = contract(
        g, VertexPartition.from_blocks([[v] for v in subset] + [list(rest)])
    )
    remainder = induced_subgraph(g, rest)
    if not is_connected(remainder, positive_only=True):
        raise MergeFailedError(
            f"remainder network on {list(rest)} is not connected; cannot split"
        )
    pk_contracted = _general_pack(contracted, diagnostics, depth + 1, backtrack_cap)
    pk_remainder = _general_pack(remainder, diagnostics, depth + 1, backtrack_cap)
    return _splice(g, subset, merged_label, pk_contracted, pk_remainder)


def _splice(
    g: WeightedGraph,
    subset: tuple[str, ...],
    merged_label: str,
    pk_contracted: TreePacking,
    pk_remainder: TreePacking,
) -> TreePacking:
    """Combine sub-packings of the contraction and the remainder network."""
    rounds = math.lcm(pk_contracted.rounds, pk_remainder.rounds)
    scale_c = rounds // pk_contracted.rounds
    scale_r = rounds // pk_remainder.rounds
    contracted_instances = [
        tree
        for tree, mult in zip(pk_contracted.trees, pk_contracted.multiplicities)
        for _ in range(mult * scale_c)
    ]
    remainder_instances = [
        tree
        for tree, mult in zip(pk_remainder.trees, pk_remainder.multiplicities)
        for _ in range(mult * scale_r)
    ]
    count = min(len(contracted_instances), len(remainder_instances))
    if count == 0:
        raise MergeFailedError("one side of the split packs no trees")
    inside = set(subset)
    capacity = Multigraph(g, rounds).multiplicities()
    used: dict[EdgeKey, int] = {}
    # cross edges available to each subset node, lexicographic
    cross_of: dict[str, list[EdgeKey]] = {v: [] for v in subset}
    for e in g.edges:
        if (e.u in inside) != (e.v in inside):
            v = e.u if e.u in inside else e.v
            cross_of[v].append(e.key)
    merged_trees = []
    for tree_c, tree_r in zip(contracted_instances[:count], remainder_instances[:count]):
        edges: list[EdgeKey] = list(tree_r.edges)
        for u, v in tree_c.edges:
            if merged_label in (u, v):
                anchor = v if u == merged_label else u
                expanded = next(
                    (
                        key
                        for key in cross_of[anchor]
                        if used.get(key, 0) < capacity[key]
                    ),
                    None,
                )
                if expanded is None:
                    raise MergeFailedError(
                        f"no remaining capacity on cross edges at node {anchor!r}"
                    )
                used[expanded] = used.get(expanded, 0) + 1
                edges.append(expanded)
            else:
                used[(u, v)] = used.get((u, v), 0) + 1
                edges.append((u, v))
        tree = SpanningTree.of(edges)
        if not is_spanning_tree(g, tree):
            raise MergeFailedError("spliced edges do not form a spanning tree")
        merged_trees.append(tree)
    return TreePacking.multigraph(
        merged_trees, [1] * len(merged_trees), rounds, source="heuristic"
    )
