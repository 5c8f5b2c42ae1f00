"""Topology analysis and link-placement planning.

Answers two operator questions: *where* is the network's rate lost
(which vertex groups, once contracted, expose the binding cut), and
*which* candidate link is worth adding.  Evaluation is exact — every
candidate is scored by recomputing the partition-minimum rate on the
augmented graph — so the greedy plan's trajectory is authoritative,
not an estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import EmptyPlanError, ExactModeLimitError, NegativeRateError, SchemaError
from .netgraph import (
    PARTITION_CAP_NODES,
    EdgeKey,
    VertexPartition,
    WeightedGraph,
    contract,
    edge_key,
    format_rational,
    parse_rational,
)
from .rate_core import (
    SUBSET_CAP_NODES,
    BottleneckCertificate,
    RateReport,
    check_no_bottleneck,
    nwt_rate,
)

#: Exhaustive planning enumerates candidate combinations; refuse beyond this.
EXHAUSTIVE_PLAN_CAP = 200_000


# ---------------------------------------------------------------------------
# bottleneck reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BottleneckReport:
    """Where the rate minimum sits and what structure causes it."""

    rate: Fraction
    minimizing_partition: VertexPartition
    kind: str  # "none" | "bipartition" | "multiblock"
    best_bipartition_bound: Fraction
    contracted: Optional[WeightedGraph]
    certificate: Optional[BottleneckCertificate]
    narrative: str

    @property
    def finest_is_optimal(self) -> bool:
        return self.kind == "none"

    def to_json_dict(self) -> dict:
        doc = {
            "rate": format_rational(self.rate),
            "minimizing_partition": self.minimizing_partition.to_json_list(),
            "kind": self.kind,
            "finest_is_optimal": self.finest_is_optimal,
            "best_bipartition_bound": format_rational(self.best_bipartition_bound),
            "narrative": self.narrative,
        }
        if self.contracted is not None:
            doc["contracted"] = self.contracted.to_json_dict()
        if self.certificate is not None:
            doc["certificate"] = self.certificate.to_json_dict()
        return doc


def _best_bipartition(g: WeightedGraph) -> tuple[Fraction, VertexPartition]:
    """The strongest two-block bound: the minimum cut over all bipartitions."""
    nodes = g.sorted_nodes()
    rest = nodes[1:]
    best: Optional[Fraction] = None
    best_partition: Optional[VertexPartition] = None
    for mask in range(1 << len(rest)):
        side = {nodes[0]} | {rest[i] for i in range(len(rest)) if mask >> i & 1}
        if len(side) == len(nodes):
            continue
        cut = sum(
            (e.rate for e in g.edges if (e.u in side) != (e.v in side)),
            Fraction(0),
        )
        partition = VertexPartition.from_blocks(
            [sorted(side), sorted(set(nodes) - side)]
        )
        if best is None or cut < best or (cut == best and partition.blocks < best_partition.blocks):
            best, best_partition = cut, partition
    return best, best_partition


def bottleneck_report(
    g: WeightedGraph,
    *,
    max_nodes: int = PARTITION_CAP_NODES,
    subset_cap: int = SUBSET_CAP_NODES,
) -> BottleneckReport:
    """Classify the binding structure behind the network's key rate.

    The report names the minimizing partition, contracts the graph onto
    its blocks, and says whether a plain bipartition already explains
    the minimum or a richer partition is needed (in which case the best
    bipartition bound is strictly looser).  The subset certificate, when
    a bottleneck exists, carries both forms of the per-subset test.
    """
    if g.node_count > max_nodes:
        raise ExactModeLimitError(
            f"bottleneck report needs partition enumeration; "
            f"{g.node_count} nodes exceed the cap of {max_nodes}"
        )
    report: RateReport = nwt_rate(g, max_nodes=max_nodes)
    bip_bound, _ = _best_bipartition(g)
    certificate = check_no_bottleneck(g, max_nodes=subset_cap)
    partition = report.minimizing_partition
    if report.finest_is_optimal:
        kind = "none"
        contracted = None
        narrative = (
            f"no bottleneck: the finest partition is optimal at rate "
            f"{format_rational(report.rate)}"
        )
    elif bip_bound == report.rate:
        kind = "bipartition"
        bip_partition = partition if partition.block_count == 2 else _best_bipartition(g)[1]
        partition = bip_partition
        contracted = contract(g, partition)
        narrative = (
            f"bipartition bottleneck {partition}: the cut of rate "
            f"{format_rational(report.rate)} caps the network"
        )
    else:
        kind = "multiblock"
        contracted = contract(g, partition)
        narrative = (
            f"bottleneck across {partition.block_count} blocks {partition}: "
            f"contracted bound {format_rational(report.rate)} beats the best "
            f"bipartition bound {format_rational(bip_bound)}"
        )
    return BottleneckReport(
        rate=report.rate,
        minimizing_partition=partition,
        kind=kind,
        best_bipartition_bound=bip_bound,
        contracted=contracted,
        certificate=None if certificate.ok else certificate,
        narrative=narrative,
    )


# ---------------------------------------------------------------------------
# candidate evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentationResult:
    """Exact effect of adding one candidate link."""

    edge: EdgeKey
    added_rate: Fraction
    rate_before: Fraction
    rate_after: Fraction
    delta: Fraction
    minimizing_partition: VertexPartition
    narrative: str
    graph: WeightedGraph  # the augmented network

    def to_json_dict(self) -> dict:
        return {
            "edge": list(self.edge),
            "added_rate": format_rational(self.added_rate),
            "rate_before": format_rational(self.rate_before),
            "rate_after": format_rational(self.rate_after),
            "delta": format_rational(self.delta),
            "minimizing_partition": self.minimizing_partition.to_json_list(),
            "narrative": self.narrative,
        }


def _partition_narrative(report: RateReport) -> str:
    partition = report.minimizing_partition
    if report.finest_is_optimal:
        return "minimum at the finest partition: no bottleneck structure"
    if partition.block_count == 2:
        return f"minimum at the bipartition {partition}"
    return (
        f"minimum when contracting to {partition.block_count} super-nodes: {partition}"
    )


def evaluate_addition(
    g: WeightedGraph,
    u: str,
    v: str,
    rate=1,
    *,
    max_nodes: int = PARTITION_CAP_NODES,
) -> AugmentationResult:
    """Score one candidate link by the exact rate of the augmented network.

    An existing edge is handled as a rate increase (the rates merge).

    Raises:
        NegativeRateError: non-positive candidate rate.
        UnknownNodeError / SelfLoopError: bad endpoints.
    """
    added = parse_rational(rate)
    if added <= 0:
        raise NegativeRateError(f"candidate rate must be positive, got {added}")
    before = nwt_rate(g, max_nodes=max_nodes)
    augmented = g.with_edge(u, v, added)
    after = nwt_rate(augmented, max_nodes=max_nodes)
    return AugmentationResult(
        edge=edge_key(u, v),
        added_rate=added,
        rate_before=before.rate,
        rate_after=after.rate,
        delta=after.rate - before.rate,
        minimizing_partition=after.minimizing_partition,
        narrative=_partition_narrative(after),
        graph=augmented,
    )


# ---------------------------------------------------------------------------
# augmentation planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Plan:
    """An ordered sequence of link additions with its exact trajectory."""

    mode: str  # "greedy" | "exhaustive"
    initial_rate: Fraction
    final_rate: Fraction
    steps: tuple[AugmentationResult, ...]

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "initial_rate": format_rational(self.initial_rate),
            "final_rate": format_rational(self.final_rate),
            "steps": [step.to_json_dict() for step in self.steps],
        }


def _normalize_candidates(candidates) -> list[tuple[str, str, Fraction]]:
    out = []
    for item in candidates:
        if len(item) == 2:
            u, v = item
            rate = Fraction(1)
        elif len(item) == 3:
            u, v, rate = item
            rate = parse_rational(rate)
        else:
            raise SchemaError(f"candidate must be (u, v) or (u, v, rate), got {item!r}")
        if rate <= 0:
            raise NegativeRateError(f"candidate rate must be positive, got {rate}")
        out.append((u, v, rate))
    return out


def best_additions(
    g: WeightedGraph,
    candidates: Sequence,
    budget: int,
    *,
    exhaustive: bool = False,
    max_nodes: int = PARTITION_CAP_NODES,
) -> Plan:
    """Plan up to ``budget`` link additions from ``candidates``.

    Greedy mode repeatedly adds the candidate whose augmented network has
    the highest exact rate, breaking ties toward the lexicographically
    smallest edge.  Exhaustive mode tries every ordered selection and is
    only meant for a handful of additions.

    Raises:
        EmptyPlanError: a positive budget with no candidates at all.
        SchemaError: malformed candidates or a negative budget.
    """
    if not isinstance(budget, int) or budget < 0:
        raise SchemaError(f"budget must be a non-negative integer, got {budget!r}")
    pool = _normalize_candidates(candidates)
    if budget > 0 and not pool:
        raise EmptyPlanError("no candidate links to choose from")
    initial = nwt_rate(g, max_nodes=max_nodes).rate
    if budget == 0:
        return Plan(mode="greedy", initial_rate=initial, final_rate=initial, steps=())
    if exhaustive:
        return _exhaustive_plan(g, pool, budget, initial, max_nodes)
    steps: list[AugmentationResult] = []
    current = g
    remaining = list(pool)
    for _ in range(min(budget, len(pool))):
        scored = [
            (evaluate_addition(current, u, v, rate, max_nodes=max_nodes), i)
            for i, (u, v, rate) in enumerate(remaining)
        ]
        scored.sort(key=lambda pair: (-pair[0].rate_after, pair[0].edge, pair[0].added_rate))
        best, index = scored[0]
        steps.append(best)
        current = best.graph
        del remaining[index]
    return Plan(
        mode="greedy",
        initial_rate=initial,
        final_rate=steps[-1].rate_after if steps else initial,
        steps=tuple(steps),
    )


def _exhaustive_plan(
    g: WeightedGraph,
    pool: list[tuple[str, str, Fraction]],
    budget: int,
    initial: Fraction,
    max_nodes: int,
) -> Plan:
    import itertools
    import math

    size = min(budget, len(pool))
    combos = math.comb(len(pool), size)
    if combos > EXHAUSTIVE_PLAN_CAP:
        raise ExactModeLimitError(
            f"{combos} candidate combinations exceed the exhaustive-plan cap "
            f"of {EXHAUSTIVE_PLAN_CAP}"
        )
    best_choice = None
    best_rate = None
    for combo in itertools.combinations(sorted(pool), size):
        augmented = g
        for u, v, rate in combo:
            augmented = augmented.with_edge(u, v, rate)
        rate_after = nwt_rate(augmented, max_nodes=max_nodes).rate
        if best_rate is None or rate_after > best_rate:
            best_rate, best_choice = rate_after, combo
    steps: list[AugmentationResult] = []
    current = g
    for u, v, rate in best_choice or ():
        step = evaluate_addition(current, u, v, rate, max_nodes=max_nodes)
        steps.append(step)
        current = step.graph
    return Plan(
        mode="exhaustive",
        initial_rate=initial,
        final_rate=steps[-1].rate_after if steps else initial,
        steps=tuple(steps),
    )
