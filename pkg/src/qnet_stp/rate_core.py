"""Conference-key rates from vertex-partition bounds.

The attainable conference-key rate of a network equals the classic
Nash-Williams/Tutte spanning-tree-packing bound

    rate = min over partitions P (>= 2 blocks) of
           (sum of rates crossing P) / (block count - 1),

evaluated here by exhaustive partition enumeration in exact arithmetic.
The module also provides the per-partition bound, the all-singletons
bound, the finite-length (floored) variant, a closed form for triangles,
and the per-subset "no bottleneck" test that decides whether the
all-singletons partition is already optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import (
    DisconnectedError,
    ExactModeLimitError,
    InvalidPartitionError,
    NegativeRateError,
    SchemaError,
    TrivialNetworkError,
)
from .netgraph import (
    PARTITION_CAP_NODES,
    VertexPartition,
    WeightedGraph,
    contract,
    cross_edges,
    format_rational,
    is_connected,
    proper_vertex_subsets,
    restricted_growth_strings,
)

#: Largest node count for which the per-subset bottleneck scan is allowed.
SUBSET_CAP_NODES = 20


@dataclass(frozen=True)
class RateReport:
    """Result of a rate computation.

    ``minimizing_partition`` is the first partition (in enumeration
    order) attaining the minimum; per-partition values for any other
    partition can be recomputed on demand with :func:`partition_bound`.
    """

    rate: Fraction
    minimizing_partition: VertexPartition
    finest_is_optimal: bool

    def to_json_dict(self) -> dict:
        return {
            "rate": format_rational(self.rate),
            "minimizing_partition": self.minimizing_partition.to_json_list(),
            "finest_is_optimal": self.finest_is_optimal,
        }


def _require_rateable(g: WeightedGraph) -> None:
    if g.node_count < 2:
        raise TrivialNetworkError("rates need at least two nodes")
    if not is_connected(g, positive_only=True):
        raise DisconnectedError("positive-rate subgraph is not connected")


def nwt_rate(g: WeightedGraph, *, max_nodes: int = PARTITION_CAP_NODES) -> RateReport:
    """Exact conference-key rate of ``g`` by full partition enumeration.

    Ties are broken toward the partition seen first in restricted-growth
    order.  Internally rates are rescaled to integers so the (possibly
    millions of) partition evaluations run on machine integers; the final
    value is returned as an exact :class:`~fractions.Fraction`.

    Raises:
        TrivialNetworkError: fewer than 2 nodes.
        DisconnectedError: positive-rate subgraph not connected.
        ExactModeLimitError: more nodes than ``max_nodes``.
    """
    _require_rateable(g)
    labels = g.sorted_nodes()
    n = len(labels)
    if n > max_nodes:
        raise ExactModeLimitError(
            f"partition enumeration over {n} nodes exceeds the cap of {max_nodes}"
        )
    idx = {v: i for i, v in enumerate(labels)}
    scale = math.lcm(*(e.rate.denominator for e in g.edges)) if g.edges else 1
    int_edges = [(idx[e.u], idx[e.v], int(e.rate * scale)) for e in g.edges if e.rate > 0]

    best_cross = None  # integer cross-rate sum at the best partition
    best_pm1 = 1
    best_rgs: tuple[int, ...] = ()
    for rgs in restricted_growth_strings(n):
        p = max(rgs) + 1
        if p < 2:
            continue
        cross = 0
        for iu, iv, w in int_edges:
            if rgs[iu] != rgs[iv]:
                cross += w
        pm1 = p - 1
        # bound = cross / (pm1 * scale); strict < keeps the first minimizer
        if best_cross is None or cross * best_pm1 < best_cross * pm1:
            best_cross, best_pm1, best_rgs = cross, pm1, rgs
    assert best_cross is not None
    rate = Fraction(best_cross, best_pm1 * scale)
    finest = g.total_rate() / (n - 1)
    return RateReport(
        rate=rate,
        minimizing_partition=VertexPartition.from_rgs(labels, best_rgs),
        finest_is_optimal=finest == rate,
    )


def nwt_length(g: WeightedGraph, rounds: int, *, max_nodes: int = PARTITION_CAP_NODES) -> int:
    """Attainable conference-key length (in bits) over ``rounds`` rounds.

    Equals ``floor(rounds * rate)``: flooring is monotone, so the
    partition minimizing the exact rate also minimizes the floored
    per-partition value.
    """
    if not isinstance(rounds, int) or rounds < 1:
        raise SchemaError(f"round count must be a positive integer, got {rounds!r}")
    scaled = rounds * nwt_rate(g, max_nodes=max_nodes).rate
    return scaled.numerator // scaled.denominator


def partition_bound(g: WeightedGraph, p: VertexPartition) -> Fraction:
    """Cross-rate sum of ``p`` divided by (block count - 1)."""
    if p.block_count < 2:
        raise InvalidPartitionError("a rate bound needs at least two blocks")
    total = sum((e.rate for e in cross_edges(g, p)), Fraction(0))
    return total / (p.block_count - 1)


def finest_bound(g: WeightedGraph) -> Fraction:
    """Bound at the all-singletons partition: total rate / (N - 1)."""
    if g.node_count < 2:
        raise TrivialNetworkError("rates need at least two nodes")
    return g.total_rate() / (g.node_count - 1)


@dataclass(frozen=True)
class BottleneckCertificate:
    """Outcome of the per-subset bottleneck scan.

    ``violating_subset is None`` means every subset satisfies the
    condition, which holds exactly when the all-singletons partition
    attains the rate minimum.  For a violating subset ``I`` the
    certificate carries both sides of the two equivalent inequalities:

    * ``network_bound <= attachment_bound``  (whole network vs. ``I``'s
      attachment: edges inside ``I`` plus edges leaving ``I``, per node);
    * ``subnetwork_bound <= attachment_bound`` (rest-of-network form;
      undefined when ``I`` misses only one node, hence Optional),

    plus the view of the network with everything outside ``I``
    contracted to one node.
    """

    violating_subset: Optional[tuple[str, ...]]
    network_bound: Optional[Fraction] = None
    attachment_bound: Optional[Fraction] = None
    subnetwork_bound: Optional[Fraction] = None
    contracted: Optional[WeightedGraph] = None
    partition: Optional[VertexPartition] = None

    @property
    def ok(self) -> bool:
        return self.violating_subset is None

    def to_json_dict(self) -> dict:
        if self.ok:
            return {"bottleneck": False}
        return {
            "bottleneck": True,
            "violating_subset": list(self.violating_subset),
            "network_bound": format_rational(self.network_bound),
            "attachment_bound": format_rational(self.attachment_bound),
            "subnetwork_bound": (
                None if self.subnetwork_bound is None else format_rational(self.subnetwork_bound)
            ),
        }


def _attachment_rate(g: WeightedGraph, inside: set[str]) -> Fraction:
    """Sum of rates of edges with at least one endpoint in ``inside``."""
    return sum((e.rate for e in g.edges if e.u in inside or e.v in inside), Fraction(0))


def check_no_bottleneck(
    g: WeightedGraph, *, max_nodes: int = SUBSET_CAP_NODES
) -> BottleneckCertificate:
    """Scan proper node subsets for a rate bottleneck.

    Subsets are visited by ascending cardinality, then lexicographically,
    and the first violator is reported.  The test per subset ``I`` is

        total_rate / (N - 1)  <=  attachment_rate(I) / |I|

    whose failure certifies that some coarser partition (single out the
    members of ``I``, contract the rest) beats the all-singletons bound.

    Raises:
        TrivialNetworkError / DisconnectedError: as for rates.
        ExactModeLimitError: more nodes than ``max_nodes``.
    """
    _require_rateable(g)
    labels = g.sorted_nodes()
    n = len(labels)
    if n > max_nodes:
        raise ExactModeLimitError(
            f"subset scan over {n} nodes exceeds the cap of {max_nodes}"
        )
    total = g.total_rate()
    network_bound = total / (n - 1)
    for subset in proper_vertex_subsets(labels):
        inside = set(subset)
        attachment = _attachment_rate(g, inside) / len(subset)
        if network_bound > attachment:
            rest = [v for v in labels if v not in inside]
            restgraph_rate = sum(
                (e.rate for e in g.edges if e.u not in inside and e.v not in inside),
                Fraction(0),
            )
            sub_bound = (
                restgraph_rate / (n - len(subset) - 1) if n - len(subset) > 1 else None
            )
            partition = VertexPartition.from_blocks([[v] for v in subset] + [rest])
            return BottleneckCertificate(
                violating_subset=subset,
                network_bound=network_bound,
                attachment_bound=attachment,
                subnetwork_bound=sub_bound,
                contracted=contract(g, partition),
                partition=partition,
            )
    return BottleneckCertificate(violating_subset=None, network_bound=network_bound)


def triangle_rate(r12: Fraction, r13: Fraction, r23: Fraction) -> Fraction:
    """Closed-form conference rate for a three-node network.

    If one link is at least as strong as the two others combined, the two
    weaker links are the binding cut and the rate is their sum; otherwise
    the rate is half the total.

    Raises:
        NegativeRateError: any negative rate.
        DisconnectedError: two or more zero rates.
    """
    r12, r13, r23 = Fraction(r12), Fraction(r13), Fraction(r23)
    if r12 < 0 or r13 < 0 or r23 < 0:
        raise NegativeRateError("triangle rates must be nonnegative")
    if sum(1 for r in (r12, r13, r23) if r == 0) >= 2:
        raise DisconnectedError("two zero-rate links leave a node isolated")
    if r12 + r13 <= r23:
        return r12 + r13
    if r12 + r23 <= r13:
        return r12 + r23
    if r13 + r23 <= r12:
        return r13 + r23
    return (r12 + r13 + r23) / 2
