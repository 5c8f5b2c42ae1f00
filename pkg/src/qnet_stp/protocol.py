"""One-time-pad conference keying over a packed network.

Each spanning tree in a packing turns one fresh key bit per tree edge
into one shared conference bit: pick the tree's conference edge (the
lexicographically smallest unless overridden), orient every other edge
toward it, and let every relaying node announce the XOR of its inbound
edge's bit with each outbound edge's bit.  Every node can then cancel
announcements along its path and ends up holding the conference edge's
bit; nothing more leaks, because each announcement is masked by a bit
used nowhere else.

The module simulates the full protocol (deterministically seeded),
accounts the security budget, and provides an exhaustive secrecy audit
that enumerates every key assignment and checks the conference key is
uniform given the transcript.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    IncompleteTranscriptError,
    InvalidEdgeError,
    InvalidPackingError,
    KeyDepletedError,
    OracleLimitError,
    PreconditionFailedError,
)
from .netgraph import EdgeKey, Multigraph, SpanningTree, WeightedGraph, edge_key, format_rational
from .packing import TreePacking, multigraph_from_weighted

#: Exhaustive audits enumerate 2^bits assignments; refuse beyond this.
AUDIT_BIT_CAP = 20

PRNG_ALGORITHM = "python-random-mt19937"


# ---------------------------------------------------------------------------
# key material
# ---------------------------------------------------------------------------

class KeyMaterial:
    """Per-edge pools of raw key bits with a consumption cursor.

    Bits are consumed in order, one per tree per edge; the cursor makes
    the consumption schedule deterministic and auditable.
    """

    def __init__(self, pools: Mapping[EdgeKey, Sequence[int]], seed=None,
                 algorithm: str = PRNG_ALGORITHM):
        self.pools = {k: tuple(int(b) for b in pools[k]) for k in sorted(pools)}
        for key, pool in self.pools.items():
            if any(b not in (0, 1) for b in pool):
                raise InvalidEdgeError(f"non-bit key material on edge {key}")
        self.seed = seed
        self.algorithm = algorithm
        self._cursor = {k: 0 for k in self.pools}

    def bits(self, u: str, v: str) -> tuple[int, ...]:
        return self.pools[edge_key(u, v)]

    def bit(self, key: EdgeKey, index: int) -> int:
        pool = self.pools[key]
        if not 0 <= index < len(pool):
            raise KeyDepletedError(f"edge {key} has no bit at index {index}")
        return pool[index]

    def available(self, key: EdgeKey) -> int:
        return len(self.pools[key]) - self._cursor[key]

    def cursor(self, key: EdgeKey) -> int:
        return self._cursor[key]

    def consume(self, key: EdgeKey) -> tuple[int, int]:
        """Take the next unconsumed bit of ``key``: returns (index, bit)."""
        if key not in self.pools:
            raise InvalidEdgeError(f"no key material for edge {key}")
        index = self._cursor[key]
        if index >= len(self.pools[key]):
            raise KeyDepletedError(f"edge {key} ran out of key bits")
        self._cursor[key] = index + 1
        return index, self.pools[key][index]


def generate_keys(g: WeightedGraph, rounds: int, seed) -> KeyMaterial:
    """Simulate ``rounds`` of pairwise key generation.

    Edge ``e`` with integer rate ``L`` receives ``rounds * L`` fresh bits
    from a seeded Mersenne-Twister stream (edges in lexicographic order,
    so the layout is reproducible across runs and platforms).

    Raises:
        PreconditionFailedError: non-integer rates.
    """
    if not isinstance(rounds, int) or rounds < 1:
        raise PreconditionFailedError(f"round count must be a positive integer, got {rounds!r}")
    for e in g.edges:
        if e.rate.denominator != 1:
            raise PreconditionFailedError(
                f"edge ({e.u},{e.v}) has non-integer rate {e.rate}; keys come in whole bits"
            )
    rng = random.Random(seed)
    pools = {}
    for e in g.edges:  # already sorted by key
        pools[e.key] = tuple(rng.getrandbits(1) for _ in range(rounds * int(e.rate)))
    return KeyMaterial(pools, seed=seed)


# ---------------------------------------------------------------------------
# orientation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeOrientation:
    """A spanning tree oriented toward its conference edge.

    The conference edge's endpoints act as the two roots.  Every node has
    an inbound edge (``in_edge``): the first hop toward its root, with
    both roots assigned the conference edge itself.  All other incident
    tree edges are outbound; their announcements travel away from the
    conference edge.
    """

    tree: SpanningTree
    conference_edge: EdgeKey
    roots: tuple[str, str]
    in_edge: Mapping[str, EdgeKey]
    out_edges: Mapping[str, tuple[EdgeKey, ...]]
    parent: Mapping[str, Optional[str]]


def orient_tree(tree: SpanningTree, conference_edge: Optional[EdgeKey] = None) -> TreeOrientation:
    """Orient ``tree`` toward ``conference_edge`` (default: smallest edge).

    Raises:
        InvalidEdgeError: the conference edge is not in the tree.
    """
    if not tree.edges:
        raise InvalidEdgeError("cannot orient an empty tree")
    ce = edge_key(*conference_edge) if conference_edge else tree.edges[0]
    if ce not in tree.edges:
        raise InvalidEdgeError(f"conference edge {ce} is not part of the tree")
    adjacency: dict[str, list[EdgeKey]] = {}
    for key in tree.edges:
        adjacency.setdefault(key[0], []).append(key)
        adjacency.setdefault(key[1], []).append(key)
    in_edge: dict[str, EdgeKey] = {ce[0]: ce, ce[1]: ce}
    parent: dict[str, Optional[str]] = {ce[0]: None, ce[1]: None}
    frontier = [ce[0], ce[1]]
    while frontier:
        node = frontier.pop()
        for key in adjacency[node]:
            if key == ce:
                continue
            other = key[1] if key[0] == node else key[0]
            if other not in in_edge:
                in_edge[other] = key
                parent[other] = node
                frontier.append(other)
    out_edges = {
        node: tuple(sorted(k for k in adjacency[node] if k != in_edge[node]))
        for node in adjacency
    }
    return TreeOrientation(
        tree=tree,
        conference_edge=ce,
        roots=(ce[0], ce[1]),
        in_edge=in_edge,
        out_edges=out_edges,
        parent=parent,
    )


# ---------------------------------------------------------------------------
# announcements and recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Announcement:
    """One public XOR: inbound-edge bit of the announcer XOR outbound-edge bit."""

    tree: int
    round: int
    announcer: str
    edge: EdgeKey
    value: int
    in_edge: EdgeKey
    edge_bit_index: int
    in_bit_index: int

    def to_json_dict(self) -> dict:
        return {
            "tree": self.tree,
            "round": self.round,
            "announcer": self.announcer,
            "edge": list(self.edge),
            "bits": [self.value],
            "in_edge": list(self.in_edge),
            "bit_indices": {"edge": self.edge_bit_index, "in": self.in_bit_index},
        }


def announce(
    orientation: TreeOrientation,
    km: KeyMaterial,
    round_label: int = 0,
    *,
    tree_index: int = 0,
) -> list[Announcement]:
    """Consume one bit per tree edge and publish the relaying XORs.

    Every node with outbound edges announces, per outbound edge, the XOR
    of its inbound bit with that edge's bit; a tree with E edges yields
    E - 1 announcements (nothing is announced on the conference edge).

    Raises:
        KeyDepletedError: an edge's pool is exhausted.
    """
    consumed: dict[EdgeKey, tuple[int, int]] = {}
    for key in orientation.tree.edges:  # lexicographic consumption order
        consumed[key] = km.consume(key)
    out = []
    for node in sorted(orientation.out_edges):
        in_key = orientation.in_edge[node]
        in_index, in_bit = consumed[in_key]
        for key in orientation.out_edges[node]:
            index, bit = consumed[key]
            out.append(
                Announcement(
                    tree=tree_index,
                    round=round_label,
                    announcer=node,
                    edge=key,
                    value=in_bit ^ bit,
                    in_edge=in_key,
                    edge_bit_index=index,
                    in_bit_index=in_index,
                )
            )
    return out


@dataclass(frozen=True)
class Recovery:
    """A recovered conference bit and the XOR chain that produced it."""

    node: str
    bit: int
    chain: tuple[tuple, ...]  # ("key", edge) then ("announcement", announcer, edge)


def recover(
    node: str,
    orientation: TreeOrientation,
    announcements: Iterable[Announcement],
    km: KeyMaterial,
    *,
    consumed: Optional[Mapping[EdgeKey, int]] = None,
) -> Recovery:
    """Recover the conference bit at ``node`` from one tree's transcript.

    Starting from the node's own inbound-edge bit, each hop XORs in the
    announcement made on the current edge, moving one step toward the
    conference edge.  ``consumed`` may pin the per-edge bit indices (as
    recorded by the protocol run); otherwise they are read from the
    announcements themselves.

    Raises:
        IncompleteTranscriptError: a needed announcement (or index) is missing.
    """
    if node not in orientation.in_edge:
        raise InvalidEdgeError(f"node {node!r} is not spanned by the tree")
    by_edge = {a.edge: a for a in announcements}
    ce = orientation.conference_edge
    current = node
    key = orientation.in_edge[current]
    if key == ce:
        index = _conference_bit_index(orientation, by_edge, km, consumed)
        return Recovery(node=node, bit=km.bit(ce, index), chain=(("key", ce),))
    head = by_edge.get(key)
    if head is None:
        raise IncompleteTranscriptError(f"no announcement for edge {key}")
    index = consumed[key] if consumed is not None else head.edge_bit_index
    bit = km.bit(key, index)
    chain: list[tuple] = [("key", key)]
    while key != ce:
        ann = by_edge.get(key)
        if ann is None:
            raise IncompleteTranscriptError(f"no announcement for edge {key}")
        bit ^= ann.value
        chain.append(("announcement", ann.announcer, ann.edge))
        current = orientation.parent[current]
        key = orientation.in_edge[current]
    return Recovery(node=node, bit=bit, chain=tuple(chain))


def _conference_bit_index(
    orientation: TreeOrientation,
    by_edge: Mapping[EdgeKey, Announcement],
    km: KeyMaterial,
    consumed: Optional[Mapping[EdgeKey, int]],
) -> int:
    ce = orientation.conference_edge
    if consumed is not None:
        if ce not in consumed:
            raise IncompleteTranscriptError(f"no consumed index for conference edge {ce}")
        return consumed[ce]
    for ann in by_edge.values():
        if ann.in_edge == ce:
            return ann.in_bit_index
    # single-edge tree with no announcements: the latest consumed bit
    index = km.cursor(ce) - 1
    if index < 0:
        raise IncompleteTranscriptError(
            f"cannot locate the consumed bit for conference edge {ce}"
        )
    return index


# ---------------------------------------------------------------------------
# full protocol run
# ---------------------------------------------------------------------------

def consumption_schedule(g: WeightedGraph, pk: TreePacking) -> list[dict[EdgeKey, int]]:
    """Per tree instance, the key-bit index used on each tree edge.

    Instances are processed in packing order, each taking the next
    unconsumed bit of every edge it contains.

    Raises:
        KeyDepletedError: the packing overuses some edge.
    """
    mpk = pk if pk.mode == "multigraph" else multigraph_from_weighted(pk)
    caps = Multigraph(g, mpk.rounds).multiplicities()
    cursor: dict[EdgeKey, int] = {k: 0 for k in caps}
    schedule = []
    for _, _, tree in mpk.instances():
        step = {}
        for key in tree.edges:
            if key not in caps:
                raise InvalidPackingError(f"tree uses unknown edge {key}")
            if cursor[key] >= caps[key]:
                raise KeyDepletedError(f"edge {key} ran out of key bits")
            step[key] = cursor[key]
            cursor[key] += 1
        schedule.append(step)
    return schedule


@dataclass(frozen=True)
class SecurityBudget:
    """Failure-probability accounting: per tree instance and merged."""

    per_tree: tuple[Fraction, ...]
    merged: Fraction

    def to_json_dict(self) -> dict:
        return {
            "per_tree": [format_rational(x) for x in self.per_tree],
            "merged": format_rational(self.merged),
        }


def security_budget(pk: TreePacking, epsilons: Mapping[EdgeKey, Fraction]) -> SecurityBudget:
    """Sum each tree instance's edge epsilons; the total simply adds up.

    With a common epsilon per edge this gives (edge count) * epsilon per
    tree and (instances) * (edge count) * epsilon overall.
    """
    mpk = pk if pk.mode == "multigraph" else multigraph_from_weighted(pk)
    per_tree = []
    for _, _, tree in mpk.instances():
        per_tree.append(
            sum((Fraction(epsilons[key]) for key in tree.edges), Fraction(0))
        )
    return SecurityBudget(per_tree=tuple(per_tree), merged=sum(per_tree, Fraction(0)))


@dataclass(frozen=True)
class ProtocolTranscript:
    """Everything observable from one protocol run."""

    rounds: int
    conference_key: tuple[int, ...]
    unanimity: bool
    announcements: tuple[Announcement, ...]
    recovered: Mapping[str, tuple[int, ...]]
    node_views: Mapping[str, Mapping[EdgeKey, tuple[int, ...]]]
    consumed: Mapping[EdgeKey, int]
    budget: SecurityBudget
    prng_algorithm: str
    seed: object

    def to_json_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "conference_key": "".join(map(str, self.conference_key)),
            "unanimity": self.unanimity,
            "announcements": [a.to_json_dict() for a in self.announcements],
            "recovered": {
                node: "".join(map(str, bits)) for node, bits in sorted(self.recovered.items())
            },
            "consumed_bits": {f"{u}-{v}": c for (u, v), c in sorted(self.consumed.items())},
            "security_budget": self.budget.to_json_dict(),
            "prng": {"algorithm": self.prng_algorithm, "seed": self.seed},
        }


def run_packing_protocol(g: WeightedGraph, pk: TreePacking, seed) -> ProtocolTranscript:
    """Execute the keying protocol for every tree instance of ``pk``.

    Keys are generated for the packing's round count from ``seed``; each
    instance is oriented, announced and recovered at every node.  The
    conference key concatenates one bit per instance.

    Raises:
        InvalidPackingError / KeyDepletedError: the packing does not fit.
        PreconditionFailedError: non-integer rates.
    """
    mpk = pk if pk.mode == "multigraph" else multigraph_from_weighted(pk)
    schedule = consumption_schedule(g, mpk)
    km = generate_keys(g, mpk.rounds, seed)
    announcements: list[Announcement] = []
    conference: list[int] = []
    recovered: dict[str, list[int]] = {v: [] for v in g.node_ids}
    unanimity = True
    for (tree_idx, copy_idx, tree), consumed in zip(mpk.instances(), schedule):
        orientation = orient_tree(tree)
        anns = announce(orientation, km, copy_idx, tree_index=tree_idx)
        announcements.extend(anns)
        bits = {}
        for node in g.node_ids:
            rec = recover(node, orientation, anns, km, consumed=consumed)
            bits[node] = rec.bit
            recovered[node].append(rec.bit)
        reference = km.bit(orientation.conference_edge, consumed[orientation.conference_edge])
        if any(b != reference for b in bits.values()):
            unanimity = False
        conference.append(reference)
    node_views = {
        v: {key: km.pools[key] for key in sorted(g.edges_at(v))} for v in g.node_ids
    }
    return ProtocolTranscript(
        rounds=mpk.rounds,
        conference_key=tuple(conference),
        unanimity=unanimity,
        announcements=tuple(announcements),
        recovered={v: tuple(bits) for v, bits in recovered.items()},
        node_views=node_views,
        consumed={k: km.cursor(k) for k in km.pools},
        budget=security_budget(mpk, g.epsilon_map()),
        prng_algorithm=km.algorithm,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# exhaustive secrecy audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    """Result of the exhaustive secrecy check.

    ``uniform`` means: for every realizable transcript, all conference
    keys are equally likely.  ``edge_disjoint`` reports whether the
    consumption schedule uses every key bit at most once (the property
    the one-time-pad argument rests on).
    """

    uniform: bool
    edge_disjoint: bool
    total_bits: int
    conference_bits: int
    violations: tuple[str, ...] = ()
    histograms: Optional[dict] = None

    def to_json_dict(self) -> dict:
        doc = {
            "uniform": self.uniform,
            "edge_disjoint": self.edge_disjoint,
            "total_bits": self.total_bits,
            "conference_bits": self.conference_bits,
            "violations": list(self.violations),
        }
        if self.histograms is not None:
            doc["histograms"] = {
                "".join(map(str, transcript)): {
                    "".join(map(str, key)): count for key, count in sorted(hist.items())
                }
                for transcript, hist in sorted(self.histograms.items())
            }
        return doc


def secrecy_audit(
    g: WeightedGraph,
    pk: TreePacking,
    *,
    schedule: Optional[Sequence[Mapping[EdgeKey, int]]] = None,
    max_bits: int = AUDIT_BIT_CAP,
) -> AuditReport:
    """Enumerate every key assignment; check the key is uniform given the transcript.

    A custom ``schedule`` (per-instance edge -> bit index) may be passed
    to audit a corrupted consumption plan, e.g. one reusing a bit across
    two trees; the default schedule is the protocol's own.

    Raises:
        OracleLimitError: more than ``max_bits`` total key bits.
        PreconditionFailedError: non-integer rates.
    """
    mpk = pk if pk.mode == "multigraph" else multigraph_from_weighted(pk)
    for e in g.edges:
        if e.rate.denominator != 1:
            raise PreconditionFailedError(
                f"edge ({e.u},{e.v}) has non-integer rate {e.rate}; keys come in whole bits"
            )
    pool_sizes = Multigraph(g, mpk.rounds).multiplicities()
    total_bits = sum(pool_sizes.values())
    if total_bits > max_bits:
        raise OracleLimitError(
            f"{total_bits} key bits exceed the audit cap of {max_bits} "
            f"(2^{total_bits} assignments)"
        )
    if schedule is None:
        schedule = consumption_schedule(g, mpk)
    instances = list(mpk.instances())
    if len(schedule) != len(instances):
        raise InvalidPackingError("schedule length does not match the tree instances")

    offsets = {}
    base = 0
    for key in sorted(pool_sizes):
        offsets[key] = base
        base += pool_sizes[key]

    violations: list[str] = []
    seen_bits: dict[int, int] = {}
    scheduled_uses = 0
    ann_positions: list[tuple[int, int]] = []
    conference_positions: list[int] = []
    for (tree_idx, copy_idx, tree), consumed in zip(instances, schedule):
        orientation = orient_tree(tree)
        position = {}
        for key in tree.edges:
            if key not in consumed:
                raise InvalidPackingError(f"schedule misses edge {key} of a tree")
            index = consumed[key]
            if not 0 <= index < pool_sizes[key]:
                raise KeyDepletedError(f"edge {key} has no bit at index {index}")
            pos = offsets[key] + index
            if pos in seen_bits:
                violations.append(
                    f"bit {index} of edge {key} reused by instances "
                    f"{seen_bits[pos]} and {len(conference_positions)}"
                )
            else:
                seen_bits[pos] = len(conference_positions)
            scheduled_uses += 1
            position[key] = pos
        for node in sorted(orientation.out_edges):
            in_pos = position[orientation.in_edge[node]]
            for key in orientation.out_edges[node]:
                ann_positions.append((in_pos, position[key]))
        conference_positions.append(position[orientation.conference_edge])

    histograms: dict[tuple, dict[tuple, int]] = {}
    for mask in range(1 << total_bits):
        transcript = tuple(
            ((mask >> p) ^ (mask >> q)) & 1 for p, q in ann_positions
        )
        key = tuple((mask >> p) & 1 for p in conference_positions)
        histograms.setdefault(transcript, {})
        histograms[transcript][key] = histograms[transcript].get(key, 0) + 1

    key_space = 1 << len(conference_positions)
    uniform = True
    for transcript, hist in histograms.items():
        counts = set(hist.values())
        if len(hist) != key_space or len(counts) != 1:
            uniform = False
            violations.append(
                "conference key not uniform for transcript "
                + "".join(map(str, transcript))
            )
            break
    return AuditReport(
        uniform=uniform,
        edge_disjoint=len(seen_bits) == scheduled_uses,
        total_bits=total_bits,
        conference_bits=len(conference_positions),
        violations=tuple(violations),
        histograms=histograms if total_bits <= 12 else None,
    )
