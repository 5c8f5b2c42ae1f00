"""Exact-arithmetic network model: weighted graphs, partitions, spanning trees.

A network is an undirected simple graph whose edges carry a nonnegative
rational key rate and a rational security parameter (epsilon).  All
arithmetic is done with :class:`fractions.Fraction`; floats never enter a
rate computation, so every derived quantity is exact.

Conventions used throughout the package:

* Node labels are strings.  Wherever an order matters (partition
  enumeration, subset enumeration, tie-breaking) nodes are taken in
  lexicographic label order.
* An edge is identified by its canonical key ``(u, v)`` with ``u < v``.
* Vertex partitions are enumerated via restricted growth strings in
  lexicographic order, so every run of the library visits partitions in
  the same sequence.
* All value types are immutable after construction.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DisconnectedError,
    DuplicateEdgeError,
    ExactModeLimitError,
    InvalidEdgeError,
    InvalidPartitionError,
    InvalidSubsetError,
    NegativeRateError,
    OracleLimitError,
    SchemaError,
    SelfLoopError,
    UnknownNodeError,
)

#: Largest node count for which full vertex-partition enumeration is allowed.
PARTITION_CAP_NODES = 12

#: Largest number of spanning trees the enumerator will agree to produce.
TREE_ENUMERATION_CAP = 10**6

EdgeKey = tuple[str, str]


# ---------------------------------------------------------------------------
# rationals
# ---------------------------------------------------------------------------

def parse_rational(value) -> Fraction:
    """Parse an exact rational from JSON-level data.

    Accepted forms: an ``int``, or a string holding an integer (``"3"``),
    a fraction (``"7/5"``), or a terminating decimal (``"0.25"``).  Floats
    are rejected on purpose: they would silently destroy exactness.

    Raises:
        SchemaError: on floats, malformed strings, or other types.
    """
    if isinstance(value, bool):
        raise SchemaError(f"expected a rational, got boolean {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise SchemaError(
            f"refusing float {value!r}: quote it as a string (e.g. \"1/4\") for exactness"
        )
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"malformed rational {value!r}") from exc
    raise SchemaError(f"expected a rational, got {type(value).__name__}")


def format_rational(x: Fraction) -> str:
    """Render a rational in lowest terms, ``"p/q"`` or plain ``"p"``."""
    return str(x)


def edge_key(u: str, v: str) -> EdgeKey:
    """Canonical (sorted) key for the undirected edge between ``u`` and ``v``."""
    return (u, v) if u <= v else (v, u)


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    """An undirected edge with an exact rate and security parameter."""

    u: str
    v: str
    rate: Fraction
    epsilon: Fraction = Fraction(0)

    @property
    def key(self) -> EdgeKey:
        return (self.u, self.v)


class WeightedGraph:
    """Immutable undirected simple graph with rational edge rates.

    Args:
        node_ids: labels, in any order; must be nonempty and unique.
        edges: ``Edge`` records or ``(u, v, rate[, epsilon])`` tuples.

    Raises:
        SchemaError: empty or duplicated node list.
        SelfLoopError / DuplicateEdgeError / NegativeRateError /
        UnknownNodeError: per offending edge.
    """

    __slots__ = ("node_ids", "edges", "_by_key", "_adjacent")

    def __init__(self, node_ids: Sequence[str], edges: Iterable):
        ids = tuple(str(n) for n in node_ids)
        if not ids:
            raise SchemaError("a network needs at least one node")
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate node labels")
        known = set(ids)
        by_key: dict[EdgeKey, Edge] = {}
        for item in edges:
            if isinstance(item, Edge):
                u, v, rate, eps = item.u, item.v, item.rate, item.epsilon
            else:
                u, v, rate = item[0], item[1], item[2]
                eps = item[3] if len(item) > 3 else Fraction(0)
            u, v = str(u), str(v)
            rate, eps = Fraction(rate), Fraction(eps)
            if u == v:
                raise SelfLoopError(f"self-loop at node {u!r}")
            if u not in known or v not in known:
                missing = u if u not in known else v
                raise UnknownNodeError(f"edge endpoint {missing!r} is not a declared node")
            if rate < 0:
                raise NegativeRateError(f"edge ({u},{v}) has negative rate {rate}")
            if eps < 0:
                raise NegativeRateError(f"edge ({u},{v}) has negative epsilon {eps}")
            key = edge_key(u, v)
            if key in by_key:
                raise DuplicateEdgeError(f"edge ({key[0]},{key[1]}) appears more than once")
            by_key[key] = Edge(key[0], key[1], rate, eps)
        self.node_ids = ids
        self.edges = tuple(by_key[k] for k in sorted(by_key))
        self._by_key = {e.key: e for e in self.edges}
        adjacent: dict[str, list[EdgeKey]] = {n: [] for n in ids}
        for e in self.edges:
            adjacent[e.u].append(e.key)
            adjacent[e.v].append(e.key)
        self._adjacent = {n: tuple(keys) for n, keys in adjacent.items()}

    # -- queries ---------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    def sorted_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.node_ids))

    def has_node(self, label: str) -> bool:
        return label in self._adjacent

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self._by_key

    def edge(self, u: str, v: str) -> Edge:
        try:
            return self._by_key[edge_key(u, v)]
        except KeyError:
            raise InvalidEdgeError(f"no edge between {u!r} and {v!r}") from None

    def rate(self, u: str, v: str) -> Fraction:
        return self.edge(u, v).rate

    def epsilon(self, u: str, v: str) -> Fraction:
        return self.edge(u, v).epsilon

    def edges_at(self, node: str) -> tuple[EdgeKey, ...]:
        try:
            return self._adjacent[node]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node!r}") from None

    def total_rate(self) -> Fraction:
        return sum((e.rate for e in self.edges), Fraction(0))

    def positive_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.rate > 0)

    def rate_map(self) -> dict[EdgeKey, Fraction]:
        return {e.key: e.rate for e in self.edges}

    def epsilon_map(self) -> dict[EdgeKey, Fraction]:
        return {e.key: e.epsilon for e in self.edges}

    # -- derivation ------------------------------------------------------

    def with_edge(self, u: str, v: str, rate, epsilon=Fraction(0)) -> WeightedGraph:
        """Return a copy with ``rate`` added on ``(u, v)``.

        If the edge already exists the rates (and epsilons) are summed --
        adding capacity to an existing link is not an error.
        """
        rate, epsilon = Fraction(rate), Fraction(epsilon)
        if not (self.has_node(u) and self.has_node(v)):
            missing = u if not self.has_node(u) else v
            raise UnknownNodeError(f"unknown node {missing!r}")
        if u == v:
            raise SelfLoopError(f"self-loop at node {u!r}")
        if rate < 0 or epsilon < 0:
            raise NegativeRateError(f"negative addition on edge ({u},{v})")
        key = edge_key(u, v)
        new_edges = []
        merged = False
        for e in self.edges:
            if e.key == key:
                new_edges.append(Edge(e.u, e.v, e.rate + rate, e.epsilon + epsilon))
                merged = True
            else:
                new_edges.append(e)
        if not merged:
            new_edges.append(Edge(key[0], key[1], rate, epsilon))
        return WeightedGraph(self.node_ids, new_edges)

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": list(self.node_ids),
            "edges": [
                {
                    "u": e.u,
                    "v": e.v,
                    "rate": format_rational(e.rate),
                    "epsilon": format_rational(e.epsilon),
                }
                for e in self.edges
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    # -- dunder ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.node_ids == other.node_ids and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.node_ids, self.edges))

    def __repr__(self) -> str:
        return f"WeightedGraph(nodes={len(self.node_ids)}, edges={len(self.edges)})"


def parse_graph(text: str) -> WeightedGraph:
    """Parse the canonical JSON document into a :class:`WeightedGraph`.

    Expected shape::

        {"nodes": ["1", "2"], "edges": [{"u": "1", "v": "2", "rate": "1"}]}

    ``epsilon`` is optional per edge and defaults to 0.  Rates and
    epsilons follow :func:`parse_rational` (exact; floats rejected).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    nodes = doc.get("nodes")
    raw_edges = doc.get("edges")
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise SchemaError('"nodes" must be a list of strings')
    if not isinstance(raw_edges, list):
        raise SchemaError('"edges" must be a list')
    edges = []
    for rec in raw_edges:
        if not isinstance(rec, dict) or "u" not in rec or "v" not in rec or "rate" not in rec:
            raise SchemaError('each edge needs "u", "v" and "rate" fields')
        u, v = rec["u"], rec["v"]
        if not isinstance(u, str) or not isinstance(v, str):
            raise SchemaError("edge endpoints must be strings")
        rate = parse_rational(rec["rate"])
        eps = parse_rational(rec.get("epsilon", 0))
        edges.append((u, v, rate, eps))
    return WeightedGraph(nodes, edges)


def is_connected(g: WeightedGraph, positive_only: bool = False) -> bool:
    """True when ``g`` is connected (optionally counting only rate>0 edges)."""
    nodes = g.node_ids
    if len(nodes) == 1:
        return True
    start = nodes[0]
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for key in g.edges_at(node):
            if positive_only and g._by_key[key].rate == 0:
                continue
            other = key[1] if key[0] == node else key[0]
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    return len(seen) == len(nodes)


# ---------------------------------------------------------------------------
# vertex partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexPartition:
    """A partition of a vertex set into disjoint nonempty blocks.

    Canonical form: each block sorted, blocks ordered by first element.
    """

    blocks: tuple[tuple[str, ...], ...]

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[str]]) -> VertexPartition:
        canon = []
        seen: set[str] = set()
        for block in blocks:
            b = tuple(sorted(str(x) for x in block))
            if not b:
                raise InvalidPartitionError("empty block")
            for x in b:
                if x in seen:
                    raise InvalidPartitionError(f"node {x!r} appears in two blocks")
                seen.add(x)
            canon.append(b)
        if not canon:
            raise InvalidPartitionError("partition has no blocks")
        return cls(tuple(sorted(canon)))

    @classmethod
    def finest(cls, labels: Iterable[str]) -> VertexPartition:
        return cls.from_blocks([x] for x in labels)

    @classmethod
    def from_rgs(cls, labels: Sequence[str], rgs: Sequence[int]) -> VertexPartition:
        groups: dict[int, list[str]] = {}
        for label, g in zip(labels, rgs):
            groups.setdefault(g, []).append(label)
        return cls.from_blocks(groups.values())

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def vertices(self) -> frozenset[str]:
        return frozenset(x for b in self.blocks for x in b)

    def block_of(self) -> dict[str, int]:
        """Map every vertex to the index of its block."""
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def is_finest(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def to_json_list(self) -> list[list[str]]:
        return [list(b) for b in self.blocks]

    def __str__(self) -> str:
        return "{" + "}{".join(",".join(b) for b in self.blocks) + "}"


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """Yield every restricted growth string of length ``n``, lexicographically.

    A restricted growth string ``a`` satisfies ``a[0] == 0`` and
    ``a[i] <= 1 + max(a[:i])``; strings correspond 1:1 to set partitions
    of ``n`` items, so the sequence has Bell(n) elements.
    """
    if n <= 0:
        return
    a = [0] * n
    b = [1] * n  # b[i] = 1 + max(a[:i]) for i >= 1
    while True:
        yield tuple(a)
        j = n - 1
        while j > 0 and a[j] == b[j]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        nb = b[j] + 1 if a[j] == b[j] else b[j]
        for i in range(j + 1, n):
            a[i] = 0
            b[i] = nb


def enumerate_partitions(
    g: WeightedGraph, *, max_nodes: int = PARTITION_CAP_NODES
) -> Iterator[VertexPartition]:
    """Yield every partition of ``g``'s vertices with at least two blocks.

    Order is the lexicographic restricted-growth-string order over nodes
    sorted by label, which makes tie-breaking reproducible everywhere.

    Raises:
        ExactModeLimitError: when ``g`` has more than ``max_nodes`` nodes.
    """
    labels = g.sorted_nodes()
    if len(labels) > max_nodes:
        raise ExactModeLimitError(
            f"partition enumeration over {len(labels)} nodes exceeds the cap of {max_nodes}"
        )
    for rgs in restricted_growth_strings(len(labels)):
        if max(rgs) == 0:
            continue  # single block
        yield VertexPartition.from_rgs(labels, rgs)


def _check_partition_of(g: WeightedGraph, p: VertexPartition) -> None:
    if p.vertices() != set(g.node_ids):
        raise InvalidPartitionError("partition does not cover exactly the graph's nodes")


def cross_edges(g: WeightedGraph, p: VertexPartition) -> tuple[Edge, ...]:
    """Edges of ``g`` whose endpoints lie in different blocks of ``p``."""
    _check_partition_of(g, p)
    block = p.block_of()
    return tuple(e for e in g.edges if block[e.u] != block[e.v])


def contract(g: WeightedGraph, p: VertexPartition) -> WeightedGraph:
    """Contract each block of ``p`` to a single node.

    Parallel rates (and epsilons) between two blocks are summed; edges
    internal to a block disappear.  A singleton block keeps its label, a
    larger block is labelled by joining its members with ``+``, so
    contracting the finest partition returns the graph unchanged.
    """
    _check_partition_of(g, p)
    labels = ["+".join(b) if len(b) > 1 else b[0] for b in p.blocks]
    block = p.block_of()
    agg: dict[tuple[int, int], list[Fraction]] = {}
    for e in g.edges:
        bu, bv = block[e.u], block[e.v]
        if bu == bv:
            continue
        pair = (bu, bv) if bu < bv else (bv, bu)
        if pair in agg:
            agg[pair][0] += e.rate
            agg[pair][1] += e.epsilon
        else:
            agg[pair] = [e.rate, e.epsilon]
    edges = [(labels[a], labels[b], vals[0], vals[1]) for (a, b), vals in agg.items()]
    return WeightedGraph(labels, edges)


def induced_subgraph(g: WeightedGraph, keep: Iterable[str]) -> WeightedGraph:
    """Subgraph on the node subset ``keep`` with the edges internal to it."""
    kept = [str(x) for x in keep]
    if not kept:
        raise InvalidSubsetError("empty node subset")
    if len(set(kept)) != len(kept):
        raise InvalidSubsetError("repeated node in subset")
    for x in kept:
        if not g.has_node(x):
            raise UnknownNodeError(f"unknown node {x!r}")
    kept_set = set(kept)
    order = [n for n in g.node_ids if n in kept_set]
    edges = [e for e in g.edges if e.u in kept_set and e.v in kept_set]
    return WeightedGraph(order, edges)


def proper_vertex_subsets(labels: Sequence[str]) -> Iterator[tuple[str, ...]]:
    """Nonempty proper subsets of ``labels``: cardinality ascending, then lexicographic."""
    ordered = sorted(labels)
    for k in range(1, len(ordered)):
        yield from itertools.combinations(ordered, k)


# ---------------------------------------------------------------------------
# spanning trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpanningTree:
    """A spanning tree, stored as a sorted tuple of canonical edge keys."""

    edges: tuple[EdgeKey, ...]

    @classmethod
    def of(cls, keys: Iterable[EdgeKey]) -> SpanningTree:
        return cls(tuple(sorted(edge_key(u, v) for u, v in keys)))

    def vertices(self) -> frozenset[str]:
        return frozenset(x for e in self.edges for x in e)

    def degree(self, node: str) -> int:
        return sum(1 for e in self.edges if node in e)

    def __contains__(self, key: EdgeKey) -> bool:
        return key in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def __lt__(self, other: SpanningTree) -> bool:
        return self.edges < other.edges

    def to_json_list(self) -> list[list[str]]:
        return [[u, v] for u, v in self.edges]


def is_spanning_tree(g: WeightedGraph, tree: SpanningTree) -> bool:
    """True when ``tree`` uses edges of ``g`` and spans every node acyclically."""
    n = g.node_count
    if len(tree.edges) != n - 1:
        return False
    if len(set(tree.edges)) != len(tree.edges):
        return False
    parent = {v: v for v in g.node_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in tree.edges:
        if not g.has_edge(u, v):
            return False
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def count_spanning_trees(g: WeightedGraph) -> int:
    """Number of spanning trees of the positive-rate subgraph (matrix-tree)."""
    labels = g.sorted_nodes()
    n = len(labels)
    if n == 1:
        return 1
    idx = {v: i for i, v in enumerate(labels)}
    lap = [[Fraction(0)] * n for _ in range(n)]
    for e in g.positive_edges():
        i, j = idx[e.u], idx[e.v]
        lap[i][i] += 1
        lap[j][j] += 1
        lap[i][j] -= 1
        lap[j][i] -= 1
    # determinant of the (n-1)x(n-1) principal minor, exact Gaussian elimination
    m = [row[1:] for row in lap[1:]]
    det = Fraction(1)
    size = n - 1
    for col in range(size):
        pivot = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, size):
            if m[r][col] != 0:
                factor = m[r][col] / inv
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    assert det.denominator == 1
    return int(det)


def enumerate_spanning_trees(
    g: WeightedGraph, *, max_trees: int = TREE_ENUMERATION_CAP
) -> Iterator[SpanningTree]:
    """Yield every spanning tree of the positive-rate subgraph of ``g``.

    Trees appear in lexicographic order of their (sorted) edge-key lists.
    The total count is pre-checked with the matrix-tree theorem.

    Raises:
        DisconnectedError: the positive-rate subgraph does not span ``g``.
        OracleLimitError: more than ``max_trees`` trees exist.
    """
    if not is_connected(g, positive_only=True):
        raise DisconnectedError("positive-rate subgraph is not connected")
    total = count_spanning_trees(g)
    if total > max_trees:
        raise OracleLimitError(f"{total} spanning trees exceed the cap of {max_trees}")
    n = g.node_count
    if n == 1:
        yield SpanningTree(())
        return
    keys = [e.key for e in g.positive_edges()]  # already sorted
    m = len(keys)
    parent: dict[str, str] = {v: v for v in g.node_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            x = parent[x]
        return x

    def can_complete(i: int) -> bool:
        snapshot = dict(parent)
        comps = len({find(v) for v in g.node_ids})
        for u, v in keys[i:]:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                comps -= 1
                if comps == 1:
                    break
        parent.clear()
        parent.update(snapshot)
        return comps == 1

    chosen: list[EdgeKey] = []

    def walk(i: int) -> Iterator[SpanningTree]:
        if len(chosen) == n - 1:
            yield SpanningTree(tuple(chosen))
            return
        if i == m or len(chosen) + (m - i) < n - 1 or not can_complete(i):
            return
        u, v = keys[i]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            chosen.append(keys[i])
            yield from walk(i + 1)
            chosen.pop()
            parent[ru] = ru
        yield from walk(i + 1)

    yield from walk(0)


# ---------------------------------------------------------------------------
# multigraphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Multigraph:
    """``rounds`` copies of a network, giving each edge an integer multiplicity.

    Edge ``e`` of the base graph contributes ``floor(rounds * rate_e)``
    parallel unit-capacity edges.
    """

    base: WeightedGraph
    rounds: int

    def __post_init__(self):
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise SchemaError(f"round count must be a positive integer, got {self.rounds!r}")

    def multiplicity(self, u: str, v: str) -> int:
        scaled = self.rounds * self.base.rate(u, v)
        return scaled.numerator // scaled.denominator

    def multiplicities(self) -> dict[EdgeKey, int]:
        return {e.key: self.multiplicity(e.u, e.v) for e in self.base.edges}

    def total_edges(self) -> int:
        return sum(self.multiplicities().values())
