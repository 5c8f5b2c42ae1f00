import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qnet_stp import (
    VertexPartition,
    check_no_bottleneck,
    contract,
    finest_bound,
    nwt_length,
    nwt_rate,
    partition_bound,
    triangle_rate,
)
from qnet_stp.errors import (
    DisconnectedError,
    ExactModeLimitError,
    InvalidPartitionError,
    SchemaError,
    TrivialNetworkError,
)
from qnet_stp.netgraph import enumerate_partitions

from conftest import build, complete, random_connected_graph, ring


# ---------------------------------------------------------------------------
# reference values
# ---------------------------------------------------------------------------

def test_triangle_rate_value(triangle):
    report = nwt_rate(triangle)
    assert report.rate == Fraction(3, 2)
    assert report.finest_is_optimal
    assert report.minimizing_partition.is_finest()


def test_k4_minus_edge_value(k4_minus):
    assert nwt_rate(k4_minus).rate == Fraction(5, 3)


def test_k4_value(k4):
    assert nwt_rate(k4).rate == 2


def test_pendant_value(tri_pendant):
    report = nwt_rate(tri_pendant)
    assert report.rate == 1
    assert report.minimizing_partition == VertexPartition.from_blocks(
        [["1", "2", "3"], ["4"]]
    )


def test_hexagon_value(hexagon):
    report = nwt_rate(hexagon)
    assert report.rate == Fraction(6, 5)
    assert report.finest_is_optimal


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_unit_trees_rate_one(n):
    nodes = [str(i) for i in range(1, n + 1)]
    path = build(nodes, [(nodes[i], nodes[i + 1], 1) for i in range(n - 1)])
    assert nwt_rate(path).rate == 1
    star = build(nodes, [(nodes[0], v, 1) for v in nodes[1:]])
    assert nwt_rate(star).rate == 1


def test_two_node_network():
    g = build(["a", "b"], [("a", "b", "7/3")])
    report = nwt_rate(g)
    assert report.rate == Fraction(7, 3)
    assert report.minimizing_partition.block_count == 2


def test_rate_errors():
    with pytest.raises(TrivialNetworkError):
        nwt_rate(build(["1"], []))
    with pytest.raises(DisconnectedError):
        nwt_rate(build(["1", "2", "3"], [("1", "2", 1)]))
    with pytest.raises(ExactModeLimitError):
        nwt_rate(ring(13))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def test_partition_bound_examples(hexagon):
    halves = VertexPartition.from_blocks([["1", "2", "3"], ["4", "5", "6"]])
    assert partition_bound(hexagon, halves) == 2
    assert finest_bound(hexagon) == Fraction(6, 5)
    with pytest.raises(InvalidPartitionError):
        partition_bound(hexagon, VertexPartition.from_blocks(
            [["1", "2", "3", "4", "5", "6"]]
        ))


def test_minimizer_achieves_rate(two_cliques_hub):
    report = nwt_rate(two_cliques_hub)
    assert partition_bound(two_cliques_hub, report.minimizing_partition) == report.rate
    assert report.minimizing_partition == VertexPartition.from_blocks(
        [["1", "2", "3", "4"], ["5", "6", "7", "8"], ["9"]]
    )


def test_length_floors(triangle, hexagon):
    assert nwt_length(triangle, 2) == 3
    assert nwt_length(triangle, 1) == 1
    assert nwt_length(hexagon, 5) == 6
    assert nwt_length(hexagon, 4) == 4  # floor(24/5)
    with pytest.raises(SchemaError):
        nwt_length(triangle, 0)


# ---------------------------------------------------------------------------
# bottleneck test
# ---------------------------------------------------------------------------

def test_no_bottleneck_on_hexagon(hexagon):
    cert = check_no_bottleneck(hexagon)
    assert cert.ok
    assert cert.violating_subset is None


def test_pendant_bottleneck(tri_pendant):
    cert = check_no_bottleneck(tri_pendant)
    assert not cert.ok
    assert cert.violating_subset == ("4",)
    assert cert.network_bound == Fraction(4, 3)
    assert cert.attachment_bound == 1
    assert cert.partition == VertexPartition.from_blocks([["1", "2", "3"], ["4"]])
    assert cert.contracted.rate("1+2+3", "4") == 1


def test_tail_bottleneck(square_diag_tail):
    cert = check_no_bottleneck(square_diag_tail)
    assert cert.violating_subset == ("5", "6")
    assert cert.attachment_bound == Fraction(3, 2)


def test_hub_bottleneck(two_cliques_hub):
    cert = check_no_bottleneck(two_cliques_hub)
    assert cert.violating_subset == ("1", "2", "3", "4", "9")


def test_bottleneck_matches_finest_optimality():
    rng = random.Random(7)
    for _ in range(120):
        g = random_connected_graph(rng, max_nodes=6)
        assert check_no_bottleneck(g).ok == nwt_rate(g).finest_is_optimal


def test_attachment_and_subnetwork_forms_agree():
    # the per-subset test in its attachment form and its subnetwork form
    # must accept/reject identically whenever both are defined
    from qnet_stp.netgraph import induced_subgraph, proper_vertex_subsets

    rng = random.Random(19)
    for _ in range(40):
        g = random_connected_graph(rng, max_nodes=6)
        nodes = g.sorted_nodes()
        n = len(nodes)
        total = g.total_rate()
        for subset in proper_vertex_subsets(nodes):
            if len(subset) > n - 2:
                continue
            inside = set(subset)
            attach = sum(
                (e.rate for e in g.edges if e.u in inside or e.v in inside),
                Fraction(0),
            )
            rest_rate = total - attach
            attachment_ok = total * len(subset) <= attach * (n - 1)
            subnetwork_ok = rest_rate * len(subset) <= attach * (n - len(subset) - 1)
            assert attachment_ok == subnetwork_ok


# ---------------------------------------------------------------------------
# three-party closed form
# ---------------------------------------------------------------------------

def test_triangle_closed_form_values():
    assert triangle_rate(Fraction(1), Fraction(1), Fraction(1)) == Fraction(3, 2)
    assert triangle_rate(Fraction(1), Fraction(2), Fraction(5)) == 3
    assert triangle_rate(Fraction(2), Fraction(3), Fraction(4)) == Fraction(9, 2)
    # one missing link: reduces to the path through the middle
    assert triangle_rate(Fraction(0), Fraction(2), Fraction(3)) == 2


@given(
    st.fractions(min_value=0, max_value=4, max_denominator=5),
    st.fractions(min_value=0, max_value=4, max_denominator=5),
    st.fractions(min_value=0, max_value=4, max_denominator=5),
)
def test_triangle_closed_form_matches_scan(r12, r13, r23):
    if sum(1 for r in (r12, r13, r23) if r == 0) >= 2:
        return  # disconnected
    g = build(["1", "2", "3"], [("1", "2", r12), ("1", "3", r13), ("2", "3", r23)])
    assert triangle_rate(r12, r13, r23) == nwt_rate(g).rate


# ---------------------------------------------------------------------------
# structural properties
# ---------------------------------------------------------------------------

def test_every_partition_bounds_the_rate():
    rng = random.Random(11)
    for _ in range(40):
        g = random_connected_graph(rng, max_nodes=6)
        rate = nwt_rate(g).rate
        for p in enumerate_partitions(g):
            assert partition_bound(g, p) >= rate


def test_contraction_never_lowers_rate():
    rng = random.Random(13)
    for _ in range(40):
        g = random_connected_graph(rng, max_nodes=6)
        rate = nwt_rate(g).rate
        partitions = [p for p in enumerate_partitions(g) if p.block_count >= 2]
        p = rng.choice(partitions)
        if p.block_count < 2:
            continue
        assert nwt_rate(contract(g, p)).rate >= rate


def test_rate_scales_homogeneously():
    rng = random.Random(17)
    for _ in range(25):
        g = random_connected_graph(rng, max_nodes=6)
        c = Fraction(rng.randint(1, 9), rng.randint(1, 9))
        scaled = build(
            g.sorted_nodes(), [(e.u, e.v, e.rate * c) for e in g.edges]
        )
        assert nwt_rate(scaled).rate == c * nwt_rate(g).rate


def test_length_is_floor_of_rate_multiple():
    rng = random.Random(23)
    for _ in range(25):
        g = random_connected_graph(rng, max_nodes=6, rates=(1, 2, Fraction(1, 2)))
        rate = nwt_rate(g).rate
        for n in (1, 2, 3, 7):
            scaled = n * rate
            assert nwt_length(g, n) == scaled.numerator // scaled.denominator
