import json
from fractions import Fraction

import pytest

from qnet_stp.cli import main, parse_candidates, read_caps
from qnet_stp.errors import SchemaError

from conftest import build, ring


@pytest.fixture
def graph_file(tmp_path):
    def write(name, g):
        path = tmp_path / name
        path.write_text(g.to_json(), encoding="utf-8")
        return str(path)
    return write


@pytest.fixture
def triangle_path(graph_file, triangle):
    return graph_file("triangle.json", triangle)


@pytest.fixture
def hexagon_path(graph_file, hexagon):
    return graph_file("hexagon.json", hexagon)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

def test_rate_json(capsys, triangle_path):
    code, out = run(capsys, "rate", triangle_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["rate"] == "3/2"
    assert doc["finest_is_optimal"] is True


def test_rate_text(capsys, hexagon_path):
    code, out = run(capsys, "rate", hexagon_path, "--format", "text")
    assert (code, out) == (0, "6/5\n")


def test_rate_disconnected(capsys, graph_file):
    path = graph_file("disc.json", build(["1", "2", "3"], [("1", "2", 1)]))
    code, out = run(capsys, "rate", path)
    assert code == 2
    assert json.loads(out)["error"]["code"] == "Disconnected"


def test_missing_file(capsys):
    code, out = run(capsys, "rate", "/nonexistent/graph.json")
    assert code == 2
    assert json.loads(out)["error"]["code"] == "Schema"


def test_malformed_json(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    code, out = run(capsys, "rate", str(path))
    assert code == 2


# ---------------------------------------------------------------------------
# pack
# ---------------------------------------------------------------------------

def test_pack_basic_k4(capsys, graph_file, k4):
    code, out = run(capsys, "pack", graph_file("k4.json", k4), "--method", "basic")
    assert code == 0
    doc = json.loads(out)
    assert doc["achieved_rate"] == "2"
    assert doc["optimal"] is True
    assert doc["packing"]["rounds"] == 3
    assert sum(doc["packing"]["multiplicities"]) == 6


def test_pack_general_tail(capsys, graph_file, square_diag_tail):
    code, out = run(
        capsys, "pack", graph_file("tail.json", square_diag_tail),
        "--method", "general",
    )
    assert code == 0
    assert json.loads(out)["achieved_rate"] == "3/2"


def test_pack_oracle_rounds(capsys, triangle_path):
    code, out = run(
        capsys, "pack", triangle_path, "--method", "oracle", "--rounds", "2"
    )
    assert code == 0
    doc = json.loads(out)
    assert sum(doc["packing"]["multiplicities"]) == 3


def test_pack_rounds_requires_oracle(capsys, triangle_path):
    code, out = run(
        capsys, "pack", triangle_path, "--method", "basic", "--rounds", "2"
    )
    assert code == 2


def test_pack_dot_output(capsys, triangle_path):
    code, out = run(
        capsys, "pack", triangle_path, "--method", "oracle", "--rounds", "2",
        "--format", "dot",
    )
    assert code == 0
    assert out.startswith("graph packing {")
    assert "cluster_t0" in out and "cluster_t2" in out
    assert '"t0_1" -- "t0_2"' in out  # per-tree namespaced nodes


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_with_audit(capsys, triangle_path):
    code, out = run(
        capsys, "simulate", triangle_path, "--rounds", "2", "--audit",
        "--seed", "1",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["unanimity"] is True
    assert doc["audit"]["secrecy"] == "uniform"
    assert doc["audit"]["edge_disjoint"] is True
    assert doc["rate"] == "3/2"
    assert len(doc["conference_key"]) == 3


def test_simulate_default_packing(capsys, graph_file, tri_pendant):
    code, out = run(capsys, "simulate", graph_file("p.json", tri_pendant))
    assert code == 0
    doc = json.loads(out)
    assert doc["unanimity"] is True
    assert doc["rate"] == "1"


def test_simulate_zero_rounds(capsys, triangle_path):
    code, out = run(capsys, "simulate", triangle_path, "--rounds", "0")
    assert code == 2


def test_simulate_deterministic(capsys, triangle_path):
    _, first = run(capsys, "simulate", triangle_path, "--rounds", "2", "--seed", "9")
    _, second = run(capsys, "simulate", triangle_path, "--rounds", "2", "--seed", "9")
    assert first == second
    _, third = run(capsys, "simulate", triangle_path, "--rounds", "2", "--seed", "10")
    assert first != third


# ---------------------------------------------------------------------------
# analyze / optimize
# ---------------------------------------------------------------------------

def test_analyze_json(capsys, graph_file, tri_pendant):
    code, out = run(capsys, "analyze", graph_file("p.json", tri_pendant))
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"] == "bipartition"
    assert doc["minimizing_partition"] == [["1", "2", "3"], ["4"]]
    assert doc["certificate"]["violating_subset"] == ["4"]


def test_analyze_text(capsys, hexagon_path):
    code, out = run(capsys, "analyze", hexagon_path, "--format", "text")
    assert code == 0
    assert "no bottleneck" in out


def test_optimize_picks_best_link(capsys, hexagon_path):
    code, out = run(
        capsys, "optimize", hexagon_path,
        "--candidates", "1-4,2-6", "--budget", "1",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["steps"][0]["edge"] == ["1", "4"]
    assert doc["final_rate"] == "7/5"
    assert doc["steps"][0]["dot"].startswith("graph network {")


def test_optimize_budget_zero(capsys, hexagon_path):
    code, out = run(capsys, "optimize", hexagon_path, "--budget", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["steps"] == []
    assert doc["initial_rate"] == doc["final_rate"] == "6/5"


def test_optimize_no_candidates(capsys, hexagon_path):
    code, out = run(capsys, "optimize", hexagon_path, "--budget", "1")
    assert code == 2
    assert json.loads(out)["error"]["code"] == "EmptyPlan"


def test_optimize_text(capsys, hexagon_path):
    code, out = run(
        capsys, "optimize", hexagon_path, "--candidates", "1-4",
        "--budget", "1", "--format", "text",
    )
    assert code == 0
    assert "+ (1,4) rate 1 -> 7/5" in out


# ---------------------------------------------------------------------------
# export-dot
# ---------------------------------------------------------------------------

def test_export_dot_golden(capsys, triangle_path):
    code, out = run(capsys, "export-dot", triangle_path)
    assert code == 0
    assert out == (
        "graph network {\n"
        "  node [shape=circle];\n"
        '  "1";\n'
        '  "2";\n'
        '  "3";\n'
        '  "1" -- "2" [label="1"];\n'
        '  "1" -- "3" [label="1"];\n'
        '  "2" -- "3" [label="1"];\n'
        "}\n"
    )


# ---------------------------------------------------------------------------
# caps and candidate parsing
# ---------------------------------------------------------------------------

def test_caps_env_lowers_partition_cap(capsys, hexagon_path, monkeypatch):
    monkeypatch.setenv("QNET_STP_CAPS", "partitions=3")
    code, out = run(capsys, "rate", hexagon_path)
    assert code == 3
    assert json.loads(out)["error"]["code"] == "ExactModeLimit"


def test_caps_env_malformed(capsys, hexagon_path, monkeypatch):
    monkeypatch.setenv("QNET_STP_CAPS", "partitions")
    code, _ = run(capsys, "rate", hexagon_path)
    assert code == 2
    monkeypatch.setenv("QNET_STP_CAPS", "nonsense=3")
    code, _ = run(capsys, "rate", hexagon_path)
    assert code == 2


def test_read_caps_defaults_and_overrides():
    caps = read_caps("")
    assert caps["partitions"] == 12 and caps["audit"] == 20
    caps = read_caps("trees=500, backtrack=7")
    assert caps["trees"] == 500 and caps["backtrack"] == 7
    with pytest.raises(SchemaError):
        read_caps("trees=abc")
    with pytest.raises(SchemaError):
        read_caps("trees=0")


def test_parse_candidates():
    assert parse_candidates("1-4,2-6") == [("1", "4", 1), ("2", "6", 1)]
    assert parse_candidates("a-b:3/2") == [("a", "b", Fraction(3, 2))]
    with pytest.raises(SchemaError):
        parse_candidates("14")
    with pytest.raises(SchemaError):
        parse_candidates("1-2-3")
