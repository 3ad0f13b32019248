import json
import math
import random

import pytest

from srsteiner import UndirectedGraph, WeightedDigraph, write_instance
from srsteiner.cli import main


SPEC = {"levels": 2, "copies": 1, "variable_copies": 1, "variables": 2,
        "constants": [], "operators": ["sin", "mul", "add"]}


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(SPEC))
    return str(p)


@pytest.fixture
def csv_file(tmp_path):
    rng = random.Random(1)
    lines = ["x1,x2,y"]
    for _ in range(40):
        a, b = rng.uniform(-2, 2), rng.uniform(-2, 2)
        lines.append(f"{a},{b},{math.sin(a * b)}")
    p = tmp_path / "data.csv"
    p.write_text("\n".join(lines) + "\n")
    return str(p)


@pytest.fixture
def undirected_file(tmp_path):
    g = UndirectedGraph(4, ((0, 1, 2.0), (1, 2, 1.0), (0, 3, 5.0),
                            (2, 3, 1.0)), frozenset({0, 3}))
    p = tmp_path / "und.txt"
    write_instance(g, p)
    return str(p)


@pytest.fixture
def directed_file(tmp_path):
    g = WeightedDigraph(4, ((0, 1, 2.0), (1, 2, 1.0), (2, 3, 1.0),
                            (0, 3, 5.0)), 0, frozenset({0, 3}))
    p = tmp_path / "dir.txt"
    write_instance(g, p)
    return str(p)


def test_build_writes_files(spec_file, tmp_path, capsys):
    dot = tmp_path / "g.dot"
    doc = tmp_path / "g.json"
    assert main(["build", spec_file, "--dot", str(dot), "--json", str(doc)]) == 0
    assert dot.read_text().startswith("digraph")
    parsed = json.loads(doc.read_text())
    assert parsed["schema_version"] == 1
    # reruns are byte-identical
    first = (dot.read_bytes(), doc.read_bytes())
    assert main(["build", spec_file, "--dot", str(dot), "--json", str(doc)]) == 0
    assert (dot.read_bytes(), doc.read_bytes()) == first


def test_build_stdout_json(spec_file, capsys):
    assert main(["build", spec_file]) == 0
    parsed = json.loads(capsys.readouterr().out)
    assert parsed["schema_version"] == 1


def test_build_missing_file_exits_2(tmp_path):
    assert main(["build", str(tmp_path / "none.json")]) == 2


def test_build_bad_json_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["build", str(p)]) == 2


def test_solve_found(spec_file, csv_file, tmp_path, capsys):
    report = tmp_path / "r.json"
    code = main(["solve", spec_file, csv_file, "--eps", "1e-6",
                 "--report", str(report)])
    out = capsys.readouterr().out
    assert code == 0
    assert "sin(x1*x2)" in out
    doc = json.loads(report.read_text())
    assert doc["status"] == "found"
    assert doc["expression"] == "sin(x1*x2)"


def test_solve_target_column(spec_file, tmp_path, capsys):
    rng = random.Random(2)
    lines = ["x1,y,x2"]
    for _ in range(25):
        a, b = rng.uniform(-2, 2), rng.uniform(-2, 2)
        lines.append(f"{a},{a * b},{b}")
    p = tmp_path / "data.csv"
    p.write_text("\n".join(lines) + "\n")
    assert main(["solve", spec_file, str(p), "--target", "y"]) == 0
    assert "x1*x2" in capsys.readouterr().out


def test_solve_not_found_exits_1(spec_file, tmp_path, capsys):
    rng = random.Random(3)
    lines = ["x1,x2,y"]
    for _ in range(20):
        lines.append(f"{rng.uniform(-2, 2)},{rng.uniform(-2, 2)},"
                     f"{rng.uniform(40, 50)}")
    p = tmp_path / "noisy.csv"
    p.write_text("\n".join(lines) + "\n")
    assert main(["solve", spec_file, str(p), "--eps", "1e-6"]) == 1


def test_decide_yes_no(directed_file, capsys):
    assert main(["decide", directed_file, "--eps", "4"]) == 0
    assert "yes" in capsys.readouterr().out
    assert main(["decide", directed_file, "--eps", "3.5"]) == 1
    assert "no" in capsys.readouterr().out


def test_decide_on_undirected_exits_2(undirected_file):
    assert main(["decide", undirected_file, "--eps", "1"]) == 2


def test_reduce_round_trip(undirected_file, tmp_path, capsys):
    out = tmp_path / "dir.txt"
    assert main(["reduce", undirected_file, "--root", "0",
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert "type directed" in text
    capsys.readouterr()
    assert main(["reduce", undirected_file, "--root", "0"]) == 0
    assert capsys.readouterr().out == text   # stdout output is identical
    # reducing an already-directed instance is an input error
    assert main(["reduce", str(out), "--root", "0"]) == 2
    # root must be a terminal
    assert main(["reduce", undirected_file, "--root", "1"]) == 2


def test_bisect(directed_file, capsys):
    assert main(["bisect", directed_file]) == 0
    assert "minimum 4" in capsys.readouterr().out
    assert main(["bisect", directed_file, "--hi", "2"]) == 1


def test_count(spec_file, capsys):
    assert main(["count", spec_file]) == 0
    raw = int(capsys.readouterr().out)
    assert main(["count", spec_file, "--modulo"]) == 0
    modulo = int(capsys.readouterr().out)
    assert raw >= 1 and modulo >= 1


def test_verify_suite(capsys):
    assert main(["verify", "bijection"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] is True
    assert doc["suite"] == "bijection"


def test_verify_unknown_suite_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["verify", "nonsense"])
    assert err.value.code == 2


def test_no_command_exits_2():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
