import io
import json
import subprocess
import sys

import numpy as np
import pytest

from rankgeom.cli import main
from rankgeom.field import GF
from rankgeom.maps import StandardMapSpec, TabulatedMap, identity_spec, tabulate


def run(argv, capsys, monkeypatch, stdin=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_rank_example(capsys, monkeypatch):
    code, out, _ = run(["rank", "--field", "2,1", "--matrix", "[[1,1],[1,0]]"], capsys, monkeypatch)
    assert code == 0 and json.loads(out) == {"rank": 2}


def test_distance_and_chain(capsys, monkeypatch):
    code, out, _ = run(["distance", "--a", "[[1,0],[0,1]]", "--b", "[[1,1],[0,1]]"], capsys, monkeypatch)
    assert json.loads(out) == {"distance": 1, "adjacent": True}
    code, out, _ = run(["chain", "--a", "[[0,0],[0,0]]", "--b", "[[1,0],[0,1]]"], capsys, monkeypatch)
    doc = json.loads(out)
    assert doc["length"] == 3 and doc["chain"][1]["entries"] == [[1, 0], [0, 0]]


def test_classify_identity_table(tmp_path, capsys, monkeypatch):
    path = tmp_path / "identity_table.json"
    path.write_text(json.dumps(tabulate(identity_spec(GF(2), 2, 2)).to_json()))
    code, out, _ = run(["classify", "--map", str(path)], capsys, monkeypatch)
    assert code == 0 and json.loads(out)["verdict"] == "standard"


def test_lemma_example(capsys, monkeypatch):
    code, out, _ = run(["lemmas", "--id", "3.5", "--field", "3,1"], capsys, monkeypatch)
    doc = json.loads(out)
    assert code == 0 and doc["violations"] == 0 and doc["reports"][0]["instances"] == 16


def test_lemmas_all(capsys, monkeypatch):
    code, out, _ = run(["lemmas", "--all", "--field", "2,1"], capsys, monkeypatch)
    doc = json.loads(out)
    assert code == 0 and doc["violations"] == 0 and len(doc["reports"]) == 10


def test_lemma_budget_exit_code(capsys, monkeypatch):
    code, out, _ = run(["lemmas", "--id", "3.2", "--max-instances", "10"], capsys, monkeypatch)
    assert code == 3 and json.loads(out)["complete"] is False


@pytest.mark.parametrize("seed", range(100))
def test_gen_tabulate_classify_round_trip(seed, capsys, monkeypatch):
    fields = ["2,1", "3,1", "2,2"]
    shapes = [("2,2", "2,2"), ("2,2", "3,3"), ("2,2", "2,3"), ("2,3", "3,3")]
    field = fields[seed % 3]
    dom, cod = shapes[(seed // 3) % 4]
    if field != "2,1" and dom == "2,3":
        dom = "2,2"
    _, spec_text, _ = run(["gen", "standard", "--field", field, "--domain", dom, "--codomain", cod, "--seed", str(seed)], capsys, monkeypatch)
    code, table_text, _ = run(["tabulate", "-"], capsys, monkeypatch, stdin=spec_text)
    assert code == 0
    code, result_text, _ = run(["classify", "--map", "-"], capsys, monkeypatch, stdin=table_text)
    assert code == 0
    result = json.loads(result_text)
    assert result["verdict"] == "standard"
    table = TabulatedMap.from_json(json.loads(table_text))
    assert tabulate(StandardMapSpec.from_json(result["spec"])) == table


def test_shell_pipeline():
    cmd = "rankgeom gen standard --field 2,2 --seed 4 | rankgeom tabulate - | rankgeom classify --map -"
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["verdict"] == "standard"
    mod = subprocess.run([sys.executable, "-m", "rankgeom", "rank", "--matrix", "[[1,0],[0,0]]"], capture_output=True, text=True)
    assert mod.returncode == 0 and json.loads(mod.stdout) == {"rank": 1}


def test_degenerate_classification_and_check(capsys, monkeypatch):
    _, table, _ = run(["gen", "degenerate", "--domain", "2,2", "--q-target", "2"], capsys, monkeypatch)
    code, out, _ = run(["classify", "--map", "-"], capsys, monkeypatch, stdin=table)
    assert code == 0 and json.loads(out) == {"verdict": "degenerate"}
    code, out, _ = run(["check", "--map", "-"], capsys, monkeypatch, stdin=table)
    doc = json.loads(out)
    assert code == 0 and doc["preserves_adjacency"] and not doc["preserves_both_directions"]


def test_check_reports_violation_with_exit_1(capsys, monkeypatch):
    F = GF(2)
    const = TabulatedMap(F, (2, 2), (2, 2), np.zeros((16, 2, 2), dtype=np.int64))
    code, out, _ = run(["check", "--map", "-"], capsys, monkeypatch, stdin=json.dumps(const.to_json()))
    doc = json.loads(out)
    assert code == 1 and doc["first_violation"] is not None
    code, out, err = run(["classify", "--map", "-"], capsys, monkeypatch, stdin=json.dumps(const.to_json()))
    assert code == 2 and "not an adjacency preserver" in err


@pytest.mark.parametrize(
    "argv,stdin,fragment",
    [
        (["classify", "--map", "-"], '{"field": {"p": 2, "k": 1},\n "domain": [2, 2],,}', "line 2 column"),
        (["classify", "--map", "-"], '{"domain": [2, 2]}', "missing key 'field'"),
        (["rank", "--matrix", "[[1,2]]"], None, "element codes"),
        (["rank", "--matrix", "[[1,0]", "--field", "2,1"], None, "--matrix: line 1 column"),
        (["rank", "--matrix", "[[1]]", "--field", "4,1"], None, "--field"),
        (["classify", "--map", "/nonexistent/file.json"], None, "cannot read"),
        (["enumerate", "--domain", "2,x"], None, "--domain"),
        (["tabulate", "-"], '{"field": {"p": 2, "k": 1, "modulus": [0, 1]}, "domain": [2, 2], "codomain": [2, 2], "T": {"m": 2, "n": 2, "entries": [[1, 1], [1, 1]]}, "S": {"m": 2, "n": 2, "entries": [[1, 0], [0, 1]]}, "aut": 0, "transposed": false, "R": {"m": 2, "n": 2, "entries": [[0, 0], [0, 0]]}}', "invertible"),
    ],
)
def test_malformed_input_exit_2(argv, stdin, fragment, capsys, monkeypatch):
    code, out, err = run(argv, capsys, monkeypatch, stdin=stdin)
    assert code == 2 and out == ""
    assert fragment in err


def test_usage_error_exit_2(capsys, monkeypatch):
    code, _, _ = run(["frobnicate"], capsys, monkeypatch)
    assert code == 2


def test_enumerate_budget_and_resume(tmp_path, capsys, monkeypatch):
    ck = tmp_path / "ck.json"
    code, out, _ = run(["enumerate", "--domain", "2,2", "--max-nodes", "1500", "--checkpoint", str(ck)], capsys, monkeypatch)
    assert code == 3 and json.loads(out)["finished"] is False
    code, out, _ = run(["enumerate", "--resume", str(ck)], capsys, monkeypatch)
    doc = json.loads(out)
    assert code == 0 and doc["finished"] and doc["cursor"] is None
    assert doc["summary"]["standard"] == 72 and doc["summary"]["neither"] == 0
    code, direct, _ = run(["enumerate", "--domain", "2,2"], capsys, monkeypatch)
    assert json.loads(direct)["summary"] == doc["summary"]


def test_outputs_are_byte_identical(capsys, monkeypatch):
    argv = ["gen", "standard", "--field", "3,1", "--seed", "42", "--codomain", "3,2"]
    _, a, _ = run(argv, capsys, monkeypatch)
    _, b, _ = run(argv, capsys, monkeypatch)
    assert a == b
    _, c, _ = run(["lemmas", "--id", "4.2", "--field", "2,1"], capsys, monkeypatch)
    _, d, _ = run(["lemmas", "--id", "4.2", "--field", "2,1", "--jobs", "2"], capsys, monkeypatch)
    assert c == d and "wall_time" not in c


def test_timing_flag_adds_wall_time(capsys, monkeypatch):
    _, out, _ = run(["rank", "--matrix", "[[1]]", "--timing"], capsys, monkeypatch)
    assert "wall_time" in json.loads(out)
