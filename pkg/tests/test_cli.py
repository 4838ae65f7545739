import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from kronmle.cli import main
from kronmle.io import load_schema, write_sample
from kronmle.pencil import canonical_pair

DATA = Path(__file__).parent / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(schema, *argv):
    code, out, _ = run(*argv)
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema(schema))
    return code, doc


@pytest.fixture
def canon(tmp_path):
    def make(m1, m2):
        path = tmp_path / f"canon_{m1}_{m2}.json"
        write_sample(path, canonical_pair(m1, m2))
        return str(path)

    return make


def test_fit_unique(canon, tmp_path):
    trace = tmp_path / "trace.csv"
    code, doc = run_json("fit_report", "fit", "--input", canon(5, 4), "--trace", str(trace))
    assert code == 0 and doc["status"] == "UniqueMax"
    lines = trace.read_text().splitlines()
    assert lines[0] == "iteration,g,delta"
    assert len(lines) == doc["iterations"] + 2
    assert lines[1].endswith(",")


def test_fit_diverged(canon):
    code, doc = run_json("fit_report", "fit", "--input", canon(7, 4))
    assert code == 2 and doc["status"] == "Diverged" and doc["estimate"] is None


def test_fit_max_iterations(canon):
    code, doc = run_json("fit_report", "fit", "--input", canon(5, 4), "--max-iter", "1", "--plain")
    assert code == 3 and doc["status"] == "MaxIterations"


def test_fit_csv_and_random_init(canon):
    code, out, _ = run("fit", "--input", canon(6, 4), "--format", "csv", "--init", "random", "--seed", "4")
    assert code == 0 and out.startswith("iteration,g,delta\n")


@pytest.mark.parametrize(
    "content",
    ["{not json", '{"m1": 2, "m2": 2, "n": 1, "matrices": [[[NaN, 1], [1, 1]]]}',
     '{"m1": 2, "m2": 2, "n": 1, "matrices": [[[1, 1]]]}', '[1, 2]',
     '{"m1": 2, "m2": 2, "n": 1}'],
)
def test_bad_sample_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    code, out, err = run("fit", "--input", str(path))
    assert code == 1 and out == ""
    jsonschema.validate(json.loads(err), load_schema("error"))


def test_missing_file_and_bad_flags():
    assert run("fit", "--input", "/nonexistent/file.json")[0] == 1
    assert run("fit")[0] == 1
    assert run("threshold", "--m1", "0", "--m2", "3")[0] == 1
    assert run("threshold", "--m1", "x")[0] == 1
    assert run("nosuchcommand")[0] == 1
    assert run()[0] == 1


def test_threshold_json():
    code, doc = run_json("threshold_report", "threshold", "--m1", "10", "--m2", "2")
    assert code == 0
    assert (doc["n_u"], doc["n_e"], doc["n_b"]) == (6, 5, 5)
    _, doc = run_json("threshold_report", "threshold", "--m1", "3", "--m2", "3", "--mean-unknown")
    assert (doc["n_u"], doc["n_e"], doc["n_b"]) == (4, 2, 2)
    _, doc = run_json("threshold_report", "threshold", "--m1", "11", "--m2", "4")
    assert doc["n_u"] == {"lo": 3, "hi": 4}
    code, out, _ = run("threshold", "--m1", "11", "--m2", "4", "--format", "csv")
    assert out.splitlines()[1] == "11,4,3-4,3-4,3-4,BoundsOnly"


def test_tables_match_fixtures():
    assert run("threshold", "--table", "10")[1] == (DATA / "table1.csv").read_text()
    assert run("s2", "--table", "17")[1] == (DATA / "table2.csv").read_text()
    assert run("minrank", "--s2-table", "17")[1] == (DATA / "table2.csv").read_text()


def test_s2_cells():
    code, doc = run_json("s2_report", "s2", "--m1", "5", "--m2", "4")
    assert code == 0 and doc["value"] == 1 and doc["verdict"] == "UniqueMLE"
    code, doc = run_json("s2_report", "s2", "--m1", "7", "--m2", "4")
    assert code == 2 and doc["verdict"] == "NoMLE"
    code, doc = run_json("s2_report", "s2", "--m1", "9", "--m2", "4")
    assert code == 2 and doc["value"] is None
    code, doc = run_json("s2_report", "s2", "--m1", "2", "--m2", "2")
    assert code == 0 and doc["verdict"] is None
    assert doc["value"] == {"real_case": 0, "complex_case": 2}
    assert run("s2", "--m1", "2", "--m2", "2", "--format", "csv")[1].splitlines()[1] == "2,2,0|2,Conditional"


def test_minrank(tmp_path):
    code, doc = run_json("minrank_cert", "minrank", "--m1", "5", "--m2", "3", "--k", "2")
    assert code == 0 and doc["r"] == 3 and doc["stacked_rank"] == 3
    assert run("minrank", "--m1", "9", "--m2", "4", "--k", "2")[0] == 1
    path = tmp_path / "y.json"
    write_sample(path, np.random.default_rng(0).standard_normal((2, 5, 3)))
    code, doc = run_json("minrank_numeric", "minrank", "--input", str(path), "--k", "2", "--restarts", "3")
    assert code == 0 and doc["rank_upper_bound"] == 3


def test_canonical(tmp_path):
    path = tmp_path / "y.json"
    write_sample(path, np.random.default_rng(1).standard_normal((2, 7, 4)))
    code, doc = run_json("canonical", "canonical", "--input", str(path))
    assert code == 0 and doc["kind"] == "StackedIdentity"
    assert doc["residual"] <= 1e-8 and max(doc["check"].values()) <= 1e-8
    write_sample(path, np.random.default_rng(1).standard_normal((2, 3, 3)))
    code, doc = run_json("canonical", "canonical", "--input", str(path))
    assert code == 0 and doc["kind"] == "RealJordan"
    write_sample(path, np.random.default_rng(1).standard_normal((3, 5, 4)))
    assert run("canonical", "--input", str(path))[0] == 1


def test_classify2x2(tmp_path):
    path = tmp_path / "y.json"
    write_sample(path, np.stack([np.eye(2), [[0.0, -1.0], [1.0, 0.0]]]))
    code, doc = run_json("classify2x2", "classify2x2", "--input", str(path))
    assert code == 0 and doc["case"] == "Complex"
    write_sample(path, np.stack([np.eye(2), [[1.0, 1.0], [0.0, 1.0]]]))
    code, doc = run_json("classify2x2", "classify2x2", "--input", str(path))
    assert code == 2 and doc["case"] == "RealDefective"


def test_montecarlo():
    code, doc = run_json("simulation_report", "montecarlo", "eig2x2", "--trials", "2000", "--seed", "42")
    assert code == 0 and doc["trials"] == 2000 and doc["seed"] == 42
    code, doc = run_json(
        "simulation_report", "montecarlo", "threshold", "--m1", "7", "--m2", "4", "--n", "2", "--trials", "5"
    )
    assert doc["counts"] == {"Diverged": 5}
    assert run("montecarlo", "eig2x2", "--trials", "0")[0] == 1
    assert run("montecarlo", "threshold", "--m1", "7")[0] == 1


def test_sample_roundtrip(tmp_path):
    code, doc = run_json("sample", "sample", "--m1", "3", "--m2", "2", "--n", "4", "--seed", "9")
    assert code == 0 and np.array(doc["matrices"]).shape == (4, 3, 2)
    out = tmp_path / "c.json"
    assert run("sample", "--m1", "5", "--m2", "4", "--canonical", "--output", str(out))[0] == 0
    assert run("fit", "--input", str(out))[0] == 0


def test_byte_identical_reruns(canon):
    for argv in (
        ["fit", "--input", canon(5, 4)],
        ["montecarlo", "eig2x2", "--trials", "500", "--seed", "3"],
        ["sample", "--m1", "3", "--m2", "3", "--n", "2", "--seed", "1"],
        ["threshold", "--table", "10"],
    ):
        assert run(*argv)[1] == run(*argv)[1]


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("KRONMLE_SEED", "77")
    _, a, _ = run("sample", "--m1", "2", "--m2", "2", "--n", "1")
    _, b, _ = run("sample", "--m1", "2", "--m2", "2", "--n", "1", "--seed", "77")
    assert a == b
    _, c, _ = run("montecarlo", "eig2x2", "--trials", "10")
    assert json.loads(c)["seed"] == 77


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "kronmle.cli", "threshold", "--m1", "5", "--m2", "4"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n_u"] == 2
