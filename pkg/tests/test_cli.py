import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from amekit import cli, circuits, transpile
from amekit.biunimodular import UnimodularVector, fixture


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# argument handling

def test_parse_gammas():
    assert cli.parse_gammas("0:1:0.01").size == 101
    assert np.allclose(cli.parse_gammas("0,0.5,1"), [0, 0.5, 1])
    with pytest.raises(cli.UsageError):
        cli.parse_gammas("0:1")
    with pytest.raises(cli.UsageError):
        cli.parse_gammas("a,b")


def test_run_config_validation():
    with pytest.raises(cli.UsageError):
        cli.RunConfig("verify", seed=-1)
    with pytest.raises(cli.UsageError):
        cli.RunConfig("verify", tol=0)


@pytest.mark.parametrize("argv", [
    [],
    ["nosuch"],
    ["build", "nosuch"],
    ["verify", "ghz", "4"],
    ["verify", "missing-file.json"],
    ["invariant", "nope"],
    ["sweep", "bad46"],
    ["sweep", "ghz46x3"],
    ["sweep", "ame42"],
    ["sweep", "ame46", "--gammas", "0:2:0.5"],
    ["teleport", "1"],
    ["search", "2,x"],
    ["transpile", "nosuch"],
    ["fixture", "nope"],
    ["verify", "zero", "4", "3", "--seed", "-2"],
    ["build", "ame44_qubit", "--format", "csv"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amekit", "teleport", "36"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "0.342857142857\n"


# commands

def test_build_summary(capsys):
    code, out, _ = run(capsys, "build", "ame46_mixed")
    data = json.loads(out)
    assert code == 0 and data["radices"] == [2, 3] * 4 and data["dim"] == 1296
    assert abs(data["norm"] - 1) < 1e-12 and "circuit" in data


def test_build_writes_circuit_and_amplitudes(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, out, _ = run(capsys, "build", "ame44_qubit", "--out", str(path))
    assert code == 0 and "circuit" not in json.loads(out)
    c = circuits.Circuit.from_json(path.read_text())
    assert c.radices == (2,) * 8
    code, out, _ = run(capsys, "verify", str(path) + ".amps")
    assert code == 0 and json.loads(out)["state"].endswith(".amps")
    code, out, _ = run(capsys, "verify", str(path), "--expect-ame")
    assert code == 0 and json.loads(out)["ame"] is True


def test_build_text_dump(capsys):
    code, out, _ = run(capsys, "build", "ame44_f4", "--format", "text")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "# radices 4,4,4,4" and len(lines) == 257


def test_verify_named_ame(capsys):
    code, out, _ = run(capsys, "verify", "ame48_qubit", "--expect-ame")
    data = json.loads(out)
    assert code == 0 and data["ame"] and data["d"] == 8
    assert all(abs(s - 2) < 1e-9 for s in data["entropies"].values())


def test_verify_expect_ame_failure_exit_3(capsys):
    code, out, _ = run(capsys, "verify", "zero", "4", "3", "--expect-ame")
    assert code == 3 and json.loads(out)["uniformity"] == 0


def test_verify_ghz(capsys):
    code, out, _ = run(capsys, "verify", "ghz", "4", "6")
    assert code == 0 and json.loads(out)["k_uniform"] == {"1": True, "2": False}


def test_verify_state_json(capsys, tmp_path):
    v = circuits.ghz(2, 3)
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"radices": list(v.radices), "amplitudes": [[z.real, z.imag] for z in v.amplitudes]}))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and json.loads(out)["ame"] is True


def test_invariant_single(capsys):
    code, out, _ = run(capsys, "invariant", "lambda_22", "2")
    assert code == 0 and out == "64.000000\n"
    code, out, _ = run(capsys, "invariant", "identity3", "4", "--format", "json")
    assert json.loads(out)["real"] == 81


def test_invariant_table_csv(capsys, monkeypatch):
    monkeypatch.setattr(cli, "INVARIANT_TABLE", ("identity4", "lambda_22", "gf4"))
    code, out, _ = run(capsys, "invariant", "table", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["gate", "d", "k", "real", "imag"]
    assert [(r[0], float(r[3])) for r in rows[1:]] == [("identity4", 256), ("lambda_22", 64), ("gf4", 256)]


def test_sweep_row_count(capsys):
    code, out, _ = run(capsys, "sweep", "--gammas", "0:1:0.01", "ame46", "ghz46", "haar46x10")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "label,gamma,negativity_sum,fidelity,teleport_fidelity"
    assert len(rows) - 1 == 303
    assert rows[1] == "ame46,0,52.5,1,1"


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--gammas", "0,1", "haar44x2", "--format", "json", "--seed", "5")
    data = json.loads(out)
    assert code == 0 and len(data) == 2 and data[1]["negativity_sum"] == 0 and data[0]["negativity_std"] > 0


def test_teleport(capsys):
    code, out, _ = run(capsys, "teleport", "36")
    assert code == 0 and out == "0.342857142857\n"
    code, out, _ = run(capsys, "teleport", "16", "--format", "json")
    data = json.loads(out)
    assert abs(data["threshold"] - 16 / 45) < 1e-10 and data["fidelity_at_zero"] == 1.0


def test_search_random(capsys):
    code, out, _ = run(capsys, "search", "2,2", "--seed", "0")
    data = json.loads(out)
    assert code == 0 and data["found"] and data["biunimodular_residual"] < 1e-9
    v = UnimodularVector.from_dict(data["vector"])
    assert v.radices == (2, 2)
    code, out, _ = run(capsys, "search", "2", "--max-trials", "5000")
    assert code == 0 and json.loads(out)["found"] is False


def test_search_iterative(capsys):
    code, out, _ = run(capsys, "search", "2,3", "--method", "iterative", "--convergence-only")
    data = json.loads(out)
    assert code == 0 and data["found"] and data["biunimodular_residual"] < 1e-8


def test_transpile_text(capsys, tmp_path):
    code, out, _ = run(capsys, "transpile", "ame46_mixed")
    assert code == 0 and out.startswith("qreg q[12];\n")
    assert transpile.export_text(transpile.parse_text(out)) == out
    path = tmp_path / "bell.json"
    path.write_text(circuits.bell_prep_circuit(4).to_json())
    code, out, _ = run(capsys, "transpile", str(path), "--fresh-inputs")
    assert out.splitlines()[1:] == ["h q[0];", "h q[1];", "h q[2];", "h q[3];",
                                    "cx q[0],q[4];", "cx q[1],q[5];", "cx q[2],q[6];", "cx q[3],q[7];"]


def test_transpile_json(capsys):
    code, out, _ = run(capsys, "transpile", "ame44_qubit", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["radices"] == [2] * 8


def test_fixture(capsys):
    code, out, _ = run(capsys, "fixture", "lambda_23")
    assert code == 0 and np.array_equal(UnimodularVector.from_json(out).phases, fixture("lambda_23").phases)


# output handling

@pytest.mark.parametrize("argv", [
    ["sweep", "--gammas", "0:1:0.1", "ame46", "haar46x3"],
    ["search", "2,2"],
    ["transpile", "ame46_mixed"],
    ["invariant", "lambda_23"],
])
def test_repeat_runs_are_byte_identical(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second and first


def test_out_file_matches_stdout(capsys, tmp_path):
    _, expected, _ = run(capsys, "sweep", "--gammas", "0:1:0.25", "ghz46")
    path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--gammas", "0:1:0.25", "ghz46", "--out", str(path))
    assert code == 0 and out == "" and path.read_text() == expected
    assert os.listdir(tmp_path) == ["sweep.csv"]


def test_failed_write_leaves_no_partial_file(capsys, tmp_path, monkeypatch):
    path = tmp_path / "out.txt"
    path.write_text("old")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    code, _, err = run(capsys, "teleport", "36", "--out", str(path))
    assert code == 2 and "disk full" in err
    assert path.read_text() == "old" and os.listdir(tmp_path) == ["out.txt"]
