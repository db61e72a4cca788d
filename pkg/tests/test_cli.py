import json
import os
import subprocess
import sys

import pytest

from qconcolic.cli import EXIT_OK, EXIT_PARTIAL, EXIT_UNSAT, EXIT_USAGE, main

from .conftest import MI_BUG, TELEPORT


def test_test_teleport(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["test", TELEPORT, "--max-iters", "20", "--repeats", "10", "--seed", "1", "--report", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["feasible_coverage"] == 1.0
    assert rep["config"]["i_max"] == 20 and rep["config"]["seed"] == 1
    assert rep["config"]["smt_mode"] == "integrated" and rep["config"]["delta_sat"] == 0.05


def test_report_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QCONCOLIC_REPORT_DIR", str(tmp_path))
    assert main(["test", TELEPORT, "--max-iters", "0"]) == EXIT_PARTIAL
    assert (tmp_path / "bob_process.report.json").exists()


def test_mi_bug_exit_three(tmp_path, capsys):
    code = main(["test", MI_BUG, "--report", str(tmp_path / "m.json")])
    assert code == EXIT_UNSAT
    assert "unsat branch site 1 polarity True" in capsys.readouterr().out


def test_missing_file(capsys):
    assert main(["test", "no/such/file.qcp"]) == EXIT_USAGE
    assert "no such program file" in capsys.readouterr().err


def test_syntax_error_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.qcp"
    bad.write_text("program b(q: qreg(1)) { x(q, 0) }")
    assert main(["test", str(bad)]) == 1
    assert "DslSyntaxError" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["test", TELEPORT, "--frobnicate"],
        ["test", TELEPORT, "--repeats", "0"],
        ["test", TELEPORT, "--smt-mode", "fancy"],
        ["bench", "--scale", "XL"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    # argparse errors exit from inside the parser; validation errors come back as a code
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == EXIT_USAGE


def test_bench_and_compare(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["bench", "--qubits", "1", "--scale", "S", "--count", "4", "--seed", "3", "--out", str(d)]) == 0
    assert sorted(os.listdir(a)) == sorted(os.listdir(b))
    for f in os.listdir(a):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    assert main(["compare", str(a), "--baselines", "vector", "--budget", "50", "--jobs", "2"]) == 0
    out = capsys.readouterr().out
    assert "concolic cov" in out and "vector cov" in out
    comp = json.loads((a / "comparison.json").read_text())
    assert len(comp["programs"]) == 4
    assert {"concolic", "vector"} <= set(comp["aggregate"])


def test_compare_budget_zero_and_unknown_baseline(tmp_path, capsys):
    d = tmp_path / "s"
    main(["bench", "--count", "2", "--seed", "1", "--out", str(d)])
    assert main(["compare", str(d), "--baselines", "vector", "--budget", "0"]) == 0
    comp = json.loads((d / "comparison.json").read_text())
    assert all(row["vector"]["coverage"] == 0.0 for row in comp["programs"])
    assert main(["compare", str(d), "--baselines", "quito"]) == EXIT_USAGE


def test_bench_count_zero(tmp_path):
    assert main(["bench", "--count", "0", "--out", str(tmp_path / "z")]) == 0
    m = json.loads((tmp_path / "z" / "manifest.json").read_text())
    assert m["programs"] == []


def test_show_smt_is_stable(capsys):
    outs = []
    for _ in range(2):
        assert main(["show-smt", TELEPORT, "--path", "TTF", "--mode", "per-op"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert "; op 1: x(1)" in outs[0] and outs[0].rstrip().endswith("(get-model)")
    assert main(["show-smt", TELEPORT]) == 0
    assert 'sqc[h(1)][1] ∈ ["0"]' in capsys.readouterr().out
    assert main(["show-smt", TELEPORT, "--path", "TTTT"]) == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qconcolic", "show-smt", MI_BUG, "--path", "T"], capture_output=True, text=True)
    assert proc.returncode == 0 and "(check-sat)" in proc.stdout
