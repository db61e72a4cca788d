import glob
import os
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconcolic.constraints import PathConstraint, static_path_condition
from qconcolic.parser import load_program
from qconcolic.smt import (
    Assignment,
    DegenerateModel,
    ParseError,
    add_exclusion,
    emit_smt,
    extract_test_case,
    fmt_real,
    parse_model,
    raw_amplitudes,
    violates_exclusions,
)
from qconcolic.symbolic import symbolize

from .conftest import MI_BUG, TELEPORT

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
SECTIONS = [
    "; 1. variable declarations",
    "; 2. normalization of the initial state",
    "; 3. quantum operations",
    "; 4. path conditions",
    "; 5. commands",
]


def _doc(path, decisions, mode):
    p = load_program(path)
    pc = static_path_condition(p, symbolize(p), decisions)
    return p, emit_smt(pc, p.n, mode, program=p)


def _golden_cases():
    for f in sorted(glob.glob(os.path.join(GOLDEN, "*.smt2"))):
        name, mode, _ = os.path.basename(f).split(".")
        prog, path = name.rsplit("_", 1)
        yield f, {"teleport": TELEPORT, "mi_bug": MI_BUG}[prog], [c == "T" for c in path], mode


@pytest.mark.parametrize("golden, program, decisions, mode", list(_golden_cases()), ids=lambda v: os.path.basename(v) if isinstance(v, str) and v.endswith(".smt2") else None)
def test_golden(golden, program, decisions, mode):
    _, doc = _doc(program, decisions, mode)
    with open(golden) as fh:
        assert doc.text() == fh.read()


def test_golden_files_present():
    assert len(glob.glob(os.path.join(GOLDEN, "*.smt2"))) >= 6


@pytest.mark.parametrize("mode", ["integrated", "per-op"])
def test_section_structure(mode):
    _, doc = _doc(TELEPORT, [True, True, False], mode)
    text = doc.text()
    pos = [text.index(s) for s in SECTIONS]
    assert pos == sorted(pos)
    assert text.rstrip().endswith("(check-sat)\n(get-model)")
    norm = re.search(r"; 2\. normalization.*\n(.*)\n", text).group(1)
    for x in range(4):
        for part in "ri":
            assert f"(^ psi_0_{x}.{part} 2.0)" in norm


def test_integrated_declares_two_times_dim_reals():
    for n, prog, path in [(2, TELEPORT, [True, True, False]), (2, MI_BUG, [True, True])]:
        _, doc = _doc(prog, path, "integrated")
        reals = re.findall(r"\(declare-fun (\S+) \(\) Real\)", doc.text())
        assert len(reals) == 2 * 2**n
        assert all(re.fullmatch(r"psi_0_\d+\.[ri]", r) for r in reals)


def test_per_op_teleport_x_block():
    _, doc = _doc(TELEPORT, [True, True, False], "per-op")
    text = doc.text()
    for k in range(4):
        assert f"(declare-fun psi_{k}_3.i () Real)" in text
    assert "(declare-fun psi_4_0.r" not in text
    x_block = text.split("; op 1: x(1)\n")[1].splitlines()[0]
    # X on qubit 1 swaps index pairs (0, 2) and (1, 3)
    assert "(= psi_1_0.r psi_0_2.r)" in x_block
    assert "(= psi_1_3.i psi_0_1.i)" in x_block


def test_measure_zeroes_two_pairs():
    _, doc = _doc(TELEPORT, [True, True, True], "integrated")
    last = doc.conditions[-1]
    assert last.count("0.0)") == 4
    assert "psi_3_2.r" in last and "psi_3_3.i" in last


def test_emission_deterministic():
    a = _doc(TELEPORT, [False, True, True], "per-op")[1].text()
    b = _doc(TELEPORT, [False, True, True], "per-op")[1].text()
    assert a == b


def test_logic_selection():
    assert _doc(TELEPORT, [True], "integrated")[1].logic == "QF_NIRA"
    assert _doc(MI_BUG, [True], "integrated")[1].logic == "QF_NRA"
    p = load_program(TELEPORT)
    pc = static_path_condition(p, symbolize(p), [True])
    assert "(set-logic" not in emit_smt(pc, 2, program=p, set_logic=False).text()


@pytest.mark.parametrize("v, text", [(0.0, "0.0"), (-0.5, "(- 0.5)"), (1.0, "1.0"), (0.1, "0.1"), (1 / 3, "0.3333333333333333")])
def test_fmt_real(v, text):
    assert fmt_real(v) == text


@settings(max_examples=500)
@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6))
def test_fmt_real_round_trips(v):
    s = fmt_real(v)
    back = -float(s[3:-1]) if s.startswith("(- ") else float(s)
    assert back == v
    digits = re.sub(r"[^0-9]", "", s).lstrip("0")
    assert len(digits.rstrip("0")) <= 17


# ---------------------------------------------------------------- models


def test_parse_interval_model():
    out = "delta-sat with delta = 0.05\npsi_0_0.r : [0.5, 0.6]\nalice_0 : [1, 1]\n"
    a = parse_model(out)
    assert a.as_dict() == {"psi_0_0.r": (0.5, 0.6), "alice_0": (1.0, 1.0)}


def test_parse_define_fun_model():
    out = "sat\n(model\n  (define-fun x () Real (/ 1 4))\n  (define-fun y () Real (- 0.5))\n  (define-fun k () Int 3)\n)"
    a = parse_model(out, declared=["x", "y", "k", "z"])
    assert a.as_dict() == {"x": (0.25, 0.25), "y": (-0.5, -0.5), "k": (3.0, 3.0), "z": (0.0, 0.0)}
    assert parse_model("sat\n((define-fun x () Real 0.125?))").midpoint("x") == 0.125


@pytest.mark.parametrize("garbage", ["delta-sat\nthis is not a model", "x : [1, 0]", "x : [nan, 1]", "sat\n(define-fun x (y) Real"])
def test_parse_garbage(garbage):
    with pytest.raises(ParseError):
        parse_model(garbage)


def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment.from_dict({"x": (1.0, 0.0)})
    a = Assignment.from_dict({"x": (0.0, 1.0), "y": (2.0, 2.0)})
    assert a.intersects(Assignment.from_dict({"x": (1.0, 3.0)}))
    assert not a.intersects(Assignment.from_dict({"x": (1.5, 3.0)}))


def test_extract_loosely_normalized_model(teleport):
    vals = {
        "psi_0_0.r": 0.4474683797931982,
        "psi_0_0.i": -0.4996736486934912,
        "psi_0_2.r": 0.5398380316790629,
        "psi_0_2.i": -0.507317399153358,
    }
    names = [f"psi_0_{x}.{p}" for x in range(4) for p in "ri"]
    a = Assignment.points({k: vals.get(k, 0.0) for k in names} | {"alice_0": 1.0})
    raw = raw_amplitudes(a, 2)
    # a delta-sat model only meets normalization loosely
    assert np.linalg.norm(raw) ** 2 == pytest.approx(0.998698, abs=1e-6)
    tc = extract_test_case(a, teleport)
    assert tc.values == {"alice": 1}
    assert tc.initial_state.norm == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(tc.initial_state.amps, raw / np.linalg.norm(raw))


def test_extract_degenerate(teleport):
    names = [f"psi_0_{x}.{p}" for x in range(4) for p in "ri"]
    with pytest.raises(DegenerateModel):
        extract_test_case(Assignment.points(dict.fromkeys(names, 0.0)), teleport)


def test_extract_bell_unchanged(mi_bug):
    s = 1 / np.sqrt(2)
    names = [f"psi_0_{x}.{p}" for x in range(4) for p in "ri"]
    vals = dict.fromkeys(names, 0.0) | {"psi_0_0.r": s, "psi_0_3.r": s}
    tc = extract_test_case(Assignment.points(vals), mi_bug)
    assert np.allclose(tc.initial_state.amps, [s, 0, 0, s], atol=1e-15)


def test_extract_interval_midpoints(teleport):
    names = [f"psi_0_{x}.{p}" for x in range(4) for p in "ri"]
    d = {k: (0.0, 0.0) for k in names} | {"psi_0_1.r": (0.9, 1.1), "alice_0": (0.6, 1.2)}
    tc = extract_test_case(Assignment.from_dict(d), teleport)
    assert tc.values == {"alice": 1}
    assert np.allclose(tc.initial_state.amps, [0, 1, 0, 0])


def test_exclusions_stack():
    _, doc = _doc(TELEPORT, [True], "integrated")
    names = doc.initial_vars
    box1 = Assignment.from_dict({k: (0.1, 0.2) for k in names} | {"alice_0": (1, 1)})
    box2 = Assignment.from_dict({k: (0.3, 0.4) for k in names})
    d1 = add_exclusion(doc, box1)
    assert len(d1.exclusions) == 1
    assert "alice_0" not in d1.exclusions[0]
    assert "(< psi_0_0.r 0.1)" in d1.exclusions[0] and "(> psi_0_0.r 0.2)" in d1.exclusions[0]
    d2 = add_exclusion(d1, box2)
    assert len(d2.exclusions) == 2
    text = d2.text()
    assert text.index("; exclusions of rejected candidates") < text.index("; 5. commands")
    assert violates_exclusions(d2, box1) and violates_exclusions(d2, box2)
    assert not violates_exclusions(d2, Assignment.from_dict({k: (0.5, 0.6) for k in names}))


def test_empty_exclusion_is_noop(caplog):
    _, doc = _doc(TELEPORT, [True], "integrated")
    assert add_exclusion(doc, Assignment.from_dict({"alice_0": (1, 1)})) is doc
    assert "empty assignment" in caplog.text


def test_empty_path_constraint_document():
    doc = emit_smt(PathConstraint(), 1)
    assert doc.conditions == () and doc.operations == ()
    assert doc.logic == "QF_NRA"
