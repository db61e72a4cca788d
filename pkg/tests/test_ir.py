import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconcolic import benchgen
from qconcolic.ir import (
    Classical,
    GateOp,
    If,
    Measure,
    Num,
    Param,
    Program,
    Return,
    StateEq,
    ValidationError,
    all_outcomes,
    check_program,
    list_branches,
    measured_bits,
    number_sites,
    outcome_index,
    validate_program,
)
from qconcolic.parser import DslSyntaxError, parse_program, unparse

from .conftest import TELEPORT


def _prog(body, params=(Param("q", "qreg", 2),), **kw):
    return Program("p", tuple(params), number_sites(tuple(body)), **kw)


def test_teleport_has_three_sites(teleport):
    assert teleport.n == 2
    sites = list_branches(teleport)
    assert [s.id for s in sites] == [0, 1, 2]
    assert validate_program(teleport) == []


def test_return_only_program_has_no_sites():
    p = parse_program("program r(q: qreg(1)) { return 4; }")
    assert list_branches(p) == []


def test_gate_index_out_of_range_rejected():
    with pytest.raises(ValidationError, match="out of range"):
        parse_program("program r(q: qreg(2)) { x(q, 5); return 0; }")


def test_dist_not_summing_to_one():
    p = _prog([If(StateEq("q", (("00", 0.5), ("01", 0.2), ("10", 0.1), ("11", 0.1)), 0.01), (Return(Num(1)),))])
    report = validate_program(p)
    assert len(report) == 1
    assert "sums to" in report[0].message


def test_measure_covering_all_outcomes_rejected():
    p = _prog([If(Measure("q", (0,), ("0", "1")), (Return(Num(1)),))])
    assert any("negation infeasible" in v.message for v in validate_program(p))


def test_nested_sites_preorder():
    inner = If(Measure("q", (1,), ("0",)), (Return(Num(1)),))
    outer = If(Measure("q", (0,), ("1",)), (inner,), (Return(Num(0)),))
    p = _prog([outer])
    ids = [s.id for s in list_branches(p)]
    assert ids == [0, 1]
    assert p.site_conds()[0] == outer.cond


def test_straight_line_program_has_no_sites():
    p = _prog([GateOp("h", (0,)), Return(Num(0))])
    assert list_branches(p) == []


def test_check_program_raises_with_all_violations():
    p = _prog([GateOp("cx", (0, 0)), If(Classical(Num(1), "==", Num(1)), (GateOp("x", (7,)),))])
    with pytest.raises(ValidationError) as e:
        check_program(p)
    assert len(e.value.violations) == 2


def test_unbound_classical_name():
    with pytest.raises(ValidationError, match="unbound"):
        parse_program("program r(q: qreg(1)) { if k == 1 { return 1; } return 0; }")


@pytest.mark.parametrize(
    "src, line, col",
    [
        ("program r(q: qreg(1)) {\n  x(q, 0)\n}", 3, 1),
        ("program r(q: qreg(1)) {\n  foo(q, 0);\n}", 2, 3),
    ],
)
def test_syntax_errors_carry_position(src, line, col):
    with pytest.raises(DslSyntaxError) as e:
        parse_program(src)
    assert (e.value.line, e.value.col) == (line, col)


def test_outcome_bit_order():
    # qubit 0 is the least significant bit of the basis index
    assert outcome_index("10") == 1
    assert outcome_index("01") == 2
    assert measured_bits(0b110, (1, 2)) == "11"
    assert measured_bits(0b010, (0, 1)) == "01"
    assert all_outcomes(2) == ["00", "01", "10", "11"]


def test_site_ids_stable_for_identical_text():
    text = open(TELEPORT).read()
    a, b = parse_program(text), parse_program(text)
    assert [s.id for s in a.branch_sites] == [s.id for s in b.branch_sites]
    assert a == b


def test_teleport_round_trip(teleport):
    assert parse_program(unparse(teleport)) == teleport


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 3),
    scale=st.sampled_from(["S", "M"]),
    structure=st.sampled_from(benchgen.STRUCTURES),
    seed=st.integers(0, 10_000),
)
def test_round_trip_generated(n, scale, structure, seed):
    p = benchgen.generate_benchmark(benchgen.BenchSpec(n, scale, structure, seed))
    once = parse_program(unparse(p))
    assert once == p
    assert parse_program(unparse(once)) == once


@settings(max_examples=200)
@given(
    v=st.floats(1e-9, 1.0, allow_nan=False),
    d=st.floats(1e-12, 0.5, allow_nan=False),
)
def test_constants_survive_round_trip(v, d):
    rest = 1.0 - v
    src = (
        "program c(q: qreg(1)) {\n"
        f'  if check_state_eq(q, {{"0": {v!r}, "1": {rest!r}}}, {d!r}) {{ return 1; }}\n'
        f'  if check_state_gt(q, [("1", {v!r})], {d!r}) {{ return 2; }}\n'
        "  return 0;\n}"
    )
    p = parse_program(src)
    q = parse_program(unparse(p))
    eq, gt = q.site_conds()[0], q.site_conds()[1]
    assert eq.dist == ((("0", v), ("1", rest)))
    assert eq.delta == d
    assert gt.pairs == (("1", v),)
