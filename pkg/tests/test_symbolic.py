import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qconcolic import benchgen
from qconcolic.ir import GateOp, Param, Program
from qconcolic.simulator import StateVector, TestCase, apply_gate, execute_concrete
from qconcolic.symbolic import (
    amplitude_exprs_at,
    integrate_operations,
    record_op,
    symbolize,
)

from .conftest import op_lists, unit_states

S2 = 1 / np.sqrt(2)


def test_symbolize_teleport(teleport):
    env = symbolize(teleport)
    assert [s.render() for s in env.classical.values()] == ["alice_0"]
    assert env.quantum.name == "sqc" and env.quantum.n == 2
    assert env.quantum.operation_list == ()


def test_symbolize_quantum_only_and_two_params():
    p = Program("p", (Param("q", "qreg", 1),), ())
    assert symbolize(p).classical == {}
    p2 = Program("p", (Param("a", "int"), Param("b", "real"), Param("q", "qreg", 1)), ())
    syms = [s.render() for s in symbolize(p2).classical.values()]
    assert syms == ["a_0", "b_0"]


def test_record_op_order(teleport):
    obj = symbolize(teleport).quantum
    for g in [GateOp("x", (1,)), GateOp("z", (1,)), GateOp("h", (1,))]:
        obj = record_op(obj, g)
    assert obj.render_ops() == ["x(1)", "z(1)", "h(1)"]
    for k in range(17):
        obj = record_op(obj, GateOp("t", (k % 2,)))
    assert len(obj.operation_list) == 20


def test_integrate_examples():
    assert np.array_equal(integrate_operations([], 2).matrix, np.eye(4))
    assert np.array_equal(integrate_operations([GateOp("x", (0,))], 1).matrix, [[0, 1], [1, 0]])
    u = integrate_operations([GateOp("h", (0,)), GateOp("cx", (0, 1))], 2).matrix
    assert np.allclose(u[:, 0], [S2, 0, 0, S2])


def test_amplitude_exprs_examples():
    e = amplitude_exprs_at([], 1)
    assert np.array_equal(e.real, np.eye(2, 4))
    assert np.array_equal(e.imag, np.eye(2, 4, 2))
    e = amplitude_exprs_at([GateOp("x", (0,))], 1)
    # variables ordered a_0, a_1, b_0, b_1
    assert np.array_equal(e.real, [[0, 1, 0, 0], [1, 0, 0, 0]])
    assert np.array_equal(e.imag, [[0, 0, 0, 1], [0, 0, 1, 0]])
    e = amplitude_exprs_at([GateOp("h", (0,))], 1)
    assert np.allclose(e.real[0], [S2, S2, 0, 0])
    assert np.allclose(e.real[1], [S2, -S2, 0, 0])


def _sequential(amps, ops, n):
    s = StateVector(n, amps)
    for g in ops:
        s = apply_gate(s, g)
    return s.amps


@settings(max_examples=300, deadline=None)
@given(op_lists(), st.data())
def test_integrated_matches_sequential(nops, data):
    n, ops = nops
    amps = data.draw(unit_states(n))
    seq = _sequential(amps, ops, n)
    u = integrate_operations(ops, n)
    assert u.unitarity_error() < 1e-10
    assert np.max(np.abs(u.matrix @ amps - seq)) < 1e-9
    assert np.max(np.abs(amplitude_exprs_at(ops, n).evaluate(amps) - seq)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.sampled_from(benchgen.STRUCTURES), st.integers(0, 10**6))
def test_prefix_consistency(n, structure, seed):
    p = benchgen.generate_benchmark(benchgen.BenchSpec(n, "S", structure, seed))
    rng = np.random.default_rng(seed)
    tc = benchgen.random_classical(p, rng)
    amps = benchgen.random_state(n, rng)
    tr = execute_concrete(p, TestCase(tc, amps), rng)
    for step, k in zip(tr.steps, tr.ops_prefix):
        if step.state is None:
            continue
        predicted = amplitude_exprs_at(tr.ops[:k], n).evaluate(amps)
        assert np.max(np.abs(predicted - step.state.amps)) < 1e-9
        if step.outcome is not None:
            break  # collapse: later states no longer follow from the initial amplitudes
