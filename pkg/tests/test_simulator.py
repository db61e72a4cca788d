import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qconcolic.gates import GATE_NAMES, GATE_SIGNATURES, gate_matrix
from qconcolic.ir import GateOp
from qconcolic.parser import parse_program
from qconcolic.simulator import (
    CapacityError,
    RuntimeTypeError,
    StateVector,
    TestCase,
    apply_gate,
    execute_concrete,
    init_state,
    initial_case,
    measure_sample,
    probabilities,
)

from .conftest import gate_ops, unit_states

S2 = 1 / np.sqrt(2)
BELL = StateVector(2, [S2, 0, 0, S2])


def test_twenty_gates():
    assert len(GATE_NAMES) == 20


@pytest.mark.parametrize("name", GATE_NAMES)
@pytest.mark.parametrize("theta", [0.0, 0.3, -2.1, np.pi])
def test_gate_unitary(name, theta):
    k, n_angles = GATE_SIGNATURES[name]
    u = gate_matrix(name, (theta,) * n_angles)
    assert u.shape == (1 << k, 1 << k)
    assert np.max(np.abs(u.conj().T @ u - np.eye(1 << k))) < 1e-12


def test_unknown_gate():
    with pytest.raises(KeyError):
        gate_matrix("u3", (0.1, 0.2, 0.3))


def test_init_state():
    assert np.array_equal(init_state(1).amps, [1, 0])
    assert np.array_equal(init_state(2).amps, [1, 0, 0, 0])
    with pytest.raises(CapacityError):
        init_state(13)


def test_x_swaps_amplitudes():
    a, b = 0.6, 0.8j
    out = apply_gate(StateVector(1, [a, b]), GateOp("x", (0,)))
    assert np.allclose(out.amps, [b, a])


def test_h_on_zero():
    out = apply_gate(init_state(1), GateOp("h", (0,)))
    assert np.allclose(out.amps, [S2, S2], atol=1e-15)


def test_bell_preparation_matches_dense_oracle():
    s = apply_gate(apply_gate(init_state(2), GateOp("h", (0,))), GateOp("cx", (0, 1)))
    # dense oracle: H on qubit 0 is I (x) H with qubit 0 as LSB; CX with control 0 flips bit 1 when bit 0 is set
    h = np.array([[1, 1], [1, -1]]) * S2
    h0 = np.kron(np.eye(2), h)
    cx = np.eye(4)[:, [0, 3, 2, 1]]
    expect = cx @ h0 @ np.array([1, 0, 0, 0])
    assert np.allclose(s.amps, expect, atol=1e-15)
    assert np.allclose(s.amps, BELL.amps)


def test_controlled_gate_control_is_first_listed():
    # control on qubit 1 (bit 1 set), target qubit 0
    s = StateVector(2, [0, 0, 1, 0])
    out = apply_gate(s, GateOp("cx", (1, 0)))
    assert np.allclose(out.amps, [0, 0, 0, 1])
    assert np.allclose(apply_gate(StateVector(2, [0, 1, 0, 0]), GateOp("cx", (1, 0))).amps, [0, 1, 0, 0])


def test_probabilities_examples():
    assert probabilities(BELL, [0, 1]) == pytest.approx({"00": 0.5, "01": 0.0, "10": 0.0, "11": 0.5})
    assert probabilities(init_state(3), [2, 0])["00"] == pytest.approx(1.0)
    plus = StateVector(2, [S2, S2, 0, 0])
    assert probabilities(plus, [1]) == pytest.approx({"0": 1.0, "1": 0.0})


def test_measure_basis_state_is_deterministic():
    rng = np.random.default_rng(0)
    for _ in range(20):
        o, s = measure_sample(StateVector(1, [0, 1]), [0], rng)
        assert o == "1"
        assert np.allclose(s.amps, [0, 1])


def test_bell_sampling_frequencies():
    rng = np.random.default_rng(12345)
    counts = {}
    for _ in range(10_000):
        o, _ = measure_sample(BELL, [0, 1], rng)
        counts[o] = counts.get(o, 0) + 1
    assert set(counts) == {"00", "11"}
    assert 0.47 <= counts["00"] / 10_000 <= 0.53
    assert 0.47 <= counts["11"] / 10_000 <= 0.53


def test_bell_collapse_on_zero():
    rng = np.random.default_rng(1)
    while True:
        o, s = measure_sample(BELL, [0], rng)
        if o == "0":
            break
    assert np.allclose(s.amps, [1, 0, 0, 0])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), unit_states(n))), st.integers(0, 2**31))
def test_sampling_consistent_with_probabilities(ns, seed):
    n, amps = ns
    s = StateVector(n, amps)
    qubits = list(range(n))
    probs = probabilities(s, qubits)
    rng = np.random.default_rng(seed)
    shots = 10_000
    counts = dict.fromkeys(probs, 0)
    for _ in range(shots):
        o, _ = measure_sample(s, qubits, rng)
        counts[o] += 1
    keys = [k for k in probs if probs[k] > 1e-9]
    obs = np.array([counts[k] for k in keys])
    exp = np.array([probs[k] for k in keys]) * shots
    exp *= obs.sum() / exp.sum()
    if len(keys) > 1:
        assert stats.chisquare(obs, exp).pvalue > 0.001


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(unit_states(n), gate_ops(n))))
def test_norm_preservation(sg):
    amps, g = sg
    n = int(np.log2(len(amps)))
    out = apply_gate(StateVector(n, amps), g)
    assert abs(out.norm - 1) < 1e-10


def test_apply_gate_out_of_range():
    with pytest.raises(IndexError):
        apply_gate(init_state(1), GateOp("x", (1,)))


def test_teleport_first_run(teleport):
    tr = execute_concrete(teleport, initial_case(teleport), np.random.default_rng(0))
    assert tr.path == ((0, False), (1, False), (2, True))
    assert tr.result == 0
    assert [g.render() for g in tr.ops] == ["h(1)"]
    assert tr.ops_prefix == (0, 0, 1)


def test_straight_line_trace():
    p = parse_program("program s(q: qreg(1)) { h(q, 0); return 7; }")
    tr = execute_concrete(p, initial_case(p), np.random.default_rng(0))
    assert tr.steps == () and tr.result == 7


def test_state_eq_on_exact_bell():
    p = parse_program(
        "program b(q: qreg(2)) {\n"
        "  h(q, 0); cx(q, 0, 1);\n"
        '  if check_state_eq(q, {"00": 0.5, "01": 0.0, "10": 0.0, "11": 0.5}, 0.01) { return 1; }\n'
        "  return 0;\n}"
    )
    tr = execute_concrete(p, initial_case(p), np.random.default_rng(0))
    assert tr.path == ((0, True),) and tr.result == 1


def test_execute_deterministic_for_seed(teleport):
    tc = TestCase((("alice", 1),), StateVector(2, [0.5, 0.5, 0.5, 0.5]))
    runs = [execute_concrete(teleport, tc, np.random.default_rng(9)) for _ in range(2)]
    assert runs[0].key == runs[1].key
    assert runs[0].final_state == runs[1].final_state


def test_runtime_type_errors(teleport):
    with pytest.raises(RuntimeTypeError):
        execute_concrete(teleport, TestCase((("alice", 1.5),), init_state(2)), np.random.default_rng(0))
    with pytest.raises(RuntimeTypeError):
        execute_concrete(teleport, TestCase((), init_state(2)), np.random.default_rng(0))
    with pytest.raises(RuntimeTypeError):
        execute_concrete(teleport, TestCase((("alice", 1),), init_state(1)), np.random.default_rng(0))


def test_test_case_interchange_round_trip():
    tc = TestCase((("alice", 3),), StateVector(2, [0.5, -0.5j, 0.5, 0.5]))
    back = TestCase.from_dict(tc.to_dict())
    assert back.classical == tc.classical
    assert np.allclose(back.initial_state.amps, tc.initial_state.amps)
    raw = TestCase.from_dict({"classical": {}, "amplitudes": [[2, 0], [0, 0]]})
    assert np.allclose(raw.initial_state.amps, [1, 0])
