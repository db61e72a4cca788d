import os

import numpy as np
import pytest
from hypothesis import strategies as st

from qconcolic.gates import GATE_SIGNATURES
from qconcolic.ir import GateOp
from qconcolic.parser import load_program

PROGRAMS = os.path.join(os.path.dirname(__file__), os.pardir, "src", "qconcolic", "programs")
TELEPORT = os.path.abspath(os.path.join(PROGRAMS, "teleport.qcp"))
MI_BUG = os.path.abspath(os.path.join(PROGRAMS, "mi_bug.qcp"))


@pytest.fixture
def teleport():
    return load_program(TELEPORT)


@pytest.fixture
def mi_bug():
    return load_program(MI_BUG)


@st.composite
def gate_ops(draw, n: int):
    names = [g for g, (k, _) in GATE_SIGNATURES.items() if k <= n]
    name = draw(st.sampled_from(names))
    k, n_angles = GATE_SIGNATURES[name]
    qubits = tuple(draw(st.permutations(range(n)))[:k])
    angles = tuple(draw(st.floats(-2 * np.pi, 2 * np.pi)) for _ in range(n_angles))
    return GateOp(name, qubits, angles)


@st.composite
def op_lists(draw, max_n: int = 4, max_ops: int = 20):
    n = draw(st.integers(1, max_n))
    ops = draw(st.lists(gate_ops(n), max_size=max_ops))
    return n, ops


@st.composite
def unit_states(draw, n: int):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
