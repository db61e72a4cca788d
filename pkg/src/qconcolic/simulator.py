"""Dense statevector simulation and concrete execution of programs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .gates import GATE_SIGNATURES, gate_matrix
from .ir import (
    Classical,
    GateOp,
    If,
    Measure,
    Program,
    Return,
    StateEq,
    StateGt,
    StateLt,
    compare,
    eval_expr,
    outcome_index,
)

MAX_QUBITS = 12


class CapacityError(ValueError):
    pass


class RuntimeTypeError(TypeError):
    pass


class NonterminationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got shape {a.shape}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        a = np.asarray(amps, dtype=complex)
        n = int(np.log2(len(a)))
        if normalize:
            a = a / np.linalg.norm(a)
        return cls(n, a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __eq__(self, other):
        return (
            isinstance(other, StateVector)
            and self.n == other.n
            and np.array_equal(self.amps, other.amps)
        )

    def __repr__(self):
        return f"StateVector(n={self.n}, amps={np.array2string(self.amps, precision=4)})"


@dataclass(frozen=True)
class TestCase:
    classical: tuple[tuple[str, Union[int, float]], ...]
    initial_state: StateVector

    __test__ = False  # keep pytest from collecting this class

    @property
    def values(self) -> dict[str, Union[int, float]]:
        return dict(self.classical)

    def to_dict(self) -> dict:
        """Interchange form: classical values plus [re, im] amplitude pairs."""
        return {
            "classical": {k: v for k, v in self.classical},
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.initial_state.amps],
        }

    @classmethod
    def from_dict(cls, d: dict, normalize: bool = True) -> "TestCase":
        amps = np.array([complex(re, im) for re, im in d["amplitudes"]])
        norm = np.linalg.norm(amps)
        if normalize and norm > 0:
            amps = amps / norm
        n = int(np.log2(len(amps)))
        if len(amps) != 1 << n:
            raise ValueError(f"amplitude count {len(amps)} is not a power of two")
        return cls(tuple(d.get("classical", {}).items()), StateVector(n, amps))


def initial_case(p: Program) -> TestCase:
    """All classical parameters 0 and the register in |0...0>."""
    vals = tuple((q.name, 0 if q.kind == "int" else 0.0) for q in p.classical_params)
    return TestCase(vals, init_state(p.n))


def init_state(n: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    if n > max_qubits:
        raise CapacityError(f"{n} qubits exceeds the configured maximum of {max_qubits}")
    if n < 1:
        raise ValueError("need at least one qubit")
    a = np.zeros(1 << n, dtype=complex)
    a[0] = 1.0
    return StateVector(n, a)


def _check_qubits(qubits, n: int):
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")


def apply_matrix(amps: np.ndarray, u: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply a k-qubit matrix (first listed qubit most significant) to a flat vector."""
    k = len(qubits)
    psi = amps.reshape((2,) * n)
    axes = [n - 1 - q for q in qubits]
    psi = np.moveaxis(psi, axes, range(k))
    shape = psi.shape
    psi = (u @ psi.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), axes).reshape(-1)


def apply_gate(s: StateVector, g: GateOp) -> StateVector:
    _check_qubits(g.qubits, s.n)
    arity, _ = GATE_SIGNATURES[g.gate]
    if len(g.qubits) != arity or len(set(g.qubits)) != arity:
        raise IndexError(f"{g.gate} needs {arity} distinct qubits")
    return StateVector(s.n, apply_matrix(s.amps, gate_matrix(g.gate, g.angles), g.qubits, s.n))


def _outcome_keys(n: int, qubits) -> np.ndarray:
    idx = np.arange(1 << n)
    key = np.zeros_like(idx)
    for j, q in enumerate(sorted(qubits)):
        key |= ((idx >> q) & 1) << j
    return key


def _key_str(v: int, k: int) -> str:
    return "".join("1" if v >> j & 1 else "0" for j in range(k))


def probabilities(s: StateVector, qubits) -> dict[str, float]:
    """Marginal outcome distribution over `qubits` (bits in ascending qubit order)."""
    _check_qubits(qubits, s.n)
    if len(set(qubits)) != len(qubits):
        raise IndexError("measured qubits must be distinct")
    k = len(qubits)
    w = np.bincount(_outcome_keys(s.n, qubits), weights=s.probabilities(), minlength=1 << k)
    return {_key_str(v, k): float(w[v]) for v in range(1 << k)}


def measure_sample(s: StateVector, qubits, rng: np.random.Generator) -> tuple[str, StateVector]:
    """Single-shot measurement: sample an outcome and collapse onto it."""
    _check_qubits(qubits, s.n)
    k = len(qubits)
    keys = _outcome_keys(s.n, qubits)
    w = np.bincount(keys, weights=s.probabilities(), minlength=1 << k)
    cdf = np.cumsum(w)
    v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    v = min(v, (1 << k) - 1)
    while w[v] == 0:  # guard against landing on a zero-width bucket at the edge
        v -= 1
    amps = np.where(keys == v, s.amps, 0)
    amps = amps / np.linalg.norm(amps)
    return _key_str(v, k), StateVector(s.n, amps)


# ---------------------------------------------------------------- execution


@dataclass(frozen=True, eq=False)
class TraceStep:
    site: int
    polarity: bool
    outcome: Optional[str] = None
    # statevector seen by a quantum condition, before any collapse
    state: Optional[StateVector] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class Trace:
    steps: tuple[TraceStep, ...]
    ops_prefix: tuple[int, ...]
    ops: tuple[GateOp, ...]
    result: Optional[Union[int, float]]
    final_state: Optional[StateVector] = field(default=None, repr=False)

    @property
    def path(self) -> tuple[tuple[int, bool], ...]:
        return tuple((s.site, s.polarity) for s in self.steps)

    @property
    def key(self):
        return (self.path, self.result)


def eval_state_cond(cond, s: StateVector) -> bool:
    """Analytic truth value of a distribution condition on a statevector."""
    probs = s.probabilities()
    if isinstance(cond, StateEq):
        return all(abs(probs[outcome_index(o)] - d) < cond.delta for o, d in cond.dist)
    if isinstance(cond, StateGt):
        return all(probs[outcome_index(o)] > p - cond.delta for o, p in cond.pairs)
    if isinstance(cond, StateLt):
        return all(probs[outcome_index(o)] <= p + cond.delta for o, p in cond.pairs)
    raise TypeError(cond)


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


def _classical_env(p: Program, tc: TestCase) -> dict:
    env = tc.values
    for q in p.classical_params:
        if q.name not in env:
            raise RuntimeTypeError(f"no value for classical parameter {q.name!r}")
        v = env[q.name]
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            raise RuntimeTypeError(f"{q.name!r} must be numeric, got {type(v).__name__}")
        if q.kind == "int" and float(v) != int(v):
            raise RuntimeTypeError(f"{q.name!r} must be an integer, got {v!r}")
    return env


def execute_concrete(
    p: Program, tc: TestCase, rng: np.random.Generator, max_steps: int = 1_000_000
) -> Trace:
    """Run `p` once on the statevector simulator and record the branch trace."""
    if tc.initial_state.n != p.n:
        raise RuntimeTypeError(f"test case has {tc.initial_state.n} qubits, program needs {p.n}")
    env = _classical_env(p, tc)
    state = tc.initial_state
    steps: list[TraceStep] = []
    prefix: list[int] = []
    ops: list[GateOp] = []
    budget = [max_steps]

    def run(stmts):
        nonlocal state
        for st in stmts:
            budget[0] -= 1
            if budget[0] < 0:
                raise NonterminationError("statement budget exhausted")
            if isinstance(st, GateOp):
                state = apply_gate(state, st)
                ops.append(st)
            elif isinstance(st, Return):
                raise _Returned(eval_expr(st.expr, env))
            elif isinstance(st, If):
                c = st.cond
                outcome = None
                seen = None
                if isinstance(c, Classical):
                    taken = compare(eval_expr(c.lhs, env), c.op, eval_expr(c.rhs, env))
                elif isinstance(c, Measure):
                    seen = state
                    outcome, state = measure_sample(state, c.qubits, rng)
                    taken = outcome in c.outcomes
                else:
                    seen = state
                    taken = eval_state_cond(c, state)
                steps.append(TraceStep(st.site, bool(taken), outcome, seen))
                prefix.append(len(ops))
                run(st.then if taken else st.orelse)

    result = None
    try:
        run(p.body)
    except _Returned as r:
        result = r.value
    return Trace(tuple(steps), tuple(prefix), tuple(ops), result, state)
