"""Symbolic side of the quantum register.

The initial state is a vector of real unknowns ``a_x`` (real parts) and
``b_x`` (imaginary parts), one pair per basis index. Each gate is linear, so
after any operation prefix every amplitude is a linear form in those
unknowns. With ``U = A + iB`` the real part is ``A a - B b`` and the
imaginary part ``A b + B a``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .gates import gate_matrix
from .ir import GateOp, Program


@dataclass(frozen=True)
class ClassicalSymbol:
    name: str
    version: int = 0

    def render(self) -> str:
        return f"{self.name}_{self.version}"


@dataclass(frozen=True)
class SymbolicQuantumObject:
    name: str
    n: int
    operation_list: tuple[GateOp, ...] = ()

    def render_ops(self) -> list[str]:
        return [g.render() for g in self.operation_list]


@dataclass(frozen=True)
class SymbolicEnv:
    classical: dict = field(hash=False)  # param name -> ClassicalSymbol
    quantum: SymbolicQuantumObject


def symbolize(p: Program) -> SymbolicEnv:
    syms = {q.name: ClassicalSymbol(q.name) for q in p.classical_params}
    return SymbolicEnv(syms, SymbolicQuantumObject("s" + p.qreg.name, p.n))


def record_op(obj: SymbolicQuantumObject, g: GateOp) -> SymbolicQuantumObject:
    if any(not 0 <= q < obj.n for q in g.qubits):
        raise IndexError(f"{g.render()} out of range for {obj.n} qubits")
    return SymbolicQuantumObject(obj.name, obj.n, obj.operation_list + (g,))


def embed_gate(g: GateOp, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of a gate acting on its listed qubits."""
    u = gate_matrix(g.gate, g.angles)
    k = len(g.qubits)
    dim = 1 << n
    idx = np.arange(dim)
    local_in = np.zeros(dim, dtype=int)
    rest = idx.copy()
    for j, q in enumerate(g.qubits):
        local_in |= ((idx >> q) & 1) << (k - 1 - j)
        rest &= ~(1 << q)
    full = np.zeros((dim, dim), dtype=complex)
    for local_out in range(1 << k):
        out = rest.copy()
        for j, q in enumerate(g.qubits):
            out |= ((local_out >> (k - 1 - j)) & 1) << q
        full[out, idx] = u[local_out, local_in]
    return full


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    n: int
    matrix: np.ndarray

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(1 << self.n))))


@lru_cache(maxsize=4096)
def _integrate(ops: tuple[GateOp, ...], n: int) -> np.ndarray:
    if not ops:
        u = np.eye(1 << n, dtype=complex)
    else:
        u = embed_gate(ops[-1], n) @ _integrate(ops[:-1], n)
    u.setflags(write=False)
    return u


def integrate_operations(ops, n: int) -> UnitaryMatrix:
    """U_all = U_m ... U_1 for the recorded operations (later ops on the left)."""
    return UnitaryMatrix(n, _integrate(tuple(ops), n))


def initial_var_names(n: int) -> tuple[list[str], list[str]]:
    dim = 1 << n
    return [f"psi_0_{x}.r" for x in range(dim)], [f"psi_0_{x}.i" for x in range(dim)]


@dataclass(frozen=True, eq=False)
class AmplitudeExprs:
    """Real and imaginary parts of each amplitude as linear forms.

    ``real[x]`` and ``imag[x]`` are coefficient rows over the initial
    unknowns ordered ``a_0 .. a_{N-1}, b_0 .. b_{N-1}``.
    """

    n: int
    real: np.ndarray
    imag: np.ndarray

    def evaluate(self, state) -> np.ndarray:
        amps = np.asarray(getattr(state, "amps", state), dtype=complex)
        v = np.concatenate([amps.real, amps.imag])
        return self.real @ v + 1j * (self.imag @ v)

    def prob_at(self, state, x: int) -> float:
        return float(abs(self.evaluate(state)[x]) ** 2)


def amplitude_exprs_at(ops, n: int) -> AmplitudeExprs:
    u = integrate_operations(ops, n).matrix
    a, b = u.real, u.imag
    real = np.hstack([a, -b])
    imag = np.hstack([b, a])
    return AmplitudeExprs(n, real, imag)
