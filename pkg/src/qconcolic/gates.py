"""Gate catalog: the 20 supported gates and their matrices.

Matrices are written in textbook order: the first listed qubit of a
multi-qubit gate is the most significant bit of the matrix index. For a
controlled gate the control is listed first.
"""
from __future__ import annotations

from math import cos, sin, sqrt

import numpy as np

_S2 = 1 / sqrt(2)


def _controlled(u: np.ndarray) -> np.ndarray:
    k = u.shape[0]
    m = np.eye(2 * k, dtype=complex)
    m[k:, k:] = u
    return m


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _S2
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def _rx(t: float) -> np.ndarray:
    return np.array(
        [[cos(t / 2), -1j * sin(t / 2)], [-1j * sin(t / 2), cos(t / 2)]], dtype=complex
    )


def _ry(t: float) -> np.ndarray:
    return np.array([[cos(t / 2), -sin(t / 2)], [sin(t / 2), cos(t / 2)]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)


def _p(t: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * t)]], dtype=complex)


_FIXED = {
    "x": _X,
    "y": _Y,
    "z": _Z,
    "h": _H,
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "t": np.diag([1, np.exp(0.25j * np.pi)]).astype(complex),
    "tdg": np.diag([1, np.exp(-0.25j * np.pi)]).astype(complex),
    "cx": _controlled(_X),
    "cy": _controlled(_Y),
    "cz": _controlled(_Z),
    "ch": _controlled(_H),
    "swap": _SWAP,
    "ccx": _controlled(_controlled(_X)),
    "cswap": _controlled(_SWAP),
}

_PARAM = {
    "rx": _rx,
    "ry": _ry,
    "rz": _rz,
    "p": _p,
    "crz": lambda t: _controlled(_rz(t)),
}

# name -> (qubit arity, angle count)
GATE_SIGNATURES: dict[str, tuple[int, int]] = {
    "x": (1, 0), "y": (1, 0), "z": (1, 0), "h": (1, 0),
    "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0),
    "rx": (1, 1), "ry": (1, 1), "rz": (1, 1), "p": (1, 1),
    "cx": (2, 0), "cy": (2, 0), "cz": (2, 0), "ch": (2, 0),
    "crz": (2, 1), "swap": (2, 0),
    "ccx": (3, 0), "cswap": (3, 0),
}

GATE_NAMES = tuple(GATE_SIGNATURES)


def gate_matrix(name: str, angles: tuple[float, ...] = ()) -> np.ndarray:
    """Return the unitary for gate `name` (lower-case) with the given angles."""
    if name in _FIXED:
        return _FIXED[name]
    if name in _PARAM:
        return _PARAM[name](float(angles[0]))
    raise KeyError(f"unknown gate {name!r}")
