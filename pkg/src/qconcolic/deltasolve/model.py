"""Load an SMT-LIB2 script and reduce it to a formula over primary variables.

Top-level linear equalities over Real variables (gate steps, zeroed
amplitudes) are solved exactly up to floating point: the solution set is
``x = x0 + N z`` with orthonormal ``N``, and every remaining constraint is
rewritten over ``y = (z, integer variables)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from ..sexpr import read_all
from . import terms as T

_IGNORED = {"set-logic", "set-option", "set-info", "check-sat", "get-model", "exit", "get-info"}
_CMP = {"<", "<=", ">", ">=", "=", "distinct"}


class UnsupportedInput(ValueError):
    pass


# raw terms and formulas are tagged tuples; define-fun bodies are shared objects


def _number(tok: str) -> Optional[float]:
    try:
        return float(Fraction(tok))
    except (ValueError, ZeroDivisionError):
        return None


@dataclass
class Script:
    names: list[str]
    sorts: dict[str, str]
    asserts: list


def load_script(text: str) -> Script:
    names: list[str] = []
    sorts: dict[str, str] = {}
    defs: dict[str, tuple] = {}
    asserts = []

    def conv(e):
        if isinstance(e, str):
            if e in sorts:
                return ("v", e)
            if e in defs:
                return defs[e]
            if e in ("true", "false"):
                return ("bool", e == "true")
            v = _number(e)
            if v is None:
                raise UnsupportedInput(f"unknown symbol {e!r}")
            return ("c", v)
        if not e:
            raise UnsupportedInput("empty application")
        head, args = e[0], [conv(a) for a in e[1:]] if e[0] != "^" else None
        if head == "^" or head == "pow":
            base = conv(e[1])
            k = _number(e[2]) if isinstance(e[2], str) else None
            if k is None or k != int(k) or k < 0:
                raise UnsupportedInput(f"exponent must be a natural number: {e[2]!r}")
            return ("^", base, int(k))
        if head == "+":
            return ("+", args)
        if head == "-":
            if len(args) == 1:
                return ("neg", args[0])
            return ("+", [args[0]] + [("neg", a) for a in args[1:]])
        if head == "*":
            return ("*", args)
        if head == "/":
            out = args[0]
            for a in args[1:]:
                out = ("/", out, a)
            return out
        if head in ("and", "or"):
            return (head, args)
        if head == "not":
            return ("not", args[0])
        if head == "=>":
            return ("or", [("not", args[0]), args[1]])
        if head in _CMP:
            if len(args) < 2:
                raise UnsupportedInput(f"{head} needs two arguments")
            op = "!=" if head == "distinct" else head
            pairs = [("cmp", op, args[i], args[i + 1]) for i in range(len(args) - 1)]
            return pairs[0] if len(pairs) == 1 else ("and", pairs)
        raise UnsupportedInput(f"unsupported operator {head!r}")

    for f in read_all(text):
        if not isinstance(f, list) or not f or not isinstance(f[0], str):
            raise UnsupportedInput(f"unexpected top-level form {f!r}")
        head = f[0]
        if head in _IGNORED:
            continue
        if head in ("declare-fun", "declare-const"):
            name = f[1]
            sort = f[3] if head == "declare-fun" else f[2]
            if head == "declare-fun" and f[2]:
                raise UnsupportedInput(f"function symbol {name} with arguments")
            if sort not in ("Real", "Int"):
                raise UnsupportedInput(f"unsupported sort {sort!r} for {name}")
            names.append(name)
            sorts[name] = sort
        elif head == "define-fun":
            if f[2]:
                raise UnsupportedInput(f"define-fun {f[1]} with arguments")
            defs[f[1]] = conv(f[4])
        elif head == "assert":
            asserts.append(conv(f[1]))
        else:
            raise UnsupportedInput(f"unsupported command {head!r}")
    return Script(names, sorts, asserts)


# ---------------------------------------------------------------- reduction


@dataclass
class Problem:
    names: list[str]
    sorts: dict[str, str]
    dim: int
    is_int: np.ndarray  # over y
    T: np.ndarray  # original = T @ y + t0
    t0: np.ndarray
    formula: Union[bool, object]

    def original(self, y) -> np.ndarray:
        return self.T @ y + self.t0


def _conjuncts(f):
    if f[0] == "and":
        out = []
        for g in f[1]:
            out += _conjuncts(g)
        return out
    return [f]


class _Linearizer:
    def __init__(self, index: dict[str, int]):
        self.index = index
        self.memo: dict[int, object] = {}

    def __call__(self, t):
        key = id(t)
        if key not in self.memo:
            self.memo[key] = (self._lin(t), t)  # keep t alive while memoized
        return self.memo[key][0]

    def _lin(self, t):
        tag = t[0]
        nv = len(self.index)
        if tag == "c":
            return np.zeros(nv), t[1]
        if tag == "v":
            c = np.zeros(nv)
            c[self.index[t[1]]] = 1.0
            return c, 0.0
        if tag == "neg":
            a = self(t[1])
            return None if a is None else (-a[0], -a[1])
        if tag == "+":
            parts = [self(x) for x in t[1]]
            if any(p is None for p in parts):
                return None
            return sum(p[0] for p in parts), sum(p[1] for p in parts)
        if tag == "*":
            parts = [self(x) for x in t[1]]
            if any(p is None for p in parts):
                return None
            var = [p for p in parts if p[0].any()]
            if len(var) > 1:
                return None
            k = math.prod(p[1] for p in parts if not p[0].any())
            if not var:
                return np.zeros(nv), k
            return var[0][0] * k, var[0][1] * k
        if tag == "/":
            a, b = self(t[1]), self(t[2])
            if a is None or b is None or b[0].any() or b[1] == 0:
                return None
            return a[0] / b[1], a[1] / b[1]
        if tag == "^":
            if t[2] == 0:
                return np.zeros(nv), 1.0
            return self(t[1]) if t[2] == 1 else None
        return None


def _snap(v: np.ndarray, scale: float) -> np.ndarray:
    v = v.copy()
    v[np.abs(v) < 1e-12 * max(1.0, scale)] = 0.0
    return v


def reduce_script(s: Script) -> Problem:
    index = {n: i for i, n in enumerate(s.names)}
    nv = len(s.names)
    lin = _Linearizer(index)
    is_int_orig = np.array([s.sorts[n] == "Int" for n in s.names], dtype=bool)
    real_idx = np.flatnonzero(~is_int_orig)
    int_idx = np.flatnonzero(is_int_orig)

    rows, rhs, rest = [], [], []
    for a in s.asserts:
        for f in _conjuncts(a):
            if f[0] == "cmp" and f[1] == "=":
                la, lb = lin(f[2]), lin(f[3])
                if la is not None and lb is not None:
                    c = la[0] - lb[0]
                    if not c[is_int_orig].any():
                        rows.append(c[real_idx])
                        rhs.append(lb[1] - la[1])
                        continue
            rest.append(f)

    nr = len(real_idx)
    x0 = np.zeros(nr)
    N = np.eye(nr)
    infeasible = False
    if rows:
        A = np.array(rows)
        b = np.array(rhs)
        nz = ~A.any(axis=1)
        if np.any(np.abs(b[nz]) > 1e-9):
            infeasible = True
        u, sv, vt = np.linalg.svd(A, full_matrices=True)
        tol = max(A.shape) * EPS_RANK * (sv[0] if len(sv) else 0.0)
        r = int((sv > tol).sum())
        if r:
            x0 = vt[:r].T @ ((u[:, :r].T @ b) / sv[:r])
        if np.linalg.norm(A @ x0 - b) > 1e-9 * (1 + np.linalg.norm(b)):
            infeasible = True
        N = vt[r:].T
        x0 = _snap(x0, 1.0)
        N = _snap(N, 1.0)

    k = N.shape[1]
    dim = k + len(int_idx)
    Tm = np.zeros((nv, dim))
    t0 = np.zeros(nv)
    Tm[real_idx, :k] = N
    t0[real_idx] = x0
    for j, i in enumerate(int_idx):
        Tm[i, k + j] = 1.0
    is_int = np.zeros(dim, dtype=bool)
    is_int[k:] = True

    if infeasible:
        return Problem(s.names, s.sorts, dim, is_int, Tm, t0, False)

    red = _Reducer(lin, Tm, t0, is_int)
    parts = [red.formula(f, True) for f in rest]
    return Problem(s.names, s.sorts, dim, is_int, Tm, t0, _mk_and(parts))


EPS_RANK = 1e-12


def _mk_and(parts):
    out = []
    for p in parts:
        if p is False:
            return False
        if p is True:
            continue
        out.extend(p.items if isinstance(p, T.And) else [p])
    if not out:
        return True
    return out[0] if len(out) == 1 else T.And(out)


def _mk_or(parts):
    out = []
    for p in parts:
        if p is True:
            return True
        if p is False:
            continue
        out.extend(p.items if isinstance(p, T.Or) else [p])
    if not out:
        return False
    return out[0] if len(out) == 1 else T.Or(out)


class _Reducer:
    def __init__(self, lin: _Linearizer, Tm: np.ndarray, t0: np.ndarray, is_int: np.ndarray):
        self.lin, self.T, self.t0, self.is_int = lin, Tm, t0, is_int
        self.memo: dict[int, object] = {}

    def term(self, t) -> T.Term:
        key = id(t)
        if key in self.memo:
            return self.memo[key][0]
        out = self._term(t)
        self.memo[key] = (out, t)
        return out

    def _affine(self, c: np.ndarray, c0: float) -> T.Term:
        coef = c @ self.T
        const = c0 + float(c @ self.t0)
        scale = float(np.abs(c).max(initial=0.0))
        coef = _snap(coef, scale)
        if abs(const) < 1e-12 * max(1.0, scale):
            const = 0.0
        if not coef.any():
            return T.Const(const)
        return T.Lin(coef, const)

    def _term(self, t) -> T.Term:
        la = self.lin(t)
        if la is not None:
            return self._affine(*la)
        tag = t[0]
        if tag == "neg":
            return T.Scale(-1.0, self.term(t[1]))
        if tag == "+":
            return T.Add([self.term(x) for x in t[1]])
        if tag == "*":
            items = [self.term(x) for x in t[1]]
            k = math.prod(x.value for x in items if isinstance(x, T.Const))
            rest = [x for x in items if not isinstance(x, T.Const)]
            out = rest[0]
            for x in rest[1:]:
                out = T.Mul(out, x)
            return out if k == 1.0 else T.Scale(k, out)
        if tag == "/":
            return T.Div(self.term(t[1]), self.term(t[2]))
        if tag == "^":
            return T.Pow(self.term(t[1]), t[2])
        raise UnsupportedInput(f"expected a real term, got {tag!r}")

    def _integral(self, g) -> bool:
        if not isinstance(g, T.Lin) or g.c0 != round(g.c0):
            return False
        ints = self.is_int[g.support]
        return bool(ints.all() and np.all(g.c == np.round(g.c)))

    def _dense(self, g: T.Lin) -> np.ndarray:
        c = np.zeros(self.T.shape[1])
        c[g.support] = g.c
        return c

    def formula(self, f, positive: bool):
        tag = f[0]
        if tag == "bool":
            return f[1] == positive
        if tag == "not":
            return self.formula(f[1], not positive)
        if tag in ("and", "or"):
            parts = [self.formula(g, positive) for g in f[1]]
            return _mk_and(parts) if (tag == "and") == positive else _mk_or(parts)
        if tag != "cmp":
            raise UnsupportedInput(f"expected a formula, got {tag!r}")
        op, a, b = f[1], f[2], f[3]
        if not positive:
            op = T.NEG_OP[op]
        if op in (">", ">="):
            op = "<" if op == ">" else "<="
            a, b = b, a
        la, lb = self.lin(a), self.lin(b)
        if la is not None and lb is not None:
            g = self._affine(la[0] - lb[0], la[1] - lb[1])
        else:
            g = T.Add([self.term(a), T.Scale(-1.0, self.term(b))])
        if op == "<" and self._integral(g):
            g, op = T.Lin(self._dense(g), g.c0 + 1.0), "<="
        if isinstance(g, T.Const):
            v = g.value
            return {"<": v < 0, "<=": v <= 0, "=": v == 0, "!=": v != 0}[op]
        return T.Cmp(op, g)
