"""Real-valued terms and formulas over a box of primary variables.

Every term supports point evaluation, forward interval evaluation (cached
on the node for the backward pass) and HC4-style backward narrowing. Boxes
are a pair of float arrays ``lo``/``hi`` plus an integrality mask; narrowing
edits them in place and returns False once the box is empty.
"""
from __future__ import annotations

import math

import numpy as np

EPS = 2.220446049250313e-16
INF = math.inf


def _down(x: float) -> float:
    return math.nextafter(x, -INF) if math.isfinite(x) else x


def _up(x: float) -> float:
    return math.nextafter(x, INF) if math.isfinite(x) else x


class Box:
    __slots__ = ("lo", "hi", "is_int")

    def __init__(self, lo, hi, is_int):
        self.lo = np.array(lo, dtype=float)
        self.hi = np.array(hi, dtype=float)
        self.is_int = is_int

    def copy(self) -> "Box":
        return Box(self.lo.copy(), self.hi.copy(), self.is_int)

    def set(self, j: int, lo: float, hi: float) -> bool:
        if self.is_int[j]:
            lo, hi = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
        if lo > self.lo[j]:
            self.lo[j] = lo
        if hi < self.hi[j]:
            self.hi[j] = hi
        return self.lo[j] <= self.hi[j]

    @property
    def center(self) -> np.ndarray:
        c = (self.lo + self.hi) / 2
        return np.where(self.is_int, np.floor(c), c)

    def hull_with(self, other: "Box"):
        np.minimum(self.lo, other.lo, out=self.lo)
        np.maximum(self.hi, other.hi, out=self.hi)


def _mul_iv(a, b):
    ps = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    ps = [0.0 if math.isnan(p) else p for p in ps]
    return _down(min(ps)), _up(max(ps))


def _div_iv(a, b):
    if b[0] <= 0.0 <= b[1]:
        return -INF, INF
    return _mul_iv(a, (1.0 / b[1], 1.0 / b[0]))


# ---------------------------------------------------------------- terms


class Term:
    iv = (-INF, INF)

    def children(self):
        return ()


class Const(Term):
    def __init__(self, value: float):
        self.value = float(value)

    def eval(self, y):
        return self.value

    def fwd(self, box):
        self.iv = (self.value, self.value)
        return self.iv

    def narrow(self, lo, hi, box):
        return lo <= self.value <= hi


class Lin(Term):
    """c0 + coef . y"""

    def __init__(self, coef: np.ndarray, c0: float):
        self.support = np.flatnonzero(coef)
        self.c = coef[self.support].astype(float)
        self.c0 = float(c0)

    def eval(self, y):
        return self.c0 + float(self.c @ y[self.support])

    def _terms(self, box):
        lo, hi = box.lo[self.support], box.hi[self.support]
        a, b = self.c * lo, self.c * hi
        return np.minimum(a, b), np.maximum(a, b)

    def fwd(self, box):
        tl, th = self._terms(box)
        err = (len(self.c) + 1) * EPS * (np.abs(tl).sum() + np.abs(th).sum() + abs(self.c0))
        self.iv = (self.c0 + tl.sum() - err, self.c0 + th.sum() + err)
        return self.iv

    def narrow(self, lo, hi, box):
        lo, hi = max(lo, self.iv[0]), min(hi, self.iv[1])
        if lo > hi:
            return False
        tl, th = self._terms(box)
        s_lo, s_hi = tl.sum(), th.sum()
        err = (len(self.c) + 2) * EPS * (np.abs(tl).sum() + np.abs(th).sum() + abs(self.c0) + abs(lo) + abs(hi))
        for k, j in enumerate(self.support):
            # c_j y_j in [lo, hi] - c0 - (sum of the other terms)
            r_lo = s_lo - tl[k]
            r_hi = s_hi - th[k]
            t_lo = lo - self.c0 - r_hi - err
            t_hi = hi - self.c0 - r_lo + err
            c = self.c[k]
            y_lo, y_hi = (t_lo / c, t_hi / c) if c > 0 else (t_hi / c, t_lo / c)
            if not box.set(j, _down(y_lo), _up(y_hi)):
                return False
        return True


class Add(Term):
    def __init__(self, items):
        self.items = list(items)

    def children(self):
        return self.items

    def eval(self, y):
        return sum(t.eval(y) for t in self.items)

    def fwd(self, box):
        ivs = [t.fwd(box) for t in self.items]
        self.iv = (_down(sum(i[0] for i in ivs)), _up(sum(i[1] for i in ivs)))
        return self.iv

    def narrow(self, lo, hi, box):
        lo, hi = max(lo, self.iv[0]), min(hi, self.iv[1])
        if lo > hi:
            return False
        ivs = [t.iv for t in self.items]
        tot_lo = sum(i[0] for i in ivs)
        tot_hi = sum(i[1] for i in ivs)
        for t, (a, b) in zip(self.items, ivs):
            if math.isinf(tot_lo) or math.isinf(tot_hi):
                break
            r_lo, r_hi = tot_lo - a, tot_hi - b
            if not t.narrow(_down(lo - r_hi), _up(hi - r_lo), box):
                return False
        return True


class Scale(Term):
    def __init__(self, c: float, t: Term):
        self.k = float(c)
        self.t = t

    def children(self):
        return (self.t,)

    def eval(self, y):
        return self.k * self.t.eval(y)

    def fwd(self, box):
        a, b = self.t.fwd(box)
        p, q = self.k * a, self.k * b
        self.iv = (_down(min(p, q)), _up(max(p, q)))
        return self.iv

    def narrow(self, lo, hi, box):
        lo, hi = max(lo, self.iv[0]), min(hi, self.iv[1])
        if lo > hi:
            return False
        if self.k == 0:
            return True
        p, q = lo / self.k, hi / self.k
        return self.t.narrow(_down(min(p, q)), _up(max(p, q)), box)


class Pow(Term):
    def __init__(self, t: Term, k: int):
        self.t = t
        self.k = int(k)

    def children(self):
        return (self.t,)

    def eval(self, y):
        return self.t.eval(y) ** self.k

    def fwd(self, box):
        a, b = self.t.fwd(box)
        k = self.k
        if k % 2:
            self.iv = (_down(a**k), _up(b**k))
        elif a >= 0:
            self.iv = (_down(a**k), _up(b**k))
        elif b <= 0:
            self.iv = (_down(b**k), _up(a**k))
        else:
            self.iv = (0.0, _up(max(-a, b) ** k))
        return self.iv

    def narrow(self, lo, hi, box):
        lo, hi = max(lo, self.iv[0]), min(hi, self.iv[1])
        if lo > hi:
            return False
        k = self.k
        if k % 2:
            root = lambda v: math.copysign(abs(v) ** (1.0 / k), v) if math.isfinite(v) else v
            return self.t.narrow(_down(root(lo)), _up(root(hi)), box)
        if hi < 0:
            return False
        r_hi = _up(_up(hi ** (1.0 / k)) * (1 + 4 * EPS)) if math.isfinite(hi) else INF
        r_lo = _down(max(lo, 0.0) ** (1.0 / k) * (1 - 4 * EPS))
        a, b = self.t.iv
        parts = []
        for p, q in ((r_lo, r_hi), (-r_hi, -r_lo)):
            p, q = max(p, a), min(q, b)
            if p <= q:
                parts.append((p, q))
        if not parts:
            return False
        return self.t.narrow(min(p for p, _ in parts), max(q for _, q in parts), box)


class Mul(Term):
    def __init__(self, a: Term, b: Term):
        self.a, self.b = a, b

    def children(self):
        return (self.a, self.b)

    def eval(self, y):
        return self.a.eval(y) * self.b.eval(y)

    def fwd(self, box):
        self.iv = _mul_iv(self.a.fwd(box), self.b.fwd(box))
        return self.iv

    def narrow(self, lo, hi, box):
        lo, hi = max(lo, self.iv[0]), min(hi, self.iv[1])
        if lo > hi:
            return False
        a_iv, b_iv = self.a.iv, self.b.iv
        if not (b_iv[0] <= 0.0 <= b_iv[1]):
            if not self.a.narrow(*_div_iv((lo, hi), b_iv), box):
                return False
        if not (a_iv[0] <= 0.0 <= a_iv[1]):
            if not self.b.narrow(*_div_iv((lo, hi), a_iv), box):
                return False
        return True


class Div(Term):
    def __init__(self, a: Term, b: Term):
        self.a, self.b = a, b

    def children(self):
        return (self.a, self.b)

    def eval(self, y):
        d = self.b.eval(y)
        return self.a.eval(y) / d if d != 0 else math.inf

    def fwd(self, box):
        self.iv = _div_iv(self.a.fwd(box), self.b.fwd(box))
        return self.iv

    def narrow(self, lo, hi, box):
        return max(lo, self.iv[0]) <= min(hi, self.iv[1])


def support(t: Term) -> set[int]:
    if isinstance(t, Lin):
        return set(int(j) for j in t.support)
    out = set()
    for c in t.children():
        out |= support(c)
    return out


def quadratic(t: Term, dim: int):
    """(Q, b, c) with t = y'Qy + b'y + c, or None if t is not quadratic."""
    if isinstance(t, Const):
        return np.zeros((dim, dim)), np.zeros(dim), t.value
    if isinstance(t, Lin):
        b = np.zeros(dim)
        b[t.support] = t.c
        return np.zeros((dim, dim)), b, t.c0
    if isinstance(t, Add):
        parts = [quadratic(x, dim) for x in t.items]
        if any(p is None for p in parts):
            return None
        return sum(p[0] for p in parts), sum(p[1] for p in parts), sum(p[2] for p in parts)
    if isinstance(t, Scale):
        p = quadratic(t.t, dim)
        return None if p is None else (t.k * p[0], t.k * p[1], t.k * p[2])
    if isinstance(t, (Pow, Mul)):
        if isinstance(t, Pow):
            if t.k == 1:
                return quadratic(t.t, dim)
            if t.k != 2:
                return None
            a = b = quadratic(t.t, dim)
        else:
            a, b = quadratic(t.a, dim), quadratic(t.b, dim)
        if a is None or b is None or a[0].any() or b[0].any():
            return None
        q = np.outer(a[1], b[1])
        q = (q + q.T) / 2
        return q, a[1] * b[2] + b[1] * a[2], a[2] * b[2]
    return None


# ---------------------------------------------------------------- formulas

NEG_OP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
EQ_TOL = 1e-9
BOX_EQ_TOL = 1e-12


class Cmp:
    """g op 0 with op in <, <=, =, !=."""

    def __init__(self, op: str, g: Term):
        assert op in ("<", "<=", "=", "!=")
        self.op, self.g = op, g

    def residual(self, y, margin, out):
        v = self.g.eval(y)
        if self.op in ("<", "<="):
            out.append(max(0.0, v + margin))
        elif self.op == "=":
            out.append(v)
        else:
            out.append(max(0.0, margin - abs(v)))

    def holds(self, y, slack=0.0):
        v = self.g.eval(y)
        if self.op == "<":
            return v < slack if slack else v < 0
        if self.op == "<=":
            return v <= slack
        if self.op == "=":
            return abs(v) <= max(EQ_TOL, slack)
        return abs(v) > EQ_TOL or slack > 0

    def contract(self, box) -> bool:
        lo, hi = self.g.fwd(box)
        if self.op == "!=":
            return not (-BOX_EQ_TOL < lo and hi < BOX_EQ_TOL and lo <= hi)
        t_lo = -BOX_EQ_TOL if self.op == "=" else -INF
        if max(lo, t_lo) > min(hi, BOX_EQ_TOL):
            return False
        return self.g.narrow(t_lo, BOX_EQ_TOL, box)


class And:
    def __init__(self, items):
        self.items = list(items)

    def residual(self, y, margin, out):
        for f in self.items:
            f.residual(y, margin, out)

    def holds(self, y, slack=0.0):
        return all(f.holds(y, slack) for f in self.items)

    def contract(self, box) -> bool:
        return all(f.contract(box) for f in self.items)


class Or:
    def __init__(self, items):
        self.items = list(items)

    def residual(self, y, margin, out):
        best = math.inf
        for f in self.items:
            tmp = []
            f.residual(y, margin, tmp)
            best = min(best, math.sqrt(sum(v * v for v in tmp)))
        out.append(best)

    def holds(self, y, slack=0.0):
        return any(f.holds(y, slack) for f in self.items)

    def contract(self, box) -> bool:
        survivors = []
        for f in self.items:
            b = box.copy()
            if f.contract(b):
                survivors.append(b)
        if not survivors:
            return False
        hull = survivors[0]
        for b in survivors[1:]:
            hull.hull_with(b)
        box.lo[:], box.hi[:] = hull.lo, hull.hi
        return True


def formula_support(f) -> set[int]:
    if isinstance(f, Cmp):
        return support(f.g)
    out = set()
    for x in f.items:
        out |= formula_support(x)
    return out
