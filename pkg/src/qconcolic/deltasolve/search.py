"""Witness search and branch-and-prune over a reduced problem."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from . import terms as T
from .model import Problem

REAL_BOUND = 1e4
INT_BOUND = 2.0**20
MARGIN = 1e-7


@dataclass
class Outcome:
    status: str  # "sat" | "delta-sat" | "unsat" | "unknown"
    lo: Optional[np.ndarray] = None  # over the original variables
    hi: Optional[np.ndarray] = None
    note: str = ""


def _top_conjuncts(f):
    if isinstance(f, T.And):
        return f.items
    return [f]


def initial_box(p: Problem) -> Optional[T.Box]:
    """Default domains, tightened by ellipsoids from convex quadratic constraints."""
    lo = np.where(p.is_int, -INT_BOUND, -REAL_BOUND)
    hi = -lo
    box = T.Box(lo, hi, p.is_int)
    if p.formula is True or p.formula is False:
        return box
    for c in _top_conjuncts(p.formula):
        if not (isinstance(c, T.Cmp) and c.op in ("<", "<=", "=")):
            continue
        q = T.quadratic(c.g, p.dim)
        if q is None:
            continue
        Q, b, c0 = q
        S = np.flatnonzero(Q.any(axis=1) | (b != 0))
        if not len(S) or not Q[np.ix_(S, S)].any():
            continue
        if np.any(b[np.setdiff1d(np.arange(p.dim), S)] != 0):
            continue
        Qs, bs = Q[np.ix_(S, S)], b[S]
        w = np.linalg.eigvalsh(Qs)
        if w.min() <= 1e-9 * max(1.0, w.max()):
            continue
        Qi = np.linalg.inv(Qs)
        center = -0.5 * Qi @ bs
        r2 = float(center @ Qs @ center - c0)
        if r2 < -1e-9:
            return None
        half = np.sqrt(max(r2, 0.0) * np.diag(Qi)) * (1 + 1e-9) + 1e-9
        for j, s in enumerate(S):
            if not box.set(s, center[j] - half[j], center[j] + half[j]):
                return None
    return box


def contract(f, box: T.Box, passes: int = 30) -> bool:
    for _ in range(passes):
        before = float(np.sum(box.hi - box.lo))
        if not f.contract(box):
            return False
        after = float(np.sum(box.hi - box.lo))
        if not math.isfinite(before) or before - after <= 1e-3 * max(before, 1e-12):
            break
    return True


class Searcher:
    def __init__(self, p: Problem, delta: float, deadline: float, rng: np.random.Generator):
        self.p = p
        self.f = p.formula
        self.delta = delta
        self.deadline = deadline
        self.rng = rng
        self.relevant = np.array(sorted(T.formula_support(self.f)), dtype=int)

    def expired(self) -> bool:
        return time.monotonic() > self.deadline

    def residual(self, y) -> np.ndarray:
        out: list[float] = []
        self.f.residual(y, MARGIN, out)
        return np.asarray(out, dtype=float)

    def holds(self, y) -> bool:
        return bool(self.f.holds(y))

    def polish(self, y0: np.ndarray, box: T.Box) -> Optional[np.ndarray]:
        """Local least squares from y0 inside box; ints rounded then fixed."""
        y = np.clip(y0, box.lo, box.hi)
        free = [j for j in self.relevant if box.hi[j] > box.lo[j]]
        y = self._ls(y, free, box)
        if self.p.is_int.any():
            y = np.where(self.p.is_int, np.round(y), y)
            y = np.clip(y, box.lo, box.hi)
            free = [j for j in free if not self.p.is_int[j]]
            y = self._ls(y, free, box)
        return y if self.holds(y) else None

    def _ls(self, y, free, box):
        if not free or self.holds(y):
            return y
        free = np.array(free)
        lo, hi = box.lo[free], box.hi[free]

        def fun(z):
            w = y.copy()
            w[free] = z
            return self.residual(w)

        z0 = np.clip(y[free], lo, hi)
        # trf wants a strictly interior start
        span = hi - lo
        z0 = np.clip(z0, lo + 1e-12 * span, hi - 1e-12 * span)
        try:
            if not fun(z0).size:
                return y
            r = least_squares(fun, z0, bounds=(lo, hi), method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=60 * (len(free) + 1))
        except ValueError:
            return y
        out = y.copy()
        out[free] = r.x
        return out

    def sample(self, box: T.Box) -> np.ndarray:
        y = np.zeros(self.p.dim)
        for j in range(self.p.dim):
            lo, hi = box.lo[j], box.hi[j]
            if hi - lo <= 20.0:
                y[j] = self.rng.uniform(lo, hi)
            else:
                y[j] = np.clip(self.rng.normal(0.0, 2.0), lo, hi)
        return np.where(self.p.is_int, np.round(y), y)

    def multistart(self, box: T.Box, tries: int) -> Optional[np.ndarray]:
        c = box.center
        if self.holds(c):
            return c
        for k in range(tries):
            if self.expired():
                return None
            y = self.polish(self.sample(box) if k else c, box)
            if y is not None:
                return y
        return None

    def _split_var(self, box: T.Box) -> int:
        w = box.hi[self.relevant] - box.lo[self.relevant]
        return int(self.relevant[int(np.argmax(w))])

    def _is_leaf(self, box: T.Box) -> bool:
        w = box.hi[self.relevant] - box.lo[self.relevant]
        ints = self.p.is_int[self.relevant]
        return bool(np.all(np.where(ints, w == 0, w < self.delta)))

    def branch_and_prune(self, root: T.Box):
        stack = [root]
        while stack:
            if self.expired():
                return "unknown", None
            box = stack.pop()
            if not contract(self.f, box):
                continue
            if self._is_leaf(box) or box_width(box, self.relevant) < self.delta * 1e-3:
                y = self.polish(box.center, box)
                if y is not None:
                    return "sat", y
                if self.f.holds(box.center, slack=self.delta) or box_width(box, self.relevant) < self.delta * 1e-3:
                    return "delta-sat", box
            j = self._split_var(box)
            a, b = box.copy(), box.copy()
            if box.is_int[j]:
                mid = math.floor((box.lo[j] + box.hi[j]) / 2)
                a.hi[j], b.lo[j] = mid, mid + 1
            else:
                mid = (box.lo[j] + box.hi[j]) / 2
                a.hi[j], b.lo[j] = mid, mid
            first, second = (a, b) if self.rng.random() < 0.5 else (b, a)
            stack.append(second)
            stack.append(first)
        return "unsat", None


def box_width(box: T.Box, idx) -> float:
    if not len(idx):
        return 0.0
    return float(np.max(box.hi[idx] - box.lo[idx]))


def solve(p: Problem, delta: float, time_limit: float, seed: int, tries: int = 24) -> Outcome:
    start = time.monotonic()
    rng = np.random.default_rng(seed)
    if p.formula is False:
        return Outcome("unsat", note="linear part or constant folding")
    box = initial_box(p)
    if box is None:
        return Outcome("unsat", note="empty quadratic bound")
    if p.formula is True:
        y = box.center
        v = p.original(y)
        return Outcome("sat", v, v)
    s = Searcher(p, delta, start + time_limit, rng)
    if not contract(s.f, box):
        return Outcome("unsat", note="root contraction")
    y = s.multistart(box, tries)
    if y is not None:
        v = p.original(y)
        return Outcome("sat", v, v)
    status, res = s.branch_and_prune(box)
    if status == "sat":
        v = p.original(res)
        return Outcome("sat", v, v)
    if status == "delta-sat":
        lo, hi = _image(p, res)
        return Outcome("delta-sat", lo, hi)
    return Outcome(status)


def _image(p: Problem, box: T.Box):
    a, b = p.T * box.lo, p.T * box.hi
    lo = np.minimum(a, b).sum(axis=1) + p.t0
    hi = np.maximum(a, b).sum(axis=1) + p.t0
    return lo, hi
