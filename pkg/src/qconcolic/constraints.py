"""Constraint atoms for branch conditions and their negations.

Every conditional on a path becomes one atom. Quantum atoms refer to the
amplitudes reached after the gates executed before the conditional.

Atom kinds come in negation pairs:
    MeasureIn / MeasureNotIn, DistEq / DistNeq, ProbGt / ProbLe, and
    ClassicalCmp (negated by flipping its comparator).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .ir import (
    NEGATED_CMP,
    BinOp,
    Classical,
    Cond,
    Expr,
    GateOp,
    If,
    Measure,
    Name,
    Neg,
    Num,
    Program,
    Return,
    StateEq,
    StateGt,
    StateLt,
    compare,
    eval_expr,
    expr_names,
    measured_bits,
    outcome_index,
)
from .symbolic import AmplitudeExprs, SymbolicEnv, amplitude_exprs_at

NEGATION = {
    "MeasureIn": "MeasureNotIn",
    "MeasureNotIn": "MeasureIn",
    "DistEq": "DistNeq",
    "DistNeq": "DistEq",
    "ProbGt": "ProbLe",
    "ProbLe": "ProbGt",
}
QUANTUM_KINDS = frozenset(NEGATION)
ZERO_TOL = 1e-9


class InfeasibleNegation(ValueError):
    pass


class UnboundSymbol(KeyError):
    pass


@dataclass(frozen=True)
class MeasureParams:
    qubits: tuple[int, ...]
    outcomes: tuple[str, ...]


@dataclass(frozen=True)
class DistParams:
    dist: tuple[tuple[str, float], ...]
    delta: float


@dataclass(frozen=True)
class BoundParams:
    # (outcome, bound) pairs; "all" is a conjunction, "any" a disjunction
    bounds: tuple[tuple[str, float], ...]
    quantifier: str = "all"


@dataclass(frozen=True)
class ClassicalParams:
    lhs: Expr
    op: str
    rhs: Expr
    symbols: tuple[tuple[str, str], ...] = ()  # param name -> rendered symbol


Params = Union[MeasureParams, DistParams, BoundParams, ClassicalParams]


@dataclass(frozen=True)
class Atom:
    kind: str
    site: int
    params: Params
    ops: tuple[GateOp, ...] = ()
    n: int = 0
    qname: str = "sq"
    exprs: Optional[AmplitudeExprs] = field(default=None, compare=False, repr=False)

    @property
    def is_quantum(self) -> bool:
        return self.kind in QUANTUM_KINDS

    @property
    def prefix_len(self) -> int:
        return len(self.ops)

    def zero_indices(self) -> list[int]:
        """Basis indices whose amplitude a Measure atom forces to zero."""
        p = self.params
        inside = [
            x for x in range(1 << self.n) if measured_bits(x, p.qubits) in p.outcomes
        ]
        if self.kind == "MeasureIn":
            inset = set(inside)
            return [x for x in range(1 << self.n) if x not in inset]
        return inside

    # -- concrete evaluation -------------------------------------------------

    def residual(self, initial_amps=None, values: Optional[dict] = None) -> float:
        """How far a concrete input is from satisfying the atom (0 if it does)."""
        if self.kind == "ClassicalCmp":
            p = self.params
            env = dict(values or {})
            a, b = eval_expr(p.lhs, env), eval_expr(p.rhs, env)
            return 0.0 if compare(a, p.op, b) else max(abs(float(a) - float(b)), 1.0)
        amps = self.exprs.evaluate(initial_amps)
        probs = np.abs(amps) ** 2
        p = self.params
        if self.kind in ("MeasureIn", "MeasureNotIn"):
            z = self.zero_indices()
            if not z:
                return 0.0
            return float(max(max(abs(amps[x].real), abs(amps[x].imag)) for x in z))
        if self.kind == "DistEq":
            return float(max(max(0.0, abs(probs[outcome_index(o)] - d) - p.delta) for o, d in p.dist))
        if self.kind == "DistNeq":
            return float(min(max(0.0, p.delta - abs(probs[outcome_index(o)] - d)) for o, d in p.dist))
        if self.kind == "ProbGt":
            gaps = [max(0.0, b - probs[outcome_index(o)]) for o, b in p.bounds]
        else:
            gaps = [max(0.0, probs[outcome_index(o)] - b) for o, b in p.bounds]
        return float(max(gaps) if p.quantifier == "all" else min(gaps))

    def holds(self, initial_amps=None, values: Optional[dict] = None) -> bool:
        """Exact truth value (strict comparisons kept strict)."""
        if self.kind == "ClassicalCmp":
            return self.residual(values=values) == 0.0
        amps = self.exprs.evaluate(initial_amps)
        probs = np.abs(amps) ** 2
        p = self.params
        if self.kind in ("MeasureIn", "MeasureNotIn"):
            return all(abs(amps[x]) <= ZERO_TOL for x in self.zero_indices())
        if self.kind == "DistEq":
            return all(abs(probs[outcome_index(o)] - d) < p.delta for o, d in p.dist)
        if self.kind == "DistNeq":
            return any(abs(probs[outcome_index(o)] - d) >= p.delta for o, d in p.dist)
        if self.kind == "ProbGt":
            hits = [probs[outcome_index(o)] > b for o, b in p.bounds]
        else:
            hits = [probs[outcome_index(o)] <= b for o, b in p.bounds]
        return all(hits) if p.quantifier == "all" else any(hits)

    # -- rendering -------------------------------------------------------------

    def render(self) -> str:
        p = self.params
        if self.kind == "ClassicalCmp":
            names = dict(p.symbols)
            return f"{_fmt_expr(p.lhs, names)} {_CMP_GLYPH[p.op]} {_fmt_expr(p.rhs, names)}"
        head = f"{self.qname}[{', '.join(g.render() for g in self.ops)}]"
        if self.kind in ("MeasureIn", "MeasureNotIn"):
            glyph = "∈" if self.kind == "MeasureIn" else "∉"
            qs = ", ".join(map(str, p.qubits))
            outs = ", ".join(f'"{o}"' for o in p.outcomes)
            return f"{head}[{qs}] {glyph} [{outs}]"
        if self.kind in ("DistEq", "DistNeq"):
            glyph = "=" if self.kind == "DistEq" else "≠"
            d = ", ".join(f'"{o}": {v:.12g}' for o, v in p.dist)
            return f"{head} {glyph} {{{d}}} (δ={p.delta:.12g})"
        glyph = ">" if self.kind == "ProbGt" else "≤"
        b = ", ".join(f'("{o}", {v:.12g})' for o, v in p.bounds)
        q = "" if p.quantifier == "all" else "any "
        return f"{head} {glyph} {q}[{b}]"


_CMP_GLYPH = {"==": "=", "!=": "≠", "<": "<", "<=": "≤", ">": ">", ">=": "≥"}


def _fmt_expr(e: Expr, names: dict, prec: int = 0) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Name):
        return names.get(e.name, e.name)
    if isinstance(e, Neg):
        return "-" + _fmt_expr(e.operand, names, 3)
    p = 1 if e.op in "+-" else 2
    s = f"{_fmt_expr(e.left, names, p)} {e.op} {_fmt_expr(e.right, names, p + 1)}"
    return f"({s})" if p < prec else s


# ---------------------------------------------------------------- builders


def measure_constraint(exprs: AmplitudeExprs, qubits, outcomes, polarity: bool, *, site=-1, ops=(), qname="sq") -> Atom:
    kind = "MeasureIn" if polarity else "MeasureNotIn"
    a = Atom(kind, site, MeasureParams(tuple(qubits), tuple(outcomes)), tuple(ops), exprs.n, qname, exprs)
    if len(a.zero_indices()) == 1 << exprs.n:
        raise InfeasibleNegation(f"{a.render()} forces every amplitude to zero")
    return a


def eq_constraint(exprs: AmplitudeExprs, dist, delta: float, polarity: bool, *, site=-1, ops=(), qname="sq") -> Atom:
    kind = "DistEq" if polarity else "DistNeq"
    return Atom(kind, site, DistParams(tuple(dist), float(delta)), tuple(ops), exprs.n, qname, exprs)


def gt_constraint(exprs: AmplitudeExprs, pairs, delta: float, polarity: bool, *, site=-1, ops=(), qname="sq") -> Atom:
    bounds = tuple((o, p - delta) for o, p in pairs)
    if polarity:
        params = BoundParams(bounds, "all")
        kind = "ProbGt"
    else:
        params = BoundParams(bounds, "any")
        kind = "ProbLe"
    return Atom(kind, site, params, tuple(ops), exprs.n, qname, exprs)


def lt_constraint(exprs: AmplitudeExprs, pairs, delta: float, polarity: bool, *, site=-1, ops=(), qname="sq") -> Atom:
    bounds = tuple((o, p + delta) for o, p in pairs)
    if polarity:
        params = BoundParams(bounds, "all")
        kind = "ProbLe"
    else:
        params = BoundParams(bounds, "any")
        kind = "ProbGt"
    return Atom(kind, site, params, tuple(ops), exprs.n, qname, exprs)


def classical_constraint(cond: Classical, env: SymbolicEnv, polarity: bool, *, site=-1) -> Atom:
    names = set(expr_names(cond.lhs)) | set(expr_names(cond.rhs))
    missing = names - set(env.classical)
    if missing:
        raise UnboundSymbol(", ".join(sorted(missing)))
    symbols = tuple(sorted((nm, env.classical[nm].render()) for nm in names))
    op = cond.op if polarity else NEGATED_CMP[cond.op]
    return Atom("ClassicalCmp", site, ClassicalParams(cond.lhs, op, cond.rhs, symbols))


def negate(a: Atom) -> Atom:
    if a.kind == "ClassicalCmp":
        return replace(a, params=replace(a.params, op=NEGATED_CMP[a.params.op]))
    params = a.params
    if isinstance(params, BoundParams):
        params = replace(params, quantifier="any" if params.quantifier == "all" else "all")
    return replace(a, kind=NEGATION[a.kind], params=params)


def atom_for(cond: Cond, site: int, ops, p: Program, env: SymbolicEnv, polarity: bool) -> Atom:
    """Build the atom for `cond` reached after `ops` with the given branch polarity."""
    if isinstance(cond, Classical):
        return classical_constraint(cond, env, polarity, site=site)
    ops = tuple(ops)
    exprs = amplitude_exprs_at(ops, p.n)
    kw = dict(site=site, ops=ops, qname=env.quantum.name)
    if isinstance(cond, Measure):
        return measure_constraint(exprs, cond.qubits, cond.outcomes, polarity, **kw)
    if isinstance(cond, StateEq):
        return eq_constraint(exprs, cond.dist, cond.delta, polarity, **kw)
    if isinstance(cond, StateGt):
        return gt_constraint(exprs, cond.pairs, cond.delta, polarity, **kw)
    if isinstance(cond, StateLt):
        return lt_constraint(exprs, cond.pairs, cond.delta, polarity, **kw)
    raise TypeError(cond)


@dataclass(frozen=True)
class PathConstraint:
    atoms: tuple[Atom, ...] = ()
    origin: Optional[tuple] = field(default=None, compare=False)

    def render(self) -> str:
        """Surface form, classical atoms listed before quantum ones."""
        if not self.atoms:
            return "true"
        ordered = [a for a in self.atoms if not a.is_quantum] + [a for a in self.atoms if a.is_quantum]
        return " ∧ ".join(a.render() for a in ordered)

    def residual(self, initial_amps, values: dict) -> float:
        return max((a.residual(initial_amps, values) for a in self.atoms), default=0.0)

    def holds(self, initial_amps, values: dict) -> bool:
        return all(a.holds(initial_amps, values) for a in self.atoms)

    def __len__(self):
        return len(self.atoms)


def path_condition(trace, p: Program, env: SymbolicEnv) -> PathConstraint:
    conds = p.site_conds()
    atoms = []
    for step, k in zip(trace.steps, trace.ops_prefix):
        atoms.append(atom_for(conds[step.site], step.site, trace.ops[:k], p, env, step.polarity))
    return PathConstraint(tuple(atoms), origin=trace.path)


def static_path_condition(p: Program, env: SymbolicEnv, polarities) -> PathConstraint:
    """Path constraint for a sequence of branch decisions, found by walking the program text.

    Decisions apply in execution order; the walk stops at a return, the end
    of the body, or when the decisions run out.
    """
    decisions = list(polarities)
    conds = p.site_conds()
    ops: list[GateOp] = []
    atoms: list[Atom] = []
    path = []

    def walk(stmts) -> bool:
        for st in stmts:
            if isinstance(st, GateOp):
                ops.append(st)
            elif isinstance(st, Return):
                return True
            elif isinstance(st, If):
                if len(path) == len(decisions):
                    return True
                pol = bool(decisions[len(path)])
                atoms.append(atom_for(conds[st.site], st.site, tuple(ops), p, env, pol))
                path.append((st.site, pol))
                if walk(st.then if pol else st.orelse):
                    return True
        return False

    walk(p.body)
    if len(path) < len(decisions):
        raise ValueError(f"path has {len(path)} conditionals, {len(decisions)} decisions given")
    return PathConstraint(tuple(atoms), origin=tuple(path))
