"""SMT-LIB2 emission for path constraints, models, and test-case extraction.

Documents have five sections in fixed order: variable declarations, the
normalization constraint, operation constraints, condition constraints and
solver commands. Exclusion assertions for rejected candidates sit between the
conditions and the commands.

Amplitude ``x`` after ``m`` gates is named ``psi_<m>_<x>.r`` / ``.i``. In
integrated mode only ``psi_0_*`` are declared and later amplitudes are
``define-fun`` macros over them; in per-op mode every step is declared and
tied to the previous one by one linear-equality block per gate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional

import numpy as np

from .constraints import Atom, PathConstraint
from .ir import BinOp, Name, Neg, Num, Program, outcome_index
from .sexpr import SexprError, read_all
from .simulator import StateVector, TestCase
from .symbolic import embed_gate, integrate_operations

log = logging.getLogger(__name__)

MODES = ("integrated", "per-op")


class ParseError(ValueError):
    def __init__(self, message: str, line: str = ""):
        super().__init__(f"{message}: {line!r}" if line else message)
        self.line = line


class DegenerateModel(ValueError):
    pass


def fmt_real(v: float) -> str:
    """Decimal literal, shortest round-trip form (at most 17 significant digits)."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite literal {v!r}")
    if v == 0:
        return "0.0"
    s = np.format_float_positional(abs(v), unique=True, trim="0")
    return f"(- {s})" if v < 0 else s


def amp(m: int, x: int, part: str) -> str:
    return f"psi_{m}_{x}.{part}"


def _clean(c: float) -> float:
    if abs(c) < 1e-14:
        return 0.0
    if abs(abs(c) - 1.0) < 1e-14:
        return math.copysign(1.0, c)
    return float(c)


def linear_form(coeffs, names) -> str:
    terms = []
    for c, nm in zip(coeffs, names):
        c = _clean(c)
        if c == 0.0:
            continue
        if c == 1.0:
            terms.append(nm)
        elif c == -1.0:
            terms.append(f"(- {nm})")
        else:
            terms.append(f"(* {fmt_real(c)} {nm})")
    if not terms:
        return "0.0"
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def _conj(op: str, parts: list[str]) -> str:
    if not parts:
        return "true" if op == "and" else "false"
    return parts[0] if len(parts) == 1 else f"({op} {' '.join(parts)})"


# ---------------------------------------------------------------- models


@dataclass(frozen=True)
class Assignment:
    """Variable name -> closed interval; point values have lo == hi."""

    intervals: tuple[tuple[str, float, float], ...] = ()

    def __post_init__(self):
        for name, lo, hi in self.intervals:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name}: non-finite bound")
            if lo > hi:
                raise ValueError(f"{name}: lo {lo} > hi {hi}")

    @classmethod
    def from_dict(cls, d: Mapping[str, tuple[float, float]]) -> "Assignment":
        return cls(tuple((k, float(lo), float(hi)) for k, (lo, hi) in d.items()))

    @classmethod
    def points(cls, d: Mapping[str, float]) -> "Assignment":
        return cls(tuple((k, float(v), float(v)) for k, v in d.items()))

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {k: (lo, hi) for k, lo, hi in self.intervals}

    def midpoint(self, name: str) -> float:
        lo, hi = self.as_dict()[name]
        return lo if lo == hi else (lo + hi) / 2

    def __contains__(self, name):
        return name in self.as_dict()

    def __len__(self):
        return len(self.intervals)

    def restricted(self, names: Iterable[str]) -> "Assignment":
        keep = set(names)
        return Assignment(tuple(t for t in self.intervals if t[0] in keep))

    def intersects(self, other: "Assignment") -> bool:
        """True if the boxes overlap on every variable they share."""
        a, b = self.as_dict(), other.as_dict()
        shared = set(a) & set(b)
        if not shared:
            return False
        return all(a[k][0] <= b[k][1] and b[k][0] <= a[k][1] for k in shared)


def _smt_value(e) -> float:
    if isinstance(e, str):
        s = e.rstrip("?")
        try:
            return float(Fraction(s))
        except (ValueError, ZeroDivisionError):
            raise ParseError("not a numeric literal", e) from None
    if e and e[0] == "-" and len(e) == 2:
        return -_smt_value(e[1])
    if e and e[0] == "/" and len(e) == 3:
        return _smt_value(e[1]) / _smt_value(e[2])
    raise ParseError("unsupported model value", _show(e))


def _show(e) -> str:
    return e if isinstance(e, str) else "(" + " ".join(_show(x) for x in e) + ")"


def parse_model(stdout: str, dialect: Optional[str] = None, declared: Iterable[str] = ()) -> Assignment:
    """Parse solver output in the interval dialect (``x : [lo, hi]``) or define-fun dialect."""
    body = [ln for ln in stdout.splitlines() if ln.strip()]
    while body and body[0].strip().split()[0] in ("sat", "delta-sat", "unsat", "unknown"):
        body = body[1:]
    text = "\n".join(body)
    if dialect is None:
        dialect = "define-fun" if text.lstrip().startswith("(") else "interval"
    out: dict[str, tuple[float, float]] = {}
    if dialect == "interval":
        for ln in body:
            name, sep, rng = ln.partition(":")
            rng = rng.strip()
            if not sep or not (rng.startswith("[") and rng.endswith("]")):
                raise ParseError("expected 'name : [lo, hi]'", ln)
            parts = rng[1:-1].split(",")
            if len(parts) != 2:
                raise ParseError("expected two bounds", ln)
            try:
                lo, hi = (float(p) for p in parts)
            except ValueError:
                raise ParseError("bad interval bound", ln) from None
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ParseError("interval must be finite with lo <= hi", ln)
            out[name.strip()] = (lo, hi)
    elif dialect == "define-fun":
        try:
            forms = read_all(text)
        except SexprError as e:
            raise ParseError(str(e), text[:80]) from None
        if len(forms) == 1 and isinstance(forms[0], list) and (
            not forms[0] or forms[0][0] == "model" or isinstance(forms[0][0], list)
        ):
            forms = forms[0][1:] if forms[0] and forms[0][0] == "model" else forms[0]
        declared_set = set(declared)
        for f in forms:
            if not (isinstance(f, list) and len(f) == 5 and f[0] == "define-fun"):
                raise ParseError("expected (define-fun name () Sort value)", _show(f))
            name, args, _sort, val = f[1], f[2], f[3], f[4]
            if args:
                continue
            try:
                v = _smt_value(val)
            except ParseError:
                if declared_set and name not in declared_set:
                    continue  # macro bodies echoed back by the solver
                raise
            out[name] = (v, v)
    else:
        raise ValueError(f"unknown model dialect {dialect!r}")
    for name in declared:
        out.setdefault(name, (0.0, 0.0))
    return Assignment.from_dict(out)


# ---------------------------------------------------------------- documents


@dataclass(frozen=True)
class SmtDocument:
    n: int
    mode: str
    declarations: tuple[str, ...]
    normalization: str
    operations: tuple[str, ...]
    conditions: tuple[str, ...]
    initial_vars: tuple[str, ...]
    classical_vars: tuple[tuple[str, str], ...] = ()  # (symbol, sort)
    logic: Optional[str] = "QF_NRA"
    exclusions: tuple[str, ...] = ()
    excluded_boxes: tuple[Assignment, ...] = field(default=(), compare=False)

    @property
    def declared_vars(self) -> list[str]:
        return [d.split()[1] for d in self.declarations]

    def text(self) -> str:
        lines = []
        if self.logic:
            lines.append(f"(set-logic {self.logic})")
        lines.append("; 1. variable declarations")
        lines += self.declarations
        lines.append("; 2. normalization of the initial state")
        lines.append(self.normalization)
        lines.append(f"; 3. quantum operations ({self.mode})")
        lines += self.operations
        lines.append("; 4. path conditions")
        lines += self.conditions
        if self.exclusions:
            lines.append("; exclusions of rejected candidates")
            lines += self.exclusions
        lines.append("; 5. commands")
        lines.append("(check-sat)")
        lines.append("(get-model)")
        return "\n".join(lines) + "\n"

    __str__ = text


def _classical_term(e, names: dict, real: bool) -> str:
    if isinstance(e, Num):
        v = e.value
        if isinstance(v, int) and not real:
            return str(v) if v >= 0 else f"(- {-v})"
        return fmt_real(v)
    if isinstance(e, Name):
        return names[e.name]
    if isinstance(e, Neg):
        return f"(- {_classical_term(e.operand, names, real)})"
    return f"({e.op} {_classical_term(e.left, names, real)} {_classical_term(e.right, names, real)})"


def _prob(m: int, x: int) -> str:
    return f"(+ (^ {amp(m, x, 'r')} 2.0) (^ {amp(m, x, 'i')} 2.0))"


def atom_smt(a: Atom, real_symbols: frozenset = frozenset()) -> str:
    p = a.params
    if a.kind == "ClassicalCmp":
        names = dict(p.symbols)
        real = any(names[k] in real_symbols for k in names) or any(
            isinstance(t, Num) and isinstance(t.value, float) for t in (p.lhs, p.rhs)
        )
        lhs = _classical_term(p.lhs, names, real)
        rhs = _classical_term(p.rhs, names, real)
        if p.op == "!=":
            return f"(not (= {lhs} {rhs}))"
        op = {"==": "="}.get(p.op, p.op)
        return f"({op} {lhs} {rhs})"
    m = a.prefix_len
    if a.kind in ("MeasureIn", "MeasureNotIn"):
        parts = []
        for x in a.zero_indices():
            parts += [f"(= {amp(m, x, 'r')} 0.0)", f"(= {amp(m, x, 'i')} 0.0)"]
        return _conj("and", parts)
    if a.kind == "DistEq":
        parts = []
        for o, d in p.dist:
            diff = f"(- {_prob(m, outcome_index(o))} {fmt_real(d)})"
            parts += [f"(< {diff} {fmt_real(p.delta)})", f"(> {diff} {fmt_real(-p.delta)})"]
        return _conj("and", parts)
    if a.kind == "DistNeq":
        parts = []
        for o, d in p.dist:
            diff = f"(- {_prob(m, outcome_index(o))} {fmt_real(d)})"
            parts += [f"(>= {diff} {fmt_real(p.delta)})", f"(<= {diff} {fmt_real(-p.delta)})"]
        return _conj("or", parts)
    op = ">" if a.kind == "ProbGt" else "<="
    parts = [f"({op} {_prob(m, outcome_index(o))} {fmt_real(b)})" for o, b in p.bounds]
    return _conj("and" if p.quantifier == "all" else "or", parts)


def _longest_ops(pc: PathConstraint):
    quantum = [a for a in pc.atoms if a.is_quantum]
    return max((a.ops for a in quantum), key=len, default=())


def emit_smt(
    pc: PathConstraint,
    n: int,
    mode: str = "integrated",
    program: Optional[Program] = None,
    set_logic: bool = True,
) -> SmtDocument:
    """Compile a path constraint into an SMT-LIB2 document."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    dim = 1 << n
    init = [amp(0, x, part) for x in range(dim) for part in ("r", "i")]

    # classical symbols: declared per program parameter when known
    sorts: dict[str, str] = {}
    if program is not None:
        for q in program.classical_params:
            sorts[f"{q.name}_0"] = "Int" if q.kind == "int" else "Real"
    for a in pc.atoms:
        if a.kind == "ClassicalCmp":
            for _, sym in a.params.symbols:
                sorts.setdefault(sym, "Int")
    classical = tuple(sorts.items())
    real_symbols = frozenset(s for s, srt in classical if srt == "Real")

    decls = [f"(declare-fun {v} () Real)" for v in init]
    decls += [f"(declare-fun {s} () {srt})" for s, srt in classical]

    norm_terms = " ".join(f"(^ {v} 2.0)" for v in init)
    normalization = f"(assert (= (+ {norm_terms}) 1.0))"

    ops_section: list[str] = []
    names0 = [amp(0, x, "r") for x in range(dim)] + [amp(0, x, "i") for x in range(dim)]
    quantum = [a for a in pc.atoms if a.is_quantum]
    if mode == "integrated":
        seen = set()
        for a in quantum:
            m = a.prefix_len
            if m == 0 or m in seen:
                continue
            seen.add(m)
            u = integrate_operations(a.ops, n).matrix
            re_rows = np.hstack([u.real, -u.imag])
            im_rows = np.hstack([u.imag, u.real])
            for x in range(dim):
                ops_section.append(f"(define-fun {amp(m, x, 'r')} () Real {linear_form(re_rows[x], names0)})")
                ops_section.append(f"(define-fun {amp(m, x, 'i')} () Real {linear_form(im_rows[x], names0)})")
    else:
        ops = _longest_ops(pc)
        for k in range(1, len(ops) + 1):
            for x in range(dim):
                decls.append(f"(declare-fun {amp(k, x, 'r')} () Real)")
                decls.append(f"(declare-fun {amp(k, x, 'i')} () Real)")
        for k, g in enumerate(ops, start=1):
            u = embed_gate(g, n)
            prev = [amp(k - 1, x, "r") for x in range(dim)] + [amp(k - 1, x, "i") for x in range(dim)]
            re_rows = np.hstack([u.real, -u.imag])
            im_rows = np.hstack([u.imag, u.real])
            eqs = []
            for x in range(dim):
                eqs.append(f"(= {amp(k, x, 'r')} {linear_form(re_rows[x], prev)})")
                eqs.append(f"(= {amp(k, x, 'i')} {linear_form(im_rows[x], prev)})")
            ops_section.append(f"; op {k}: {g.render()}")
            ops_section.append(f"(assert (and {' '.join(eqs)}))")

    conds = []
    for a in pc.atoms:
        conds.append(f"; site {a.site}: {a.kind}")
        conds.append(f"(assert {atom_smt(a, real_symbols)})")

    logic = None
    if set_logic:
        logic = "QF_NIRA" if any(srt == "Int" for _, srt in classical) else "QF_NRA"
    return SmtDocument(
        n=n,
        mode=mode,
        declarations=tuple(decls),
        normalization=normalization,
        operations=tuple(ops_section),
        conditions=tuple(conds),
        initial_vars=tuple(init),
        classical_vars=classical,
        logic=logic,
    )


def add_exclusion(doc: SmtDocument, a: Assignment) -> SmtDocument:
    """Forbid the box of a rejected candidate: some initial variable must leave it."""
    box = a.restricted(doc.initial_vars)
    if not len(box):
        log.warning("exclusion of an empty assignment ignored")
        return doc
    parts = []
    for name, lo, hi in box.intervals:
        parts.append(f"(< {name} {fmt_real(lo)})")
        parts.append(f"(> {name} {fmt_real(hi)})")
    clause = f"(assert {_conj('or', parts)})"
    return replace(
        doc,
        exclusions=doc.exclusions + (clause,),
        excluded_boxes=doc.excluded_boxes + (box,),
    )


def violates_exclusions(doc: SmtDocument, a: Assignment) -> bool:
    """Monotonicity check: does a returned box touch any excluded box?"""
    box = a.restricted(doc.initial_vars)
    return any(box.intersects(ex) for ex in doc.excluded_boxes)


def extract_test_case(a: Assignment, p: Program, renormalize: bool = True) -> TestCase:
    """Midpoint of every interval; amplitudes renormalized; classical values typed."""
    dim = 1 << p.n
    d = a.as_dict()

    def mid(name):
        lo, hi = d.get(name, (0.0, 0.0))
        return lo if lo == hi else (lo + hi) / 2

    amps = np.array([complex(mid(amp(0, x, "r")), mid(amp(0, x, "i"))) for x in range(dim)])
    norm = float(np.linalg.norm(amps))
    if norm < 1e-6:
        raise DegenerateModel(f"model amplitude norm {norm:.3g} too small to renormalize")
    if renormalize:
        amps = amps / norm
    vals = []
    for q in p.classical_params:
        v = mid(f"{q.name}_0")
        vals.append((q.name, int(round(v)) if q.kind == "int" else float(v)))
    return TestCase(tuple(vals), StateVector(p.n, amps))


def raw_amplitudes(a: Assignment, n: int) -> np.ndarray:
    """Pre-renormalization amplitude vector of a model."""
    d = a.as_dict()

    def mid(name):
        lo, hi = d.get(name, (0.0, 0.0))
        return (lo + hi) / 2

    return np.array([complex(mid(amp(0, x, "r")), mid(amp(0, x, "i"))) for x in range(1 << n)])
