"""Program model for hybrid quantum-classical programs.

A program takes classical parameters plus exactly one quantum register and
consists of gate statements, conditionals and returns. Qubit 0 is the least
significant bit of a basis-state index. Outcome strings list bits in
ascending qubit order, so for a full-register outcome character ``j`` is the
value of qubit ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Optional, Union

from .gates import GATE_SIGNATURES

MAX_DEPTH = 8
NORM_TOL = 1e-9


class ProgramError(Exception):
    pass


class DslSyntaxError(ProgramError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ValidationError(ProgramError):
    def __init__(self, violations: list["Violation"]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Union[Num, Name, BinOp, Neg]

COMPARATORS = ("==", "!=", "<", "<=", ">", ">=")
NEGATED_CMP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def expr_names(e: Expr) -> Iterator[str]:
    if isinstance(e, Name):
        yield e.name
    elif isinstance(e, BinOp):
        yield from expr_names(e.left)
        yield from expr_names(e.right)
    elif isinstance(e, Neg):
        yield from expr_names(e.operand)


def eval_expr(e: Expr, env: dict[str, Union[int, float]]) -> Union[int, float]:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        return env[e.name]
    if isinstance(e, Neg):
        return -eval_expr(e.operand, env)
    a, b = eval_expr(e.left, env), eval_expr(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    return a * b


def compare(a, op: str, b) -> bool:
    return {
        "==": a == b, "!=": a != b, "<": a < b,
        "<=": a <= b, ">": a > b, ">=": a >= b,
    }[op]


# ---------------------------------------------------------------- conditions


@dataclass(frozen=True)
class Classical:
    lhs: Expr
    op: str
    rhs: Expr


@dataclass(frozen=True)
class Measure:
    qreg: str
    qubits: tuple[int, ...]
    outcomes: tuple[str, ...]


@dataclass(frozen=True)
class StateEq:
    qreg: str
    dist: tuple[tuple[str, float], ...]
    delta: float


@dataclass(frozen=True)
class StateGt:
    qreg: str
    pairs: tuple[tuple[str, float], ...]
    delta: float


@dataclass(frozen=True)
class StateLt:
    qreg: str
    pairs: tuple[tuple[str, float], ...]
    delta: float


Cond = Union[Classical, Measure, StateEq, StateGt, StateLt]
QUANTUM_CONDS = (Measure, StateEq, StateGt, StateLt)


# ---------------------------------------------------------------- statements


@dataclass(frozen=True)
class GateOp:
    gate: str
    qubits: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def render(self) -> str:
        args = [str(q) for q in self.qubits] + [repr(float(a)) for a in self.angles]
        return f"{self.gate}({', '.join(args)})"


@dataclass(frozen=True)
class If:
    cond: Cond
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()
    site: int = -1
    span: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Return:
    expr: Expr


Stmt = Union[GateOp, If, Return]


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # "int" | "real" | "qreg"
    size: int = 0


@dataclass(frozen=True)
class BranchSite:
    id: int
    cond_ref: tuple  # path of (statement index, "then"/"else") steps to the If
    source_span: tuple[int, int]


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    reference_dist: Optional[tuple[tuple[str, float], ...]] = None
    reference_site: Optional[int] = None

    @property
    def qreg(self) -> Param:
        return next(p for p in self.params if p.kind == "qreg")

    @property
    def n(self) -> int:
        return self.qreg.size

    @property
    def classical_params(self) -> tuple[Param, ...]:
        return tuple(p for p in self.params if p.kind != "qreg")

    @property
    def branch_sites(self) -> list[BranchSite]:
        return list_branches(self)

    def site_conds(self) -> dict[int, Cond]:
        return {s.site: s.cond for s, _ in iter_ifs(self.body)}


def iter_ifs(body: tuple[Stmt, ...], path: tuple = ()) -> Iterator[tuple[If, tuple]]:
    """Yield every If in pre-order with its path from the program body."""
    for i, st in enumerate(body):
        if isinstance(st, If):
            here = path + (i,)
            yield st, here
            yield from iter_ifs(st.then, here + ("then",))
            yield from iter_ifs(st.orelse, here + ("else",))


def number_sites(body: tuple[Stmt, ...]) -> tuple[Stmt, ...]:
    """Reassign site ids in pre-order, returning a new body."""
    counter = iter(range(1 << 30))

    def walk(stmts):
        out = []
        for st in stmts:
            if isinstance(st, If):
                sid = next(counter)
                out.append(If(st.cond, walk(st.then), walk(st.orelse), sid, st.span))
            else:
                out.append(st)
        return tuple(out)

    return walk(body)


def list_branches(p: Program) -> list[BranchSite]:
    return [BranchSite(st.site, path, st.span) for st, path in iter_ifs(p.body)]


def all_outcomes(k: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=k)]


def outcome_index(outcome: str) -> int:
    """Basis index of a full-register outcome (character j is qubit j)."""
    return sum(1 << j for j, b in enumerate(outcome) if b == "1")


def measured_bits(index: int, qubits: tuple[int, ...]) -> str:
    """Outcome string of the measured qubits for a basis index."""
    return "".join("1" if index >> q & 1 else "0" for q in sorted(qubits))


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    message: str
    where: str = ""

    def __str__(self) -> str:
        return f"{self.where}: {self.message}" if self.where else self.message


ValidationReport = list


def validate_program(p: Program, max_depth: int = MAX_DEPTH) -> ValidationReport:
    """Collect every invariant violation; an empty list means the program is valid."""
    out: list[Violation] = []
    names = [q.name for q in p.params]
    if len(set(names)) != len(names):
        out.append(Violation("duplicate parameter names"))
    qregs = [q for q in p.params if q.kind == "qreg"]
    if len(qregs) != 1:
        out.append(Violation(f"expected exactly one qreg parameter, got {len(qregs)}"))
        return out
    n = qregs[0].size
    if n < 1:
        out.append(Violation("qreg size must be >= 1"))
        return out
    qname = qregs[0].name
    classical = {q.name for q in p.params if q.kind in ("int", "real")}
    for q in p.params:
        if q.kind not in ("int", "real", "qreg"):
            out.append(Violation(f"unknown parameter kind {q.kind!r}", q.name))

    def check_outcome(o: str, k: int, where: str) -> bool:
        if len(o) != k or set(o) - {"0", "1"}:
            out.append(Violation(f"outcome {o!r} is not a {k}-bit string", where))
            return False
        return True

    def check_expr(e: Expr, where: str):
        for nm in expr_names(e):
            if nm not in classical:
                out.append(Violation(f"unbound classical name {nm!r}", where))

    def check_cond(c: Cond, where: str):
        if isinstance(c, Classical):
            if c.op not in COMPARATORS:
                out.append(Violation(f"unknown comparator {c.op!r}", where))
            check_expr(c.lhs, where)
            check_expr(c.rhs, where)
            return
        if c.qreg != qname:
            out.append(Violation(f"unknown quantum register {c.qreg!r}", where))
        if isinstance(c, Measure):
            qs = c.qubits
            if not qs:
                out.append(Violation("empty measured qubit list", where))
            if len(set(qs)) != len(qs):
                out.append(Violation("measured qubits not distinct", where))
            if any(not 0 <= q < n for q in qs):
                out.append(Violation(f"measured qubit out of range [0, {n})", where))
            if not c.outcomes:
                out.append(Violation("empty expected outcome list", where))
            if len(set(c.outcomes)) != len(c.outcomes):
                out.append(Violation("duplicate expected outcomes", where))
            ok = all(check_outcome(o, len(qs), where) for o in c.outcomes)
            if ok and qs and len(set(c.outcomes)) >= 2 ** len(qs):
                out.append(Violation("negation infeasible: outcomes cover every result", where))
        elif isinstance(c, StateEq):
            keys = [o for o, _ in c.dist]
            for o in keys:
                check_outcome(o, n, where)
            if sorted(keys) != all_outcomes(n):
                out.append(Violation("distribution must list every outcome exactly once", where))
            if any(v < 0 or v > 1 for _, v in c.dist):
                out.append(Violation("probability outside [0, 1]", where))
            total = sum(v for _, v in c.dist)
            if abs(total - 1.0) > NORM_TOL:
                out.append(Violation(f"distribution sums to {total!r}, not 1", where))
            if not c.delta > 0:
                out.append(Violation("delta must be positive", where))
        else:
            keys = [o for o, _ in c.pairs]
            if not keys:
                out.append(Violation("empty probability pair list", where))
            for o in keys:
                check_outcome(o, n, where)
            if len(set(keys)) != len(keys):
                out.append(Violation("outcomes not distinct", where))
            if any(v < 0 or v > 1 for _, v in c.pairs):
                out.append(Violation("probability outside [0, 1]", where))
            if not c.delta > 0:
                out.append(Violation("delta must be positive", where))

    def walk(stmts, depth: int, where: str):
        if depth > max_depth:
            out.append(Violation(f"nesting deeper than {max_depth}", where))
            return
        for st in stmts:
            if isinstance(st, GateOp):
                loc = f"{where}{st.render()}"
                sig = GATE_SIGNATURES.get(st.gate)
                if sig is None:
                    out.append(Violation(f"unknown gate {st.gate!r}", loc))
                    continue
                if len(st.qubits) != sig[0]:
                    out.append(Violation(f"gate takes {sig[0]} qubits", loc))
                if len(st.angles) != sig[1]:
                    out.append(Violation(f"gate takes {sig[1]} angles", loc))
                if any(not 0 <= q < n for q in st.qubits):
                    out.append(Violation(f"qubit index out of range [0, {n})", loc))
                if len(set(st.qubits)) != len(st.qubits):
                    out.append(Violation("qubit indices not distinct", loc))
            elif isinstance(st, If):
                loc = f"site {st.site}"
                check_cond(st.cond, loc)
                walk(st.then, depth + 1, where)
                walk(st.orelse, depth + 1, where)
            elif isinstance(st, Return):
                check_expr(st.expr, where + "return")

    walk(p.body, 1, "")
    sites = [s.id for s in list_branches(p)]
    if len(set(sites)) != len(sites):
        out.append(Violation("branch site ids not unique"))
    if p.reference_dist is not None:
        keys = sorted(o for o, _ in p.reference_dist)
        if keys != all_outcomes(n):
            out.append(Violation("reference distribution must list every outcome", "reference"))
        if abs(sum(v for _, v in p.reference_dist) - 1.0) > NORM_TOL:
            out.append(Violation("reference distribution does not sum to 1", "reference"))
    if p.reference_site is not None and p.reference_site not in sites:
        out.append(Violation(f"reference site {p.reference_site} does not exist", "reference"))
    return out


def check_program(p: Program) -> Program:
    report = validate_program(p)
    if report:
        raise ValidationError(report)
    return p
