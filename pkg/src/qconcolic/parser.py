"""Parser and printer for the `.qcp` program text format.

Example::

    program bob(alice: int, qc: qreg(2)) {
      if measure(qc, [0]) == ["1"] { x(qc, 1); }
      if alice == 1 { z(qc, 1); }
      h(qc, 1);
      if measure(qc, [1]) == ["0"] { return 0; } else { return 1; }
    }
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .gates import GATE_SIGNATURES
from .ir import (
    COMPARATORS,
    BinOp,
    Classical,
    Cond,
    DslSyntaxError,
    GateOp,
    If,
    Measure,
    Name,
    Neg,
    Num,
    Param,
    Program,
    Return,
    StateEq,
    StateGt,
    StateLt,
    Stmt,
    Violation,
    ValidationError,
    number_sites,
    validate_program,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|[<>(){}\[\],;:+\-*])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.problems: list[Violation] = []
        self.qreg: Optional[str] = None

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, expected: str):
        t = self.tok
        found = t.text or "end of input"
        raise DslSyntaxError(f"expected {expected}, found {found!r}", t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        t = self.tok
        if not self.accept(text):
            self.error(repr(text))
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.error("identifier")
        self.i += 1
        return t.text

    def string(self) -> str:
        t = self.tok
        if t.kind != "string":
            self.error("string literal")
        self.i += 1
        return t.text[1:-1]

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            self.error("integer")
        self.i += 1
        return int(t.text)

    def real(self) -> float:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "number":
            self.error("number")
        self.i += 1
        v = float(t.text)
        return -v if neg else v

    def comma_list(self, close: str, item):
        out = []
        if self.accept(close):
            return out
        while True:
            out.append(item())
            if self.accept(close):
                return out
            self.expect(",")

    # grammar
    def program(self) -> Program:
        self.expect("program")
        name = self.ident()
        self.expect("(")
        params = tuple(self.comma_list(")", self.param))
        qregs = [p for p in params if p.kind == "qreg"]
        self.qreg = qregs[0].name if qregs else None
        ref_dist, ref_site = None, None
        if self.accept("reference"):
            self.expect("(")
            if self.tok.text != "{":
                ref_site = self.integer()
                self.expect(",")
            ref_dist = self.distribution()
            self.expect(")")
        body = self.block()
        if self.tok.kind != "eof":
            self.error("end of input")
        return Program(name, params, number_sites(body), ref_dist, ref_site)

    def param(self) -> Param:
        name = self.ident()
        self.expect(":")
        kind = self.ident()
        if kind == "qreg":
            self.expect("(")
            size = self.integer()
            self.expect(")")
            return Param(name, "qreg", size)
        if kind not in ("int", "real"):
            self.i -= 1
            self.error("'int', 'real' or 'qreg'")
        return Param(name, kind)

    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.error("'}'")
            stmts.append(self.statement())
        return tuple(stmts)

    def statement(self) -> Stmt:
        t = self.tok
        if t.kind == "ident" and t.text == "if":
            return self.if_stmt()
        if self.accept("return"):
            e = self.expr()
            self.expect(";")
            return Return(e)
        if t.kind == "ident" and t.text in GATE_SIGNATURES:
            return self.gate()
        self.error("statement")

    def if_stmt(self) -> If:
        t = self.expect("if")
        cond = self.cond()
        then = self.block()
        orelse: tuple[Stmt, ...] = ()
        if self.accept("else"):
            if self.tok.text == "if" and self.tok.kind == "ident":
                orelse = (self.if_stmt(),)
            else:
                orelse = self.block()
        return If(cond, then, orelse, -1, (t.line, t.col))

    def qreg_ref(self) -> str:
        t = self.tok
        name = self.ident()
        if name != self.qreg:
            self.problems.append(
                Violation(f"{name!r} is not the quantum register", f"{t.line}:{t.col}")
            )
        return name

    def gate(self) -> GateOp:
        t = self.tok
        name = self.ident()
        arity, n_angles = GATE_SIGNATURES[name]
        self.expect("(")
        self.qreg_ref()
        args = []
        while self.accept(","):
            args.append((self.tok, self.expr()))
        self.expect(")")
        self.expect(";")
        where = f"{t.line}:{t.col}"
        if len(args) != arity + n_angles:
            self.problems.append(
                Violation(f"{name} takes {arity} qubits and {n_angles} angles", where)
            )
        qubits, angles = [], []
        for k, (at, e) in enumerate(args):
            if k < arity:
                if isinstance(e, Num) and isinstance(e.value, int):
                    qubits.append(e.value)
                else:
                    self.problems.append(Violation("qubit index must be an integer literal", where))
            else:
                v = _literal(e)
                if v is None:
                    self.problems.append(Violation("gate angle must be a numeric constant", where))
                else:
                    angles.append(float(v))
        return GateOp(name, tuple(qubits), tuple(angles))

    def distribution(self) -> tuple[tuple[str, float], ...]:
        self.expect("{")

        def entry():
            k = self.string()
            self.expect(":")
            return (k, self.real())

        return tuple(self.comma_list("}", entry))

    def cond(self) -> Cond:
        t = self.tok
        if t.kind == "ident" and t.text == "measure":
            self.i += 1
            self.expect("(")
            q = self.qreg_ref()
            self.expect(",")
            self.expect("[")
            qubits = tuple(self.comma_list("]", self.integer))
            self.expect(")")
            self.expect("==")
            self.expect("[")
            outs = tuple(self.comma_list("]", self.string))
            return Measure(q, qubits, outs)
        if t.kind == "ident" and t.text == "check_state_eq":
            self.i += 1
            self.expect("(")
            q = self.qreg_ref()
            self.expect(",")
            dist = self.distribution()
            self.expect(",")
            delta = self.real()
            self.expect(")")
            return StateEq(q, dist, delta)
        if t.kind == "ident" and t.text in ("check_state_gt", "check_state_lt"):
            self.i += 1
            self.expect("(")
            q = self.qreg_ref()
            self.expect(",")
            self.expect("[")

            def pair():
                self.expect("(")
                o = self.string()
                self.expect(",")
                v = self.real()
                self.expect(")")
                return (o, v)

            pairs = tuple(self.comma_list("]", pair))
            self.expect(",")
            delta = self.real()
            self.expect(")")
            cls = StateGt if t.text == "check_state_gt" else StateLt
            return cls(q, pairs, delta)
        lhs = self.expr()
        op = self.tok.text
        if op not in COMPARATORS:
            self.error("comparison operator")
        self.i += 1
        rhs = self.expr()
        return Classical(lhs, op, rhs)

    def expr(self):
        e = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.accept("*"):
            e = BinOp("*", e, self.factor())
        return e

    def factor(self):
        t = self.tok
        if self.accept("-"):
            return Neg(self.factor())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "number":
            self.i += 1
            if re.fullmatch(r"\d+", t.text):
                return Num(int(t.text))
            return Num(float(t.text))
        if t.kind == "ident" and t.text not in ("if", "else", "return", "program"):
            self.i += 1
            return Name(t.text)
        self.error("expression")


def _literal(e):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        v = _literal(e.operand)
        return None if v is None else -v
    return None


def parse_program(text: str, validate: bool = True) -> Program:
    """Parse program text; raises DslSyntaxError or ValidationError."""
    p = _Parser(text)
    prog = p.program()
    problems = list(p.problems)
    if validate and not problems:
        problems = validate_program(prog)
    if problems:
        raise ValidationError(problems)
    return prog


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse_program(f.read())


# ---------------------------------------------------------------- printing


def _num(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def format_expr(e, prec: int = 0) -> str:
    if isinstance(e, Num):
        return _num(e.value)
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Neg):
        return "-" + format_expr(e.operand, 3)
    p = 1 if e.op in "+-" else 2
    s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
    return f"({s})" if p < prec else s


def _dist(d) -> str:
    return "{" + ", ".join(f'"{k}": {_num(v)}' for k, v in d) + "}"


def format_cond(c: Cond) -> str:
    if isinstance(c, Classical):
        return f"{format_expr(c.lhs)} {c.op} {format_expr(c.rhs)}"
    if isinstance(c, Measure):
        qs = ", ".join(map(str, c.qubits))
        outs = ", ".join(f'"{o}"' for o in c.outcomes)
        return f"measure({c.qreg}, [{qs}]) == [{outs}]"
    if isinstance(c, StateEq):
        return f"check_state_eq({c.qreg}, {_dist(c.dist)}, {_num(c.delta)})"
    name = "check_state_gt" if isinstance(c, StateGt) else "check_state_lt"
    pairs = ", ".join(f'("{o}", {_num(v)})' for o, v in c.pairs)
    return f"{name}({c.qreg}, [{pairs}], {_num(c.delta)})"


def unparse(p: Program) -> str:
    qreg = p.qreg.name
    lines: list[str] = []

    def params() -> str:
        out = []
        for q in p.params:
            out.append(f"{q.name}: qreg({q.size})" if q.kind == "qreg" else f"{q.name}: {q.kind}")
        return ", ".join(out)

    def emit_if(st: If, pad: str, lead: str):
        lines.append(f"{lead}if {format_cond(st.cond)} {{")
        emit(st.then, pad + "  ")
        if len(st.orelse) == 1 and isinstance(st.orelse[0], If):
            emit_if(st.orelse[0], pad, f"{pad}}} else ")
        elif st.orelse:
            lines.append(f"{pad}}} else {{")
            emit(st.orelse, pad + "  ")
            lines.append(f"{pad}}}")
        else:
            lines.append(f"{pad}}}")

    def emit(stmts, pad: str):
        for st in stmts:
            if isinstance(st, GateOp):
                args = [qreg] + [str(q) for q in st.qubits] + [repr(float(a)) for a in st.angles]
                lines.append(f"{pad}{st.gate}({', '.join(args)});")
            elif isinstance(st, Return):
                lines.append(f"{pad}return {format_expr(st.expr)};")
            else:
                emit_if(st, pad, pad)

    header = f"program {p.name}({params()})"
    if p.reference_dist is not None:
        site = "" if p.reference_site is None else f"{p.reference_site}, "
        header += f" reference({site}{_dist(p.reference_dist)})"
    lines.append(header + " {")
    emit(p.body, "  ")
    lines.append("}")
    return "\n".join(lines) + "\n"
