"""Minimal S-expression reader for SMT-LIB text."""
from __future__ import annotations

import re

_TOK = re.compile(r'\s+|;[^\n]*|\(|\)|"(?:[^"]|"")*"|\|[^|]*\||[^\s()";|]+')


class SexprError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if m is None:
            raise SexprError(f"bad character at offset {pos}: {text[pos]!r}")
        t = m.group()
        pos = m.end()
        if t[0].isspace() or t[0] == ";":
            continue
        out.append(t[1:-1] if t[0] == "|" else t)
    return out


def read_all(text: str) -> list:
    """Parse every top-level expression; atoms stay strings, lists become lists."""
    stack: list[list] = [[]]
    for t in tokenize(text):
        if t == "(":
            stack.append([])
        elif t == ")":
            if len(stack) == 1:
                raise SexprError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(t)
    if len(stack) != 1:
        raise SexprError("unbalanced '('")
    return stack[0]
