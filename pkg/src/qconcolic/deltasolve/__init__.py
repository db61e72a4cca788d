"""A small delta-complete solver for the QF_NRA/QF_NIRA fragment emitted here.

Runs as ``python -m qconcolic.deltasolve --model --precision D file.smt2`` and
prints results in the interval dialect::

    delta-sat with delta = 0.05
    psi_0_0.r : [0.70710678118654746, 0.70710678118654746]

or ``unsat`` / ``unknown``. A witness is first sought by multistart least
squares; failing that, interval branch-and-prune either finds a box of width
below the precision or refutes the query.
"""
from __future__ import annotations

import hashlib

from .model import Problem, UnsupportedInput, load_script, reduce_script
from .search import Outcome, solve


def solve_text(text: str, delta: float = 0.001, time_limit: float = 60.0, seed=None) -> tuple[Problem, Outcome]:
    if seed is None:
        seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
    p = reduce_script(load_script(text))
    return p, solve(p, delta, time_limit, seed)


def format_outcome(p: Problem, out: Outcome, delta: float, model: bool = True) -> str:
    if out.status in ("unsat", "unknown"):
        return out.status + "\n"
    lines = [f"delta-sat with delta = {delta!r}"]
    if model:
        for i, name in enumerate(p.names):
            lo, hi = float(out.lo[i]), float(out.hi[i])
            if p.sorts[name] == "Int":
                lo = hi = int(round((lo + hi) / 2))
            lines.append(f"{name} : [{lo!r}, {hi!r}]")
    return "\n".join(lines) + "\n"


__all__ = ["solve_text", "format_outcome", "UnsupportedInput", "Outcome", "Problem"]
