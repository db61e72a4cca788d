"""Regenerate tests/golden/*.smt2 from the bundled programs.

Run after an intentional change to the SMT emitter, then review the diff.
"""
import os

from qconcolic.constraints import static_path_condition
from qconcolic.parser import load_program
from qconcolic.smt import MODES, emit_smt
from qconcolic.symbolic import symbolize

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
PROGRAMS = os.path.join(ROOT, "src", "qconcolic", "programs")
GOLDEN = os.path.join(ROOT, "tests", "golden")

CASES = [("teleport", "FFF"), ("teleport", "TTF"), ("mi_bug", "TT")]


def main():
    os.makedirs(GOLDEN, exist_ok=True)
    for name, path in CASES:
        p = load_program(os.path.join(PROGRAMS, f"{name}.qcp"))
        pc = static_path_condition(p, symbolize(p), [c == "T" for c in path])
        for mode in MODES:
            out = os.path.join(GOLDEN, f"{name}_{path}.{mode}.smt2")
            with open(out, "w") as fh:
                fh.write(emit_smt(pc, p.n, mode, program=p).text())
            print(out)


if __name__ == "__main__":
    main()
