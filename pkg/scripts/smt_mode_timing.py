"""Solver time per query, integrated vs per-op encoding.

    python3 scripts/smt_mode_timing.py --qubits 1 2 --count 10

Enumerates every branch-decision prefix of generated programs, emits the query in
both modes, and times the configured solver on each.
"""
import argparse
import itertools
import statistics
import time

from qconcolic import benchgen
from qconcolic.constraints import InfeasibleNegation, static_path_condition
from qconcolic.smt import MODES, emit_smt
from qconcolic.solver import SolverConfig, invoke_solver
from qconcolic.symbolic import symbolize


def paths(depth):
    # every decision sequence up to depth; too-long ones are rejected later
    for k in range(1, depth + 1):
        for bits in itertools.product([True, False], repeat=k):
            yield list(bits)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[1])
    ap.add_argument("--scale", default="S", choices=sorted(benchgen.SCALE_OPS))
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--solver-cmd", default=None)
    ap.add_argument("--timeout", type=float, default=60.0)
    args = ap.parse_args()

    cfg = SolverConfig(cmd=args.solver_cmd, timeout=args.timeout)
    print(f"{'qubits':<8}{'mode':<12}{'queries':>8}{'median s':>10}{'max s':>10}")
    for n in args.qubits:
        times = {m: [] for m in MODES}
        for spec in benchgen.suite_specs(n, args.scale, args.count, args.seed):
            p = benchgen.generate_benchmark(spec)
            env = symbolize(p)
            seen = set()
            for decisions in paths(len(p.site_conds())):
                try:
                    pc = static_path_condition(p, env, decisions)
                except (ValueError, InfeasibleNegation):
                    continue
                key = pc.render()
                if key in seen:
                    continue
                seen.add(key)
                for mode in MODES:
                    doc = emit_smt(pc, p.n, mode, program=p)
                    t0 = time.perf_counter()
                    invoke_solver(doc, cfg)
                    times[mode].append(time.perf_counter() - t0)
        for mode in MODES:
            ts = times[mode]
            if ts:
                print(f"{n:<8}{mode:<12}{len(ts):>8}{statistics.median(ts):>10.3f}{max(ts):>10.3f}")


if __name__ == "__main__":
    main()
