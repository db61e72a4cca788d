"""Concolic testing vs random-input baselines on generated suites.

    python3 scripts/coverage_experiment.py --qubits 1 2 --scale S --count 20 --out results/coverage.json

For every (qubits, scale) cell a suite is generated, each program is run
through the concolic driver and each baseline, and mean coverage and mean
quality are tabulated. Quality is the L1 distance between outcome and
reference distributions, averaged over entries; lower is better.
"""
import argparse
import json
import os
import time

import numpy as np

from qconcolic import benchgen
from qconcolic.driver import Config, run_concolic


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def run_cell(qubits, scale, count, seed, budget, r, i_max):
    specs = benchgen.suite_specs(qubits, scale, count, seed)
    rows = []
    for k, spec in enumerate(specs):
        p = benchgen.generate_benchmark(spec)
        t0 = time.perf_counter()
        rep = run_concolic(p, Config(i_max=i_max, r=r, seed=k))
        row = {"program": p.name, "concolic": (rep.coverage, rep.mean_quality()),
               "concolic_s": time.perf_counter() - t0, "unsat": len(rep.unsat_branches)}
        for j, gen in enumerate(benchgen.GENERATORS):
            b = benchgen.run_baseline(p, gen, budget, r, np.random.default_rng([seed, k, j]))
            row[gen] = (b.coverage, b.mean_quality())
        rows.append(row)
    methods = ("concolic",) + benchgen.GENERATORS
    summary = {m: {"coverage": _mean([row[m][0] for row in rows]),
                   "quality": _mean([row[m][1] for row in rows])} for m in methods}
    for gen in benchgen.GENERATORS:
        summary[gen]["concolic_beats_or_ties"] = sum(row["concolic"][0] >= row[gen][0] for row in rows)
    summary["concolic"]["mean_seconds"] = _mean([row["concolic_s"] for row in rows])
    return {"qubits": qubits, "scale": scale, "count": count, "summary": summary, "rows": rows}


def _fmt(x, spec=".3f"):
    return "-" if x is None else format(x, spec)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[1])
    ap.add_argument("--scale", nargs="+", default=["S"], choices=sorted(benchgen.SCALE_OPS))
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--budget", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--max-iters", type=int, default=50)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cells = []
    print(f"{'cell':<10}{'conc cov':>10}{'vec cov':>10}{'circ cov':>10}{'conc q':>10}{'vec q':>10}{'circ q':>10}{'s/prog':>8}")
    for n in args.qubits:
        for scale in args.scale:
            cell = run_cell(n, scale, args.count, args.seed, args.budget, args.repeats, args.max_iters)
            cells.append(cell)
            s = cell["summary"]
            print(f"{f'q{n} {scale}':<10}"
                  + "".join(f"{_fmt(s[m]['coverage']):>10}" for m in ("concolic", "vector", "circuit"))
                  + "".join(f"{_fmt(s[m]['quality'], '.4f'):>10}" for m in ("concolic", "vector", "circuit"))
                  + f"{s['concolic']['mean_seconds']:>8.1f}")
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w") as fh:
            json.dump({"seed": args.seed, "budget": args.budget, "cells": cells}, fh, indent=2)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
