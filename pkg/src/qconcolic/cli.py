"""Command-line entry point.

Exit codes for ``test``: 0 full feasible coverage, 2 partial coverage,
3 unsat branches found, 1 runtime errors, 64 usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import benchgen
from .constraints import InfeasibleNegation, path_condition, static_path_condition
from .driver import Config, Report, run_concolic
from .ir import ProgramError
from .parser import load_program
from .simulator import execute_concrete, initial_case
from .smt import MODES, emit_smt
from .solver import SolverFailed
from .symbolic import symbolize

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL, EXIT_UNSAT, EXIT_USAGE = 0, 1, 2, 3, 64
ENV_REPORT_DIR = "QCONCOLIC_REPORT_DIR"

log = logging.getLogger("qconcolic")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _solver_flags(ap: argparse.ArgumentParser):
    ap.add_argument("--max-iters", type=int, default=50, help="solver-call budget (i_max)")
    ap.add_argument("--repeats", type=int, default=10, help="executions per test case (r)")
    ap.add_argument("--delta-sat", type=float, default=0.05)
    ap.add_argument("--solver-cmd", default=None, help="command template with {file} and {delta}, or dreal|z3|builtin")
    ap.add_argument("--timeout", type=float, default=60.0, help="seconds per solver call")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--smt-mode", choices=MODES, default="integrated")


def _config(args) -> Config:
    try:
        return Config(
            i_max=args.max_iters, r=args.repeats, delta_sat=args.delta_sat, solver_cmd=args.solver_cmd,
            timeout=args.timeout, seed=args.seed, smt_mode=args.smt_mode,
            s_results=tuple(args.expect) if getattr(args, "expect", None) else None,
            keep_queries=getattr(args, "keep_queries", None),
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(path: str):
    if not os.path.isfile(path):
        raise UsageError(f"no such program file: {path}")
    return load_program(path)


def _report_path(explicit: Optional[str], name: str) -> str:
    if explicit:
        return explicit
    return os.path.join(os.environ.get(ENV_REPORT_DIR, "."), f"{name}.report.json")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qconcolic", description="Concolic testing for hybrid quantum-classical programs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run concolic testing on one program")
    t.add_argument("program")
    _solver_flags(t)
    t.add_argument("--report", help="report file (default: $QCONCOLIC_REPORT_DIR/<name>.report.json)")
    t.add_argument("--expect", type=int, nargs="+", help="stop once these return values are observed")
    t.add_argument("--keep-queries", metavar="DIR", help="copy every emitted SMT query into DIR")

    b = sub.add_parser("bench", help="generate a benchmark suite")
    b.add_argument("--qubits", type=int, default=1)
    b.add_argument("--scale", choices=sorted(benchgen.SCALE_OPS), default="S")
    b.add_argument("--count", type=int, default=40)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--structures", nargs="+", choices=benchgen.STRUCTURES, default=list(benchgen.STRUCTURES))
    b.add_argument("--out", default=None, help="suite directory (default: suite_q<qubits>_<scale>_<seed>)")

    c = sub.add_parser("compare", help="concolic vs baselines on a suite")
    c.add_argument("suite")
    _solver_flags(c)
    c.add_argument("--baselines", default="vector", help="comma list of vector,circuit,none")
    c.add_argument("--budget", type=int, default=1000, help="baseline samples per program")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", default=None, help="comparison report (default: <suite>/comparison.json)")

    s = sub.add_parser("show-smt", help="print the SMT query for a path")
    s.add_argument("program")
    s.add_argument("--path", default=None, help="branch decisions in execution order, e.g. TFT (default: the initial run's path)")
    s.add_argument("--mode", "--smt-mode", dest="mode", choices=MODES, default="integrated")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--flip-last", action="store_true", help="negate the last decision, as when targeting it")
    s.add_argument("--no-set-logic", action="store_true")
    return ap


# ---------------------------------------------------------------- commands


def _summary(rep: Report) -> str:
    lines = [
        f"program      {rep.program}",
        f"termination  {rep.termination} after {rep.iterations} solver calls",
        f"coverage     {rep.coverage:.3f} ({len(rep.covered)}/{rep.total_pairs} branch polarities)",
        f"feasible     {rep.feasible_coverage:.3f} of {rep.feasible_pairs}",
        f"test cases   {len(rep.cases)}",
        f"results      {rep.results}",
    ]
    for site, pol in rep.unsat_branches:
        lines.append(f"unsat branch site {site} polarity {pol}")
    mq = rep.mean_quality()
    if mq is not None:
        lines.append(f"quality      {mq:.4f} mean over {len(rep.quality)} entries")
    return "\n".join(lines)


def exit_code(rep: Report) -> int:
    if rep.unsat_branches:
        return EXIT_UNSAT
    return EXIT_OK if rep.feasible_coverage >= 1.0 else EXIT_PARTIAL


def cmd_test(args) -> int:
    p = _load(args.program)
    cfg = _config(args)
    rep = run_concolic(p, cfg)
    path = _report_path(args.report, p.name)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(rep.to_json())
    print(_summary(rep))
    print(f"report       {path}")
    return exit_code(rep)


def cmd_bench(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    try:
        specs = benchgen.suite_specs(args.qubits, args.scale, args.count, args.seed, args.structures)
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = args.out or f"suite_q{args.qubits}_{args.scale}_{args.seed}"
    manifest = benchgen.write_suite(out, specs)
    print(f"wrote {len(manifest['programs'])} programs and manifest.json to {out}")
    return EXIT_OK


def _compare_one(job):
    entry, path, cfg, baselines, budget, r, seed = job
    p = load_program(path)
    row = {"file": entry["file"], "sites": len(p.site_conds())}
    rep = run_concolic(p, cfg)
    row["concolic"] = {"coverage": rep.coverage, "feasible_coverage": rep.feasible_coverage,
                       "unsat_branches": rep.unsat_branches, "quality": rep.mean_quality(),
                       "iterations": rep.iterations, "cases": len(rep.cases)}
    for k, gen in enumerate(baselines):
        b = benchgen.run_baseline(p, gen, budget, r, np.random.default_rng([seed, k]))
        row[gen] = {"coverage": b.coverage, "quality": b.mean_quality(), "cases": len(b.cases)}
    return row


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def cmd_compare(args) -> int:
    manifest_path = os.path.join(args.suite, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise UsageError(f"no manifest.json in {args.suite}")
    names = [b.strip() for b in args.baselines.split(",") if b.strip()]
    names = [] if names == ["none"] else names
    for b in names:
        if b not in benchgen.GENERATORS:
            raise UsageError(f"unknown baseline {b!r}; choose from {', '.join(benchgen.GENERATORS)} or none")
    if args.budget < 0:
        raise UsageError("--budget must be >= 0")
    cfg = _config(args)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    jobs = [(e, os.path.join(args.suite, e["file"]), cfg, names, args.budget, args.repeats, args.seed)
            for e in manifest["programs"]]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_compare_one, jobs))
    else:
        rows = [_compare_one(j) for j in jobs]
    methods = ["concolic"] + names
    agg = {m: {"coverage": _mean([r[m]["coverage"] for r in rows]),
               "quality": _mean([r[m]["quality"] for r in rows])} for m in methods}
    agg["concolic"]["feasible_coverage"] = _mean([r["concolic"]["feasible_coverage"] for r in rows])
    for b in names:
        agg[b]["concolic_beats_or_ties"] = sum(r["concolic"]["coverage"] >= r[b]["coverage"] for r in rows)
    out = args.out or os.path.join(args.suite, "comparison.json")
    with open(out, "w") as fh:
        json.dump({"schema_version": "1.0", "config": cfg.echo(), "baselines": names, "budget": args.budget,
                   "programs": rows, "aggregate": agg}, fh, indent=2)
    header = f"{'program':<36}" + "".join(f"{m + ' cov':>16}" for m in methods) + f"{'concolic q':>12}"
    print(header)
    for r in rows:
        q = r["concolic"]["quality"]
        print(f"{r['file']:<36}" + "".join(f"{r[m]['coverage']:>16.3f}" for m in methods)
              + (f"{q:>12.4f}" if q is not None else f"{'-':>12}"))
    print(f"{'MEAN':<36}" + "".join(f"{agg[m]['coverage'] if agg[m]['coverage'] is not None else 0:>16.3f}" for m in methods))
    for m in methods:
        if agg[m]["quality"] is not None:
            print(f"mean quality {m}: {agg[m]['quality']:.4f}")
    print(f"comparison   {out}")
    return EXIT_OK


def _parse_path(text: str) -> list[bool]:
    out = []
    for ch in text.replace(",", "").replace(" ", ""):
        if ch in "Tt1":
            out.append(True)
        elif ch in "Ff0":
            out.append(False)
        else:
            raise UsageError(f"--path takes T/F (or 1/0) per decision, got {ch!r}")
    return out


def cmd_show_smt(args) -> int:
    p = _load(args.program)
    env = symbolize(p)
    if args.path is not None:
        decisions = _parse_path(args.path)
    else:
        tr = execute_concrete(p, initial_case(p), np.random.default_rng(args.seed))
        decisions = [pol for _, pol in tr.path]
    if args.flip_last and decisions:
        decisions[-1] = not decisions[-1]
    try:
        pc = static_path_condition(p, env, decisions)
    except ValueError as e:
        raise UsageError(str(e)) from None
    except InfeasibleNegation as e:
        print(f"; infeasible: {e}")
        return EXIT_OK
    sys.stdout.write(f"; path {pc.render()}\n")
    sys.stdout.write(emit_smt(pc, p.n, args.mode, program=p, set_logic=not args.no_set_logic).text())
    return EXIT_OK


COMMANDS = {"test": cmd_test, "bench": cmd_bench, "compare": cmd_compare, "show-smt": cmd_show_smt}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        print(f"qconcolic: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ProgramError, SolverFailed, OSError) as e:
        print(f"qconcolic: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
