"""The concolic loop: execute, record, pick an unexplored branch, solve, retry.

Each solver call counts as one iteration. A candidate input is run up to
``r`` times; any run with a previously unseen trace gets the case accepted.
When no run reaches the targeted branch the candidate's box is excluded and
the query re-solved, a bounded number of times.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .constraints import InfeasibleNegation
from .forktree import ForkTree, Target
from .ir import Program, StateEq, check_program, outcome_index
from .simulator import StateVector, TestCase, Trace, execute_concrete, initial_case
from .smt import MODES, DegenerateModel, SmtDocument, add_exclusion, emit_smt, extract_test_case, violates_exclusions
from .solver import SolverConfig, SolverError, SolverFailed, SolverVerdict, Timeout, Unsat, invoke_solver
from .symbolic import symbolize

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

Pair = tuple[int, bool]


@dataclass(frozen=True)
class Config:
    i_max: int = 50
    r: int = 10
    delta_sat: float = 0.05
    solver_cmd: Optional[str] = None
    timeout: float = 60.0
    seed: int = 0
    smt_mode: str = "integrated"
    s_results: Optional[tuple] = None
    max_exclusions: int = 3
    set_logic: bool = True
    keep_queries: Optional[str] = None

    def __post_init__(self):
        if self.i_max < 0:
            raise ValueError("i_max must be >= 0")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.smt_mode not in MODES:
            raise ValueError(f"smt_mode must be one of {MODES}")
        if self.delta_sat <= 0 or self.timeout <= 0:
            raise ValueError("delta_sat and timeout must be positive")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.solver_cmd, self.delta_sat, self.timeout, self.keep_queries)

    def echo(self) -> dict:
        d = asdict(self)
        d["solver_cmd"] = self.solver_config().resolved_cmd()
        if self.s_results is not None:
            d["s_results"] = list(self.s_results)
        return d


@dataclass
class CaseRecord:
    index: int
    test_case: TestCase
    traces: list  # [(path, result)] per run
    target: Optional[list] = None  # path of the targeted branch
    iteration: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "iteration": self.iteration,
            "target": self.target,
            "input": self.test_case.to_dict(),
            "traces": [{"path": [[s, p] for s, p in path], "result": res} for path, res in self.traces],
        }


@dataclass
class QualityEntry:
    case: int
    site: Optional[int]
    kind: str  # "target" | "reference"
    value: float
    bound: Optional[float] = None


@dataclass
class SolverCall:
    iteration: int
    target: list
    verdict: str
    elapsed: float
    exclusions: int = 0


@dataclass
class Report:
    program: str
    method: str = "concolic"
    config: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    covered: list = field(default_factory=list)
    total_pairs: int = 0
    coverage: float = 0.0
    feasible_pairs: int = 0
    feasible_coverage: float = 0.0
    unsat_branches: list = field(default_factory=list)
    quality: list = field(default_factory=list)
    solver_calls: list = field(default_factory=list)
    results: list = field(default_factory=list)
    iterations: int = 0
    termination: str = ""
    timings: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def inputs(self) -> list[TestCase]:
        return [c.test_case for c in self.cases]

    def mean_quality(self, kind: Optional[str] = None) -> Optional[float]:
        vals = [q.value for q in self.quality if kind is None or q.kind == kind]
        return float(np.mean(vals)) if vals else None

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "schema_version": self.schema_version,
            "program": self.program,
            "method": self.method,
            "config": self.config,
            "termination": self.termination,
            "iterations": self.iterations,
            "coverage": self.coverage,
            "feasible_coverage": self.feasible_coverage,
            "covered": [list(p) for p in self.covered],
            "total_pairs": self.total_pairs,
            "feasible_pairs": self.feasible_pairs,
            "unsat_branches": [list(p) for p in self.unsat_branches],
            "results": self.results,
            "quality": [asdict(q) for q in self.quality],
            "cases": [c.to_dict() for c in self.cases],
            "solver_calls": [asdict(c) for c in self.solver_calls],
        }
        if timings:
            d["timings"] = self.timings
        else:
            for c in d["solver_calls"]:
                c.pop("elapsed")
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=False, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# ---------------------------------------------------------------- metrics


def quality(final_state, D) -> float:
    """Sum over outcomes of |p_x - D_x|; outcomes missing from D read as 0."""
    probs = (final_state.probabilities() if isinstance(final_state, StateVector) else np.abs(np.asarray(final_state)) ** 2)
    ref = np.zeros(len(probs))
    for o, v in dict(D).items():
        ref[outcome_index(o)] = v
    return float(np.abs(probs - ref).sum())


def all_pairs(p: Program) -> list[Pair]:
    return [(s, pol) for s in sorted(p.site_conds()) for pol in (True, False)]


def branch_coverage(rep: Report, p: Program) -> float:
    total = 2 * len(p.site_conds())
    if total == 0:
        return 1.0
    return len({tuple(x) for x in rep.covered}) / total


def _feasible_pairs(p: Program, tree: Optional[ForkTree], unsat: list[Pair]) -> int:
    pairs = set(all_pairs(p)) - set(unsat)
    if tree is not None and tree.nodes and tree.select_target() is None and not tree.any_abandoned():
        reached = {n.site for n in tree.nodes.values()}
        pairs = {x for x in pairs if x[0] in reached}
    return len(pairs)


def _unsat_branches(tree: ForkTree, covered: set) -> list[Pair]:
    by_site: dict[Pair, list[bool]] = {}
    for node in tree.nodes.values():
        for pol in (True, False):
            by_site.setdefault((node.site, pol), []).append(node.unsat[pol])
    return sorted(k for k, v in by_site.items() if all(v) and k not in covered)


def finish_coverage(rep: Report, p: Program, covered: set, tree: Optional[ForkTree] = None):
    rep.covered = sorted(covered)
    rep.total_pairs = 2 * len(p.site_conds())
    rep.coverage = branch_coverage(rep, p)
    rep.unsat_branches = _unsat_branches(tree, covered) if tree is not None else []
    rep.feasible_pairs = _feasible_pairs(p, tree, rep.unsat_branches)
    rep.feasible_coverage = 1.0 if rep.feasible_pairs == 0 else min(1.0, len(covered) / rep.feasible_pairs)


def reference_entries(p: Program, case_index: int, trace: Trace, any_polarity: bool) -> list[QualityEntry]:
    """Quality against the program's reference distribution, if it has one."""
    if p.reference_dist is None:
        return []
    if p.reference_site is None:
        return [QualityEntry(case_index, None, "reference", quality(trace.final_state, p.reference_dist))]
    for st in trace.steps:
        if st.site == p.reference_site and (st.polarity or any_polarity) and st.state is not None:
            return [QualityEntry(case_index, st.site, "reference", quality(st.state, p.reference_dist))]
    return []


# ---------------------------------------------------------------- the loop

SolverFn = Callable[[SmtDocument], SolverVerdict]


def _verdict_name(v) -> str:
    return type(v).__name__


def _prefix_of(short, long) -> bool:
    return tuple(long[: len(short)]) == tuple(short)


def run_concolic(p: Program, cfg: Config = Config(), solver: Optional[SolverFn] = None) -> Report:
    check_program(p)
    t_start = time.monotonic()
    rng = np.random.default_rng(cfg.seed)
    env = symbolize(p)
    tree = ForkTree(p, env)
    conds = p.site_conds()
    scfg = cfg.solver_config()
    solve = solver or (lambda doc: invoke_solver(doc, scfg))

    rep = Report(program=p.name, method="concolic", config=cfg.echo())
    covered: set[Pair] = set()
    seen: set = set()
    results: list = []
    solver_time = 0.0

    def run_case(tc: TestCase, target: Optional[Target], iteration: int):
        traces: list[Trace] = []
        hit_trace = None
        novel = False
        for _ in range(cfg.r):
            tr = execute_concrete(p, tc, rng)
            traces.append(tr)
            tree.update(tr)
            covered.update(tr.path)
            if tr.result not in results:
                results.append(tr.result)
            if tr.key not in seen:
                seen.add(tr.key)
                novel = True
            if target is None:
                if novel:
                    break
            elif _prefix_of(target.path, tr.path):
                hit_trace = tr
                break
        if novel:
            rec = CaseRecord(len(rep.cases), tc, [(t.path, t.result) for t in traces],
                             None if target is None else [list(x) for x in target.path], iteration)
            rep.cases.append(rec)
            rep.quality.extend(reference_entries(p, rec.index, hit_trace or traces[-1], any_polarity=False))
            if hit_trace is not None and target.polarity and isinstance(conds[target.site], StateEq):
                step = hit_trace.steps[len(target.prefix)]
                c = conds[target.site]
                rep.quality.append(QualityEntry(
                    rec.index, target.site, "target", quality(step.state, c.dist),
                    (1 << p.n) * (c.delta + cfg.delta_sat)))
        return hit_trace is not None

    def results_done() -> bool:
        return cfg.s_results is not None and set(cfg.s_results) <= set(results)

    run_case(initial_case(p), None, 0)
    iterations = 0
    termination = ""
    while True:
        if results_done():
            termination = "expected results observed"
            break
        target = tree.select_target()
        if target is None:
            termination = "fork tree explored"
            break
        if iterations >= cfg.i_max:
            termination = "iteration limit"
            break
        try:
            pc = tree.target_constraint(target)
        except InfeasibleNegation:
            tree.mark_unsat(target)
            continue
        doc = emit_smt(pc, p.n, cfg.smt_mode, program=p, set_logic=cfg.set_logic)
        excluded = 0
        while iterations < cfg.i_max:
            iterations += 1
            verdict = solve(doc)
            elapsed = getattr(verdict, "elapsed", 0.0)
            solver_time += elapsed
            rep.solver_calls.append(SolverCall(iterations, [list(x) for x in target.path], _verdict_name(verdict), elapsed, excluded))
            if isinstance(verdict, Unsat):
                tree.mark_unsat(target)
                break
            if isinstance(verdict, Timeout):
                tree.mark_abandoned(target)
                break
            if isinstance(verdict, SolverError):
                raise SolverFailed(verdict)
            a = verdict.assignment
            if violates_exclusions(doc, a):
                log.warning("solver returned a box inside an excluded region; abandoning %s", target.path)
                rep.solver_calls[-1].verdict += " (rejected: excluded box)"
                tree.mark_abandoned(target)
                break
            try:
                tc = extract_test_case(a, p)
            except DegenerateModel as e:
                log.warning("%s; abandoning %s", e, target.path)
                tree.mark_abandoned(target)
                break
            if run_case(tc, target, iterations):
                break
            if excluded >= cfg.max_exclusions:
                tree.mark_abandoned(target)
                break
            doc = add_exclusion(doc, a)
            excluded += 1
        if results_done():
            termination = "expected results observed"
            break

    rep.iterations = iterations
    rep.termination = termination
    rep.results = results
    finish_coverage(rep, p, covered, tree)
    rep.timings = {"total_s": time.monotonic() - t_start, "solver_s": solver_time}
    return rep
