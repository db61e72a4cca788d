import json

import numpy as np
import pytest

from qconcolic.driver import (
    SCHEMA_VERSION,
    Config,
    Report,
    branch_coverage,
    quality,
    run_concolic,
)
from qconcolic.parser import parse_program
from qconcolic.simulator import StateVector
from qconcolic.smt import Assignment
from qconcolic.solver import DeltaSat, SolverError, SolverFailed, Timeout, Unsat

S2 = float(1 / np.sqrt(2))
NAMES2 = [f"psi_0_{x}.{p}" for x in range(4) for p in "ri"]


def fixed_box_solver(values, width=0.0):
    """Mock solver: always the same box, recording each document it is handed."""
    box = Assignment.from_dict({k: (v - width, v + width) for k, v in values.items()})
    docs = []

    def solve(doc):
        docs.append(doc)
        return DeltaSat(box, 0.05, 0.0)

    solve.docs = docs
    return solve


ZERO_STATE = dict.fromkeys(NAMES2, 0.0) | {"psi_0_0.r": 1.0, "alice_0": 0.0}
# h(qc, 1) maps this to |00>, so the final measurement always gives "0"
PLUS_ON_1 = dict.fromkeys(NAMES2, 0.0) | {"psi_0_0.r": S2, "psi_0_2.r": S2, "alice_0": 0.0}


def test_teleport_full_coverage(teleport):
    rep = run_concolic(teleport, Config(i_max=20, r=10, seed=1))
    assert rep.coverage == 1.0 and rep.feasible_coverage == 1.0
    assert sorted(rep.results) == [0, 1]
    assert rep.iterations <= 20
    assert any(c.test_case.values["alice"] != 0 for c in rep.cases)
    assert rep.unsat_branches == []


def test_mi_bug_unsat_branch(mi_bug):
    rep = run_concolic(mi_bug, Config(seed=1))
    assert (1, True) in rep.unsat_branches
    assert "Unsat" in [c.verdict for c in rep.solver_calls]
    assert rep.feasible_coverage == 1.0 and rep.coverage < 1.0


def test_zero_iterations(teleport):
    rep = run_concolic(teleport, Config(i_max=0))
    assert rep.iterations == 0 and rep.solver_calls == []
    assert len(rep.cases) == 1
    assert rep.coverage == 0.5  # one polarity at each of the three sites
    assert rep.termination == "iteration limit"


def test_exclusion_refinement_with_fixed_box(teleport):
    solve = fixed_box_solver(PLUS_ON_1)
    rep = run_concolic(teleport, Config(i_max=2, r=3), solver=solve)
    assert len(solve.docs) == 2
    first, second = solve.docs
    assert first.exclusions == ()
    assert len(second.exclusions) == 1
    assert "; exclusions of rejected candidates" in second.text()
    assert f"(< psi_0_0.r {S2!r})" in second.exclusions[0] and f"(> psi_0_2.r {S2!r})" in second.exclusions[0]
    assert rep.solver_calls[1].verdict.endswith("(rejected: excluded box)")
    assert rep.solver_calls[1].exclusions == 1


def test_mocked_run_is_bit_identical(teleport):
    reps = [run_concolic(teleport, Config(i_max=6, seed=4), solver=fixed_box_solver(ZERO_STATE)) for _ in range(2)]
    assert reps[0].to_json(timings=False) == reps[1].to_json(timings=False)


def test_real_solver_run_is_reproducible(teleport):
    a = run_concolic(teleport, Config(i_max=20, seed=2)).to_dict(timings=False)
    b = run_concolic(teleport, Config(i_max=20, seed=2)).to_dict(timings=False)
    assert a == b


def test_unsat_and_timeout_verdicts(teleport):
    rep = run_concolic(teleport, Config(i_max=5), solver=lambda doc: Unsat())
    assert rep.iterations == 3  # one call per flippable polarity on the first trace's chain
    assert rep.termination == "fork tree explored"
    assert rep.unsat_branches
    rep = run_concolic(teleport, Config(i_max=5), solver=lambda doc: Timeout())
    assert rep.unsat_branches == []
    assert rep.feasible_pairs == 6


def test_solver_error_raises(teleport):
    with pytest.raises(SolverFailed, match="boom"):
        run_concolic(teleport, Config(), solver=lambda doc: SolverError("boom"))


def test_expected_results_stop_early(teleport):
    rep = run_concolic(teleport, Config(s_results=(0,)))
    assert rep.termination == "expected results observed" and rep.iterations == 0


def test_report_invariants(teleport):
    rep = run_concolic(teleport, Config(i_max=20, seed=3))
    trace_sets = [frozenset(map(lambda t: (tuple(map(tuple, t[0])), t[1]), c.traces)) for c in rep.cases]
    assert len(set(trace_sets)) == len(trace_sets)
    covered = set()
    prev = 0
    for c in rep.cases:
        for path, _ in c.traces:
            covered.update(map(tuple, path))
        assert len(covered) >= prev
        prev = len(covered)
    assert covered == set(map(tuple, rep.covered))
    assert [c.iteration for c in rep.solver_calls] == list(range(1, rep.iterations + 1))


def test_report_serialization(teleport):
    rep = run_concolic(teleport, Config(i_max=3, seed=1, solver_cmd="builtin"))
    d = json.loads(rep.to_json())
    assert d["schema_version"] == SCHEMA_VERSION
    assert d["config"]["i_max"] == 3 and "qconcolic.deltasolve" in d["config"]["solver_cmd"]
    assert d["cases"][0]["input"]["classical"] == {"alice": 0}
    assert "timings" in d and "timings" not in rep.to_dict(timings=False)


def test_quality_examples():
    bell = StateVector(2, [S2, 0, 0, S2])
    assert quality(bell, {"00": 0.5, "11": 0.5}) == pytest.approx(0.0)
    assert quality(StateVector(2, [1, 0, 0, 0]), {"00": 0.5, "11": 0.5}) == pytest.approx(1.0)


def test_branch_coverage_conventions(teleport):
    p = parse_program("program s(q: qreg(1)) { return 0; }")
    assert branch_coverage(Report("s"), p) == 1.0
    assert branch_coverage(Report("t", covered=[(0, True), (0, False), (1, True)]), teleport) == 0.5


def test_target_quality_recorded():
    p = parse_program(
        "program e(q: qreg(1)) reference(0, {\"0\": 0.3, \"1\": 0.7}) {\n"
        '  if check_state_eq(q, {"0": 0.3, "1": 0.7}, 0.01) { return 1; }\n'
        "  return 0;\n}"
    )
    rep = run_concolic(p, Config(seed=0))
    assert rep.coverage == 1.0
    targets = [q for q in rep.quality if q.kind == "target"]
    assert targets and all(q.value <= q.bound for q in targets)
    assert rep.mean_quality("reference") <= 2 * (0.01 + 0.05)


def test_exhaustive_exploration_is_complete():
    p = parse_program(
        "program c(k: int, q: qreg(2)) {\n"
        "  h(q, 0);\n"
        "  if k > 2 {\n"
        '    if measure(q, [0]) == ["1"] { cx(q, 0, 1); }\n'
        '    if check_state_gt(q, [("11", 0.9)], 0.01) { return 3; }\n'
        "    return 2;\n"
        "  }\n"
        '  if check_state_lt(q, [("00", 0.1)], 0.01) { return 1; }\n'
        "  return 0;\n}"
    )
    rep = run_concolic(p, Config(seed=0, i_max=50))
    assert rep.termination == "fork tree explored"
    got = set(map(tuple, rep.covered)) | set(map(tuple, rep.unsat_branches))
    assert got == {(s, pol) for s in range(4) for pol in (True, False)}
