"""Random benchmark programs and random-input baselines.

Generated condition parameters come from a pool of random witness inputs
pushed through the program as it is built: every condition is chosen so
that some pool input takes each polarity, which keeps every branch of a
generated program feasible.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .driver import CaseRecord, Report, finish_coverage, reference_entries
from .gates import GATE_SIGNATURES, gate_matrix
from .ir import (
    BinOp,
    Classical,
    GateOp,
    If,
    Measure,
    Name,
    Num,
    Param,
    Program,
    Return,
    StateEq,
    StateGt,
    StateLt,
    all_outcomes,
    check_program,
    compare,
    eval_expr,
    iter_ifs,
    measured_bits,
    number_sites,
    outcome_index,
)
from .parser import load_program, unparse
from .simulator import StateVector, TestCase, apply_matrix, execute_concrete, init_state

SCALE_OPS = {"S": 5, "M": 10, "L": 20}
STRUCTURES = ("simple", "nested", "multiway", "multiparam")
DELTAS = (0.01, 0.005)
QUANTUM_KINDS = ("measure", "eq", "gt", "lt")
CLASSICAL_RANGE = (0, 7)  # inclusive range for baseline and witness classical values
POOL = 256


@dataclass(frozen=True)
class BenchSpec:
    qubits: int = 1
    scale: str = "S"
    structure: str = "simple"
    seed: int = 0
    delta: Optional[float] = None  # None -> drawn from DELTAS

    def __post_init__(self):
        if not 1 <= self.qubits <= 4:
            raise ValueError("qubits must be in 1..4")
        if self.scale not in SCALE_OPS:
            raise ValueError(f"scale must be one of {sorted(SCALE_OPS)}")
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.delta is not None and self.delta not in DELTAS:
            raise ValueError(f"delta must be one of {DELTAS}")

    @property
    def name(self) -> str:
        return f"q{self.qubits}_{self.scale}_{self.structure}_{self.seed}"


# ---------------------------------------------------------------- random inputs


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Gaussian real and imaginary parts, normalized."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def _gate_choices(n: int) -> list[str]:
    return [g for g, (arity, _) in GATE_SIGNATURES.items() if arity <= n]


def random_gate(n: int, rng: np.random.Generator, angle_digits: Optional[int] = None) -> GateOp:
    names = _gate_choices(n)
    g = names[int(rng.integers(len(names)))]
    arity, n_angles = GATE_SIGNATURES[g]
    qubits = tuple(int(q) for q in rng.choice(n, size=arity, replace=False))
    angles = tuple(float(a) for a in rng.uniform(0, 2 * np.pi, size=n_angles))
    if angle_digits is not None:
        angles = tuple(round(a, angle_digits) for a in angles)
    return GateOp(g, qubits, angles)


def random_circuit_input(n: int, rng: np.random.Generator, depth: int = 3) -> StateVector:
    """|0...0> after 2*n*depth uniformly chosen gates with random angles."""
    amps = init_state(n).amps
    for _ in range(2 * n * depth):
        g = random_gate(n, rng)
        amps = apply_matrix(amps, gate_matrix(g.gate, g.angles), g.qubits, n)
    return StateVector(n, amps / np.linalg.norm(amps))


def random_classical(p: Program, rng: np.random.Generator) -> tuple:
    lo, hi = CLASSICAL_RANGE
    out = []
    for q in p.classical_params:
        v = int(rng.integers(lo, hi + 1)) if q.kind == "int" else float(rng.uniform(lo, hi))
        out.append((q.name, v))
    return tuple(out)


# ---------------------------------------------------------------- generation


class _Pool:
    """Witness inputs tracked as (classical values, current statevector).

    ``anc`` lists the quantum checks already passed on the way here as
    (condition, polarity, unitary from that check's point to here).
    """

    def __init__(self, vals: list[dict], states: np.ndarray, anc: tuple = ()):
        self.vals = vals
        self.states = states  # shape (k, 2^n)
        self.anc = anc

    def __len__(self):
        return len(self.vals)

    def subset(self, mask) -> "_Pool":
        idx = np.flatnonzero(mask)
        return _Pool([self.vals[i] for i in idx], self.states[idx], self.anc)

    def apply(self, g: GateOp, n: int) -> "_Pool":
        u = gate_matrix(g.gate, g.angles)
        st = np.array([apply_matrix(s, u, g.qubits, n) for s in self.states]) if len(self) else self.states
        anc = tuple((c, pol, np.array([apply_matrix(col, u, g.qubits, n) for col in m.T]).T) for c, pol, m in self.anc)
        return _Pool(self.vals, st, anc)

    def passing(self, c, polarity: bool) -> "_Pool":
        if isinstance(c, Classical):
            return self
        return _Pool(self.vals, self.states, self.anc + ((c, polarity, np.eye(self.states.shape[1], dtype=complex)),))

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.states) ** 2


class _Gen:
    def __init__(self, spec: BenchSpec):
        self.spec = spec
        self.n = spec.qubits
        self.rng = np.random.default_rng([spec.seed, spec.qubits, "SML".index(spec.scale), STRUCTURES.index(spec.structure)])
        self.delta = spec.delta if spec.delta is not None else DELTAS[int(self.rng.integers(2))]
        self.qreg = "q"
        self.params = ["a", "b"] if spec.structure == "multiparam" else ["a"]

    # -- pieces ---------------------------------------------------------------

    def ops(self, k: int, pool: _Pool):
        out = []
        for _ in range(k):
            g = random_gate(self.n, self.rng, angle_digits=3)
            pool = pool.apply(g, self.n)
            out.append(g)
        return out, pool

    def initial_pool(self) -> _Pool:
        lo, hi = CLASSICAL_RANGE
        vals = [{nm: int(self.rng.integers(lo, hi + 1)) for nm in self.params} for _ in range(POOL)]
        st = np.array([random_state(self.n, self.rng).amps for _ in range(POOL)])
        return _Pool(vals, st)

    def _truth(self, cond, pool: _Pool) -> np.ndarray:
        if isinstance(cond, Classical):
            return np.array([compare(eval_expr(cond.lhs, v), cond.op, eval_expr(cond.rhs, v)) for v in pool.vals], dtype=bool)
        probs = pool.probs
        if isinstance(cond, Measure):
            inside = np.array([measured_bits(x, cond.qubits) in cond.outcomes for x in range(1 << self.n)])
            pin = probs[:, inside].sum(axis=1)
            # nonzero chance either way: both polarities reachable from this input
            return pin > 1e-3
        if isinstance(cond, StateEq):
            d = np.array([dict(cond.dist)[o] for o in all_outcomes(self.n)])
            order = [outcome_index(o) for o in all_outcomes(self.n)]
            return np.all(np.abs(probs[:, order] - d) < cond.delta, axis=1)
        idx = [outcome_index(o) for o, _ in cond.pairs]
        ps = np.array([p for _, p in cond.pairs])
        if isinstance(cond, StateGt):
            return np.all(probs[:, idx] > ps - cond.delta, axis=1)
        return np.all(probs[:, idx] <= ps + cond.delta, axis=1)

    def _model_truth(self, cond, states: np.ndarray) -> np.ndarray:
        """Truth under the constraint model, where a taken measurement is a certain one."""
        if isinstance(cond, Measure):
            inside = np.array([measured_bits(x, cond.qubits) in cond.outcomes for x in range(1 << self.n)])
            return (np.abs(states[:, ~inside]) ** 2).sum(axis=1) < 1e-9
        return self._truth(cond, _Pool([{}] * len(states), states))

    def _measure_feasible(self, c: Measure, pool: _Pool) -> bool:
        """Some pool state, projected onto each outcome set, still passes the earlier checks."""
        inside = np.array([measured_bits(x, c.qubits) in c.outcomes for x in range(1 << self.n)])
        for keep in (inside, ~inside):
            proj = pool.states * keep[None, :]
            norms = np.linalg.norm(proj, axis=1)
            proj = proj[norms > 1e-3] / norms[norms > 1e-3][:, None]
            ok = np.ones(len(proj), dtype=bool)
            for ac, pol, m in pool.anc:
                earlier = proj @ m.conj()  # rows of U^dagger phi
                ok &= self._model_truth(ac, earlier) == pol
            if not ok.any():
                return False
        return True

    def _false_mask(self, cond, pool: _Pool) -> np.ndarray:
        if isinstance(cond, Measure):
            inside = np.array([measured_bits(x, cond.qubits) in cond.outcomes for x in range(1 << self.n)])
            return pool.probs[:, ~inside].sum(axis=1) > 1e-3
        return ~self._truth(cond, pool)

    def classical_cond(self, pool: _Pool) -> Classical:
        ops = ["==", "!=", "<", "<=", ">", ">="]
        if self.spec.structure == "multiparam":
            lhs = BinOp("+", Name("a"), Name("b"))
        else:
            lhs = Name(self.params[int(self.rng.integers(len(self.params)))])
        for _ in range(50):
            c = Classical(lhs, ops[int(self.rng.integers(len(ops)))], Num(int(self.rng.integers(1, 7))))
            t = self._truth(c, pool)
            if t.any() and (~t).any():
                return c
        return Classical(lhs, ">=", Num(1))

    def quantum_cond(self, kind: str, pool: _Pool):
        n, rng = self.n, self.rng
        outs = all_outcomes(n)
        if kind == "measure":
            k = 1 if n == 1 else int(rng.integers(1, min(n, 2) + 1))
            qubits = tuple(sorted(int(q) for q in rng.choice(n, size=k, replace=False)))
            bits = all_outcomes(k)
            return Measure(self.qreg, qubits, (bits[int(rng.integers(len(bits)))],))
        w = pool.probs[int(rng.integers(len(pool)))]
        if kind == "eq":
            vals = np.round([w[outcome_index(o)] for o in outs], 4)
            top = int(np.argmax(vals))
            vals[top] = 0.0
            vals[top] = round(1.0 - float(vals.sum()), 4)
            dist = tuple((o, float(v)) for o, v in zip(outs, vals))
            return StateEq(self.qreg, dist, self.delta)
        m = 1 if n == 1 else int(rng.integers(1, 3))
        chosen = [outs[i] for i in rng.choice(len(outs), size=m, replace=False)]
        col = pool.probs[:, [outcome_index(o) for o in chosen]]
        if kind == "gt":
            # thresholds near the pool median so both polarities have witnesses
            ps = [float(np.clip(round(float(np.quantile(col[:, j], rng.uniform(0.2, 0.6))), 3), self.delta + 0.02, 0.95))
                  for j in range(m)]
            return StateGt(self.qreg, tuple(zip(chosen, ps)), self.delta)
        ps = [float(np.clip(round(float(np.quantile(col[:, j], rng.uniform(0.4, 0.8))), 3), 0.02, 0.95 - self.delta))
              for j in range(m)]
        return StateLt(self.qreg, tuple(zip(chosen, ps)), self.delta)

    def cond(self, pool: _Pool, allow_measure: bool, allow_classical: bool = True, force: Optional[str] = None):
        """Pick a condition both of whose polarities have witnesses in pool."""
        if force == "classical":
            return self.classical_cond(pool)
        kinds = [k for k in QUANTUM_KINDS if allow_measure or k != "measure"]
        for _ in range(40):
            if allow_classical and self.rng.random() < 0.15:
                return self.classical_cond(pool)
            kind = kinds[int(self.rng.integers(len(kinds)))]
            c = self.quantum_cond(kind, pool)
            if isinstance(c, Measure) and not self._measure_feasible(c, pool):
                continue
            if self._truth(c, pool).any() and self._false_mask(c, pool).any():
                return c
        return self.classical_cond(pool)

    def split(self, c, pool: _Pool) -> tuple[_Pool, _Pool]:
        t = self._truth(c, pool)
        f = self._false_mask(c, pool)
        t_pool = self._eq_witnesses(c, pool) if isinstance(c, StateEq) else pool.subset(t)
        return t_pool.passing(c, True), pool.subset(f).passing(c, False)

    def _eq_witnesses(self, c: StateEq, pool: _Pool) -> _Pool:
        """States meeting an equality check: pool hits plus random-phase states with its distribution."""
        hits = pool.subset(self._truth(c, pool))
        d = np.zeros(1 << self.n)
        for o, v in c.dist:
            d[outcome_index(o)] = v
        k = 32
        phases = np.exp(2j * np.pi * self.rng.random((k, 1 << self.n)))
        st = np.sqrt(d)[None, :] * phases
        vals = [hits.vals[i % len(hits)] if len(hits) else pool.vals[i % len(pool)] for i in range(k)]
        return _Pool(hits.vals + vals, np.concatenate([hits.states, st]) if len(hits) else st, pool.anc)

    # -- structures ------------------------------------------------------------

    def build(self) -> list:
        T = SCALE_OPS[self.spec.scale]
        s = self.spec.structure
        pool = self.initial_pool()
        rng = self.rng
        body: list = []
        if s == "simple":
            a = int(rng.integers(1, T))
            pre, pool = self.ops(a, pool)
            c = self.cond(pool, allow_measure=True)
            tp, fp = self.split(c, pool)
            then, _ = self.ops(T - a, tp)
            orelse, _ = self.ops(T - a, fp)
            body = pre + [If(c, tuple(then + [Return(Num(0))]), tuple(orelse + [Return(Num(1))]))]
        elif s in ("nested", "multiparam"):
            a = int(rng.integers(1, T - 1))
            b = int(rng.integers(0, T - a))
            pre, pool = self.ops(a, pool)
            outer_kind = "classical" if s == "multiparam" else None
            c1 = self.cond(pool, allow_measure=False, force=outer_kind)
            tp, fp = self.split(c1, pool)
            mid, tp = self.ops(b, tp)
            c2 = self.cond(tp, allow_measure=True, allow_classical=s != "multiparam")
            tp2, fp2 = self.split(c2, tp)
            inner_then, _ = self.ops(T - a - b, tp2)
            inner_else, _ = self.ops(T - a - b, fp2)
            orelse, _ = self.ops(T - a, fp)
            inner = If(c2, tuple(inner_then + [Return(Num(0))]), tuple(inner_else + [Return(Num(1))]))
            body = pre + [If(c1, tuple(mid + [inner]), tuple(orelse + [Return(Num(2))]))]
        else:  # multiway: if / else if / else if / else
            a = int(rng.integers(1, T))
            pre, pool = self.ops(a, pool)
            arms = []
            for i in range(3):
                # a measurement may only be the last quantum check on its path
                c = self.cond(pool, allow_measure=(i == 2))
                tp, pool = self.split(c, pool)
                blk, _ = self.ops(T - a, tp)
                arms.append((c, blk + [Return(Num(i))]))
            last, _ = self.ops(T - a, pool)
            tail: tuple = tuple(last + [Return(Num(3))])
            for c, blk in reversed(arms):
                tail = (If(c, tuple(blk), tail),)
            body = pre + list(tail)
        return body


def generate_benchmark(spec: BenchSpec) -> Program:
    g = _Gen(spec)
    body = number_sites(tuple(g.build()))
    params = tuple(Param(nm, "int") for nm in g.params) + (Param(g.qreg, "qreg", spec.qubits),)
    p = Program(spec.name, params, body)
    ref = next(((st.site, st.cond.dist) for st in _ifs(body) if isinstance(st.cond, StateEq)), None)
    if ref is not None:
        p = Program(p.name, p.params, p.body, ref[1], ref[0])
    return check_program(p)


def _ifs(body):
    return [st for st, _ in iter_ifs(body)]


def path_op_counts(p: Program) -> list[int]:
    """Gate count along every syntactic path of the program."""
    out = []

    def walk(stmts, k):
        for i, st in enumerate(stmts):
            if isinstance(st, GateOp):
                k += 1
            elif isinstance(st, Return):
                out.append(k)
                return
            elif isinstance(st, If):
                walk(tuple(st.then) + tuple(stmts[i + 1:]), k)
                walk(tuple(st.orelse) + tuple(stmts[i + 1:]), k)
                return
        out.append(k)

    walk(p.body, 0)
    return out


def condition_kinds(p: Program) -> list[str]:
    names = {Classical: "classical", Measure: "measure", StateEq: "eq", StateGt: "gt", StateLt: "lt"}
    return [names[type(st.cond)] for st in _ifs(p.body)]


# ---------------------------------------------------------------- suites


def suite_specs(qubits: int, scale: str, count: int, seed: int, structures: Iterable[str] = STRUCTURES) -> list[BenchSpec]:
    structures = tuple(structures)
    return [BenchSpec(qubits, scale, structures[i % len(structures)], seed * 100_003 + i) for i in range(count)]


def write_suite(directory: str, specs: list[BenchSpec]) -> dict:
    os.makedirs(directory, exist_ok=True)
    entries = []
    for spec in specs:
        p = generate_benchmark(spec)
        fname = f"{spec.name}.qcp"
        with open(os.path.join(directory, fname), "w") as fh:
            fh.write(unparse(p))
        entries.append({
            "file": fname,
            "spec": asdict(spec),
            "sites": len(p.site_conds()),
            "conditions": condition_kinds(p),
            "path_ops": path_op_counts(p),
            "reference_site": p.reference_site,
        })
    manifest = {
        "schema_version": "1.0",
        "kind": "qconcolic-benchmark-suite",
        "parameters": {
            "classical_range": list(CLASSICAL_RANGE),
            "deltas": list(DELTAS),
            "scale_ops": SCALE_OPS,
            "eq_rounding": 4,
            "threshold_quantiles": {"gt": [0.2, 0.6], "lt": [0.4, 0.8]},
        },
        "programs": entries,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def load_suite(directory: str) -> list[tuple[dict, Program]]:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    return [(e, load_program(os.path.join(directory, e["file"]))) for e in manifest["programs"]]


# ---------------------------------------------------------------- baselines

GENERATORS = ("vector", "circuit")


def save_cases(path: str, cases: Iterable[TestCase]):
    with open(path, "w") as fh:
        json.dump({"schema_version": "1.0", "cases": [c.to_dict() for c in cases]}, fh, indent=1)


def load_cases(path: str) -> list[TestCase]:
    with open(path) as fh:
        data = json.load(fh)
    return [TestCase.from_dict(d) for d in data["cases"]]


def run_baseline(
    p: Program,
    gen: str = "vector",
    budget: int = 1000,
    r: int = 10,
    rng: Optional[np.random.Generator] = None,
    inputs: Optional[list[TestCase]] = None,
) -> Report:
    """Random-input testing with the same report shape as the concolic driver."""
    if gen not in GENERATORS + ("file",):
        raise ValueError(f"unknown generator {gen!r}")
    if gen == "file" and inputs is None:
        raise ValueError("generator 'file' needs inputs")
    rng = rng if rng is not None else np.random.default_rng(0)
    rep = Report(program=p.name, method=gen, config={"generator": gen, "budget": budget, "r": r,
                                                     "classical_range": list(CLASSICAL_RANGE)})
    covered: set = set()
    seen: set = set()
    results: list = []
    samples = inputs[:budget] if gen == "file" else range(budget)
    for k, item in enumerate(samples):
        if gen == "file":
            tc = item
        else:
            st = random_state(p.n, rng) if gen == "vector" else random_circuit_input(p.n, rng)
            tc = TestCase(random_classical(p, rng), st)
        traces = []
        novel = False
        for _ in range(r):
            tr = execute_concrete(p, tc, rng)
            traces.append(tr)
            covered.update(tr.path)
            if tr.result not in results:
                results.append(tr.result)
            if tr.key not in seen:
                seen.add(tr.key)
                novel = True
        if novel:
            rep.cases.append(CaseRecord(len(rep.cases), tc, [(t.path, t.result) for t in traces], None, k))
        rep.quality.extend(reference_entries(p, k, traces[0], any_polarity=True))
    rep.iterations = budget
    rep.termination = "budget exhausted"
    rep.results = results
    finish_coverage(rep, p, covered, None)
    return rep
