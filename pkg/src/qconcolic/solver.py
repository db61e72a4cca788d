"""Run an SMT solver as a subprocess and classify its answer."""
from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import Optional, Union

from .smt import Assignment, ParseError, SmtDocument, parse_model

ENV_SOLVER = "QCONCOLIC_SOLVER_CMD"

PRESETS = {
    "dreal": "dreal --model --precision {delta} {file}",
    "z3": "z3 -smt2 pp.decimal=true pp.decimal_precision=20 -T:{timeout_int} {file}",
    "builtin": "{python} -m qconcolic.deltasolve --model --precision {delta} --time-limit {inner_timeout} {file}",
}


def default_solver_cmd() -> str:
    """Environment override, then dReal on PATH, then the bundled solver."""
    env = os.environ.get(ENV_SOLVER)
    if env:
        return PRESETS.get(env, env)
    if shutil.which("dreal"):
        return PRESETS["dreal"]
    return PRESETS["builtin"]


@dataclass(frozen=True)
class SolverConfig:
    cmd: Optional[str] = None  # template or preset name; None -> default_solver_cmd()
    delta: float = 0.05
    timeout: float = 60.0
    keep_files: Optional[str] = None  # directory to copy emitted queries into

    def resolved_cmd(self) -> str:
        if self.cmd is None:
            return default_solver_cmd()
        return PRESETS.get(self.cmd, self.cmd)

    def argv(self, path: str) -> list[str]:
        fields = dict(
            file=path,
            delta=repr(float(self.delta)),
            timeout=repr(float(self.timeout)),
            timeout_int=str(max(1, int(self.timeout))),
            inner_timeout=repr(max(0.5, 0.9 * float(self.timeout))),
            python=sys.executable,
        )
        template = self.resolved_cmd()
        if "{file}" not in template:
            template += " {file}"
        return [part.format(**fields) for part in shlex.split(template)]


@dataclass(frozen=True)
class Sat:
    assignment: Assignment
    elapsed: float = 0.0


@dataclass(frozen=True)
class DeltaSat:
    assignment: Assignment
    delta: float = 0.0
    elapsed: float = 0.0


@dataclass(frozen=True)
class Unsat:
    elapsed: float = 0.0


@dataclass(frozen=True)
class Timeout:
    reason: str = "time limit"
    elapsed: float = 0.0


@dataclass(frozen=True)
class SolverError:
    diagnostic: str
    elapsed: float = 0.0


SolverVerdict = Union[Sat, DeltaSat, Unsat, Timeout, SolverError]


class SolverFailed(RuntimeError):
    def __init__(self, verdict: SolverError):
        super().__init__(verdict.diagnostic)
        self.verdict = verdict


def classify(stdout: str, returncode: int, stderr: str, declared, elapsed: float = 0.0) -> SolverVerdict:
    lines = [ln.strip() for ln in stdout.splitlines() if ln.strip()]
    head = lines[0] if lines else ""
    try:
        if head == "unsat":
            return Unsat(elapsed)
        if head.startswith("delta-sat"):
            delta = float(head.rsplit("=", 1)[1]) if "=" in head else 0.0
            return DeltaSat(parse_model(stdout, "interval", declared), delta, elapsed)
        if head == "sat":
            return Sat(parse_model(stdout, None, declared), elapsed)
    except ParseError as e:
        return SolverError(f"unparseable model: {e}", elapsed)
    if head in ("unknown", "timeout"):
        return Timeout(head, elapsed)
    msg = (stderr.strip() or stdout.strip() or "no output")[:2000]
    return SolverError(f"exit {returncode}: {msg}", elapsed)


def invoke_solver(doc: SmtDocument, cfg: SolverConfig) -> SolverVerdict:
    declared = list(doc.initial_vars) + [s for s, _ in doc.classical_vars]
    text = doc.text()
    with tempfile.TemporaryDirectory(prefix="qconcolic-") as tmp:
        path = os.path.join(tmp, "query.smt2")
        with open(path, "w") as fh:
            fh.write(text)
        if cfg.keep_files:
            os.makedirs(cfg.keep_files, exist_ok=True)
            k = len(os.listdir(cfg.keep_files))
            shutil.copy(path, os.path.join(cfg.keep_files, f"query_{k:04d}.smt2"))
        argv = cfg.argv(path)
        env = dict(os.environ)
        # the bundled solver must import this package even when not installed
        pkg_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        env["PYTHONPATH"] = pkg_root + os.pathsep + env.get("PYTHONPATH", "")
        t0 = time.monotonic()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=cfg.timeout, env=env)
        except subprocess.TimeoutExpired:
            return Timeout("time limit", time.monotonic() - t0)
        except OSError as e:
            return SolverError(f"cannot run {argv[0]!r}: {e}", time.monotonic() - t0)
        elapsed = time.monotonic() - t0
    return classify(proc.stdout, proc.returncode, proc.stderr, declared, elapsed)
