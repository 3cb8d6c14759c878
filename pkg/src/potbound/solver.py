"""Driving the external solver: job emission, subprocess protocol, model
and unsat-core recovery, exact re-checking of returned models."""

from __future__ import annotations

import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import ConstraintSet, LinExpr, check_model
from .smtlib import emit_smtlib, parse_solver_output, SolverOutput


@dataclass
class SolverJob:
    cs: ConstraintSet
    objectives: list                       # [LinExpr], lexicographic
    timeout: float = 900.0
    command: Optional[list] = None         # argv prefix; file path appended
    comments: tuple = ()

    def smtlib(self) -> str:
        return emit_smtlib(self.cs, self.objectives, self.comments)


@dataclass
class Sat:
    model: dict
    objectives: list
    raw: SolverOutput


@dataclass
class Unsat:
    core: list
    raw: SolverOutput


@dataclass
class Timeout:
    seconds: float


@dataclass
class SolverFailure:
    message: str
    raw: str = ""


def default_command() -> list:
    env = os.environ.get("POTBOUND_SOLVER")
    if env:
        return env.split()
    return [sys.executable, "-m", "potbound.smtsolve"]


def solve(job: SolverJob, keep_file: Optional[str] = None):
    """Run one solver subprocess on the emitted job."""
    text = job.smtlib()
    cmd = job.command or default_command()
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(text)
        path = fh.name
    if keep_file:
        with open(keep_file, "w") as out:
            out.write(text)
    try:
        proc = subprocess.run(cmd + [path], capture_output=True, text=True,
                              timeout=job.timeout)
    except subprocess.TimeoutExpired:
        return Timeout(job.timeout)
    finally:
        if not keep_file:
            try:
                os.unlink(path)
            except OSError:
                pass
    out = parse_solver_output(proc.stdout)
    if out.status == "sat":
        bad = check_model(job.cs, out.model)
        if bad:
            return SolverFailure(
                f"solver model violates {len(bad)} constraints "
                f"(first: {bad[:5]})", proc.stdout)
        return Sat(out.model, out.objectives, out)
    if out.status == "unsat":
        return Unsat([l for l in out.core if not l.startswith("sgn_")], out)
    return SolverFailure(
        f"solver returned {out.status!r} (exit {proc.returncode}): "
        f"{proc.stderr[:500]}", proc.stdout)
