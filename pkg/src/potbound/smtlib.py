"""SMT-LIB 2 text emission and parsing for the constraint systems.

The wire format stays inside QF_LRA with named assertions, Boolean
structure limited to or/and over linear atoms, and one or more
``minimize`` directives (interpreted lexicographically).  Rationals are
printed exactly as (/ p q); decimal model output is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import (Atom, Constraint, ConstraintSet, Disjunction,
                          Implication, LinExpr)


def rat(q: Fraction) -> str:
    q = Fraction(q)
    if q < 0:
        return f"(- {rat(-q)})"
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def lin(e: LinExpr) -> str:
    parts = []
    for name in sorted(e.coeffs):
        w = e.coeffs[name]
        parts.append(name if w == 1 else f"(* {rat(w)} {name})")
    if e.const != 0 or not parts:
        parts.append(rat(e.const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def atom_sexp(a: Atom) -> str:
    op = {"=": "=", "<=": "<=", ">=": ">="}[a.op]
    return f"({op} {lin(a.expr)} 0)"


def emit_smtlib(cs: ConstraintSet, objectives: list, comments: tuple = ()) -> str:
    """Full SMT-LIB 2 script: declarations, labeled asserts, minimize(s)."""
    out = []
    for c in comments:
        out.append(f"; {c}")
    out.append("(set-option :produce-unsat-cores true)")
    out.append("(set-logic QF_LRA)")
    names = sorted(cs.declared)
    for n in names:
        out.append(f"(declare-const {n} Real)")
    for n in names:
        if cs.declared[n] == "nonneg":
            out.append(f"(assert (! (>= {n} 0) :named sgn_{n}))")
    indicators = []
    for c in cs.constraints:
        b = c.body
        if isinstance(b, Atom):
            out.append(f"(assert (! {atom_sexp(b)} :named {c.label}))")
        elif isinstance(b, Implication):
            ind = f"ind_{c.label}"
            indicators.append(ind)
            out.append(f"(declare-const {ind} Real)")
            out.append(f"(assert (! (and (>= {ind} 0) (<= {ind} 1)) "
                       f":named {c.label}_dom))")
            cond_zero = f"(and (= {ind} 0) (= {b.cond} 0))"
            cond_one = f"(and (= {ind} 1) {atom_sexp(b.atom)})"
            out.append(f"(assert (! (or {cond_zero} {cond_one}) "
                       f":named {c.label}))")
        elif isinstance(b, Disjunction):
            branches = []
            for tag, atoms in b.branches:
                conj = " ".join(atom_sexp(a) for a in atoms)
                branches.append(f"(and {conj})" if len(atoms) != 1 else conj)
            out.append(f"(assert (! (or {' '.join(branches)}) "
                       f":named {c.label}))")
        else:
            raise TypeError(b)
    for obj in objectives:
        out.append(f"(minimize {lin(obj)})")
    out.append("(check-sat)")
    out.append("(get-model)")
    out.append("(get-objectives)")
    out.append("(get-unsat-core)")
    out.append("(exit)")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# S-expression reader

def tokenize_sexp(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i + 1:j]
            i = j + 1
        elif c == '"':
            j = text.index('"', i + 1)
            yield text[i:j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            yield text[i:j]
            i = j


def parse_sexps(text: str) -> list:
    stack = [[]]
    for tok in tokenize_sexp(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced parentheses in s-expression input")
    return stack[0]


def sexp_rational(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, list):
        if x and x[0] == "-" and len(x) == 2:
            return -sexp_rational(x[1])
        if x and x[0] == "/" and len(x) == 3:
            return sexp_rational(x[1]) / sexp_rational(x[2])
    raise ValueError(f"not an exact rational: {x!r} (decimals are rejected)")


def sexp_linexpr(x) -> LinExpr:
    """Parse a linear term into a LinExpr."""
    if isinstance(x, str):
        try:
            return LinExpr({}, Fraction(x))
        except ValueError:
            return LinExpr.var(x)
    head = x[0]
    if head == "+":
        out = LinExpr()
        for part in x[1:]:
            out = out.plus(sexp_linexpr(part))
        return out
    if head == "-":
        if len(x) == 2:
            return sexp_linexpr(x[1]).scaled(-1)
        out = sexp_linexpr(x[1])
        for part in x[2:]:
            out = out.minus(sexp_linexpr(part))
        return out
    if head == "*":
        consts, var = Fraction(1), None
        for part in x[1:]:
            e = sexp_linexpr(part)
            if e.coeffs:
                if var is not None:
                    raise ValueError(f"nonlinear product: {x!r}")
                var = e
            else:
                consts *= e.const
        if var is None:
            return LinExpr({}, consts)
        return var.scaled(consts)
    if head == "/":
        return LinExpr({}, sexp_rational(x))
    raise ValueError(f"not a linear term: {x!r}")


# ---------------------------------------------------------------------------
# Solver output parsing

@dataclass
class SolverOutput:
    status: str                          # sat | unsat | unknown | error
    model: dict = field(default_factory=dict)
    objectives: list = field(default_factory=list)
    core: list = field(default_factory=list)
    raw: str = ""


def parse_solver_output(text: str) -> SolverOutput:
    status = "error"
    lines = []
    for ln in text.splitlines():
        s = ln.strip()
        if s in ("sat", "unsat", "unknown"):
            status = s
            continue
        if s.startswith('(error'):
            continue
        lines.append(ln)
    out = SolverOutput(status, raw=text)
    try:
        sexps = parse_sexps("\n".join(lines))
    except Exception:
        return out
    for sx in sexps:
        if not isinstance(sx, list):
            continue
        if sx and sx[0] == "objectives":
            for o in sx[1:]:
                if isinstance(o, list) and len(o) == 2:
                    try:
                        out.objectives.append(sexp_rational(o[1]))
                    except ValueError:
                        pass
            continue
        if sx and sx[0] == "model":
            body = sx[1:]
        elif sx and all(isinstance(d, list) and d and d[0] == "define-fun"
                        for d in sx):
            body = sx
        elif status == "unsat" and all(isinstance(t, str) for t in sx):
            out.core = list(sx)
            continue
        else:
            continue
        for d in body:
            if d[0] == "define-fun" and len(d) >= 5:
                out.model[d[1]] = sexp_rational(d[4])
    return out
