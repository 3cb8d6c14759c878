"""Linear-arithmetic constraint IR with provenance.

Atoms are linear expressions over named coefficients compared with 0.
Two non-atomic forms exist: the conditional ``coeff != 0  ->  atom`` used
by the logarithmic Let generator, and finite disjunctions of atom
conjunctions used for per-call-site signature selection.  Both are
emitted to the solver as labeled disjunctions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


@dataclass
class LinExpr:
    """Rational-weighted sum of coefficient names plus a constant."""
    coeffs: dict = field(default_factory=dict)
    const: Fraction = Fraction(0)

    @staticmethod
    def of(*pairs, const=Fraction(0)) -> "LinExpr":
        e = LinExpr({}, Fraction(const))
        for name, w in pairs:
            e.add(name, w)
        return e

    @staticmethod
    def var(name: str, w=Fraction(1)) -> "LinExpr":
        return LinExpr({name: Fraction(w)})

    def add(self, name: str, w) -> "LinExpr":
        w = Fraction(w)
        if w == 0:
            return self
        cur = self.coeffs.get(name, Fraction(0)) + w
        if cur == 0:
            self.coeffs.pop(name, None)
        else:
            self.coeffs[name] = cur
        return self

    def plus(self, other: "LinExpr") -> "LinExpr":
        out = LinExpr(dict(self.coeffs), self.const + other.const)
        for n, w in other.coeffs.items():
            out.add(n, w)
        return out

    def scaled(self, k) -> "LinExpr":
        k = Fraction(k)
        return LinExpr({n: w * k for n, w in self.coeffs.items()},
                       self.const * k)

    def minus(self, other: "LinExpr") -> "LinExpr":
        return self.plus(other.scaled(-1))

    def names(self):
        return self.coeffs.keys()

    def __str__(self):
        parts = []
        for n, w in sorted(self.coeffs.items()):
            if w == 1:
                parts.append(n)
            elif w == -1:
                parts.append(f"-{n}")
            else:
                parts.append(f"{w}*{n}")
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


EQ, LE, GE = "=", "<=", ">="


@dataclass
class Atom:
    """expr op 0."""
    op: str
    expr: LinExpr

    @staticmethod
    def eq(a: LinExpr, b: LinExpr) -> "Atom":
        return Atom(EQ, a.minus(b))

    @staticmethod
    def le(a: LinExpr, b: LinExpr) -> "Atom":
        return Atom(LE, a.minus(b))

    @staticmethod
    def ge(a: LinExpr, b: LinExpr) -> "Atom":
        return Atom(GE, a.minus(b))

    def __str__(self):
        return f"{self.expr} {self.op} 0"


@dataclass
class Implication:
    """cond != 0  ->  atom  (cond is a coefficient name)."""
    cond: str
    atom: Atom

    def __str__(self):
        return f"{self.cond} != 0 -> {self.atom}"


@dataclass
class Disjunction:
    """Exactly one branch must hold; each branch is a conjunction of atoms."""
    branches: list      # [(tag, [Atom])]

    def __str__(self):
        alts = " | ".join(f"{t}:({' & '.join(map(str, atoms))})"
                          for t, atoms in self.branches)
        return f"or {alts}"


@dataclass
class Constraint:
    body: object                   # Atom | Implication | Disjunction
    label: str
    node: int = 0                  # derivation node id
    rule: str = ""
    tag: str = ""                  # figure tag / note

    def __str__(self):
        return f"[{self.label} {self.rule}] {self.body}"


class ConstraintSet:
    """Ordered constraints plus the declared-coefficient registry."""

    def __init__(self):
        self.constraints: list = []
        self.declared: dict = {}        # name -> sign ('free' | 'nonneg')
        self._labels: set = set()
        self._n = 0

    def declare(self, name: str, sign: str = "free"):
        prev = self.declared.get(name)
        if prev == "nonneg" or sign == "nonneg":
            self.declared[name] = "nonneg"
        else:
            self.declared[name] = "free"

    def declare_template(self, template):
        for name in template.coeffs.values():
            self.declare(name)

    def _label(self, node: int, rule: str) -> str:
        self._n += 1
        return f"c{self._n}_{node}_{rule}"

    def add(self, body, node: int = 0, rule: str = "", tag: str = "") -> Constraint:
        label = self._label(node, rule)
        assert label not in self._labels
        self._labels.add(label)
        c = Constraint(body, label, node, rule, tag)
        self.constraints.append(c)
        for name in _names_of(c.body):
            self.declare(name)
        return c

    def eq(self, a: LinExpr, b: LinExpr, **kw):
        return self.add(Atom.eq(a, b), **kw)

    def le(self, a: LinExpr, b: LinExpr, **kw):
        return self.add(Atom.le(a, b), **kw)

    def ge(self, a: LinExpr, b: LinExpr, **kw):
        return self.add(Atom.ge(a, b), **kw)

    def zero(self, name: str, **kw):
        return self.eq(LinExpr.var(name), LinExpr(), **kw)

    def merge(self, other: "ConstraintSet"):
        for c in other.constraints:
            assert c.label not in self._labels
            self._labels.add(c.label)
            self.constraints.append(c)
        for n, s in other.declared.items():
            self.declare(n, s)
        self._n = max(self._n, other._n)

    def mentioned(self) -> set:
        out = set()
        for c in self.constraints:
            out |= _names_of(c.body)
        return out

    def pretty(self) -> str:
        return "\n".join(str(c) for c in self.constraints)

    def __len__(self):
        return len(self.constraints)


def _names_of(body) -> set:
    if isinstance(body, Atom):
        return set(body.expr.names())
    if isinstance(body, Implication):
        return {body.cond} | set(body.atom.expr.names())
    if isinstance(body, Disjunction):
        out = set()
        for _, atoms in body.branches:
            for a in atoms:
                out |= set(a.expr.names())
        return out
    raise TypeError(body)


def check_model(cs: ConstraintSet, model: dict, tol: Fraction = Fraction(0)):
    """Exact re-check of a model; returns list of violated constraint labels."""
    bad = []

    def val(expr: LinExpr) -> Fraction:
        return sum((model.get(n, Fraction(0)) * w
                    for n, w in expr.coeffs.items()), expr.const)

    def atom_ok(a: Atom) -> bool:
        v = val(a.expr)
        if a.op == EQ:
            return abs(v) <= tol
        if a.op == LE:
            return v <= tol
        return v >= -tol

    for c in cs.constraints:
        b = c.body
        if isinstance(b, Atom):
            ok = atom_ok(b)
        elif isinstance(b, Implication):
            ok = model.get(b.cond, Fraction(0)) == 0 or atom_ok(b.atom)
        else:
            ok = any(all(atom_ok(a) for a in atoms) for _, atoms in b.branches)
        if not ok:
            bad.append(c.label)
    for name, sign in cs.declared.items():
        if sign == "nonneg" and model.get(name, Fraction(0)) < 0:
            bad.append(f"sign_{name}")
    return bad
