"""Core language AST, plain types, runtime values and programs.

The surface language is a first-order ML-like language with booleans, an
opaque key-carrying base type and binary trees built from ``leaf`` and
``node t a u``.  Expressions carry source spans and, after type inference,
a plain type plus optional structural cue tags.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional


# ---------------------------------------------------------------------------
# Types

BOOL = "Bool"
BASE = "Base"
TREE = "Tree"

# refinement identifiers
WEIGHT_TREE = "weight"
RANK_TREE = "rank"


@dataclass(frozen=True)
class PlainType:
    base: str                      # Bool | Base | Tree
    refinement: Optional[str] = None   # None | 'weight' | 'rank' (trees only)

    def is_tree(self) -> bool:
        return self.base == TREE

    def __str__(self) -> str:
        if self.base == TREE:
            s = "Tree Base"
            if self.refinement:
                s += f" @{self.refinement}"
            return s
        return self.base


TY_BOOL = PlainType(BOOL)
TY_BASE = PlainType(BASE)
TY_TREE = PlainType(TREE)
TY_WTREE = PlainType(TREE, WEIGHT_TREE)
TY_RTREE = PlainType(TREE, RANK_TREE)


@dataclass(frozen=True)
class Span:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Refinement predicates:  m x <op> m y  with m in {'#', '+'} ('+' is rank)

MEASURE_WEIGHT = "#"
MEASURE_RANK = "rank"

CMP_OPS = ("<", "<=", ">", ">=", "=")


@dataclass(frozen=True)
class RefinementPredicate:
    """Constructor invariant ``m x op m y`` (or trivially true)."""

    measure: str        # '#' or 'rank'
    lhs: str
    op: str             # one of CMP_OPS
    rhs: str

    def rename(self, mapping: dict[str, str]) -> "RefinementPredicate":
        return RefinementPredicate(
            self.measure, mapping.get(self.lhs, self.lhs), self.op,
            mapping.get(self.rhs, self.rhs))

    def __str__(self) -> str:
        m = self.measure
        return f"{m} {self.lhs} {self.op} {m} {self.rhs}"


def node_refinement(ref: Optional[str], t: str, u: str) -> Optional[RefinementPredicate]:
    """Invariant attached to ``node t a u`` at a refined tree type."""
    if ref == WEIGHT_TREE:
        return RefinementPredicate(MEASURE_WEIGHT, t, ">=", u)
    if ref == RANK_TREE:
        return RefinementPredicate(MEASURE_RANK, t, ">=", u)
    return None


# ---------------------------------------------------------------------------
# Expressions

# Cue tags attached by normalize.annotate_cues
CUE_PSEUDO_LEAF = "pseudo_leaf"
CUE_SHIFT_TICK = "shift_on_tick"
CUE_WVAR = "wvar_before_leaf"


@dataclass
class Expr:
    span: Span = field(default_factory=Span, repr=False, compare=False)
    ty: Optional[PlainType] = field(default=None, repr=False, compare=False)
    cues: set = field(default_factory=set, repr=False, compare=False)


@dataclass
class Var(Expr):
    name: str = ""


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class ConstApp(Expr):
    """Constructor application: leaf or node x1 x2 x3."""
    const: str = ""
    args: list = field(default_factory=list)


@dataclass
class App(Expr):
    fname: str = ""
    args: list = field(default_factory=list)


@dataclass
class Cmp(Expr):
    op: str = "<="
    lhs: Expr = None
    rhs: Expr = None


@dataclass
class If(Expr):
    cond: Expr = None
    then: Expr = None
    els: Expr = None


@dataclass
class MatchArm:
    const: str = ""
    vars: list = field(default_factory=list)
    body: Expr = None


@dataclass
class Match(Expr):
    scrutinee: Expr = None
    arms: list = field(default_factory=list)


@dataclass
class Let(Expr):
    name: str = ""
    bound: Expr = None
    body: Expr = None


@dataclass
class ErrorExpr(Expr):
    pass


@dataclass
class Tick(Expr):
    amount: Fraction = Fraction(1)
    body: Expr = None


# builtins usable only inside comparison operands
BUILTIN_MEASURES = ("weight", "rank")
CONSTRUCTORS = {"leaf": 0, "node": 3}


# ---------------------------------------------------------------------------
# Programs

MODE_DEFAULT = "default"
MODE_WORST_CASE = "worst_case"
MODE_HYBRID = "hybrid"


@dataclass
class FunDef:
    name: str
    params: list                     # [str]
    body: Expr
    declared: Optional[tuple] = None  # ([PlainType], PlainType) if a signature was given
    mode: str = MODE_DEFAULT
    param_types: list = field(default_factory=list)
    result_type: Optional[PlainType] = None
    span: Span = field(default_factory=Span)


@dataclass
class Program:
    functions: list                      # [FunDef], source order
    potentials: dict = field(default_factory=dict)   # PlainType -> language name string
    num_cf_sigs: int = 1
    source: str = ""

    def fun(self, name: str) -> FunDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def names(self) -> list:
        return [f.name for f in self.functions]


# ---------------------------------------------------------------------------
# Traversal / utility

def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, (ConstApp, App)):
        yield from e.args
    elif isinstance(e, Cmp):
        yield e.lhs
        yield e.rhs
    elif isinstance(e, If):
        yield e.cond
        yield e.then
        yield e.els
    elif isinstance(e, Match):
        yield e.scrutinee
        for arm in e.arms:
            yield arm.body
    elif isinstance(e, Let):
        yield e.bound
        yield e.body
    elif isinstance(e, Tick):
        yield e.body


def free_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Match):
        out = free_vars(e.scrutinee)
        for arm in e.arms:
            out |= free_vars(arm.body) - set(arm.vars)
        return out
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    out = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def substitute_vars(e: Expr, mapping: dict) -> Expr:
    """Capture-naive variable renaming (fresh names only)."""
    if isinstance(e, Var):
        return Var(e.span, e.ty, set(e.cues), mapping.get(e.name, e.name))
    if isinstance(e, BoolLit):
        return e
    if isinstance(e, ConstApp):
        return ConstApp(e.span, e.ty, set(e.cues), e.const,
                        [substitute_vars(a, mapping) for a in e.args])
    if isinstance(e, App):
        return App(e.span, e.ty, set(e.cues), e.fname,
                   [substitute_vars(a, mapping) for a in e.args])
    if isinstance(e, Cmp):
        return Cmp(e.span, e.ty, set(e.cues), e.op,
                   substitute_vars(e.lhs, mapping), substitute_vars(e.rhs, mapping))
    if isinstance(e, If):
        return If(e.span, e.ty, set(e.cues), substitute_vars(e.cond, mapping),
                  substitute_vars(e.then, mapping), substitute_vars(e.els, mapping))
    if isinstance(e, Match):
        arms = []
        for arm in e.arms:
            inner = {k: v for k, v in mapping.items() if k not in arm.vars}
            arms.append(MatchArm(arm.const, list(arm.vars),
                                 substitute_vars(arm.body, inner)))
        return Match(e.span, e.ty, set(e.cues),
                     substitute_vars(e.scrutinee, mapping), arms)
    if isinstance(e, Let):
        inner = {k: v for k, v in mapping.items() if k != e.name}
        return Let(e.span, e.ty, set(e.cues), e.name,
                   substitute_vars(e.bound, mapping), substitute_vars(e.body, inner))
    if isinstance(e, ErrorExpr):
        return e
    if isinstance(e, Tick):
        return Tick(e.span, e.ty, set(e.cues), e.amount, substitute_vars(e.body, mapping))
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# Pretty printer (inverse of the parser modulo whitespace)

def _atom(e: Expr) -> str:
    s = print_expr(e)
    if isinstance(e, (Var, BoolLit, ErrorExpr)) or \
            (isinstance(e, (ConstApp, App)) and not e.args):
        return s
    return f"({s})"


def print_expr(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ConstApp):
        return " ".join([e.const] + [_atom(a) for a in e.args])
    if isinstance(e, App):
        return " ".join([e.fname] + [_atom(a) for a in e.args])
    if isinstance(e, Cmp):
        return f"{print_expr(e.lhs)} {e.op} {print_expr(e.rhs)}"
    if isinstance(e, If):
        return (f"if {print_expr(e.cond)} then {print_expr(e.then)} "
                f"else {print_expr(e.els)}")
    if isinstance(e, Match):
        arms = " ".join(
            f"| {' '.join([a.const] + a.vars)} -> {print_expr(a.body)}"
            for a in e.arms)
        return f"match {print_expr(e.scrutinee)} with {arms}"
    if isinstance(e, Let):
        return f"let {e.name} = {print_expr(e.bound)} in {print_expr(e.body)}"
    if isinstance(e, ErrorExpr):
        return "error"
    if isinstance(e, Tick):
        body = _atom(e.body) if isinstance(e.body, (Cmp, If, Match, Let)) else print_expr(e.body)
        if e.amount == 1:
            return f"~ {body}"
        return f"~{{{e.amount}}} {body}"
    raise TypeError(type(e))


def print_type(t: PlainType) -> str:
    return str(t)


def print_program(p: Program) -> str:
    out = []
    for ty, lang in p.potentials.items():
        out.append(f"{{-# POTENTIAL ({ty}: {lang}) #-}}")
    if p.num_cf_sigs != 1:
        out.append(f"{{-# NUM_CF_SIGS {p.num_cf_sigs} #-}}")
    for f in p.functions:
        out.append("")
        if f.mode != MODE_DEFAULT:
            out.append(f"{{-# MODE {f.mode} #-}}")
        if f.declared is not None:
            args, res = f.declared
            if len(args) == 1:
                sig = f"{args[0]} -> {res}"
            else:
                sig = "(" + " * ".join(str(a) for a in args) + f") -> {res}"
            out.append(f"{f.name} :: {sig}")
        out.append(f"{f.name} {' '.join(f.params)} = {print_expr(f.body)}")
    return "\n".join(out) + "\n"


def expr_equal(a: Expr, b: Expr) -> bool:
    """Structural equality ignoring spans/types/cues."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return a.name == b.name
    if isinstance(a, BoolLit):
        return a.value == b.value
    if isinstance(a, (ConstApp, App)):
        name_a = a.const if isinstance(a, ConstApp) else a.fname
        name_b = b.const if isinstance(b, ConstApp) else b.fname
        return (name_a == name_b and len(a.args) == len(b.args)
                and all(expr_equal(x, y) for x, y in zip(a.args, b.args)))
    if isinstance(a, Cmp):
        return a.op == b.op and expr_equal(a.lhs, b.lhs) and expr_equal(a.rhs, b.rhs)
    if isinstance(a, If):
        return (expr_equal(a.cond, b.cond) and expr_equal(a.then, b.then)
                and expr_equal(a.els, b.els))
    if isinstance(a, Match):
        if not expr_equal(a.scrutinee, b.scrutinee) or len(a.arms) != len(b.arms):
            return False
        return all(x.const == y.const and x.vars == y.vars and expr_equal(x.body, y.body)
                   for x, y in zip(a.arms, b.arms))
    if isinstance(a, Let):
        return (a.name == b.name and expr_equal(a.bound, b.bound)
                and expr_equal(a.body, b.body))
    if isinstance(a, ErrorExpr):
        return True
    if isinstance(a, Tick):
        return a.amount == b.amount and expr_equal(a.body, b.body)
    return False
