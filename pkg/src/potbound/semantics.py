"""Big-step cost evaluator and random well-formed input generation.

Only ``tick`` adds cost; everything else is free.  Costs are exact
rationals.  Values are booleans, opaque keyed atoms and finite binary
trees.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .lang import (App, BoolLit, Cmp, ConstApp, ErrorExpr, Expr, If, Let,
                   Match, Program, Tick, Var, node_refinement)


# ---------------------------------------------------------------------------
# Values

@dataclass(frozen=True)
class VBool:
    value: bool


@dataclass(frozen=True)
class VBase:
    key: int


@dataclass(frozen=True)
class VLeaf:
    pass


@dataclass(frozen=True)
class VNode:
    left: object
    key: VBase
    right: object


LEAF = VLeaf()


def is_tree(v) -> bool:
    return isinstance(v, (VLeaf, VNode))


def node(left, key, right) -> VNode:
    if isinstance(key, int):
        key = VBase(key)
    return VNode(left, key, right)


def leaves(v) -> int:
    """|v|: number of leaves."""
    if isinstance(v, VLeaf):
        return 1
    return leaves(v.left) + leaves(v.right)


def weight(v) -> int:
    """#v: number of internal nodes (= |v| - 1)."""
    if isinstance(v, VLeaf):
        return 0
    return weight(v.left) + weight(v.right) + 1


def rank(v) -> int:
    """rank v: length of the rightmost path."""
    if isinstance(v, VLeaf):
        return 0
    return rank(v.right) + 1


def measure(v, m: str) -> int:
    if not is_tree(v):
        raise EvalError(f"measure {m} of a non-tree value")
    if m == "leaves":
        return leaves(v)
    if m == "weight":
        return weight(v)
    if m == "rank":
        return rank(v)
    raise ValueError(m)


def value_str(v) -> str:
    if isinstance(v, VBool):
        return "true" if v.value else "false"
    if isinstance(v, VBase):
        return str(v.key)
    if isinstance(v, VLeaf):
        return "leaf"
    return f"node({value_str(v.left)},{v.key.key},{value_str(v.right)})"


def parse_value(text: str):
    """Parse 'leaf' / 'node(<t>,<int>,<t>)' / 'true' / 'false' / int."""
    text = text.replace(" ", "")
    pos = [0]

    def parse():
        if text.startswith("leaf", pos[0]):
            pos[0] += 4
            return LEAF
        if text.startswith("true", pos[0]):
            pos[0] += 4
            return VBool(True)
        if text.startswith("false", pos[0]):
            pos[0] += 5
            return VBool(False)
        if text.startswith("node(", pos[0]):
            pos[0] += 5
            left = parse()
            _expect(",")
            key = _int()
            _expect(",")
            right = parse()
            _expect(")")
            return VNode(left, VBase(key), right)
        return VBase(_int())

    def _expect(c):
        if pos[0] >= len(text) or text[pos[0]] != c:
            raise ValueError(f"expected {c!r} at {pos[0]} in {text!r}")
        pos[0] += 1

    def _int():
        j = pos[0]
        while j < len(text) and (text[j].isdigit() or text[j] == "-"):
            j += 1
        if j == pos[0]:
            raise ValueError(f"expected integer at {pos[0]} in {text!r}")
        n = int(text[pos[0]:j])
        pos[0] = j
        return n

    v = parse()
    if pos[0] != len(text):
        raise ValueError(f"trailing input in value {text!r}")
    return v


# ---------------------------------------------------------------------------
# Evaluation

class EvalError(Exception):
    pass


class StepLimitExceeded(EvalError):
    pass


class RefinementViolation(EvalError):
    pass


DEFAULT_STEP_LIMIT = 10 ** 6


class Evaluator:
    """Big-step evaluator; counts rule applications against a step limit."""

    def __init__(self, program: Program, step_limit: int = DEFAULT_STEP_LIMIT,
                 strict_refinements: bool = False, erase_ticks: bool = False,
                 trace: bool = False):
        self.program = program
        self.limit = step_limit
        self.strict = strict_refinements
        self.erase_ticks = erase_ticks
        self.trace_log = [] if trace else None
        self.steps = 0

    def _step(self, rule: str, cost):
        self.steps += 1
        if self.steps > self.limit:
            raise StepLimitExceeded(f"step limit {self.limit} exceeded")
        if self.trace_log is not None:
            self.trace_log.append((rule, cost))

    def eval(self, e: Expr, env: dict):
        """Returns (value, cost)."""
        if isinstance(e, Var):
            self._step("Var", 0)
            try:
                return env[e.name], Fraction(0)
            except KeyError:
                raise EvalError(f"unbound variable {e.name!r}") from None
        if isinstance(e, BoolLit):
            self._step("Const", 0)
            return VBool(e.value), Fraction(0)
        if isinstance(e, ConstApp):
            self._step("Const", 0)
            if e.const == "leaf":
                return LEAF, Fraction(0)
            args, cost = self._operands(e.args, env)
            v = VNode(args[0], args[1], args[2])
            if self.strict and e.ty is not None and e.ty.refinement:
                self._check_refinement(e.ty.refinement, v)
            return v, cost
        if isinstance(e, App):
            f = self.program.fun(e.fname)
            args, cost = self._operands(e.args, env)
            inner = dict(zip(f.params, args))
            self._step("App", 0)
            v, c = self.eval(f.body, inner)
            return v, cost + c
        if isinstance(e, Cmp):
            self._step("Cmp", 0)
            a, c1 = self._cmp_operand(e.lhs, env)
            b, c2 = self._cmp_operand(e.rhs, env)
            return VBool(_compare(e.op, a, b)), c1 + c2
        if isinstance(e, If):
            c, c1 = self.eval(e.cond, env)
            if not isinstance(c, VBool):
                raise EvalError("if condition is not a boolean")
            self._step("True" if c.value else "False", 0)
            v, c2 = self.eval(e.then if c.value else e.els, env)
            return v, c1 + c2
        if isinstance(e, Match):
            s, c0 = self.eval(e.scrutinee, env)
            self._step("Match", 0)
            for arm in e.arms:
                if arm.const == "leaf" and isinstance(s, VLeaf):
                    v, c = self.eval(arm.body, env)
                    return v, c0 + c
                if arm.const == "node" and isinstance(s, VNode):
                    inner = dict(env)
                    inner[arm.vars[0]] = s.left
                    inner[arm.vars[1]] = s.key
                    inner[arm.vars[2]] = s.right
                    v, c = self.eval(arm.body, inner)
                    return v, c0 + c
            raise EvalError("match on an unexpected constructor")
        if isinstance(e, Let):
            self._step("Let", 0)
            w, c1 = self.eval(e.bound, env)
            inner = dict(env)
            inner[e.name] = w
            v, c2 = self.eval(e.body, inner)
            return v, c1 + c2
        if isinstance(e, ErrorExpr):
            raise EvalError("evaluated 'error'")
        if isinstance(e, Tick):
            a = Fraction(0) if self.erase_ticks else e.amount
            self._step("Tick", a)
            v, c = self.eval(e.body, env)
            return v, c + a
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    def _operands(self, args, env: dict):
        vals, total = [], Fraction(0)
        for a in args:
            v, c = self.eval(a, env)
            vals.append(v)
            total += c
        return vals, total

    def _cmp_operand(self, e: Expr, env: dict):
        if isinstance(e, App) and e.fname in ("weight", "rank"):
            t, c = self.eval(e.args[0], env)
            if not is_tree(t):
                raise EvalError(f"{e.fname} of a non-tree value")
            return (weight if e.fname == "weight" else rank)(t), c
        v, c = self.eval(e, env)
        if isinstance(v, VBase):
            return v.key, c
        if isinstance(v, VBool):
            return (1 if v.value else 0), c
        raise EvalError("trees cannot be compared directly")

    def _check_refinement(self, ref: str, v: VNode):
        p = node_refinement(ref, "t", "u")
        m = weight if p.measure == "#" else rank
        if not _compare(p.op, m(v.left), m(v.right)):
            raise RefinementViolation(
                f"constructed node violates @{ref}: {value_str(v)}")


def _compare(op: str, a: int, b: int) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "=":
        return a == b
    raise ValueError(op)


def evaluate(program: Program, env: dict, e: Expr,
             step_limit: int = DEFAULT_STEP_LIMIT,
             strict_refinements: bool = False, erase_ticks: bool = False):
    """Evaluate e under env; returns (value, exact rational cost)."""
    ev = Evaluator(program, step_limit, strict_refinements, erase_ticks)
    return ev.eval(e, env)


def call(program: Program, fname: str, args,
         step_limit: int = DEFAULT_STEP_LIMIT, erase_ticks: bool = False):
    f = program.fun(fname)
    env = dict(zip(f.params, args))
    return evaluate(program, env, f.body, step_limit,
                    erase_ticks=erase_ticks)


# ---------------------------------------------------------------------------
# Random well-formed inputs

KINDS = ("any", "weight_biased", "rank_biased", "heap_ordered")


def generate_tree(size: int, kind: str = "any", seed: int = 0,
                  rng: Optional[random.Random] = None,
                  key_lo: int = 0, key_hi: int = 10 ** 6):
    """Random tree with exactly `size` leaves; deterministic in seed."""
    if size < 1:
        raise ValueError("size must be >= 1 (leaf count)")
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if rng is None:
        rng = random.Random(seed)

    def build(n):
        if n == 1:
            return LEAF
        left_n = rng.randint(1, n - 1)
        if kind == "weight_biased":
            # #t >= #u  <=>  leaves(t) >= leaves(u)
            left_n = rng.randint((n + 1) // 2, n - 1)
        t = build(left_n)
        u = build(n - left_n)
        if kind == "rank_biased" and rank(t) < rank(u):
            t, u = u, t
        return VNode(t, VBase(rng.randint(key_lo, key_hi)), u)

    t = build(size)
    if kind == "heap_ordered":
        t = heapify_keys(t, rng, key_lo)
    return t


def heapify_keys(v, rng: random.Random, lo: int = 0):
    """Reassign keys so the tree is min-heap ordered (shape preserved)."""
    if isinstance(v, VLeaf):
        return v
    k = lo + rng.randint(0, 8)
    return VNode(heapify_keys(v.left, rng, k), VBase(k),
                 heapify_keys(v.right, rng, k))


def generate_input(size: int, refinement: Optional[str], rng: random.Random,
                   heap: bool = True):
    """Refinement-respecting (and optionally heap-ordered) random tree."""
    kind = {"weight": "weight_biased", "rank": "rank_biased"}.get(
        refinement, "any")
    t = generate_tree(size, kind, rng=rng)
    if heap:
        t = heapify_keys(t, rng)
    return t


def check_kind(v, kind: str) -> bool:
    if isinstance(v, VLeaf):
        return True
    if kind == "weight_biased" and weight(v.left) < weight(v.right):
        return False
    if kind == "rank_biased" and rank(v.left) < rank(v.right):
        return False
    if kind == "heap_ordered":
        for child in (v.left, v.right):
            if isinstance(child, VNode) and child.key.key < v.key.key:
                return False
    return check_kind(v.left, kind) and check_kind(v.right, kind)
