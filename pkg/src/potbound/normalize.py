"""Let-normalization and structural cue annotation.

After normalization every function-application and constructor argument and
every match scrutinee is a variable; nested calls are hoisted into fresh
``let`` bindings.  Cues mark where the derivation engine applies structural
rules: weakening at proof-tree leaves not bound by a let, a shift around
ticked calls, and context trimming before Const/Var leaves.
"""

from __future__ import annotations

from .lang import (App, BoolLit, Cmp, ConstApp, CUE_PSEUDO_LEAF, MatchArm,
                   CUE_SHIFT_TICK, CUE_WVAR, ErrorExpr, Expr, FunDef, If, Let,
                   Match, Program, Tick, Var, free_vars)


class _Fresh:
    def __init__(self, taken):
        self.taken = set(taken)
        self.n = 0

    def __call__(self, hint="z"):
        while True:
            self.n += 1
            name = f"{hint}{self.n}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def _all_names(e: Expr) -> set:
    out = set()

    def go(x):
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, Let):
            out.add(x.name)
            go(x.bound)
            go(x.body)
            return
        elif isinstance(x, Match):
            go(x.scrutinee)
            for arm in x.arms:
                out.update(arm.vars)
                go(arm.body)
            return
        from .lang import children
        for c in children(x):
            go(c)

    go(e)
    return out


def let_normalize(e: Expr, fresh: _Fresh = None) -> Expr:
    """Hoist non-variable arguments/scrutinees into fresh lets (idempotent)."""
    if fresh is None:
        fresh = _Fresh(_all_names(e))
    return _norm(e, fresh)


def _hoist_args(args, fresh, mk):
    """Normalize argument list; returns possibly let-wrapped expression."""
    bindings = []
    new_args = []
    for a in args:
        a = _norm(a, fresh)
        if isinstance(a, (Var, BoolLit)):
            new_args.append(a)
        else:
            name = fresh()
            bindings.append((name, a))
            new_args.append(Var(a.span, a.ty, set(), name))
    out = mk(new_args)
    for name, bound in reversed(bindings):
        out = Let(bound.span, out.ty, set(), name, bound, out)
    return out


def _norm(e: Expr, fresh) -> Expr:
    if isinstance(e, (Var, BoolLit, ErrorExpr)):
        return e
    if isinstance(e, ConstApp):
        return _hoist_args(
            e.args, fresh,
            lambda args: ConstApp(e.span, e.ty, set(e.cues), e.const, args))
    if isinstance(e, App):
        return _hoist_args(
            e.args, fresh,
            lambda args: App(e.span, e.ty, set(e.cues), e.fname, args))
    if isinstance(e, Cmp):
        # comparison operands are variables or measure calls already
        return Cmp(e.span, e.ty, set(e.cues), e.op, _norm(e.lhs, fresh),
                   _norm(e.rhs, fresh))
    if isinstance(e, If):
        return If(e.span, e.ty, set(e.cues), _norm(e.cond, fresh),
                  _norm(e.then, fresh), _norm(e.els, fresh))
    if isinstance(e, Match):
        scrut = _norm(e.scrutinee, fresh)
        arms = [type(a)(a.const, list(a.vars), _norm(a.body, fresh))
                for a in e.arms]
        m = Match(e.span, e.ty, set(e.cues), scrut, arms)
        if not isinstance(scrut, Var):
            name = fresh()
            m.scrutinee = Var(scrut.span, scrut.ty, set(), name)
            return Let(e.span, e.ty, set(), name, scrut, m)
        return m
    if isinstance(e, Let):
        return Let(e.span, e.ty, set(e.cues), e.name, _norm(e.bound, fresh),
                   _norm(e.body, fresh))
    if isinstance(e, Tick):
        body = _norm(e.body, fresh)
        # rotate hoisted bindings out of the tick so the tick wraps the call
        outer = []
        while isinstance(body, Let):
            outer.append(body)
            body = body.body
        out = Tick(e.span, e.ty, set(e.cues), e.amount, body)
        for let in reversed(outer):
            out = Let(let.span, e.ty, set(let.cues), let.name, let.bound, out)
        return out
    raise TypeError(type(e))


def flatten_lets(e: Expr) -> Expr:
    """let x = (let y = b in e1) in e2  ->  let y = b in let x = e1 in e2."""
    if isinstance(e, Let):
        bound = flatten_lets(e.bound)
        body = flatten_lets(e.body)
        if isinstance(bound, Let):
            inner = flatten_lets(Let(e.span, e.ty, set(e.cues), e.name,
                                     bound.body, body))
            return Let(bound.span, e.ty, set(bound.cues), bound.name,
                       bound.bound, inner)
        return Let(e.span, e.ty, set(e.cues), e.name, bound, body)
    if isinstance(e, Match):
        return Match(e.span, e.ty, set(e.cues), e.scrutinee,
                     [MatchArm(a.const, list(a.vars), flatten_lets(a.body))
                      for a in e.arms])
    if isinstance(e, If):
        return If(e.span, e.ty, set(e.cues), e.cond, flatten_lets(e.then),
                  flatten_lets(e.els))
    if isinstance(e, Tick):
        return Tick(e.span, e.ty, set(e.cues), e.amount, flatten_lets(e.body))
    return e


def normalize_program(p: Program) -> Program:
    for f in p.functions:
        fresh = _Fresh(_all_names(f.body) | set(f.params))
        f.body = flatten_lets(let_normalize(f.body, fresh))
    return p


# ---------------------------------------------------------------------------
# Cues

def annotate_cues(e: Expr, result_pos: bool = True) -> Expr:
    """Attach structural-rule cues (in place; returns e).

    ``result_pos`` is true for expressions whose derivation node is the last
    one on its branch of the proof tree (function bodies, match arms, if
    branches, let bodies) as opposed to let-bound expressions.
    """
    if isinstance(e, Tick):
        if isinstance(e.body, App):
            e.cues.add(CUE_SHIFT_TICK)
        annotate_cues(e.body, False)
        return e
    if isinstance(e, Let):
        annotate_cues(e.bound, False)
        annotate_cues(e.body, True)
        return e
    if isinstance(e, Match):
        for arm in e.arms:
            annotate_cues(arm.body, True)
        return e
    if isinstance(e, If):
        for b in (e.then, e.els):
            annotate_cues(b, True)
        return e
    if isinstance(e, (Var, ConstApp, App, BoolLit, ErrorExpr)):
        if result_pos:
            e.cues.add(CUE_PSEUDO_LEAF)
        if isinstance(e, (Var, ConstApp)):
            e.cues.add(CUE_WVAR)
        for c in e.args if isinstance(e, (ConstApp, App)) else ():
            annotate_cues(c, False)
        return e
    if isinstance(e, Cmp):
        return e
    return e


def annotate_program(p: Program) -> Program:
    for f in p.functions:
        annotate_cues(f.body, True)
    return p


def frontend(p: Program) -> Program:
    """Full pipeline: plain types, let-normal form, cues."""
    from .typecheck import infer_plain_types
    infer_plain_types(p)
    normalize_program(p)
    # re-type hoisted binders
    for f in p.functions:
        f.declared = (list(f.param_types), f.result_type)
    infer_plain_types(p)
    annotate_program(p)
    return p
