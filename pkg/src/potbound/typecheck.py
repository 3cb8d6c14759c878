"""Plain type inference (monomorphic unification) and checks.

Every expression node gets a PlainType.  Declared signatures are checked
against inferred types; refinements come only from declarations.  The
builtins ``weight``/``rank`` are only legal as comparison operands.
"""

from __future__ import annotations

from typing import Optional

from .lang import (App, BoolLit, Cmp, ConstApp, ErrorExpr, Expr, FunDef, If,
                   Let, Match, PlainType, Program, Span, Tick, TY_BASE,
                   TY_BOOL, TY_TREE, Var, BUILTIN_MEASURES, CONSTRUCTORS)


class TypeError_(Exception):
    def __init__(self, msg: str, span: Span):
        super().__init__(f"{span}: {msg}")
        self.span = span


class TyVar:
    """Mutable unification variable; resolves to a PlainType."""
    _n = 0

    def __init__(self, kind: str = "any"):
        TyVar._n += 1
        self.id = TyVar._n
        self.kind = kind                    # 'any' | 'tree'
        self.ref: Optional[object] = None   # PlainType | TyVar


def _find(t):
    while isinstance(t, TyVar) and t.ref is not None:
        t = t.ref
    return t


def _unify(a, b, span: Span):
    a, b = _find(a), _find(b)
    if a is b:
        return
    if isinstance(a, TyVar) and isinstance(b, TyVar):
        if a.kind == "tree":
            b.kind = "tree"
        a.ref = b
        return
    if isinstance(b, TyVar):
        a, b = b, a
    if isinstance(a, TyVar):
        if a.kind == "tree" and not b.is_tree():
            raise TypeError_(f"type mismatch: tree vs {b}", span)
        a.ref = b
        return
    assert isinstance(a, PlainType) and isinstance(b, PlainType)
    if a.base != b.base or (a.is_tree() and a.refinement != b.refinement):
        raise TypeError_(f"type mismatch: {a} vs {b}", span)


def _resolve(t) -> PlainType:
    t = _find(t)
    if isinstance(t, TyVar):
        # unconstrained after inference: trees default to the unrefined tree,
        # anything else to Base (no polymorphism)
        return TY_TREE if t.kind == "tree" else TY_BASE
    return t


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.sigs = {}           # name -> ([ty], ty)  (may contain TyVars)
        for f in program.functions:
            if f.declared is not None:
                if len(f.declared[0]) != len(f.params):
                    raise TypeError_(
                        f"{f.name}: signature arity {len(f.declared[0])} does "
                        f"not match {len(f.params)} parameters", f.span)
                self.sigs[f.name] = (list(f.declared[0]), f.declared[1])
            else:
                self.sigs[f.name] = ([TyVar() for _ in f.params], TyVar())

    def run(self):
        for f in self.program.functions:
            args, res = self.sigs[f.name]
            env = dict(zip(f.params, args))
            t = self.infer(f.body, env)
            _unify(t, res, f.body.span)
        for f in self.program.functions:
            args, res = self.sigs[f.name]
            f.param_types = [_resolve(a) for a in args]
            f.result_type = _resolve(res)
            self._finalize(f.body)
        return self.program

    def _finalize(self, e: Expr):
        e.ty = _resolve(e.ty)
        from .lang import children
        if isinstance(e, Match):
            self._finalize(e.scrutinee)
            for arm in e.arms:
                self._finalize(arm.body)
        else:
            for c in children(e):
                self._finalize(c)

    # ------------------------------------------------------------------
    def infer(self, e: Expr, env: dict):
        t = self._infer(e, env)
        e.ty = t
        return t

    def _infer(self, e: Expr, env: dict):
        if isinstance(e, Var):
            if e.name not in env:
                raise TypeError_(f"unbound variable {e.name!r}", e.span)
            return env[e.name]
        if isinstance(e, BoolLit):
            return TY_BOOL
        if isinstance(e, ErrorExpr):
            return TyVar()       # error inhabits every type
        if isinstance(e, Tick):
            return self.infer(e.body, env)
        if isinstance(e, ConstApp):
            arity = CONSTRUCTORS[e.const]
            if len(e.args) != arity:
                raise TypeError_(
                    f"{e.const} expects {arity} arguments, got {len(e.args)}",
                    e.span)
            res = TyVar("tree")
            if e.const == "node":
                for i, a in enumerate(e.args):
                    t = self.infer(a, env)
                    _unify(t, TY_BASE if i == 1 else res, a.span)
            return res
        if isinstance(e, App):
            if e.fname in BUILTIN_MEASURES:
                raise TypeError_(
                    f"builtin {e.fname!r} may only appear inside a comparison",
                    e.span)
            if e.fname not in self.sigs:
                raise TypeError_(f"unknown function {e.fname!r}", e.span)
            args, res = self.sigs[e.fname]
            if len(args) != len(e.args):
                raise TypeError_(
                    f"{e.fname} expects {len(args)} arguments, got "
                    f"{len(e.args)}", e.span)
            for a, ta in zip(e.args, args):
                _unify(self.infer(a, env), ta, a.span)
            return res
        if isinstance(e, Cmp):
            self._infer_operand(e.lhs, env)
            self._infer_operand(e.rhs, env)
            lt, rt = _find(e.lhs.ty), _find(e.rhs.ty)
            _unify(lt, rt, e.span)
            return TY_BOOL
        if isinstance(e, If):
            _unify(self.infer(e.cond, env), TY_BOOL, e.cond.span)
            t1 = self.infer(e.then, env)
            t2 = self.infer(e.els, env)
            _unify(t1, t2, e.els.span)
            return t1
        if isinstance(e, Match):
            ts = self.infer(e.scrutinee, env)
            ts = _find(ts)
            if isinstance(ts, TyVar):
                ts.kind = "tree"
            elif not ts.is_tree():
                raise TypeError_(f"match scrutinee must be a tree, got {ts}",
                                 e.scrutinee.span)
            seen = set()
            res = TyVar()
            for arm in e.arms:
                if arm.const in seen:
                    raise TypeError_(f"duplicate arm {arm.const}", e.span)
                seen.add(arm.const)
                inner = dict(env)
                if arm.const == "node":
                    inner[arm.vars[0]] = ts
                    inner[arm.vars[1]] = TY_BASE
                    inner[arm.vars[2]] = ts
                _unify(self.infer(arm.body, inner), res, arm.body.span)
            if seen != set(CONSTRUCTORS):
                missing = set(CONSTRUCTORS) - seen
                raise TypeError_(f"non-exhaustive match, missing {missing}",
                                 e.span)
            return res
        if isinstance(e, Let):
            t1 = self.infer(e.bound, env)
            inner = dict(env)
            inner[e.name] = t1
            return self.infer(e.body, inner)
        raise TypeError_(f"cannot type {type(e).__name__}", e.span)

    def _infer_operand(self, e: Expr, env: dict):
        """Comparison operands: values, or weight/rank of a tree."""
        if isinstance(e, App) and e.fname in BUILTIN_MEASURES:
            if len(e.args) != 1:
                raise TypeError_(f"{e.fname} takes one argument", e.span)
            t = self.infer(e.args[0], env)
            tf = _find(t)
            if isinstance(tf, TyVar):
                tf.kind = "tree"
            elif not tf.is_tree():
                raise TypeError_(f"{e.fname} applies to trees", e.span)
            e.ty = TY_BASE    # measures compare like keys
            return
        t = self.infer(e, env)
        tf = _find(t)
        if isinstance(tf, PlainType) and tf.is_tree():
            raise TypeError_("trees cannot be compared directly", e.span)


def infer_plain_types(program: Program) -> Program:
    """Annotate every expression with a PlainType (in place; returns program)."""
    return _Checker(program).run()
