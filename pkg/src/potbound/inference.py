"""The derivation engine: signatures, syntax-directed constraint
collection with heuristic structural rules, objective assembly and the
full analysis pipeline."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import generators as G
from .constraints import ConstraintSet, LinExpr
from .lang import (App, BoolLit, Cmp, ConstApp, ErrorExpr, Expr, FunDef, If,
                   Let, Match, MODE_DEFAULT, MODE_HYBRID, MODE_WORST_CASE,
                   Program, Span, Tick, Var, free_vars, node_refinement,
                   print_expr, substitute_vars)
from .templates import (Iv, Language, Lg, NameSupply, Phi, ResourceTemplate,
                        Rk, UNIT, VAL, X, ZERO_LOG, fresh_template, language,
                        zero_template)
from .weakening import (FactBase, FarkasBlock, Guard, LemmaConfig,
                        build_facts, entails, farkas_encode,
                        verify_certificate)


class DerivationError(Exception):
    def __init__(self, msg: str, span: Span):
        super().__init__(f"{span}: {msg}")
        self.span = span


@dataclass
class AnalysisConfig:
    lang: Optional[str] = None          # override of the POTENTIAL pragma
    kset: tuple = (0, 1)
    iverson_cap: int = 3
    timeout: float = 900.0
    solver_cmd: Optional[list] = None
    seed: int = 0
    strict_refinements: bool = False
    lemmas: Optional[LemmaConfig] = None
    num_cf_sigs: Optional[int] = None
    dump_smt: Optional[str] = None


@dataclass
class Signature:
    fname: str
    kind: str                    # 'costed' | 'worst' | 'cf'
    index: int
    lhs: ResourceTemplate
    rhs: ResourceTemplate
    tree_params: tuple


@dataclass
class DerivationNode:
    rule: str
    span: Span
    expr: str
    ctx: tuple
    guards: tuple
    q_id: int
    qp_id: int
    children: list = field(default_factory=list)
    note: str = ""
    facts: Optional[FactBase] = None
    nid: int = 0


@dataclass
class FunctionResult:
    name: str
    signature: Signature
    bound_terms: dict            # term -> Fraction (amortized cost)
    psi: dict                    # term -> Fraction
    phi: dict
    objective_share: Fraction


@dataclass
class AnalysisResult:
    status: str                  # sat | unsat | timeout | error
    program: Program
    lang: Language
    bounds: dict = field(default_factory=dict)    # fname -> [FunctionResult]
    model: dict = field(default_factory=dict)
    objective: Optional[Fraction] = None
    derivations: dict = field(default_factory=dict)
    core_nodes: list = field(default_factory=list)
    core_labels: list = field(default_factory=list)
    certificates_ok: Optional[bool] = None
    stats: dict = field(default_factory=dict)
    smt_text: str = ""
    signatures: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------

WEIGHT_PHI = Fraction(100)


def term_weight(term) -> Fraction:
    if isinstance(term, Lg):
        if not term.vars:
            return Fraction(0) if term == ZERO_LOG else Fraction(1)
        return Fraction((1 + len(term.vars) + 2 * term.offset) ** 2)
    if isinstance(term, Phi):
        return WEIGHT_PHI
    return Fraction(1)


class Analyzer:
    def __init__(self, program: Program, config: AnalysisConfig):
        self.program = program
        self.config = config
        self.lang = self._language()
        self.cs = ConstraintSet()
        self.nodes = NameSupply()
        self.templates = {}                  # id -> ResourceTemplate
        self.sigs = {}                       # fname -> {'costed': [...], 'cf': [...]}
        self.phi_alpha = {}                  # result type -> template
        self.derivations = {}                # (fname, kind, index) -> DerivationNode
        self.blocks = []                     # FarkasBlock list
        self.node_spans = {}                 # node id -> (fname, span, rule)
        self.lemmas = config.lemmas or LemmaConfig.for_language(self.lang)

    # -- setup ---------------------------------------------------------------
    def _language(self) -> Language:
        name = self.config.lang
        if name is None:
            if self.program.potentials:
                name = next(iter(self.program.potentials.values()))
            else:
                name = "logr"
        return language(name, iverson_cap=self.config.iverson_cap)

    def _fresh(self, vars_, extended=False, use_x=None) -> ResourceTemplate:
        nid = self.nodes.node_id()
        t = fresh_template(self.lang, tuple(vars_), nid,
                           use_template_param=use_x, extended=extended)
        self.templates[nid] = t
        self.cs.declare_template(t)
        return t

    def _result_args(self, ty) -> tuple:
        return (VAL,) if (ty is not None and ty.is_tree()) else ()

    def _phi_for(self, ty) -> ResourceTemplate:
        """Result potential of a type: the language's family potential.

        Pinning the result annotation to the family potential (phi for
        sol/pw, the rank term for rank, zero for plain logs) keeps the
        optimization objective bounded and makes the reported amortized
        costs mean "with respect to the chosen potential".
        """
        key = (ty.base, ty.refinement) if ty is not None else ("Base", None)
        if key not in self.phi_alpha:
            t = self._fresh(self._result_args(ty))
            one = None
            if t.args:
                if self.lang.has_phi:
                    one = t.name(Phi(VAL))
                elif self.lang.name == "rank":
                    one = t.name(Rk(VAL))
            for name in t.coeffs.values():
                if name == one:
                    self.cs.eq(LinExpr.var(name), LinExpr({}, Fraction(1)),
                               rule="SigNorm")
                else:
                    self.cs.zero(name, rule="SigNorm")
            self.phi_alpha[key] = t
        return self.phi_alpha[key]

    def _pin_value_zero(self, t: ResourceTemplate):
        n = t.name(ZERO_LOG)
        if n is not None:
            self.cs.zero(n, rule="SigNorm")

    def setup_signatures(self):
        ncf = self.config.num_cf_sigs
        if ncf is None:
            ncf = self.program.num_cf_sigs
        for f in self.program.functions:
            tp = tuple(p for p, t in zip(f.params, f.param_types)
                       if t.is_tree())
            costed = []
            kinds = {MODE_DEFAULT: ("costed",), MODE_WORST_CASE: ("worst",),
                     MODE_HYBRID: ("costed", "worst")}[f.mode]
            for i, kind in enumerate(kinds):
                lhs = self._fresh(tp)
                self._pin_value_zero(lhs)
                for name in lhs.coeffs.values():
                    self.cs.declare(name, "nonneg")
                if kind == "costed":
                    rhs = self._phi_for(f.result_type)
                else:
                    rhs = zero_template(self.lang, self._result_args(
                        f.result_type))
                costed.append(Signature(f.name, kind, i, lhs, rhs, tp))
            cf = []
            for i in range(ncf):
                lhs = self._fresh(tp)
                rhs = self._fresh(self._result_args(f.result_type),
                                  extended=f.result_type is not None
                                  and f.result_type.is_tree())
                self._pin_value_zero(lhs)
                self._pin_value_zero(rhs)
                cf.append(Signature(f.name, "cf", i, lhs, rhs, tp))
            self.sigs[f.name] = {"costed": costed, "cf": cf}

    # -- derivations -----------------------------------------------------------
    def derive_all(self):
        for f in self.program.functions:
            for sig in self.sigs[f.name]["costed"]:
                node = self.derive_function(f, sig, cost_free=False)
                self.derivations[(f.name, sig.kind, sig.index)] = node
            for sig in self.sigs[f.name]["cf"]:
                node = self.derive_function(f, sig, cost_free=True)
                self.derivations[(f.name, "cf", sig.index)] = node

    def derive_function(self, f: FunDef, sig: Signature, cost_free: bool):
        ctx = list(sig.tree_params)
        types = {p: t for p, t in zip(f.params, f.param_types)}
        types[f.name] = f.result_type
        w = _Walker(self, f, cost_free, types)
        return w.walk(f.body, ctx, sig.lhs, sig.rhs, frozenset(), "root")

    # -- objective -----------------------------------------------------------
    def build_objective(self):
        obj = LinExpr()
        shares = {}
        for fname, groups in self.sigs.items():
            for sig in groups["costed"]:
                share = LinExpr()
                for term, name in sig.lhs.coeffs.items():
                    w = term_weight(term)
                    if w:
                        share.add(name, w)
                for term, name in sig.rhs.coeffs.items():
                    for arg in sig.tree_params:
                        try:
                            img = term.rename({VAL: arg})
                        except Exception:
                            continue
                        w = term_weight(img)
                        if w:
                            share.add(name, -w)
                shares[(fname, sig.index)] = share
                obj = obj.plus(share)
        # secondary: smallest signature inputs (tie-breaking)
        obj2 = LinExpr()
        for fname, groups in self.sigs.items():
            for sig in groups["costed"]:
                for name in sig.lhs.coeffs.values():
                    obj2.add(name, 1)
        return obj, obj2, shares


class _Walker:
    """Derivation of one signature of one function."""

    def __init__(self, an: Analyzer, f: FunDef, cost_free: bool, types: dict):
        self.an = an
        self.f = f
        self.cf = cost_free
        self.types = types          # var -> PlainType (grows at matches/lets)

    # helpers
    def _node(self, rule, e, ctx, guards, q, qp, note="") -> DerivationNode:
        nid = self.an.nodes.node_id()
        n = DerivationNode(rule, getattr(e, "span", Span()),
                           print_expr(e) if isinstance(e, Expr) else str(e),
                           tuple(ctx), tuple(sorted(map(str, guards))),
                           q.node_id, qp.node_id if qp is not None else -1,
                           nid=nid)
        self.an.node_spans[nid] = (self.f.name, n.span, rule)
        return n

    def _fresh(self, vars_, extended=False):
        return self.an._fresh(vars_, extended)

    # ---------------------------------------------------------------------
    def walk(self, e, ctx, Q, Qp, guards, pos) -> DerivationNode:
        if pos in ("arm", "branch", "letbody"):
            full = pos in ("arm", "branch") and not self.cf
            cfg = self.an.lemmas if full else self.an.lemmas.monotone_only()
            facts = build_facts(self.an.lang, list(Q.terms()), guards, cfg)
            P = self._fresh(ctx)
            node = self._node("W", e, ctx, guards, Q, Qp)
            node.facts = facts
            block = farkas_encode(self.an.cs, node.nid, facts, Q, P)
            self.an.blocks.append(block)
            node.children.append(self.core(e, ctx, P, Qp, guards))
            return node
        return self.core(e, ctx, Q, Qp, guards)

    # ---------------------------------------------------------------------
    def core(self, e, ctx, Q, Qp, guards) -> DerivationNode:
        an = self.an
        cs = an.cs
        if isinstance(e, Match):
            x = e.scrutinee.name
            xty = self.types[x]
            pos_x = ctx.index(x)
            leaf_arm = next(a for a in e.arms if a.const == "leaf")
            node_arm = next(a for a in e.arms if a.const == "node")
            t, b, u = node_arm.vars
            self.types[t] = xty
            self.types[b] = None
            self.types[u] = xty
            ctx_leaf = ctx[:pos_x] + ctx[pos_x + 1:]
            ctx_node = ctx[:pos_x] + [t, u] + ctx[pos_x + 1:]
            P = self._fresh(ctx_leaf)
            R = self._fresh(ctx_node)
            node = self._node("Match", e, ctx, guards, Q, Qp)
            G.ctr_match(cs, an.lang, node.nid, Q, P, R, x, t, u)
            node.children.append(
                self.walk(leaf_arm.body, ctx_leaf, P, Qp, guards, "arm"))
            g2 = guards
            pred = node_refinement(xty.refinement if xty else None, t, u)
            if pred is not None:
                g2 = guards | {Guard.of(pred)}
            node.children.append(
                self.walk(node_arm.body, ctx_node, R, Qp, g2, "arm"))
            return node

        if isinstance(e, If):
            P = self._fresh(ctx)
            R = self._fresh(ctx)
            node = self._node("Ite", e, ctx, guards, Q, Qp)
            G.ctr_ite(cs, node.nid, Q, P, R)
            cnode = self._node("Cmp", e.cond, ctx, guards, P, None)
            G.ctr_cmp(cs, cnode.nid, P)
            node.children.append(cnode)
            g_then, g_else = self._branch_guards(e.cond)
            node.children.append(
                self.walk(e.then, ctx, R, Qp, guards | g_then, "branch"))
            node.children.append(
                self.walk(e.els, ctx, R, Qp, guards | g_else, "branch"))
            return node

        if isinstance(e, Let):
            return self.let(e, ctx, Q, Qp, guards)

        if isinstance(e, Tick):
            amount = Fraction(0) if self.cf else e.amount
            Pp = self._clone_result(Qp)
            node = self._node("Tick", e, ctx, guards, Q, Qp,
                              note=f"a={amount}")
            G.ctr_tick(cs, node.nid, amount, Qp, Pp)
            if isinstance(e.body, App):
                S = self._fresh(ctx)
                Sp = self._clone_result(Pp)
                snode = self._node("Shift", e.body, ctx, guards, Q, Pp)
                kname = f"k{snode.nid}"
                G.ctr_shift(cs, snode.nid, kname, Q, Pp, S, Sp)
                snode.children.append(self.core(e.body, ctx, S, Sp, guards))
                node.children.append(snode)
            else:
                node.children.append(self.core(e.body, ctx, Q, Pp, guards))
            return node

        # leaves
        if isinstance(e, (Var, ConstApp, App, BoolLit, ErrorExpr)):
            return self.leaf(e, ctx, Q, Qp, guards)
        if isinstance(e, Cmp):
            node = self._node("Cmp", e, ctx, guards, Q, Qp)
            G.ctr_cmp(cs, node.nid, Q)
            return node
        raise DerivationError(f"cannot derive {type(e).__name__}", e.span)

    # ---------------------------------------------------------------------
    def leaf(self, e, ctx, Q, Qp, guards) -> DerivationNode:
        cs = self.an.cs
        needed = free_vars(e)
        cur_ctx, cur_Q = list(ctx), Q
        first = last = None
        for v in ctx:
            if v in needed:
                continue
            nctx = [w for w in cur_ctx if w != v]
            P = self._fresh(nctx)
            wnode = self._node("WVar", e, cur_ctx, guards, cur_Q, Qp,
                               note=f"drop {v}")
            G.ctr_wvar(cs, wnode.nid, cur_Q, P, v)
            if first is None:
                first = wnode
            if last is not None:
                last.children.append(wnode)
            last = wnode
            cur_ctx, cur_Q = nctx, P
        inner = self._leaf_core(e, cur_ctx, cur_Q, Qp, guards)
        if last is not None:
            last.children.append(inner)
            return first
        return inner

    def _leaf_core(self, e, ctx, Q, Qp, guards) -> DerivationNode:
        an, cs = self.an, self.an.cs
        if isinstance(e, Var):
            if self.types.get(e.name) is not None and \
                    self.types[e.name].is_tree():
                node = self._node("Var", e, ctx, guards, Q, Qp)
                G.ctr_var(cs, node.nid, Q, Qp, e.name)
            else:
                node = self._node("Var", e, ctx, guards, Q, Qp)
                self._const_value(node.nid, Q, Qp)
            return node
        if isinstance(e, BoolLit):
            node = self._node("Const", e, ctx, guards, Q, Qp)
            self._const_value(node.nid, Q, Qp)
            return node
        if isinstance(e, ErrorExpr):
            return self._node("Error", e, ctx, guards, Q, Qp)
        if isinstance(e, ConstApp):
            node = self._node("Const", e, ctx, guards, Q, Qp)
            if e.const == "leaf":
                G.ctr_const_leaf(cs, an.lang, node.nid, Q, Qp)
                return node
            tree_args = [a.name for i, a in enumerate(e.args) if i != 1]
            ref = e.ty.refinement if e.ty is not None else None
            if ref is not None:
                pred = node_refinement(ref, tree_args[0], tree_args[1])
                if not entails(guards, pred):
                    raise DerivationError(
                        f"constructor requires {pred} which the guards "
                        f"{sorted(map(str, guards))} do not entail", e.span)
            Q2, t, u, share_nodes = self._share_chain(e, ctx, Q, Qp, guards,
                                                      tree_args)
            G.ctr_const_node(cs, an.lang, node.nid, Q2, Qp, t, u)
            if share_nodes:
                share_nodes[-1].children.append(node)
                return share_nodes[0]
            return node
        if isinstance(e, App):
            return self.app(e, ctx, Q, Qp, guards)
        raise DerivationError(f"unexpected leaf {type(e).__name__}", e.span)

    def _share_chain(self, e, ctx, Q, Qp, guards, tree_args):
        """Split duplicated tree arguments with Share nodes."""
        cs = self.an.cs
        nodes = []
        args = list(tree_args)
        cur_Q = Q
        cur_ctx = list(ctx)
        while len(set(args)) != len(args):
            dup = next(v for i, v in enumerate(args) if v in args[:i])
            v1, v2 = f"{dup}.1", f"{dup}.2"
            pos = cur_ctx.index(dup)
            nctx = cur_ctx[:pos] + [v1, v2] + cur_ctx[pos + 1:]
            P = self._fresh(nctx)
            snode = self._node("Share", e, cur_ctx, guards, cur_Q, Qp,
                               note=f"{dup} -> {v1},{v2}")
            G.ctr_share(cs, snode.nid, cur_Q, P, dup, v1, v2)
            self.types[v1] = self.types.get(dup)
            self.types[v2] = self.types.get(dup)
            i1 = args.index(dup)
            args[i1] = v1
            args[args.index(dup)] = v2
            nodes.append(snode)
            cur_Q, cur_ctx = P, nctx
        t, u = args
        for a, b in zip(nodes, nodes[1:]):
            a.children.append(b)
        return cur_Q, t, u, nodes

    def _const_value(self, nid, Q, Qp):
        """Potential identity for non-tree values: constants match."""
        cs = self.an.cs
        for term, name in Q.coeffs.items():
            if term == UNIT:
                rhs = LinExpr()
                n2 = Qp.name(UNIT) if Qp is not None else None
                if n2 is not None:
                    rhs.add(n2, 1)
                cs.eq(LinExpr.var(name), rhs, node=nid, rule="Const")
            elif term != ZERO_LOG:
                cs.zero(name, node=nid, rule="Const")
        if Qp is not None:
            for term, name in Qp.coeffs.items():
                if term not in (UNIT, ZERO_LOG) and not G._value_zero(term):
                    cs.zero(name, node=nid, rule="Const")

    # ---------------------------------------------------------------------
    def app(self, e, ctx, Q, Qp, guards) -> DerivationNode:
        an, cs = self.an, self.an.cs
        f = an.program.fun(e.fname)
        groups = an.sigs[e.fname]
        actual_trees = []
        for a, pt in zip(e.args, f.param_types):
            if pt.is_tree():
                actual_trees.append(a.name)
        bases = groups["cf"] if self.cf else groups["costed"]
        if not bases:
            raise DerivationError(f"no signatures for {e.fname}", e.span)
        options = []
        extras = [None]
        for k in an.config.kset:
            if k == 0:
                continue
            for cf_sig in groups["cf"]:
                extras.append((Fraction(k), cf_sig))
        for bi, base in enumerate(bases):
            renaming = dict(zip(base.tree_params, actual_trees))
            renaming[X] = X
            renaming[VAL] = VAL
            for ei, extra in enumerate(extras):
                tag = f"b{bi}e{ei}"
                if extra is None:
                    options.append((tag, base.lhs, base.rhs, None))
                else:
                    k, cf_sig = extra
                    options.append((tag, base.lhs, base.rhs,
                                    (k, cf_sig.lhs, cf_sig.rhs)))
        node = self._node("App", e, ctx, guards, Q, Qp,
                          note=f"{len(options)} options")
        renaming = dict(zip(bases[0].tree_params, actual_trees))
        renaming[X] = X
        renaming[VAL] = VAL
        G.ctr_app(cs, node.nid, Q, Qp, options, renaming)
        return node

    # ---------------------------------------------------------------------
    def let(self, e, ctx, Q, Qp, guards) -> DerivationNode:
        an, cs = self.an, self.an.cs
        fv1 = free_vars(e.bound)
        fv2 = free_vars(e.body)
        shared = [v for v in ctx if v in fv1 and v in fv2]
        unused = [v for v in ctx if v not in fv1 and v not in fv2]
        cur_ctx, cur_Q = list(ctx), Q
        chain = []
        for v in unused:
            nctx = [w for w in cur_ctx if w != v]
            P = self._fresh(nctx)
            wnode = self._node("WVar", e, cur_ctx, guards, cur_Q, Qp,
                               note=f"drop {v}")
            G.ctr_wvar(cs, wnode.nid, cur_Q, P, v)
            chain.append(wnode)
            cur_ctx, cur_Q = nctx, P
        bound, body = e.bound, e.body
        for v in shared:
            v1, v2 = f"{v}.1", f"{v}.2"
            pos = cur_ctx.index(v)
            nctx = cur_ctx[:pos] + [v1, v2] + cur_ctx[pos + 1:]
            P = self._fresh(nctx)
            snode = self._node("Share", e, cur_ctx, guards, cur_Q, Qp,
                               note=f"{v} -> {v1},{v2}")
            G.ctr_share(cs, snode.nid, cur_Q, P, v, v1, v2)
            self.types[v1] = self.types.get(v)
            self.types[v2] = self.types.get(v)
            bound = substitute_vars(bound, {v: v1})
            body = substitute_vars(body, {v: v2})
            chain.append(snode)
            cur_ctx, cur_Q = nctx, P
        fv1 = free_vars(bound)
        fv2 = free_vars(body)
        gamma = [v for v in cur_ctx if v in fv1]
        delta = [v for v in cur_ctx if v in fv2 and v != e.name]
        x = e.name
        self.types[x] = bound.ty
        x_tree = bound.ty is not None and bound.ty.is_tree()

        P = self._fresh(gamma)
        Pp = self._fresh((VAL,) if x_tree else (), extended=x_tree)
        body_ctx = delta + ([x] if x_tree else [])
        R = self._fresh(body_ctx)
        keys = G.plan_let_aux(an.lang, cur_Q, tuple(gamma), tuple(delta))
        aux = G.make_let_aux(an.lang, keys, tuple(gamma), an.nodes)
        for a in aux:
            cs.declare_template(a.lhs)
            cs.declare_template(a.rhs)
        node = self._node("Let", e, cur_ctx, guards, cur_Q, Qp,
                          note=f"gamma={gamma} delta={delta} aux={len(aux)}")
        G.ctr_let(cs, an.lang, node.nid, cur_Q, P, Pp, R, aux,
                  tuple(gamma), tuple(delta), x)
        node.children.append(self.walk(bound, gamma, P, Pp, guards,
                                       "binding"))
        node.children.append(self.walk(body, body_ctx, R, Qp, guards,
                                       "letbody"))
        saved_cf = self.cf
        for a in aux:
            self.cf = True
            node.children.append(self.walk(bound, gamma, a.lhs, a.rhs,
                                           guards, "binding"))
        self.cf = saved_cf
        for a, b in zip(chain, chain[1:]):
            a.children.append(b)
        if chain:
            chain[-1].children.append(node)
            return chain[0]
        return node

    # ---------------------------------------------------------------------
    def _clone_result(self, Qp: ResourceTemplate) -> ResourceTemplate:
        return self.an._fresh(Qp.args, extended=Qp.extended)

    def _branch_guards(self, cond):
        def measure_of(operand):
            if isinstance(operand, App) and operand.fname in ("weight",
                                                              "rank"):
                m = "#" if operand.fname == "weight" else "rank"
                return m, operand.args[0].name
            return None

        if not isinstance(cond, Cmp):
            return frozenset(), frozenset()
        lhs, rhs = measure_of(cond.lhs), measure_of(cond.rhs)
        if lhs is None or rhs is None or lhs[0] != rhs[0]:
            return frozenset(), frozenset()
        m, a = lhs
        _, b = rhs
        op = cond.op
        then_g = _guard_from(m, a, op, b)
        neg = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": None}[op]
        else_g = _guard_from(m, a, neg, b) if neg else frozenset()
        return then_g, else_g


def _guard_from(m, a, op, b):
    from .lang import RefinementPredicate, MEASURE_WEIGHT
    mm = MEASURE_WEIGHT if m == "#" else "rank"
    g = Guard.of(RefinementPredicate(mm, a, op, b))
    return frozenset([g]) if g is not None else frozenset()


# ---------------------------------------------------------------------------
# Full analysis

def analyze(program: Program, config: Optional[AnalysisConfig] = None,
            ) -> AnalysisResult:
    """Derive, solve, optimize and audit one program."""
    from .solver import Sat, SolverJob, Timeout, Unsat, solve

    config = config or AnalysisConfig()
    t0 = time.time()
    an = Analyzer(program, config)
    an.setup_signatures()
    an.derive_all()
    obj1, obj2, shares = an.build_objective()
    job = SolverJob(an.cs, [obj1, obj2], timeout=config.timeout,
                    command=config.solver_cmd,
                    comments=(f"potbound lang={an.lang} seed={config.seed}",))
    t1 = time.time()
    outcome = solve(job, keep_file=config.dump_smt)
    t2 = time.time()
    res = AnalysisResult("error", program, an.lang)
    res.stats = {"constraints": len(an.cs), "coefficients": len(an.cs.declared),
                 "generation_s": round(t1 - t0, 3),
                 "solve_s": round(t2 - t1, 3)}
    res.derivations = an.derivations
    res.signatures = an.sigs
    if isinstance(outcome, Timeout):
        res.status = "timeout"
        return res
    if isinstance(outcome, Unsat):
        res.status = "unsat"
        res.core_labels = outcome.core
        nodes = []
        for label in outcome.core:
            parts = label.split("_")
            if len(parts) >= 3 and parts[0].startswith("c"):
                try:
                    nid = int(parts[1])
                except ValueError:
                    continue
                if nid in an.node_spans:
                    nodes.append((nid,) + an.node_spans[nid])
        res.core_nodes = sorted(set(nodes))
        return res
    if not isinstance(outcome, Sat):
        res.status = "error"
        res.stats["error"] = outcome.message
        return res

    model = outcome.model
    res.status = "sat"
    res.model = model
    res.objective = outcome.objectives[0] if outcome.objectives else None
    mv = lambda n: model.get(n, Fraction(0))
    for fname, groups in an.sigs.items():
        frs = []
        for sig in groups["costed"]:
            psi = {t: mv(n) for t, n in sig.lhs.coeffs.items() if mv(n)}
            phi = {t: mv(n) for t, n in sig.rhs.coeffs.items() if mv(n)}
            bound = dict(psi)
            for t, v in phi.items():
                for arg in sig.tree_params:
                    try:
                        img = t.rename({VAL: arg})
                    except Exception:
                        continue
                    nv = bound.get(img, Fraction(0)) - v
                    if nv == 0:
                        bound.pop(img, None)
                    else:
                        bound[img] = nv
            share = shares[(fname, sig.index)]
            sval = sum((mv(n) * w for n, w in share.coeffs.items()),
                       Fraction(0))
            frs.append(FunctionResult(fname, sig, bound, psi, phi, sval))
        res.bounds[fname] = frs
    ok = True
    for block in an.blocks:
        if not verify_certificate(block, model, an.lang,
                                  seed=config.seed):
            ok = False
            break
    res.certificates_ok = ok
    return res

