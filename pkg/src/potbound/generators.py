"""Constraint-generating functions for the algorithmic type rules.

Template-agnostic generators (Var/Cmp/Ite/Shift/App/Tick/WVar/Share) plus
the per-language Const/Match/Let generators.  Every generator encodes an
exact potential identity between templates; coefficients whose term cannot
be represented on the other side of the identity (and whose value is not
identically zero) are pinned to zero, which realizes the convention that
unmentioned coefficients vanish.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .constraints import Atom, ConstraintSet, Disjunction, Implication, LinExpr
from .templates import (Iv, Language, Lg, Phi, ResourceTemplate, Rk, UNIT,
                        VAL, X, ZERO_LOG, fresh_template, rename_term,
                        RenameCollision)

OUT = "out"          # image not representable in the target universe
VANISH = "vanish"    # image identically zero

F0 = Fraction(0)
F1 = Fraction(1)


def _value_zero(term) -> bool:
    return term == ZERO_LOG


def var_expr(template: ResourceTemplate, term) -> Optional[LinExpr]:
    n = template.name(term)
    return None if n is None else LinExpr.var(n)


# ---------------------------------------------------------------------------
# Images of terms under constructor instantiation

def leaf_image(term, x: str, lang: Language):
    """Image of a term when x := leaf.  Returns [(term|UNIT, coeff)],
    VANISH, or OUT.  Target-universe membership is checked by the caller."""
    if isinstance(term, Lg):
        if x not in term.vars:
            return [(term, F1)]
        if term.offset + 1 > 2:
            return OUT
        return [(Lg(term.vars - {x}, term.offset + 1), F1)]
    if isinstance(term, Phi):
        if term.var != x:
            return [(term, F1)]
        return [(UNIT, F1)] if lang.name == "sol" else VANISH
    if isinstance(term, Rk):
        return VANISH if term.var == x else [(term, F1)]
    if isinstance(term, Iv):
        if x in term.lhs:
            if term.offset + 1 > 2:
                return OUT
            return [(Iv(term.lhs - {x}, term.offset + 1, term.rhs), F1)]
        if x in term.rhs:
            rest = term.rhs - {x}
            if not rest:
                # [lhs + c < 1]
                if not term.lhs:
                    return [(UNIT, F1)] if term.offset < 1 else VANISH
                return VANISH if term.offset >= 0 else OUT
            if term.offset - 1 < -1:
                return OUT
            return [(Iv(term.lhs, term.offset - 1, rest), F1)]
        return [(term, F1)]
    raise TypeError(term)


def node_image(term, x: str, t: str, u: str, lang: Language):
    """Image of a term when x := node t a u."""
    if isinstance(term, Lg):
        if x not in term.vars:
            return [(term, F1)]
        return [(Lg(term.vars - {x} | {t, u}, term.offset), F1)]
    if isinstance(term, Phi):
        if term.var != x:
            return [(term, F1)]
        out = [(Phi(t), F1), (Phi(u), F1)]
        if lang.name == "sol":
            p = lang.params
            for v, w in ((Lg(frozenset([t]), 0), p.a),
                         (Lg(frozenset([u]), 0), p.b),
                         (Lg(frozenset([t, u]), 0), p.c)):
                if w != 0:
                    out.append((v, Fraction(w)))
        else:
            out.append((Iv(frozenset([t]), 0, frozenset([u])), F1))
        return out
    if isinstance(term, Rk):
        if term.var != x:
            return [(term, F1)]
        return [(Rk(u), F1), (UNIT, F1)]
    if isinstance(term, Iv):
        if x in term.lhs:
            return [(Iv(term.lhs - {x} | {t, u}, term.offset, term.rhs), F1)]
        if x in term.rhs:
            return [(Iv(term.lhs, term.offset, term.rhs - {x} | {t, u}), F1)]
        return [(term, F1)]
    raise TypeError(term)


class _Feeds:
    """Accumulates target-term -> linear expression of source coefficients."""

    def __init__(self, template: ResourceTemplate):
        self.template = template
        self.universe = set(template.terms())
        self.feeds = {}

    def ok(self, images) -> bool:
        if images == OUT:
            return False
        if images == VANISH:
            return True
        return all(tgt in self.universe for tgt, _ in images)

    def accumulate(self, images, source_name: str, scale: Fraction = F1):
        if images == VANISH:
            return
        for tgt, w in images:
            self.feeds.setdefault(tgt, LinExpr()).add(source_name, w * scale)

    def emit(self, cs: ConstraintSet, node: int, rule: str, tag: str = ""):
        """target coefficient = fed sum; unfed non-vanishing targets are 0."""
        for term in self.template.terms():
            name = self.template.name(term)
            fed = self.feeds.get(term)
            if fed is None:
                if not _value_zero(term):
                    cs.zero(name, node=node, rule=rule, tag=tag + "/unfed")
            else:
                cs.eq(LinExpr.var(name), fed, node=node, rule=rule, tag=tag)


# ---------------------------------------------------------------------------
# Template-agnostic rules

def ctr_var(cs: ConstraintSet, node: int, Q: ResourceTemplate,
            Qp: ResourceTemplate, x: str):
    """q_i = q'_{i[x -> val]}."""
    assert Q.args == (x,)
    for term, name in Qp.coeffs.items():
        pre = rename_term(term, {VAL: x})
        qn = Q.name(pre)
        if qn is None:
            cs.zero(name, node=node, rule="Var", tag="unreachable")
        else:
            cs.eq(LinExpr.var(qn), LinExpr.var(name), node=node, rule="Var")


def ctr_cmp(cs: ConstraintSet, node: int, Q: ResourceTemplate):
    """Comparison leaves carry no potential."""
    for term, name in Q.coeffs.items():
        cs.zero(name, node=node, rule="Cmp")


def ctr_ite(cs: ConstraintSet, node: int, Q: ResourceTemplate,
            P: ResourceTemplate, R: ResourceTemplate):
    """q_i = p_i + r_i (P types the condition, R both branches)."""
    for term, name in Q.coeffs.items():
        cs.eq(LinExpr.var(name),
              LinExpr.var(P.name(term)).plus(LinExpr.var(R.name(term))),
              node=node, rule="Ite")


def ctr_shift(cs: ConstraintSet, node: int, k_name: str,
              Q: ResourceTemplate, Qp: ResourceTemplate,
              P: ResourceTemplate, Pp: ResourceTemplate):
    """p_1 = q_1 - k on both sides, k >= 0."""
    cs.declare(k_name, "nonneg")
    for big, small in ((Q, P), (Qp, Pp)):
        for term, name in big.coeffs.items():
            rhs = LinExpr.var(small.name(term))
            if term == UNIT:
                rhs = rhs.plus(LinExpr.var(k_name))
            cs.eq(LinExpr.var(name), rhs, node=node, rule="Shift")


def ctr_tick(cs: ConstraintSet, node: int, amount: Fraction,
             Qp: ResourceTemplate, Pp: ResourceTemplate):
    """p'_1 = q'_1 + a; the child produces `a` more constant potential."""
    for term, name in Qp.coeffs.items():
        rhs = LinExpr.var(Pp.name(term))
        if term == UNIT:
            rhs = rhs.plus(LinExpr({}, -Fraction(amount)))
        cs.eq(LinExpr.var(name), rhs, node=node, rule="Tick")


def ctr_wvar(cs: ConstraintSet, node: int, Q: ResourceTemplate,
             P: ResourceTemplate, x: str):
    """Drop x: terms mentioning x stay nonnegative, the rest pass."""
    for term, name in Q.coeffs.items():
        if x in term.variables():
            cs.ge(LinExpr.var(name), LinExpr(), node=node, rule="WVar")
        else:
            cs.eq(LinExpr.var(P.name(term)), LinExpr.var(name),
                  node=node, rule="WVar")


def ctr_share(cs: ConstraintSet, node: int, Q: ResourceTemplate,
              P: ResourceTemplate, z: str, x: str, y: str):
    """p_{i[z->x]} + p_{i[z->y]} = q_i; unrepresentable merges are pinned."""
    fed = {}
    for term, name in P.coeffs.items():
        try:
            tgt = rename_term(term, {x: z, y: z})
        except RenameCollision:
            cs.zero(name, node=node, rule="Share", tag="merge-collision")
            continue
        if Q.name(tgt) is None:
            if not _value_zero(term):
                cs.zero(name, node=node, rule="Share", tag="no-target")
            continue
        fed.setdefault(tgt, []).append(name)
    for term, name in Q.coeffs.items():
        srcs = fed.get(term)
        if srcs is None:
            if not _value_zero(term):
                cs.zero(name, node=node, rule="Share", tag="unfed")
        else:
            rhs = LinExpr()
            for s in srcs:
                rhs.add(s, 1)
            cs.eq(LinExpr.var(name), rhs, node=node, rule="Share")


def app_option_atoms(Q: ResourceTemplate, Qp: ResourceTemplate,
                     sig_lhs: ResourceTemplate, sig_rhs: ResourceTemplate,
                     extra,          # None | (k, cf_lhs, cf_rhs)
                     renaming: dict) -> list:
    """Atoms for one (signature, k * cost-free signature) choice.

    renaming maps signature formals to caller actuals.  Caller terms outside
    the renamed signature universe are pinned; signature result terms absent
    from the caller result template are dropped (a sound weakening).
    """
    atoms = []
    # input side
    image = {}
    for term, name in sig_lhs.coeffs.items():
        tgt = rename_term(term, renaming)
        rhs = LinExpr.var(name)
        if extra is not None:
            k, cf_lhs, _ = extra
            n2 = cf_lhs.name(term)
            if n2 is not None and k != 0:
                rhs.add(n2, k)
        image[tgt] = rhs
    if extra is not None:
        k, cf_lhs, _ = extra
        for term, name in cf_lhs.coeffs.items():
            tgt = rename_term(term, renaming)
            if tgt not in image and k != 0:
                image[tgt] = LinExpr.var(name, k)
    for term, name in Q.coeffs.items():
        rhs = image.get(term, LinExpr())
        atoms.append(Atom.eq(LinExpr.var(name), rhs))
    # output side (both over VAL)
    for term, name in Qp.coeffs.items():
        rhs = LinExpr()
        n1 = sig_rhs.name(term)
        if n1 is not None:
            rhs.add(n1, 1)
        if extra is not None:
            k, _, cf_rhs = extra
            n2 = cf_rhs.name(term)
            if n2 is not None and k != 0:
                rhs.add(n2, k)
        atoms.append(Atom.eq(LinExpr.var(name), rhs))
    return atoms


def ctr_app(cs: ConstraintSet, node: int, Q, Qp, options: list,
            renaming: dict, tag: str = ""):
    """One labeled branch per (signature, k) option."""
    branches = []
    for label, sig_lhs, sig_rhs, extra in options:
        atoms = app_option_atoms(Q, Qp, sig_lhs, sig_rhs, extra, renaming)
        branches.append((label, atoms))
    if len(branches) == 1:
        for a in branches[0][1]:
            cs.add(a, node=node, rule="App", tag=tag)
    else:
        cs.add(Disjunction(branches), node=node, rule="App", tag=tag)


# ---------------------------------------------------------------------------
# Const

def ctr_const_leaf(cs: ConstraintSet, lang: Language, node: int,
                   Q: ResourceTemplate, Qp: ResourceTemplate):
    """Q() = Q'(leaf): constant potential must match the leaf's potential."""
    feeds = _Feeds(Q)
    for term, name in Qp.coeffs.items():
        img = leaf_image(term, VAL, lang)
        if not feeds.ok(img):
            cs.zero(name, node=node, rule="Const", tag="leaf/out")
            continue
        feeds.accumulate(img, name)
    feeds.emit(cs, node, "Const", "leaf")


def ctr_const_node(cs: ConstraintSet, lang: Language, node: int,
                   Q: ResourceTemplate, Qp: ResourceTemplate,
                   t: str, u: str):
    """Q(t, u) = Q'(node t a u)."""
    feeds = _Feeds(Q)
    for term, name in Qp.coeffs.items():
        img = node_image(term, VAL, t, u, lang)
        if not feeds.ok(img):
            cs.zero(name, node=node, rule="Const", tag="node/out")
            continue
        feeds.accumulate(img, name)
    feeds.emit(cs, node, "Const", "node")


# ---------------------------------------------------------------------------
# Match

def ctr_match(cs: ConstraintSet, lang: Language, node: int,
              Q: ResourceTemplate, P: ResourceTemplate, R: ResourceTemplate,
              x: str, t: str, u: str):
    """P(Gamma) = Q(Gamma, leaf) and R(Gamma, t, u) = Q(Gamma, node t a u)."""
    leaf_feeds = _Feeds(P)
    node_feeds = _Feeds(R)
    for term, name in Q.coeffs.items():
        li = leaf_image(term, x, lang)
        ni = node_image(term, x, t, u, lang)
        if not (leaf_feeds.ok(li) and node_feeds.ok(ni)):
            cs.zero(name, node=node, rule="Match", tag="unrepresentable")
            continue
        leaf_feeds.accumulate(li, name)
        node_feeds.accumulate(ni, name)
    leaf_feeds.emit(cs, node, "Match", "leaf-arm")
    node_feeds.emit(cs, node, "Match", "node-arm")


# ---------------------------------------------------------------------------
# Let

LOG_DE = ((0, 1), (0, 2), (1, -1), (1, 0), (1, 1), (1, 2))


@dataclass
class LetAux:
    """One cost-free lifting pair for a let binding."""
    key: tuple                     # ('log', bset, d, e) | ('iv', yset, c2, rset)
    lhs: ResourceTemplate          # over Gamma (iv: with X)
    rhs: ResourceTemplate          # over VAL (extended / with X)

    @property
    def kind(self):
        return self.key[0]


def plan_let_aux(lang: Language, Q: ResourceTemplate, gamma: tuple,
                 delta: tuple) -> list:
    """Aux-pair keys needed to lift this Q's mixed terms."""
    gset, dset = set(gamma), set(delta)
    keys = []
    log_bsets = set()
    iv_keys = set()
    for term in Q.terms():
        if isinstance(term, Lg):
            ag = term.vars & gset
            ad = term.vars & dset
            if ag and ad:
                log_bsets.add(frozenset(ad))
        elif isinstance(term, Iv):
            lg_, ld = term.lhs & gset, term.lhs & dset
            if not lg_:
                continue
            if term.rhs & gset:
                continue            # unliftable, pinned later
            rhs = term.rhs           # subset of Delta or {X}
            for c1 in (-1, 0, 1, 2):
                c2 = term.offset - c1
                if -1 <= c2 <= 2:
                    iv_keys.add((frozenset(ld), c2, rhs))
    for b in sorted(log_bsets, key=sorted):
        for d, e in LOG_DE:
            keys.append(("log", b, d, e))
    for yset, c2, rset in sorted(iv_keys, key=lambda k: (sorted(k[0]), k[1],
                                                         sorted(k[2]))):
        keys.append(("iv", yset, c2, rset))
    return keys


def make_let_aux(lang: Language, keys: list, gamma: tuple, nodes) -> list:
    out = []
    for key in keys:
        nid = nodes.node_id()
        if key[0] == "log":
            lhs = fresh_template(lang, gamma, nid, use_template_param=False,
                                 prefix="a")
            rhs = fresh_template(lang, (VAL,), nid, use_template_param=False,
                                 extended=True, prefix="b")
        else:
            lhs = fresh_template(lang, gamma, nid, prefix="a")
            rhs = fresh_template(lang, (VAL,), nid, extended=True, prefix="b")
        out.append(LetAux(key, lhs, rhs))
    return out


def ctr_let(cs: ConstraintSet, lang: Language, node: int,
            Q: ResourceTemplate, P: ResourceTemplate, Pp: ResourceTemplate,
            R: ResourceTemplate, aux: list, gamma: tuple, delta: tuple,
            x: str):
    """Potential split of `let x = e1 in e2`.

    Pure-Gamma terms go to the binding, pure-Delta terms pass to the body,
    the binding result's terms reappear on x, and mixed terms are lifted
    through the cost-free aux pairs.  Each aux pair is channel-pure: only
    its lifting slots may be nonzero, so its cost-free typing implies
    exactly the inequality the lifting argument needs.
    """
    gset, dset = set(gamma), set(delta)
    aux_by_key = {a.key: a for a in aux}
    p_feeds = _Feeds(P)
    r_feeds = _Feeds(R)
    used_slots = {a.key: set() for a in aux}

    def aux_slots(key, slot):
        """Name of an aux input slot, recording use."""
        a = aux_by_key.get(key)
        if a is None:
            return None
        n = a.lhs.name(slot)
        if n is not None:
            used_slots[key].add(slot)
        return n

    # ---- distribute Q ----------------------------------------------------
    for term, name in Q.coeffs.items():
        if isinstance(term, Lg):
            ag = frozenset(term.vars & gset)
            ad = frozenset(term.vars & dset)
            if not ad:                       # pure Gamma (incl. constants)
                p_feeds.accumulate([(term, F1)], name)
            elif not ag:                     # pure Delta, any offset: pass
                r_feeds.accumulate([(term, F1)], name)
            else:                            # mixed: distribute over aux
                parts = LinExpr()
                slot = Lg(ag, term.offset)
                for d, e in LOG_DE:
                    sn = aux_slots(("log", ad, d, e), slot)
                    if sn is not None:
                        parts.add(sn, 1)
                if parts.coeffs:
                    cs.eq(LinExpr.var(name), parts, node=node, rule="Let",
                          tag="mixed-log")
                else:
                    cs.zero(name, node=node, rule="Let", tag="mixed-log/none")
        elif isinstance(term, (Phi, Rk)):
            if term.var in gset:
                p_feeds.accumulate([(term, F1)], name)
            else:
                r_feeds.accumulate([(term, F1)], name)
        elif isinstance(term, Iv):
            vg = (term.lhs | term.rhs) & gset
            vd = (term.lhs | term.rhs) & dset
            if not vd:                       # pure Gamma (+X)
                p_feeds.accumulate([(term, F1)], name)
            elif not vg:                     # pure Delta (+X)
                r_feeds.accumulate([(term, F1)], name)
            elif term.rhs & gset:
                cs.zero(name, node=node, rule="Let", tag="mixed-iv/out")
            else:
                lg_ = frozenset(term.lhs & gset)
                ld = frozenset(term.lhs & dset)
                parts = LinExpr()
                for c1 in (-1, 0, 1, 2):
                    c2 = term.offset - c1
                    sn = aux_slots(("iv", ld, c2, term.rhs),
                                   Iv(lg_, c1, frozenset([X])))
                    if sn is not None:
                        parts.add(sn, 1)
                if parts.coeffs:
                    cs.eq(LinExpr.var(name), parts, node=node, rule="Let",
                          tag="mixed-iv")
                else:
                    cs.zero(name, node=node, rule="Let", tag="mixed-iv/none")
        else:
            raise TypeError(term)

    # ---- feed R from the binding result and the aux outputs ---------------
    def feed(term, src_name):
        r_feeds.feeds.setdefault(term, LinExpr()).add(src_name, 1)

    for term in R.terms():
        if isinstance(term, Lg):
            b = frozenset(term.vars - {x})
            if x in term.vars:
                if not b:
                    src = Pp.name(Lg(frozenset([VAL]), term.offset))
                    if src is not None:
                        feed(term, src)
                else:
                    a = aux_by_key.get(("log", b, 1, term.offset))
                    if a is not None:
                        src = a.rhs.name(Lg(frozenset([VAL]), term.offset))
                        if src is not None:
                            feed(term, src)
            elif not term.vars:
                # constants flow from the binding result (including debts)
                src = Pp.name(term)
                if src is not None:
                    feed(term, src)
            else:
                # pure Delta: pass-through (already fed) plus decayed lifts
                a = aux_by_key.get(("log", b, 0, term.offset))
                if a is not None:
                    src = a.rhs.name(Lg(frozenset(), term.offset))
                    if src is not None:
                        feed(term, src)
        elif isinstance(term, (Phi, Rk)):
            if term.var == x:
                src = Pp.name(type(term)(VAL))
                if src is not None:
                    feed(term, src)
        elif isinstance(term, Iv):
            if x not in term.variables():
                if not ((term.lhs | term.rhs) - {X}):
                    src = Pp.name(term)       # [c < X] from the binding
                    if src is not None:
                        feed(term, src)
                continue
            if x in term.rhs:
                if term.rhs == frozenset([x]) and not (term.lhs & dset):
                    src = Pp.name(Iv(term.lhs, term.offset, frozenset([VAL])))
                    if src is not None:
                        feed(term, src)
                continue
            yd = frozenset(term.lhs - {x})
            if not yd and term.rhs == frozenset([X]):
                src = Pp.name(Iv(frozenset([VAL]), term.offset,
                                 frozenset([X])))
                if src is not None:
                    feed(term, src)
            for c1 in (-1, 0, 1, 2):
                c2 = term.offset - c1
                a = aux_by_key.get(("iv", yd, c2, term.rhs))
                if a is None:
                    continue
                src = a.rhs.name(Iv(frozenset([VAL]), c1, frozenset([X])))
                if src is not None:
                    feed(term, src)

    p_feeds.emit(cs, node, "Let", "binding")
    r_feeds.emit(cs, node, "Let", "body")

    # ---- binding-result terms nobody can receive ---------------------------
    ext = Lg(frozenset([VAL]), -1)
    if Pp.name(ext) is not None and R.name(Lg(frozenset([x]), -1)) is None:
        cs.zero(Pp.name(ext), node=node, rule="Let", tag="binding-ext/orphan")

    # ---- aux channel pins, lifting sum and implication side conditions ----
    for a in aux:
        used = used_slots[a.key]
        if a.kind == "log":
            _, bset, d, e = a.key
            slot_out = Lg(frozenset([VAL]), e) if d == 1 else Lg(frozenset(), e)
            out_name = a.rhs.name(slot_out)
            total = LinExpr()
            for term, name in a.lhs.coeffs.items():
                if term not in used:
                    cs.zero(name, node=node, rule="Let", tag="aux/channel")
                    continue
                total.add(name, 1)
                if out_name is not None:
                    cs.add(Implication(name,
                                       Atom.le(LinExpr.var(out_name),
                                               LinExpr.var(name))),
                           node=node, rule="Let", tag="aux/lift-cap")
            for term, name in a.rhs.coeffs.items():
                if term != slot_out:
                    cs.zero(name, node=node, rule="Let", tag="aux/out-channel")
            if out_name is not None:
                cs.ge(total, LinExpr.var(out_name), node=node, rule="Let",
                      tag="aux/lift-sum")
        else:
            for term, name in a.lhs.coeffs.items():
                if term not in used:
                    cs.zero(name, node=node, rule="Let", tag="aux/channel")
            for term, name in a.rhs.coeffs.items():
                if not (isinstance(term, Iv) and term.lhs == frozenset([VAL])
                        and term.rhs == frozenset([X])):
                    cs.zero(name, node=node, rule="Let", tag="aux/out-channel")
