"""Expert-knowledge fact bases and the Farkas encoding of weakening.

A fact base is a matrix of valid inequalities over the template terms of
one context (rows: sum of coeff*term <= bound), assembled from the
logarithmic lemmas, Iverson relations, rank facts and a guard-aware
monotone order of logarithmic terms.  Weakening steps are encoded as
existentially quantified nonnegative Farkas multipliers, which keeps the
whole system linear.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import Atom, ConstraintSet, LinExpr
from .lang import MEASURE_WEIGHT, RefinementPredicate
from .templates import (Iv, Language, Lg, Phi, ResourceTemplate, Rk, UNIT,
                        X, ZERO_LOG, template_term_value)

F0, F1 = Fraction(0), Fraction(1)


@dataclass(frozen=True)
class Guard:
    """Normalized size/rank comparison: measure(a) op measure(b)."""
    measure: str     # '#' or 'rank'
    a: str
    op: str          # '>=' | '>' | '='
    b: str

    @staticmethod
    def of(p: RefinementPredicate) -> Optional["Guard"]:
        m = "#" if p.measure == MEASURE_WEIGHT else "rank"
        if p.op in (">=", ">", "="):
            return Guard(m, p.lhs, p.op, p.rhs)
        if p.op == "<=":
            return Guard(m, p.rhs, ">=", p.lhs)
        if p.op == "<":
            return Guard(m, p.rhs, ">", p.lhs)
        return None

    def __str__(self):
        return f"{self.measure}{self.a} {self.op} {self.measure}{self.b}"


def guard_closure(guards) -> set:
    """One-step relaxation closure: > implies >=, = implies >= both ways."""
    out = set()
    for g in guards:
        out.add(g)
        if g.op == ">":
            out.add(Guard(g.measure, g.a, ">=", g.b))
        elif g.op == "=":
            out.add(Guard(g.measure, g.a, ">=", g.b))
            out.add(Guard(g.measure, g.b, ">=", g.a))
    return out


def entails(guards, p: RefinementPredicate) -> bool:
    """guards |- p via membership in the one-step closure."""
    g = Guard.of(p)
    if g is None:
        return True
    closure = guard_closure(guards)
    if g in closure:
        return True
    if g.op == ">=" and Guard(g.measure, g.a, ">", g.b) in closure:
        return True
    return False


# ---------------------------------------------------------------------------
# Guard-aware order of logarithmic terms (certificates with v = 1*lambda)

def size_guard_rows(guards, variables) -> list:
    """Rows (as var->coeff dicts) r with r . x <= 0 for all guard-satisfying
    size valuations x >= 1; from weight guards only (|a| = #a + 1)."""
    rows = []
    vs = set(variables)
    for g in guard_closure(guards):
        if g.measure != "#" or g.a not in vs or g.b not in vs:
            continue
        if g.op in (">=", ">"):
            rows.append({g.b: F1, g.a: -F1})       # |b| - |a| <= 0
        elif g.op == "=":
            rows.append({g.b: F1, g.a: -F1})
            rows.append({g.a: F1, g.b: -F1})
    return rows


def _cert(pvec: dict, beta: Fraction, grows: list) -> bool:
    """Does p.x <= beta hold for all x >= 1 with (C-D)x <= 0, certified
    with multipliers v = 1*lambda, lambda in {0, 1}?"""
    for lam in (F0, F1):
        colsum = {}
        total = F0
        for r in grows:
            for v, w in r.items():
                colsum[v] = colsum.get(v, F0) + w
            total += sum(r.values())
        ok = True
        for v in set(pvec) | set(colsum):
            lhs = lam * colsum.get(v, F0)
            if lhs < pvec.get(v, F0):
                ok = False
                break
        if ok:
            psum = sum(pvec.values(), F0)
            if psum - lam * total <= beta:
                return True
    return False


def arg_leq(A: frozenset, ca: int, B: frozenset, cb: int, grows: list) -> bool:
    """sum|A| + ca <= sum|B| + cb over the guard polytope (x >= 1)."""
    pvec = {}
    for v in A:
        pvec[v] = pvec.get(v, F0) + 1
    for v in B:
        pvec[v] = pvec.get(v, F0) - 1
    pvec = {k: v for k, v in pvec.items() if v}
    return _cert(pvec, Fraction(cb - ca), grows)


def log_leq(t1: Lg, t2: Lg, grows: list) -> bool:
    """log term order: t1 <= t2 pointwise over the guard polytope."""
    return arg_leq(t1.vars, t1.offset, t2.vars, t2.offset, grows)


# ---------------------------------------------------------------------------
# Fact bases

@dataclass
class FactRow:
    coeffs: dict                 # term -> Fraction
    bound: Fraction
    note: str

    def __str__(self):
        lhs = " + ".join(f"{w}*{t}" for t, w in self.coeffs.items())
        return f"{lhs} <= {self.bound}   ({self.note})"


@dataclass
class FactBase:
    rows: list = field(default_factory=list)
    guards: tuple = ()
    note: str = ""

    def add(self, coeffs: dict, bound, note: str):
        self.rows.append(FactRow({t: Fraction(w) for t, w in coeffs.items()
                                  if w != 0}, Fraction(bound), note))


@dataclass(frozen=True)
class LemmaConfig:
    l1: bool = True
    l2: bool = False
    l3_pairs: tuple = ()
    cor1: bool = False
    rank_log: bool = False

    @staticmethod
    def for_language(lang: Language) -> "LemmaConfig":
        if lang.name == "pw":
            return LemmaConfig(l1=True, l2=True, cor1=True)
        if lang.name == "sol":
            return LemmaConfig(l1=True, cor1=True,
                               l3_pairs=((Fraction(105, 163),
                                          Fraction(3115, 7824)),))
        if lang.name == "rank":
            return LemmaConfig(l1=False, rank_log=True)
        return LemmaConfig(l1=True, cor1=True)

    def monotone_only(self) -> "LemmaConfig":
        return LemmaConfig(l1=False, l2=False, l3_pairs=(), cor1=False,
                           rank_log=self.rank_log)


def _args_universe(terms) -> list:
    """(variable set, offset) argument candidates appearing in log terms."""
    out = set()
    for t in terms:
        if isinstance(t, Lg) and t.vars:
            out.add((t.vars, t.offset))
    out.add((frozenset(), 1))       # the constant 1
    return sorted(out, key=lambda a: (sorted(a[0]), a[1]))


def build_facts(lang: Language, terms: list, guards, cfg: LemmaConfig,
                ) -> FactBase:
    """One fact base for a context's term universe under its guards."""
    fb = FactBase(guards=tuple(guards))
    terms = list(terms)
    tset = set(terms)
    variables = set()
    for t in terms:
        variables |= set(v for v in t.variables() if v != X)
    grows = size_guard_rows(guards, variables)
    logs = [t for t in terms if isinstance(t, Lg)]

    # value-zero log terms are freely exchangeable
    if ZERO_LOG in tset:
        fb.add({ZERO_LOG: 1}, 0, "log(1) = 0")
        fb.add({ZERO_LOG: -1}, 0, "log(1) = 0")

    # monotone order of log terms (guard-aware); rows cover the Hasse
    # edges of the quotient poset plus equivalence cycles
    nonunit = [t for t in logs if t.vars]
    leq = {t: set() for t in nonunit}
    for t1, t2 in itertools.permutations(nonunit, 2):
        if log_leq(t1, t2, grows):
            leq[t1].add(t2)
    cls = {}                    # term -> representative of its equivalence class
    members = {}
    for t in nonunit:
        for r in members:
            if t in leq[r] and r in leq[t]:
                cls[t] = r
                members[r].append(t)
                break
        else:
            cls[t] = t
            members[t] = [t]
    for r, ms in members.items():
        for a, b in zip(ms, ms[1:] + ms[:1]):
            if a != b:
                fb.add({a: 1, b: -1}, 0, f"mono {a} = {b}")
    reps = list(members)
    for r1 in reps:
        for r2 in reps:
            if r1 is r2 or r2 not in leq[r1]:
                continue
            if any(m is not r1 and m is not r2 and m in leq[r1]
                   and r2 in leq[m] and not (r1 in leq[m])
                   for m in reps):
                continue        # strictly-intermediate representative exists
            fb.add({r1: 1, r2: -1}, 0, f"mono {r1} <= {r2}")

    # lemma instances over argument pairs (A,ca), (B,cb)
    args = _args_universe(terms)
    pairs = []
    for (A, ca), (B, cb) in itertools.permutations(args, 2):
        if A & B:
            continue
        s = Lg(A | B, ca + cb)
        if s not in tset:
            continue
        ta = Lg(A, ca) if (A or ca >= 1) else None
        tb = Lg(B, cb) if (B or cb >= 1) else None
        if ta is not None and ta not in tset:
            ta = None
        if tb is not None and tb not in tset:
            tb = None
        pairs.append(((A, ca, ta), (B, cb, tb), s))

    for (A, ca, ta), (B, cb, tb), s in pairs:
        # L1 / L3: a log x + b log y + 1 <= (a+b) log(x+y)
        pl = [(Fraction(1, 2), Fraction(1, 2), "L1")] if cfg.l1 else []
        for (a3, b3) in cfg.l3_pairs:
            pl.append((Fraction(a3), Fraction(b3), f"L3({a3},{b3})"))
        for a, b, note in pl:
            row = {s: -(a + b)}
            if ta is not None:
                row[ta] = row.get(ta, F0) + a
            elif a:
                continue            # log x term missing: skip instance
            if tb is not None:
                row[tb] = row.get(tb, F0) + b
            elif b:
                continue
            fb.add(row, -1, f"{note} {s}")
        # Cor1 (guard-licensed): x >= y >= 1: log y + 1 <= log(x+y)
        if cfg.cor1 and tb is not None and arg_leq(B, cb, A, ca, grows):
            fb.add({tb: 1, s: -1}, -1, f"Cor1 {tb} | {s}")
        if cfg.l2 and lang.name == "pw":
            # L2base: log y + [x >= y] <= log(x+y);  [x>=y] = [B+cb-ca-1 < A]
            ge = Iv(B, cb - ca - 1, A)
            if tb is not None and ge in tset:
                fb.add({tb: 1, ge: 1, s: -1}, 0, f"L2base {s}")
            # L2i: log y + 1 <= log(x+y) + [x < y];  [x<y] = [A+ca-cb < B]
            lt = Iv(A, ca - cb, B)
            if tb is not None and lt in tset:
                fb.add({tb: 1, lt: -1, s: -1}, -1, f"L2i {s}")
            # L2ii: log y + [x > y] <= log(x+y);  [x>y] = [B+cb-ca < A]
            gt = Iv(B, cb - ca, A)
            if tb is not None and gt in tset:
                fb.add({tb: 1, gt: 1, s: -1}, 0, f"L2ii {s}")

    # Iverson facts
    for t in terms:
        if not isinstance(t, Iv):
            continue
        fb.add({t: 1}, 1, f"{t} <= 1")
        if X in t.rhs:
            # order among X-brackets with comparable left-hand sides
            for t2 in terms:
                if (isinstance(t2, Iv) and X in t2.rhs and t2 != t
                        and arg_leq(t2.lhs, t2.offset, t.lhs, t.offset,
                                    grows)):
                    fb.add({t: 1, t2: -1}, 0, f"mono {t} <= {t2}")
            continue
        # identically-1 brackets: [c < sum rhs] with c < |rhs|
        if not t.lhs and t.offset < len(t.rhs):
            fb.add({t: -1}, -1, f"{t} = 1")
        # guard-pinned brackets
        if arg_leq(t.lhs, t.offset + 1, t.rhs, 0, grows):
            fb.add({t: -1}, -1, f"{t} = 1 (guards)")
        if arg_leq(t.rhs, 0, t.lhs, t.offset, grows):
            fb.add({t: 1}, 0, f"{t} = 0 (guards)")
        # order among brackets: [A+c < B] <= [A'+c' < B'] when A'+c' <= A+c
        # and B <= B' pointwise
        for t2 in terms:
            if (isinstance(t2, Iv) and t2 != t and X not in t2.rhs
                    and arg_leq(t2.lhs, t2.offset, t.lhs, t.offset, grows)
                    and arg_leq(t.rhs, 0, t2.rhs, 0, grows)):
                fb.add({t: 1, t2: -1}, 0, f"mono {t} <= {t2}")

    # rank facts
    if cfg.rank_log or lang.name == "rank":
        for t in terms:
            if isinstance(t, Rk):
                lx = Lg(frozenset([t.var]), 0)
                if lx in tset:
                    fb.add({t: 1, lx: -1}, 0, f"rank {t.var} <= log|{t.var}|")
        for g in guard_closure(guards):
            if g.measure == "rank":
                ra, rb = Rk(g.a), Rk(g.b)
                if ra in tset and rb in tset:
                    fb.add({rb: 1, ra: -1}, 0, f"{g}")
                    if g.op == "=":
                        fb.add({ra: 1, rb: -1}, 0, f"{g}")
    return fb


# ---------------------------------------------------------------------------
# Farkas encoding

@dataclass
class FarkasBlock:
    """Bookkeeping for one weakening node (for audit and rendering)."""
    node: int
    facts: FactBase
    multiplier_names: list
    parent: ResourceTemplate
    child: ResourceTemplate


def farkas_encode(cs: ConstraintSet, node: int, facts: FactBase,
                  parent: ResourceTemplate, child: ResourceTemplate,
                  ) -> FarkasBlock:
    """Child potential <= parent potential, certified over the fact base.

    Emits, per non-unit term, (child - parent) <= f^T A restricted to that
    term's column, plus f^T b <= parent_unit - child_unit with f >= 0.
    """
    fnames = []
    for i, row in enumerate(facts.rows):
        fn = f"f{node}_{i}"
        cs.declare(fn, "nonneg")
        fnames.append(fn)
    univ = set(parent.terms()) | set(child.terms())
    for term in sorted(univ, key=str):
        if term == UNIT:
            continue
        lhs = LinExpr()
        pn, cn = parent.name(term), child.name(term)
        if cn is not None:
            lhs.add(cn, 1)
        if pn is not None:
            lhs.add(pn, -1)
        for fn, row in zip(fnames, facts.rows):
            w = row.coeffs.get(term)
            if w:
                lhs.add(fn, -w)
        cs.le(lhs, LinExpr(), node=node, rule="W", tag=f"farkas {term}")
    bound = LinExpr()
    for fn, row in zip(fnames, facts.rows):
        if row.bound:
            bound.add(fn, row.bound)
    pu, cu = parent.name(UNIT), child.name(UNIT)
    rhs = LinExpr()
    if pu is not None:
        rhs.add(pu, 1)
    if cu is not None:
        rhs.add(cu, -1)
    cs.le(bound, rhs, node=node, rule="W", tag="farkas bound")
    return FarkasBlock(node, facts, fnames, parent, child)


def verify_certificate(block: FarkasBlock, model: dict, lang: Language,
                       trials: int = 100, seed: int = 0,
                       tol: float = 1e-6) -> bool:
    """Exact re-check of one weakening certificate plus numeric sampling."""
    mv = lambda n: model.get(n, F0)
    # exact: per-term inequality and the bound
    univ = set(block.parent.terms()) | set(block.child.terms())
    for term in univ:
        if term == UNIT:
            continue
        u = F0
        cn, pn = block.child.name(term), block.parent.name(term)
        if cn is not None:
            u += mv(cn)
        if pn is not None:
            u -= mv(pn)
        cover = sum((mv(fn) * row.coeffs.get(term, F0)
                     for fn, row in zip(block.multiplier_names,
                                        block.facts.rows)), F0)
        if u > cover:
            return False
    total = sum((mv(fn) * row.bound for fn, row in
                 zip(block.multiplier_names, block.facts.rows)), F0)
    pu = mv(block.parent.name(UNIT)) if block.parent.name(UNIT) else F0
    cu = mv(block.child.name(UNIT)) if block.child.name(UNIT) else F0
    if total > pu - cu:
        return False
    for fn in block.multiplier_names:
        if mv(fn) < 0:
            return False
    # numeric: sampled guard-satisfying valuations
    rng = random.Random(seed)
    gs = guard_closure(block.facts.guards)
    for _ in range(trials):
        env = _guarded_env(block.parent.args, gs, rng)
        if env is None:
            continue
        pv = _tpl_value(block.parent, model, lang, env)
        cv = _tpl_value(block.child, model, lang, env)
        if cv > pv + tol:
            return False
    return True


def _guarded_env(args, guards, rng, max_size: int = 24, attempts: int = 200):
    from .semantics import generate_tree, leaves as nleaves, rank as trank
    for _ in range(attempts):
        env = {v: generate_tree(rng.randint(1, max_size), "any", rng=rng)
               for v in args}
        ok = True
        for g in guards:
            if g.a not in env or g.b not in env:
                continue
            f = (lambda t: nleaves(t) - 1) if g.measure == "#" else trank
            av, bv = f(env[g.a]), f(env[g.b])
            if g.op == ">=" and not av >= bv:
                ok = False
            elif g.op == ">" and not av > bv:
                ok = False
            elif g.op == "=" and not av == bv:
                ok = False
        if ok:
            env[X] = generate_tree(rng.randint(1, max_size), "any", rng=rng)
            return env
    return None


def _tpl_value(tpl: ResourceTemplate, model: dict, lang: Language,
               env: dict) -> float:
    total = 0.0
    for term, name in tpl.coeffs.items():
        q = model.get(name, F0)
        if q:
            total += float(q) * template_term_value(lang, term, env)
    return total
