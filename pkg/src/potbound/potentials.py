"""Numeric potential functions and oracles for the expert-knowledge facts.

Everything here is double precision and serves as an independent check on
the symbolic machinery; inferred coefficients stay exact rationals
elsewhere.  ``log`` is log base 2 throughout.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .semantics import VLeaf, VNode, is_tree, leaves, rank as tree_rank

LOG_TOL = 1e-9


@dataclass(frozen=True)
class SolParams:
    a: Fraction
    b: Fraction
    c: Fraction

    def __str__(self):
        return f"({self.a},{self.b},{self.c})"


# presets from the literature
SOL_U = SolParams(Fraction(0), Fraction(1, 2), Fraction(0))
SOL_NEG_T = SolParams(Fraction(-1, 2), Fraction(0), Fraction(1, 2))
SOL_PHI = SolParams(Fraction(-105, 163), Fraction(0), Fraction(105, 163))


@dataclass(frozen=True)
class PotentialKind:
    tag: str                       # 'pw' | 'sol' | 'rank' | 'log_only'
    params: Optional[SolParams] = None


PW = PotentialKind("pw")
RANK = PotentialKind("rank")
LOG_ONLY = PotentialKind("log_only")


def sol(params: SolParams) -> PotentialKind:
    return PotentialKind("sol", params)


def log2(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log argument {x} <= 0")
    return math.log2(x)


def potential(kind: PotentialKind, v) -> float:
    """Recursive evaluation of a potential-function family on a tree."""
    if not is_tree(v):
        raise TypeError("potential of a non-tree value")
    if kind.tag == "log_only":
        return 0.0
    if kind.tag == "rank":
        return float(tree_rank(v))
    if kind.tag == "pw":
        if isinstance(v, VLeaf):
            return 0.0
        t, u = v.left, v.right
        return (potential(kind, t) + (1.0 if leaves(t) < leaves(u) else 0.0)
                + potential(kind, u))
    if kind.tag == "sol":
        p = kind.params
        if isinstance(v, VLeaf):
            return 1.0
        t, u = v.left, v.right
        lt, lu = leaves(t), leaves(u)
        psi = (float(p.a) * log2(lt) + float(p.b) * log2(lu)
               + float(p.c) * log2(lt + lu))
        return potential(kind, t) + psi + potential(kind, u)
    raise ValueError(kind.tag)


# ---------------------------------------------------------------------------
# Lemma oracles

@dataclass
class LemmaReport:
    lemma: str
    samples: int
    violations: int = 0
    worst_margin: float = math.inf
    witness: Optional[tuple] = None
    notes: str = ""

    def record(self, margin: float, point):
        self.samples += 1
        if margin < self.worst_margin:
            self.worst_margin = margin
            self.witness = point
        if margin < -LOG_TOL:
            self.violations += 1

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_dict(self):
        return {"lemma": self.lemma, "samples": self.samples,
                "violations": self.violations,
                "worst_margin": self.worst_margin,
                "witness": repr(self.witness), "notes": self.notes}


def _sample_points(n: int, lo: float, hi: float, seed: int, dims: int):
    rng = random.Random(seed)
    # corner grid first, then random
    corners = [1.0, 1.5, 2.0, 3.0, 4.0, 10.0, 100.0]
    for pt in itertools.product(corners, repeat=dims):
        yield pt
    for _ in range(n):
        yield tuple(math.exp(rng.uniform(math.log(lo), math.log(hi)))
                    for _ in range(dims))


def _l3_side_condition(a: float, b: float) -> bool:
    # (a+b)^(a+b) / (a^a * b^b) >= 2
    lhs = (a + b) * math.log(a + b) - a * math.log(a) - b * math.log(b)
    return lhs >= math.log(2.0) - 1e-12


def check_lemma(lemma: str, samples: int = 10 ** 4, seed: int = 0,
                l3_pair: Optional[tuple] = None) -> LemmaReport:
    """Pointwise check of one expert-knowledge inequality.

    Supported ids: L1, L2base, L2i, L2ii, Cor1, L3 (with l3_pair=(a,b)),
    L4, RankLog, LiftLogCf.  Violations are recorded against LOG_TOL.
    """
    rep = LemmaReport(lemma, 0)
    rng = random.Random(seed ^ 0x9E3779B9)

    if lemma == "L1":
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            margin = log2(x + y) - (0.5 * log2(x) + 0.5 * log2(y) + 1)
            rep.record(margin, (x, y))
    elif lemma == "L2base":
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            margin = log2(x + y) - (log2(y) + (1.0 if x >= y else 0.0))
            rep.record(margin, (x, y))
    elif lemma == "L2i":
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            margin = log2(x + y) + (1.0 if x < y else 0.0) - (log2(y) + 1)
            rep.record(margin, (x, y))
    elif lemma == "L2ii":
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            margin = log2(x + y) - (log2(y) + (1.0 if x > y else 0.0))
            rep.record(margin, (x, y))
    elif lemma == "Cor1":
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            if x < y:
                x, y = y, x      # side condition x >= y
            margin = log2(x + y) - (log2(y) + 1)
            rep.record(margin, (x, y))
    elif lemma in ("L3", "L4"):
        if lemma == "L4":
            a, b = 105 / 163, 3115 / 7824
        else:
            if l3_pair is None:
                raise ValueError("L3 requires l3_pair=(a, b)")
            a, b = float(l3_pair[0]), float(l3_pair[1])
        if not _l3_side_condition(a, b):
            rep.notes = "side condition (a+b)^(a+b)/(a^a b^b) >= 2 fails"
            rep.violations = 1
            return rep
        for x, y in _sample_points(samples, 1, 1e6, seed, 2):
            margin = (a + b) * log2(x + y) - (a * log2(x) + b * log2(y) + 1)
            rep.record(margin, (x, y))
    elif lemma == "RankLog":
        from .semantics import generate_tree
        # exhaustive shapes up to 6 leaves, then random larger trees
        for t in _all_shapes(6):
            rep.record(log2(leaves(t)) - tree_rank(t), t)
        for _ in range(min(samples, 2000)):
            n = rng.randint(1, 256)
            t = generate_tree(n, "any", rng=rng)
            rep.record(log2(leaves(t)) - tree_rank(t), t)
    elif lemma == "LiftLogCf":
        # premise sum q_i log a_i >= q log b with q_i >= q implies
        # sum q_i log(a_i + c) >= q log(b + c) for c >= 1
        for _ in range(samples):
            k = rng.randint(1, 4)
            q = rng.uniform(-2, 2)
            qs = [q + rng.uniform(0, 2) for _ in range(k)]
            aa = [rng.uniform(1, 50) for _ in range(k)]
            # choose b so the premise holds (binary search on b)
            s = sum(qi * log2(ai) for qi, ai in zip(qs, aa))
            if q > 0:
                b = 2 ** min(s / q, 30)
                b = max(min(b, 1e6), 1e-6)
            else:
                b = rng.uniform(1, 50)
                if q < 0 and q * log2(b) > s:
                    continue
            if q * log2(b) > s + 1e-12:
                continue
            c = rng.uniform(1, 20)
            lhs = sum(qi * log2(ai + c) for qi, ai in zip(qs, aa))
            rep.record(lhs - q * log2(b + c), (tuple(qs), tuple(aa), q, b, c))
    else:
        raise ValueError(f"unknown lemma id {lemma!r}")
    return rep


def _all_shapes(max_leaves: int):
    """All tree shapes with <= max_leaves leaves."""
    from .semantics import LEAF, VBase
    memo = {1: [LEAF]}

    def shapes(n):
        if n in memo:
            return memo[n]
        out = []
        for ln in range(1, n):
            for lt in shapes(ln):
                for rt in shapes(n - ln):
                    out.append(VNode(lt, VBase(0), rt))
        memo[n] = out
        return out

    for n in range(1, max_leaves + 1):
        yield from shapes(n)


LEMMA_IDS = ("L1", "L2base", "L2i", "L2ii", "Cor1", "L4", "RankLog",
             "LiftLogCf")


def run_lemma_suite(samples: int = 10 ** 4, seed: int = 0,
                    l3_pairs=((Fraction(1, 2), Fraction(1, 2)),
                              (Fraction(105, 163), Fraction(3115, 7824)),
                              (Fraction(1), Fraction(1, 2)))):
    """All lemma oracles; returns list of LemmaReport."""
    reports = [check_lemma(l, samples, seed) for l in LEMMA_IDS]
    for pair in l3_pairs:
        r = check_lemma("L3", samples, seed, l3_pair=pair)
        r.lemma = f"L3({pair[0]},{pair[1]})"
        reports.append(r)
    return reports
