"""Template terms, per-language term enumeration and resource templates.

A resource template maps every admissible term over its argument list to a
named symbolic coefficient.  Four built-in languages: plain logarithmic
terms; the sum-of-logs family (adds one phi term per tree variable); the
piecewise family (adds phi terms and Iverson brackets, optionally over the
template parameter X); and the rank family (adds one rank term per
variable).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .potentials import SolParams

X = "$X"          # template parameter (ghost variable)
VAL = "$v"        # result variable of templates over a function result

OFFSETS = (-1, 0, 1, 2)


class RenameCollision(Exception):
    """Renaming merged two variables where the term's index set forbids it."""


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Lg:
    """log2(sum of |v| for v in vars, + offset)."""
    vars: frozenset
    offset: int

    def rename(self, m: dict) -> "Lg":
        out = frozenset(m.get(v, v) for v in self.vars)
        if len(out) != len(self.vars):
            raise RenameCollision(self)
        return Lg(out, self.offset)

    def variables(self):
        return self.vars

    def key(self, order) -> str:
        idx = "".join(str(order[v]) for v in sorted(self.vars, key=order.get))
        off = f"m{-self.offset}" if self.offset < 0 else str(self.offset)
        return f"l{idx}_{off}"

    def __str__(self):
        parts = [f"|{_pv(v)}|" for v in _sorted(self.vars)]
        if self.offset:
            parts.append(str(self.offset))
        if not parts:
            parts = ["0"]
        return f"log({' + '.join(parts)})".replace("+ -", "- ")


@dataclass(frozen=True)
class Phi:
    """Family potential phi(v) (sum-of-logs or piecewise, per language)."""
    var: str

    def rename(self, m: dict) -> "Phi":
        return Phi(m.get(self.var, self.var))

    def variables(self):
        return frozenset([self.var])

    def key(self, order) -> str:
        return f"p{order[self.var]}"

    def __str__(self):
        return f"phi({_pv(self.var)})"


@dataclass(frozen=True)
class Rk:
    """rank(v): length of the rightmost path."""
    var: str

    def rename(self, m: dict) -> "Rk":
        return Rk(m.get(self.var, self.var))

    def variables(self):
        return frozenset([self.var])

    def key(self, order) -> str:
        return f"r{order[self.var]}"

    def __str__(self):
        return f"rk({_pv(self.var)})"


@dataclass(frozen=True)
class Iv:
    """Iverson bracket [sum|lhs| + offset < sum|rhs|]."""
    lhs: frozenset
    offset: int
    rhs: frozenset

    def rename(self, m: dict) -> "Iv":
        lhs = frozenset(m.get(v, v) for v in self.lhs)
        rhs = frozenset(m.get(v, v) for v in self.rhs)
        if len(lhs) != len(self.lhs) or len(rhs) != len(self.rhs) or lhs & rhs:
            raise RenameCollision(self)
        return Iv(lhs, self.offset, rhs)

    def variables(self):
        return self.lhs | self.rhs

    def key(self, order) -> str:
        li = "".join(str(order[v]) for v in sorted(self.lhs, key=order.get))
        ri = "".join(str(order[v]) for v in sorted(self.rhs, key=order.get))
        off = f"m{-self.offset}" if self.offset < 0 else str(self.offset)
        return f"i{li}_{off}_{ri}"

    def __str__(self):
        lhs = " + ".join([f"|{_pv(v)}|" for v in _sorted(self.lhs)]
                         + ([str(self.offset)] if self.offset else []))
        rhs = " + ".join(f"|{_pv(v)}|" for v in _sorted(self.rhs))
        return f"[{lhs or '0'} < {rhs}]".replace("+ -", "- ")


def _pv(v: str) -> str:
    return {X: "X", VAL: "v"}.get(v, v)


def _sorted(vs):
    return sorted(vs, key=lambda v: (v in (X, VAL), v))


UNIT = Lg(frozenset(), 2)        # value 1
ZERO_LOG = Lg(frozenset(), 1)    # value 0


def is_constant(term) -> bool:
    """Terms whose value is independent of the variable valuation."""
    if isinstance(term, Lg):
        return not term.vars
    if isinstance(term, Iv):
        # [c < sum rhs] is identically 1 when c < |rhs| (sizes are >= 1)
        return not term.lhs and X not in term.rhs and term.offset < len(term.rhs)
    return False


def constant_value(term) -> Fraction:
    if isinstance(term, Lg):
        assert not term.vars
        return Fraction(1) if term.offset == 2 else Fraction(0)
    if isinstance(term, Iv):
        return Fraction(1)
    raise ValueError(term)


# ---------------------------------------------------------------------------
# Languages

@dataclass(frozen=True)
class Language:
    name: str                              # log | sol | pw | rank
    params: Optional[SolParams] = None     # sol only
    use_template_param: bool = False       # pw default on
    iverson_cap: int = 2

    def __str__(self):
        if self.name == "sol":
            return f"sol{self.params}"
        return self.name

    @property
    def has_phi(self):
        return self.name in ("sol", "pw")


def language(name: str, sol_params: Optional[SolParams] = None,
             iverson_cap: int = 2) -> Language:
    if name == "log":
        return Language("log", iverson_cap=iverson_cap)
    if name == "logr":
        from .potentials import SOL_U
        return Language("sol", SOL_U, iverson_cap=iverson_cap)
    if name == "rank":
        return Language("rank", iverson_cap=iverson_cap)
    if name == "pw":
        return Language("pw", use_template_param=True,
                        iverson_cap=iverson_cap)
    if name.startswith("sol(") and name.endswith(")"):
        a, b, c = (Fraction(x) for x in name[4:-1].split(","))
        return Language("sol", SolParams(a, b, c), iverson_cap=iverson_cap)
    if name == "sol":
        if sol_params is None:
            raise ValueError("sol needs parameters")
        return Language("sol", sol_params, iverson_cap=iverson_cap)
    raise ValueError(f"unknown language {name!r}")


def log_terms(vars_: tuple, extra_offsets=()) -> list:
    """L_log over vars: all {0,1} coefficient vectors, offsets with sum >= 1."""
    out = []
    for r in range(len(vars_) + 1):
        for combo in itertools.combinations(vars_, r):
            for c in OFFSETS:
                if r + c >= 1:
                    out.append(Lg(frozenset(combo), c))
    for t in extra_offsets:
        out.append(t)
    return out


def iverson_terms(vars_: tuple, use_x: bool, cap: int) -> list:
    """Brackets [lhs + c < rhs]: lhs/rhs disjoint program-variable subsets of
    size <= cap; rhs nonempty, possibly the singleton {X}."""
    out = []
    subsets = []
    for r in range(min(cap, len(vars_)) + 1):
        subsets.extend(itertools.combinations(vars_, r))
    for lhs in subsets:
        for rhs in subsets:
            if not rhs or set(lhs) & set(rhs):
                continue
            for c in OFFSETS:
                out.append(Iv(frozenset(lhs), c, frozenset(rhs)))
        if use_x:
            for c in OFFSETS:
                out.append(Iv(frozenset(lhs), c, frozenset([X])))
    return out


def enumerate_terms(lang: Language, vars_: tuple,
                    use_template_param: Optional[bool] = None) -> list:
    """The language's term universe over a tree-variable context."""
    use_x = lang.use_template_param if use_template_param is None \
        else use_template_param
    terms = log_terms(tuple(vars_))
    if lang.name == "sol":
        terms += [Phi(v) for v in vars_]
    elif lang.name == "rank":
        terms += [Rk(v) for v in vars_]
    elif lang.name == "pw":
        terms += [Phi(v) for v in vars_]
        terms += iverson_terms(tuple(vars_), use_x, lang.iverson_cap)
    return terms


# ---------------------------------------------------------------------------
# Resource templates

class NameSupply:
    def __init__(self):
        self.n = 0

    def node_id(self) -> int:
        self.n += 1
        return self.n


@dataclass
class ResourceTemplate:
    args: tuple                     # ordered tree variables
    lang: Language
    coeffs: dict                    # term -> coefficient name
    node_id: int
    extended: bool = False          # carries the log(|val|-1) binding term

    def terms(self):
        return self.coeffs.keys()

    def name(self, term) -> Optional[str]:
        return self.coeffs.get(term)

    def __iter__(self):
        return iter(self.coeffs.items())


def fresh_template(lang: Language, vars_: tuple, node_id: int,
                   use_template_param: Optional[bool] = None,
                   extended: bool = False, prefix: str = "q") -> ResourceTemplate:
    """One fresh coefficient per enumerated term, deterministically named.

    ``extended`` adds the binding-result term log(|v|-1) used by let-binding
    outputs and cost-free signature results (single variable only).
    """
    terms = enumerate_terms(lang, vars_, use_template_param)
    if extended:
        assert len(vars_) == 1
        terms = terms + [Lg(frozenset(vars_), -1)]
    order = {v: i for i, v in enumerate(vars_)}
    order[X] = len(vars_)
    coeffs = {}
    for t in terms:
        coeffs[t] = f"{prefix}{node_id}_{t.key(order)}"
    return ResourceTemplate(tuple(vars_), lang, coeffs, node_id, extended)


def zero_template(lang: Language, vars_: tuple) -> ResourceTemplate:
    """The all-zero annotation (used by worst-case signatures)."""
    return ResourceTemplate(tuple(vars_), lang, {}, 0)


# ---------------------------------------------------------------------------
# Models and instantiation

Model = dict       # coefficient name -> Fraction


def term_value(term, env: dict) -> float:
    """Numeric value of a template term under a variable valuation.

    env maps variable names (including X / VAL when present) to tree values.
    The binding-result term log(|v|-1) clamps its argument at 1; any other
    nonpositive log argument raises.
    """
    from .semantics import leaves as _leaves
    from .potentials import log2

    def size(v):
        return _leaves(env[v])

    if isinstance(term, Lg):
        arg = sum(size(v) for v in term.vars) + term.offset
        if arg <= 0:
            if len(term.vars) + term.offset == 0:
                return 0.0        # extended binding term, clamped
            raise ValueError(f"log argument {arg} <= 0 in {term}")
        return log2(arg)
    if isinstance(term, Iv):
        lhs = sum(size(v) for v in term.lhs) + term.offset
        rhs = sum(size(v) for v in term.rhs)
        return 1.0 if lhs < rhs else 0.0
    if isinstance(term, Phi):
        raise ValueError("phi terms need a language; use template_value")
    if isinstance(term, Rk):
        from .semantics import rank
        return float(rank(env[term.var]))
    raise TypeError(term)


def template_term_value(lang: Language, term, env: dict) -> float:
    from .potentials import potential, PotentialKind
    if isinstance(term, Phi):
        kind = PotentialKind("sol", lang.params) if lang.name == "sol" \
            else PotentialKind("pw")
        return potential(kind, env[term.var])
    return term_value(term, env)


def instantiate(template: ResourceTemplate, model: Model):
    """Concrete resource function: (env: var -> Value) -> float."""
    items = [(t, model.get(n, Fraction(0))) for t, n in template.coeffs.items()]

    def fn(env: dict) -> float:
        return sum(float(q) * template_term_value(template.lang, t, env)
                   for t, q in items if q != 0)

    return fn


def rename_term(term, mapping: dict):
    return term.rename(mapping)
