"""Exact rational solver for the emitted SMT-LIB 2 subset.

Reads a QF_LRA script whose assertions are linear atoms or disjunctions of
atom conjunctions, with optional lexicographic ``minimize`` directives.
Solving is exact: aggressive presolve (constant propagation, bound
tightening, equality substitution), branch-and-bound over disjunctions,
and a two-phase sparse tableau simplex over rationals.  When scipy is
available a floating-point solve guesses the optimal support first and the
guess is certified exactly via dual feasibility; the result is exact
either way.

Usage: potbound-smt FILE.smt2   (or python -m potbound.smtsolve FILE)
"""

from __future__ import annotations

import sys
from fractions import Fraction

try:
    from gmpy2 import mpq as Q
except ImportError:                                        # pragma: no cover
    Q = Fraction

try:
    import numpy as _np
    import scipy.sparse as _sp
    from scipy.optimize import linprog as _linprog
    HAVE_SCIPY = True
except Exception:                                          # pragma: no cover
    HAVE_SCIPY = False

from .smtlib import parse_sexps, sexp_linexpr

Q0, Q1 = Q(0), Q(1)


class Unsupported(Exception):
    pass


# ---------------------------------------------------------------------------
# Problem representation

class Atom:
    """coeffs . x  (op)  rhs with op in {'=', '<='}."""
    __slots__ = ("op", "coeffs", "rhs")

    def __init__(self, op, coeffs, rhs):
        self.op = op
        self.coeffs = coeffs        # dict var-name -> Q
        self.rhs = rhs

    def __repr__(self):
        s = " + ".join(f"{w}*{v}" for v, w in self.coeffs.items())
        return f"{s} {self.op} {self.rhs}"


def _to_atom(sx) -> "Atom":
    op = sx[0]
    lhs = sexp_linexpr(sx[1])
    rhs = sexp_linexpr(sx[2])
    diff = lhs.minus(rhs)
    coeffs = {n: Q(w.numerator, w.denominator) for n, w in diff.coeffs.items()}
    const = -Q(diff.const.numerator, diff.const.denominator)
    if op == "=":
        return Atom("=", coeffs, const)
    if op == "<=":
        return Atom("<=", coeffs, const)
    if op == ">=":
        return Atom("<=", {v: -w for v, w in coeffs.items()}, -const)
    if op == "<":
        raise Unsupported("strict inequalities are not supported")
    raise Unsupported(f"atom operator {op}")


def _flatten_and(sx) -> list:
    if isinstance(sx, list) and sx and sx[0] == "and":
        out = []
        for part in sx[1:]:
            out.extend(_flatten_and(part))
        return out
    return [sx]


class Script:
    def __init__(self):
        self.decls = []
        self.hard = []          # [(label, Atom)]
        self.disjs = []         # [(label, [[Atom]])]
        self.objectives = []    # [dict var->Q]
        self.commands = []


def parse_script(text: str) -> Script:
    sc = Script()
    n_anon = 0
    for sx in parse_sexps(text):
        if not isinstance(sx, list) or not sx:
            continue
        head = sx[0]
        if head in ("set-option", "set-logic", "set-info", "exit",
                    "get-model", "get-objectives", "get-unsat-core", "echo"):
            sc.commands.append(head)
            continue
        if head == "declare-const":
            sc.decls.append(sx[1])
            continue
        if head == "declare-fun":
            if sx[2] != []:
                raise Unsupported("only constants are supported")
            sc.decls.append(sx[1])
            continue
        if head == "check-sat":
            sc.commands.append(head)
            continue
        if head == "minimize":
            e = sexp_linexpr(sx[1])
            sc.objectives.append(
                ({n: Q(w.numerator, w.denominator)
                  for n, w in e.coeffs.items()},
                 Q(e.const.numerator, e.const.denominator)))
            continue
        if head == "maximize":
            e = sexp_linexpr(sx[1]).scaled(-1)
            sc.objectives.append(
                ({n: Q(w.numerator, w.denominator)
                  for n, w in e.coeffs.items()},
                 Q(e.const.numerator, e.const.denominator)))
            continue
        if head == "assert":
            body = sx[1]
            label = None
            if isinstance(body, list) and body and body[0] == "!":
                label = body[body.index(":named") + 1]
                body = body[1]
            if label is None:
                n_anon += 1
                label = f"anon{n_anon}"
            for part in _flatten_and(body):
                if isinstance(part, list) and part and part[0] == "or":
                    branches = []
                    for br in part[1:]:
                        branches.append([_to_atom(a)
                                         for a in _flatten_and(br)])
                    sc.disjs.append((label, branches))
                else:
                    sc.hard.append((label, _to_atom(part)))
            continue
        raise Unsupported(f"command {head}")
    return sc


# ---------------------------------------------------------------------------
# Presolve

class Infeasible(Exception):
    def __init__(self, labels):
        super().__init__("infeasible")
        self.labels = set(labels)


MANY = None      # provenance cap marker


def _union(a, b):
    if a is MANY or b is MANY:
        return MANY
    u = a | b
    return u if len(u) <= 200 else MANY


class Presolve:
    """Equality substitution, constant propagation and bound extraction.

    Produces a reduced row system over integer variable ids; keeps a
    substitution stack for model reconstruction.
    """

    def __init__(self):
        self.ids = {}
        self.names = []
        self.lo = []          # Q or None   (lower bounds)
        self.hi = []          # Q or None
        self.fixed = {}       # id -> Q
        self.subst = []       # (id, dict id->Q, const)  in elimination order
        self.subst_map = {}   # id -> (dict, const)
        self.rows = {}        # rid -> [op, coeffs, rhs, labels]
        self.occ = {}         # id -> set(rid)
        self._rid = 0
        self.core = set()
        self.version = 0
        self._rw_cache = {}

    def vid(self, name) -> int:
        i = self.ids.get(name)
        if i is None:
            i = len(self.names)
            self.ids[name] = i
            self.names.append(name)
            self.lo.append(None)
            self.hi.append(None)
        return i

    # -- row plumbing -----------------------------------------------------
    def add_atom(self, atom: Atom, labels) -> int:
        coeffs = {}
        rhs = atom.rhs
        for name, w in atom.coeffs.items():
            if w == 0:
                continue
            i = self.vid(name)
            if i in self.fixed:
                rhs -= w * self.fixed[i]
            else:
                coeffs[i] = coeffs.get(i, Q0) + w
        coeffs = {i: w for i, w in coeffs.items() if w != 0}
        # apply existing substitutions
        for i, e, c in self.subst:
            if i in coeffs:
                w = coeffs.pop(i)
                rhs -= w * c
                for j, wj in e.items():
                    if j in self.fixed:
                        rhs -= w * wj * self.fixed[j]
                    else:
                        nv = coeffs.get(j, Q0) + w * wj
                        if nv == 0:
                            coeffs.pop(j, None)
                        else:
                            coeffs[j] = nv
        self._rid += 1
        rid = self._rid
        self.rows[rid] = [atom.op, coeffs, rhs,
                          frozenset(labels) if labels is not MANY else MANY]
        for i in coeffs:
            self.occ.setdefault(i, set()).add(rid)
        return rid

    def _detach(self, rid):
        op, coeffs, rhs, labels = self.rows.pop(rid)
        for i in coeffs:
            s = self.occ.get(i)
            if s is not None:
                s.discard(rid)
        return op, coeffs, rhs, labels

    def _fix(self, i, value, labels):
        if i in self.fixed:
            if self.fixed[i] != value:
                raise Infeasible(labels if labels is not MANY else set())
            return
        if self.lo[i] is not None and value < self.lo[i]:
            raise Infeasible(labels if labels is not MANY else set())
        if self.hi[i] is not None and value > self.hi[i]:
            raise Infeasible(labels if labels is not MANY else set())
        self.fixed[i] = value
        self.version += 1
        for rid in list(self.occ.get(i, ())):
            row = self.rows[rid]
            w = row[1].pop(i, None)
            if w is not None:
                row[2] -= w * value
                row[3] = _union(row[3], labels)
                self.queue.add(rid)
        self.occ.pop(i, None)

    def _substitute(self, i, expr, const, labels):
        """x_i := expr . x + const; rewrite all rows containing i."""
        self.subst.append((i, dict(expr), const))
        self.subst_map[i] = (dict(expr), const)
        self.version += 1
        for rid in list(self.occ.get(i, ())):
            row = self.rows[rid]
            w = row[1].pop(i)
            row[2] -= w * const
            for j, wj in expr.items():
                nv = row[1].get(j, Q0) + w * wj
                if nv == 0:
                    row[1].pop(j, None)
                    s = self.occ.get(j)
                    if s is not None:
                        s.discard(rid)
                else:
                    if j not in row[1]:
                        self.occ.setdefault(j, set()).add(rid)
                    row[1][j] = nv
            row[3] = _union(row[3], labels)
            self.queue.add(rid)
        self.occ.pop(i, None)

    # -- main loop ----------------------------------------------------------
    def run(self, max_sub_size: int = 60):
        self.queue = set(self.rows)
        guard = 0
        while self.queue:
            guard += 1
            if guard > 4_000_000:
                break
            rid = min(self.queue)
            self.queue.discard(rid)
            row = self.rows.get(rid)
            if row is None:
                continue
            op, coeffs, rhs, labels = row
            if not coeffs:
                ok = rhs == 0 if op == "=" else rhs >= 0
                if not ok:
                    raise Infeasible(labels if labels is not MANY else set())
                self._detach(rid)
                continue
            if len(coeffs) == 1:
                (i, w), = coeffs.items()
                if op == "=":
                    self._detach(rid)
                    self._fix(i, rhs / w, labels)
                else:
                    self._detach(rid)
                    bound = rhs / w
                    if w > 0:     # x <= bound
                        if self.hi[i] is None or bound < self.hi[i]:
                            self.hi[i] = bound
                    else:         # x >= bound
                        if self.lo[i] is None or bound > self.lo[i]:
                            self.lo[i] = bound
                    lo, hi = self.lo[i], self.hi[i]
                    if lo is not None and hi is not None:
                        if lo > hi:
                            raise Infeasible(labels if labels is not MANY
                                             else set())
                        if lo == hi:
                            self._fix(i, lo, labels)
                continue
            if op == "=":
                # eliminate the variable with the fewest occurrences,
                # preferring free variables
                best = None
                for i in coeffs:
                    if i in self.fixed:
                        continue
                    free = self.lo[i] is None and self.hi[i] is None
                    cost = (0 if free else 1, len(self.occ.get(i, ())))
                    if best is None or cost < best[0]:
                        best = (cost, i)
                if best is None:
                    continue
                (is_bounded, nocc), i = best[0], best[1]
                fill = (len(coeffs) - 1) * max(nocc - 1, 0)
                if len(coeffs) - 1 > max_sub_size or fill > 2000:
                    continue
                w = coeffs[i]
                self._detach(rid)
                expr = {j: -wj / w for j, wj in coeffs.items() if j != i}
                const = rhs / w
                lo, hi = self.lo[i], self.hi[i]
                self._substitute(i, expr, const, labels)
                if lo is not None or hi is not None:
                    # keep the eliminated variable's bounds as rows
                    if lo is not None:
                        self.add_atom_row(
                            "<=", {j: -wj for j, wj in expr.items()},
                            const - lo, labels)
                    if hi is not None:
                        self.add_atom_row(
                            "<=", dict(expr), hi - const, labels)

    def add_atom_row(self, op, coeffs, rhs, labels):
        coeffs = {i: w for i, w in coeffs.items() if w != 0}
        rhs2 = rhs
        drop = []
        for i, w in coeffs.items():
            if i in self.fixed:
                rhs2 -= w * self.fixed[i]
                drop.append(i)
        for i in drop:
            coeffs.pop(i)
        self._rid += 1
        rid = self._rid
        self.rows[rid] = [op, coeffs, rhs2, labels]
        for i in coeffs:
            self.occ.setdefault(i, set()).add(rid)
        self.queue.add(rid)
        return rid

    # -- reconstruction ------------------------------------------------------
    def reconstruct(self, values: dict) -> dict:
        """Extend LP values (id -> Q) to all ids via fixes and substitutions."""
        out = dict(values)
        for i, v in self.fixed.items():
            out[i] = v
        for i, expr, const in reversed(self.subst):
            v = const
            for j, w in expr.items():
                v += w * out.get(j, Q0)
            out[i] = v
        return out

    def rewrite_atom(self, atom: Atom):
        """Atom over names -> (coeffs over ids, rhs) under current state."""
        key = id(atom)
        hit = self._rw_cache.get(key)
        if hit is not None and hit[0] == self.version:
            return hit[1], hit[2]
        coeffs = {}
        rhs = atom.rhs
        for name, w in atom.coeffs.items():
            i = self.ids.get(name)
            if i is None:
                i = self.vid(name)
            coeffs[i] = coeffs.get(i, Q0) + w
        work = list(coeffs)
        while work:
            i = work.pop()
            if i not in coeffs:
                continue
            if i in self.fixed:
                rhs -= coeffs.pop(i) * self.fixed[i]
                continue
            se = self.subst_map.get(i)
            if se is None:
                continue
            expr, const = se
            w = coeffs.pop(i)
            rhs -= w * const
            for j, wj in expr.items():
                nv = coeffs.get(j, Q0) + w * wj
                if nv == 0:
                    coeffs.pop(j, None)
                else:
                    coeffs[j] = nv
                    work.append(j)
        coeffs = {i: w for i, w in coeffs.items() if w != 0}
        if len(self._rw_cache) > 250000:
            self._rw_cache.clear()
        # keep the atom alive so id() keys are never recycled
        self._rw_cache[key] = (self.version, coeffs, rhs, atom)
        return coeffs, rhs


# ---------------------------------------------------------------------------
# Exact two-phase simplex (standard form: x >= 0, Ax = b)

class LPResult:
    __slots__ = ("status", "x", "obj", "duals", "support_rows")

    def __init__(self, status, x=None, obj=None, duals=None,
                 support_rows=None):
        self.status = status       # optimal | infeasible | unbounded
        self.x = x or {}
        self.obj = obj
        self.duals = duals
        self.support_rows = support_rows


class Simplex:
    """Sparse dictionary simplex with exact rationals.

    Rows enter as (coeffs: dict col -> Q, rhs) equalities over nonnegative
    variables.  Artificial variables form the initial basis and stay in the
    dictionary (never re-entering) so dual values remain readable.
    """

    def __init__(self, nrows, ncols):
        self.n = ncols
        self.m = nrows
        self.art0 = ncols                  # artificial j = art0 + row index
        self.rows = []                     # list of dict col -> Q (nonbasic)
        self.rhs = []
        self.basis = []
        self.colocc = {}                   # col -> set(row index)

    def load(self, rows):
        for r, (coeffs, b) in enumerate(rows):
            if b < 0:
                coeffs = {j: -w for j, w in coeffs.items()}
                b = -b
            row = dict(coeffs)
            self.rows.append(row)
            self.rhs.append(b)
            self.basis.append(self.art0 + r)
            for j in row:
                self.colocc.setdefault(j, set()).add(r)

    def _pivot(self, r, j):
        """Make column j basic on row r."""
        row = self.rows[r]
        piv = row.pop(j)
        self.colocc[j].discard(r)
        leave = self.basis[r]
        inv = Q1 / piv
        new_row = {k: w * inv for k, w in row.items()}
        new_row[leave] = inv
        new_rhs = self.rhs[r] * inv
        # update occurrences for row r
        for k in row:
            self.colocc[k].discard(r)
        for k in new_row:
            self.colocc.setdefault(k, set()).add(r)
        self.rows[r] = new_row
        self.rhs[r] = new_rhs
        self.basis[r] = j
        for i in list(self.colocc.get(j, ())):
            if i == r:
                continue
            ri = self.rows[i]
            w = ri.pop(j, None)
            if w is None:
                continue
            self.colocc[j].discard(i)
            for k, wk in new_row.items():
                nv = ri.get(k, Q0) - w * wk
                if nv == 0:
                    if k in ri:
                        del ri[k]
                        self.colocc[k].discard(i)
                else:
                    if k not in ri:
                        self.colocc.setdefault(k, set()).add(i)
                    ri[k] = nv
            self.rhs[i] -= w * new_rhs

    def _reduced(self, cost: dict):
        """Reduced costs of nonbasic cols and current objective value."""
        red = dict(cost)
        z = Q0
        for r, bj in enumerate(self.basis):
            cb = cost.get(bj)
            if cb:
                z += cb * self.rhs[r]
                for k, w in self.rows[r].items():
                    nv = red.get(k, Q0) - cb * w
                    if nv == 0:
                        red.pop(k, None)
                    else:
                        red[k] = nv
        for bj in self.basis:
            red.pop(bj, None)
        return red, z

    def minimize(self, cost: dict, forbid=frozenset(), pivot_limit=2000000):
        """Returns ('optimal'|'unbounded', objective value)."""
        red, z = self._reduced(cost)
        degenerate = 0
        bland = False
        pivots = 0
        while True:
            pivots += 1
            if pivots > pivot_limit:
                raise RuntimeError("pivot limit exceeded")
            enter = None
            if bland:
                for j in sorted(red):
                    if j in forbid or red[j] >= 0:
                        continue
                    enter = j
                    break
            else:
                best = Q0
                for j, w in red.items():
                    if j in forbid or w >= 0:
                        continue
                    if w < best or (w == best and (enter is None or j < enter)):
                        best = w
                        enter = j
            if enter is None:
                return "optimal", z
            # ratio test
            leave_r = None
            best_ratio = None
            for r in self.colocc.get(enter, ()):
                w = self.rows[r].get(enter)
                if w is None or w <= 0:
                    continue
                ratio = self.rhs[r] / w
                if (best_ratio is None or ratio < best_ratio
                        or (ratio == best_ratio
                            and self.basis[r] < self.basis[leave_r])):
                    best_ratio = ratio
                    leave_r = r
            if leave_r is None:
                return "unbounded", None
            if best_ratio == 0:
                degenerate += 1
                if degenerate > 2 * self.m + 20:
                    bland = True
            else:
                degenerate = 0
            ce = red[enter]
            self._pivot(leave_r, enter)
            # update reduced costs: red -= ce * new_row ; red[leave] = -ce/piv
            new_row = self.rows[leave_r]
            z += ce * self.rhs[leave_r]
            for k, w in new_row.items():
                nv = red.get(k, Q0) - ce * w
                if nv == 0:
                    red.pop(k, None)
                else:
                    red[k] = nv
            red.pop(enter, None)
            self.red = red

    def values(self):
        out = {}
        for r, bj in enumerate(self.basis):
            if bj < self.art0:
                out[bj] = self.rhs[r]
        return out


def solve_lp(rows, nvars, objective, want_duals=False):
    """rows: [(coeffs dict col->Q, op, rhs)] over nonnegative cols.

    Inequalities get slack columns.  Returns LPResult; duals (one per row,
    sign for `coeffs . x <= rhs` rows) via the artificial columns.
    """
    eq_rows = []
    col = nvars
    slack_of = {}
    for idx, (coeffs, op, rhs) in enumerate(rows):
        coeffs = dict(coeffs)
        if op == "<=":
            coeffs[col] = Q1
            slack_of[idx] = col
            col += 1
        eq_rows.append((coeffs, rhs))
    sx = Simplex(len(eq_rows), col)
    sx.load(eq_rows)
    # phase 1
    art_cost = {}
    for r in range(sx.m):
        art_cost[sx.art0 + r] = Q1
    status, z = sx.minimize(art_cost)
    if status != "optimal" or z > 0:
        # infeasibility certificate: rows with nonzero phase-1 dual
        support = set()
        red, _ = sx._reduced(art_cost)
        for r in range(sx.m):
            a = sx.art0 + r
            if a in sx.basis:
                i = sx.basis.index(a)
                if sx.rhs[i] != 0:
                    support.add(r)
            elif red.get(a, Q0) != 0:
                support.add(r)
        return LPResult("infeasible", support_rows=support or set(range(sx.m)))
    # drive leftover artificials out of the basis where possible
    for r in range(sx.m):
        if sx.basis[r] >= sx.art0:
            for j in sx.rows[r]:
                if j < sx.art0 and sx.rows[r][j] != 0:
                    sx._pivot(r, j)
                    break
    forbid = frozenset(range(sx.art0, sx.art0 + sx.m))
    # phase 2
    cost = dict(objective)
    status, z = sx.minimize(cost, forbid=forbid)
    if status == "unbounded":
        return LPResult("unbounded")
    x = sx.values()
    duals = None
    if want_duals:
        red, _ = sx._reduced(cost)
        duals = []
        for r in range(sx.m):
            a = sx.art0 + r
            duals.append(-red.get(a, Q0) if a not in sx.basis else Q0)
    return LPResult("optimal", x, z, duals)


def solve_lp_fast(rows, nvars, objective):
    """Float-guided exact solve: guess the optimal support with scipy,
    solve exactly on the support, certify with exact reduced costs, and
    widen the support until the certificate passes.  Falls back to the
    plain exact simplex."""
    if not HAVE_SCIPY or nvars < 40:
        return solve_lp(rows, nvars, objective)
    try:
        data, rows_i, cols_i = [], [], []
        b_eq, b_ub = [], []
        eq_idx, ub_idx = [], []
        for ridx, (coeffs, op, rhs) in enumerate(rows):
            (eq_idx if op == "=" else ub_idx).append(ridx)
        index_of = {}
        for pos, ridx in enumerate(eq_idx + ub_idx):
            index_of[ridx] = pos
        a_eq, a_ub = [], []
        for ridx in eq_idx:
            coeffs, _, rhs = rows[ridx]
            a_eq.append(coeffs)
            b_eq.append(float(rhs))
        for ridx in ub_idx:
            coeffs, _, rhs = rows[ridx]
            a_ub.append(coeffs)
            b_ub.append(float(rhs))

        def mat(rowdicts):
            d, ri, ci = [], [], []
            for r, coeffs in enumerate(rowdicts):
                for j, w in coeffs.items():
                    ri.append(r)
                    ci.append(j)
                    d.append(float(w))
            return _sp.csr_matrix((d, (ri, ci)),
                                  shape=(len(rowdicts), nvars))

        c = _np.zeros(nvars)
        for j, w in objective.items():
            c[j] = float(w)
        res = _linprog(c, A_ub=mat(a_ub) if a_ub else None,
                       b_ub=_np.array(b_ub) if a_ub else None,
                       A_eq=mat(a_eq) if a_eq else None,
                       b_eq=_np.array(b_eq) if a_eq else None,
                       bounds=(0, None), method="highs")
        if not res.success:
            return solve_lp(rows, nvars, objective)
        xf = res.x
        support = set(int(j) for j in _np.nonzero(xf > 1e-9)[0])
    except Exception:
        return solve_lp(rows, nvars, objective)

    all_vars = set()
    for coeffs, _, _ in rows:
        all_vars.update(coeffs)
    all_vars.update(objective)
    for _ in range(12):
        sub_map = {j: k for k, j in enumerate(sorted(support))}
        sub_rows = []
        for coeffs, op, rhs in rows:
            sc = {sub_map[j]: w for j, w in coeffs.items() if j in sub_map}
            sub_rows.append((sc, op, rhs))
        sub_obj = {sub_map[j]: w for j, w in objective.items()
                   if j in sub_map}
        r = solve_lp(sub_rows, len(sub_map), sub_obj, want_duals=True)
        if r.status == "unbounded":
            return solve_lp(rows, nvars, objective)
        if r.status == "infeasible":
            # widen: add everything touching the infeasible rows
            widened = False
            for ridx in (r.support_rows or set(range(len(rows)))):
                for j in rows[ridx][0]:
                    if j not in support:
                        support.add(j)
                        widened = True
            if not widened:
                return LPResult("infeasible",
                                support_rows=r.support_rows)
            continue
        # certify: reduced costs of the excluded columns must be >= 0
        y = r.duals
        bad = set()
        excluded = all_vars - support
        rc = {j: objective.get(j, Q0) for j in excluded}
        for ridx, (coeffs, op, rhs) in enumerate(rows):
            yr = y[ridx]
            if not yr:
                continue
            for j, w in coeffs.items():
                if j in rc and w:
                    rc[j] -= yr * w
        bad = {j for j, v in rc.items() if v < 0}
        if not bad:
            inv = {k: j for j, k in sub_map.items()}
            x = {inv[k]: v for k, v in r.x.items() if k in inv}
            return LPResult("optimal", x, r.obj, None)
        support |= bad
    return solve_lp(rows, nvars, objective)


# ---------------------------------------------------------------------------
# Branch and bound over disjunctions, lexicographic objectives

class Solver:
    def __init__(self, script: Script):
        self.script = script
        self.status = None
        self.model = {}
        self.objective_values = []
        self.core = []

    def run(self):
        sc = self.script
        self._strip_local_vars(sc)
        try:
            base = Presolve()
            self.base = base
            for label, atom in sc.hard:
                base.add_atom(atom, frozenset([label]))
            base.run()
        except Infeasible as exc:
            self.status = "unsat"
            self.core = sorted(exc.labels)
            return self
        # unit-propagate disjunctions against the presolved state
        disjs = []
        try:
            disjs = self._simplify_disjs(base, sc.disjs)
        except Infeasible as exc:
            self.status = "unsat"
            self.core = sorted(exc.labels)
            return self

        objectives = [self._obj_vec(base, o) for o in sc.objectives]
        found, values, core = self._branch_and_bound(base, disjs, objectives)
        if not found:
            self.status = "unsat"
            self.core = sorted(core) if core else sorted(
                {l for l, _ in sc.hard} | {l for l, _ in sc.disjs})
            return self
        self.status = "sat"
        self._fill_stripped(values)
        self.model = values
        return self

    def _strip_local_vars(self, sc: Script):
        """Remove indicator-style variables that occur only inside a single
        disjunction: their atoms are locally satisfiable and only add noise
        to violation-guided branching.  Values are filled in post hoc."""
        occ = {}

        def note(names, where):
            for n in names:
                occ.setdefault(n, set()).add(where)

        for _, atom in sc.hard:
            note(atom.coeffs, "hard")
        for coeffs, _ in sc.objectives:
            note(coeffs, "obj")
        for di, (_, branches) in enumerate(sc.disjs):
            for br in branches:
                for a in br:
                    note(a.coeffs, di)
        self.stripped = []          # (var, [(branch-remaining-atoms, value)])
        for di, (label, branches) in enumerate(sc.disjs):
            local = set()
            for br in branches:
                for a in br:
                    for n in a.coeffs:
                        if occ[n] == {di} and len(a.coeffs) == 1:
                            local.add(n)
            for v in sorted(local):
                ok = True
                fills = []
                for br in branches:
                    vats = [a for a in br if v in a.coeffs]
                    if any(len(a.coeffs) != 1 for a in vats):
                        ok = False
                        break
                    # 1-variable system: intersect
                    lo, hi = None, None
                    for a in vats:
                        w = a.coeffs[v]
                        bound = a.rhs / w
                        if a.op == "=":
                            lo = bound if lo is None else max(lo, bound)
                            hi = bound if hi is None else min(hi, bound)
                        elif w > 0:
                            hi = bound if hi is None else min(hi, bound)
                        else:
                            lo = bound if lo is None else max(lo, bound)
                    if lo is not None and hi is not None and lo > hi:
                        ok = False
                        break
                    fills.append(lo if lo is not None else
                                 (hi if hi is not None else Q0))
                if not ok:
                    continue
                new_branches = [[a for a in br if v not in a.coeffs]
                                for br in branches]
                sc.disjs[di] = (label, new_branches)
                branches = new_branches
                self.stripped.append((v, label, list(zip(branches, fills))))

    def _fill_stripped(self, model: dict):
        for v, label, options in self.stripped:
            chosen = Q0
            for rest_atoms, value in options:
                if all(self._model_sat(a, model) for a in rest_atoms):
                    chosen = value
                    break
            model[v] = _to_fraction(Q(chosen))

    def _model_sat(self, atom: Atom, model: dict) -> bool:
        v = sum((Fraction(int(w.numerator), int(w.denominator))
                 * model.get(n, Fraction(0))
                 for n, w in atom.coeffs.items()), Fraction(0))
        rhs = Fraction(int(atom.rhs.numerator), int(atom.rhs.denominator))
        return v == rhs if atom.op == "=" else v <= rhs

    # -- helpers -----------------------------------------------------------
    def _obj_vec(self, pre: Presolve, obj):
        coeffs, const = obj
        cs, r = pre.rewrite_atom(Atom("=", dict(coeffs), Q0))
        return cs, const - r            # -r collects the substituted parts

    def _simplify_disjs(self, pre: Presolve, disjs):
        """Drop satisfied branches/disjunctions; promote forced branches."""
        pending = []
        for label, branches in disjs:
            pending.append((label, branches))
        changed = True
        while changed:
            changed = False
            rest = []
            for label, branches in pending:
                live = []
                satisfied = False
                for atoms in branches:
                    state = self._branch_state(pre, atoms)
                    if state == "true":
                        satisfied = True
                        break
                    if state != "false":
                        live.append(atoms)
                if satisfied:
                    changed = True
                    continue
                if not live:
                    raise Infeasible({label})
                if len(live) == 1:
                    for atom in live[0]:
                        coeffs, rhs = pre.rewrite_atom(atom)
                        named = {pre.names[i]: w for i, w in coeffs.items()}
                        pre.add_atom(Atom(atom.op, named, rhs),
                                     frozenset([label]))
                    pre.run()
                    changed = True
                    continue
                rest.append((label, live))
            pending = rest
        return pending

    def _branch_state(self, pre: Presolve, atoms) -> str:
        all_true = True
        for atom in atoms:
            coeffs, rhs = pre.rewrite_atom(atom)
            if not coeffs:
                ok = (rhs == 0) if atom.op == "=" else (rhs >= 0)
                if not ok:
                    return "false"
            else:
                all_true = False
        return "true" if all_true else "open"

    # -- LP under a set of extra atoms --------------------------------------
    def _build(self, pre: Presolve, extra_atoms, objective):
        """Standard-form rows (nonnegative cols) + bookkeeping, or an
        immediate infeasibility."""
        rows = []
        labels = []
        for rid in sorted(pre.rows):
            op, coeffs, rhs, labs = pre.rows[rid]
            rows.append((coeffs, op, rhs))
            labels.append(labs)
        for atom, lab in extra_atoms:
            coeffs, rhs = pre.rewrite_atom(atom)
            if not coeffs:
                ok = (rhs == 0) if atom.op == "=" else (rhs >= 0)
                if not ok:
                    return None, labels + [lab], None
                continue
            rows.append((coeffs, atom.op, rhs))
            labels.append(lab)
        used = set()
        for coeffs, _, _ in rows:
            used.update(coeffs)
        obj_coeffs, obj_const = objective
        used.update(obj_coeffs)
        pos, neg = {}, {}
        nv = 0
        for i in sorted(used):
            lo = pre.lo[i]
            pos[i] = nv
            nv += 1
            if lo is None:
                neg[i] = nv
                nv += 1
        conv_rows = []
        for coeffs, op, rhs in rows:
            cc = {}
            shift = Q0
            for i, w in coeffs.items():
                lo = pre.lo[i]
                cc[pos[i]] = cc.get(pos[i], Q0) + w
                if i in neg:
                    cc[neg[i]] = cc.get(neg[i], Q0) - w
                elif lo is not None and lo != 0:
                    shift += w * lo
            conv_rows.append((cc, op, rhs - shift))
        for i in sorted(used):
            hi = pre.hi[i]
            if hi is None:
                continue
            cc = {pos[i]: Q1}
            rhs = hi
            if i in neg:
                cc[neg[i]] = -Q1
            elif pre.lo[i] is not None and pre.lo[i] != 0:
                rhs = hi - pre.lo[i]
            conv_rows.append((cc, "<=", rhs))
        oc = {}
        oconst = obj_const
        for i, w in obj_coeffs.items():
            lo = pre.lo[i]
            oc[pos[i]] = oc.get(pos[i], Q0) + w
            if i in neg:
                oc[neg[i]] = oc.get(neg[i], Q0) - w
            elif lo is not None and lo != 0:
                oconst += w * lo
        build = {"rows": conv_rows, "nv": nv, "obj": oc, "oconst": oconst,
                 "pos": pos, "neg": neg, "used": used, "pre": pre}
        return build, labels, None

    def _unpack(self, build, res: "LPResult") -> "LPResult":
        if res.status == "optimal":
            pre = build["pre"]
            values = {}
            for i in sorted(build["used"]):
                v = res.x.get(build["pos"][i], Q0)
                if i in build["neg"]:
                    v -= res.x.get(build["neg"][i], Q0)
                elif pre.lo[i] is not None and pre.lo[i] != 0:
                    v += pre.lo[i]
                values[i] = v
            res.x = values
            res.obj = res.obj + build["oconst"]
        return res

    def _lp(self, pre: Presolve, extra_atoms, objective, fast=True):
        build, labels, _ = self._build(pre, extra_atoms, objective)
        if build is None:
            return LPResult("infeasible",
                            support_rows={len(labels) - 1}), labels
        solver = solve_lp_fast if fast else solve_lp
        res = solver(build["rows"], build["nv"], build["obj"])
        return self._unpack(build, res), labels

    def _lp_float(self, pre: Presolve, extra_atoms, objective):
        """Float relaxation solve for search guidance (exact fallback)."""
        if not HAVE_SCIPY:
            return self._lp(pre, extra_atoms, objective)
        build, labels, _ = self._build(pre, extra_atoms, objective)
        if build is None:
            return LPResult("infeasible",
                            support_rows={len(labels) - 1}), labels
        rows, nv, oc = build["rows"], build["nv"], build["obj"]
        try:
            a_eq, b_eq, a_ub, b_ub = [], [], [], []
            for coeffs, op, rhs in rows:
                (a_eq if op == "=" else a_ub).append(coeffs)
                (b_eq if op == "=" else b_ub).append(float(rhs))

            def mat(rowdicts):
                d, ri, ci = [], [], []
                for r, coeffs in enumerate(rowdicts):
                    for j, w in coeffs.items():
                        ri.append(r)
                        ci.append(j)
                        d.append(float(w))
                return _sp.csr_matrix((d, (ri, ci)),
                                      shape=(len(rowdicts), nv))

            c = _np.zeros(nv)
            for j, w in oc.items():
                c[j] = float(w)
            # tiny L1 pull on split pairs: steers junk coefficients to 0
            for i in build["neg"]:
                c[build["pos"][i]] += 1e-7
                c[build["neg"][i]] += 1e-7
            r = _linprog(c, A_ub=mat(a_ub) if a_ub else None,
                         b_ub=_np.array(b_ub) if a_ub else None,
                         A_eq=mat(a_eq) if a_eq else None,
                         b_eq=_np.array(b_eq) if a_eq else None,
                         bounds=(0, None), method="highs")
        except Exception:
            return self._lp(pre, extra_atoms, objective)
        if r.status == 2:
            return LPResult("infeasible", support_rows=set()), labels
        if r.status == 3:
            return LPResult("unbounded"), labels
        if not r.success:
            return self._lp(pre, extra_atoms, objective)
        values = {}
        pre_lo = pre.lo
        for i in build["used"]:
            v = r.x[build["pos"][i]]
            if i in build["neg"]:
                v -= r.x[build["neg"][i]]
            elif pre_lo[i] is not None and pre_lo[i] != 0:
                v += float(pre_lo[i])
            values[i] = v
        res = LPResult("optimal", values, r.fun + float(build["oconst"]))
        return res, labels

    # -- search --------------------------------------------------------------
    def _atom_gap(self, pre: Presolve, atom: Atom, values: dict, fl: bool):
        coeffs, rhs = pre.rewrite_atom(atom)
        if fl:
            v = sum(float(w) * values.get(i, 0.0) for i, w in coeffs.items())
            d = v - float(rhs)
            return abs(d) if atom.op == "=" else max(0.0, d)
        v = sum((w * values.get(i, Q0) for i, w in coeffs.items()), Q0)
        d = v - rhs
        return abs(d) if atom.op == "=" else max(Q0, d)

    def _violated(self, pre, disjs, values, fl: bool):
        """Pending disjunctions not satisfied at the point, most violated
        first.  Float mode uses a small tolerance."""
        tol = 1e-7 if fl else 0
        out = []
        for label, branches in disjs:
            best_gap = None
            for br in branches:
                gap = 0.0 if fl else Q0
                for a in br:
                    g = self._atom_gap(pre, a, values, fl)
                    if g > gap:
                        gap = g
                if best_gap is None or gap < best_gap:
                    best_gap = gap
            if best_gap is not None and best_gap > tol:
                out.append((best_gap, label, branches))
        out.sort(key=lambda t: (-t[0], t[1]))
        return [(label, branches) for _, label, branches in out]

    def _branch_and_bound(self, pre: Presolve, disjs, objectives):
        """LP-guided lexicographic branch and bound.

        With scipy available the whole search runs on float relaxations;
        the few best candidate regions are then re-solved exactly with a
        region-vs-relaxation optimality certificate.  Without scipy the
        search itself is exact."""
        objs = objectives or [({}, Q0)]
        best = {"tuple": None, "values": None, "core": set()}
        self._nodes = 0
        float_best = [None]
        candidates = []

        def pending(committed):
            return [d for d in disjs if d[0] not in committed]

        def bump():
            self._nodes += 1
            if self._nodes > 500000:
                raise RuntimeError("branch and bound node limit")

        def accept(t2, values):
            if best["tuple"] is None or t2 < best["tuple"]:
                full = pre.reconstruct(values)
                named = {}
                for name, i in pre.ids.items():
                    named[name] = _to_fraction(full.get(i, Q0))
                best["tuple"] = t2
                best["values"] = named

        def leaf_branchy(ex, committed, level, tup):
            """Exact lexicographic descent, branching on exact violations."""
            bump()
            res, labels = self._lp(pre, ex, objs[level])
            if res.status == "infeasible":
                if best["tuple"] is None:
                    for ridx in (res.support_rows or ()):
                        if ridx < len(labels) and labels[ridx] is not MANY:
                            best["core"] |= labels[ridx] or set()
                return
            if res.status == "unbounded":
                raise RuntimeError("objective is unbounded")
            t2 = tup + (res.obj,)
            if best["tuple"] is not None and t2 > best["tuple"][:level + 1]:
                return
            viol = self._violated(pre, pending(committed), res.x, False)
            if viol:
                label, branches = viol[0]
                for br in branches:
                    leaf_branchy(ex + [(a, frozenset([label])) for a in br],
                                 committed | {label}, level, tup)
                return
            if level + 1 < len(objs):
                pin = (Atom("=", {pre.names[i]: w
                                  for i, w in objs[level][0].items()},
                            res.obj - objs[level][1]), frozenset())
                leaf_branchy(ex + [pin], committed, level + 1, t2)
                return
            accept(t2, res.x)

        def leaf_float(extras, committed, float_x):
            """Record a candidate region: the float-satisfied branch of
            every pending disjunction is committed."""
            ex2 = list(extras)
            for label, branches in pending(committed):
                chosen = None
                for br in branches:
                    if all(self._atom_gap(pre, a, float_x, True) <= 1e-7
                           for a in br):
                        chosen = br
                        break
                if chosen is None:
                    leaf_branchy(extras, committed, 0, ())
                    return
                ex2 = ex2 + [(a, frozenset([label])) for a in chosen]
            tupf = ()
            ex = list(ex2)
            for k, obj in enumerate(objs):
                res, _ = self._lp_float(pre, ex, obj)
                if res.status != "optimal":
                    return
                tupf = tupf + (float(res.obj),)
                names = {pre.names[i]: w for i, w in obj[0].items()}
                cap = res.obj + 1e-7 * (1 + abs(res.obj))
                ex = ex + [(Atom("<=", names,
                                 Q(Fraction(cap).limit_denominator(10 ** 12))
                                 - obj[1]), frozenset())]
            candidates.append((tupf, ex2))
            if float_best[0] is None or tupf < float_best[0]:
                float_best[0] = tupf

        def search(extras, committed):
            bump()
            res, labels = self._lp_float(pre, extras, objs[0])
            if res.status == "infeasible":
                return
            if res.status == "unbounded":
                raise RuntimeError("objective is unbounded")
            fl = isinstance(res.obj, float)
            if not fl:
                # exact fallback path (scipy unavailable)
                leaf_branchy(extras, committed, 0, ())
                return
            if float_best[0] is not None and \
                    res.obj > float_best[0][0] + 1e-4 * (1 + abs(res.obj)):
                return
            viol = self._violated(pre, pending(committed), res.x, fl)
            if not viol:
                leaf_float(extras, committed, res.x)
                return
            label, branches = viol[0]
            for br in branches:
                search(extras + [(a, frozenset([label])) for a in br],
                       committed | {label})

        if HAVE_SCIPY:
            search([], frozenset())
            # exact finalization of the most promising regions
            if candidates:
                fb = float_best[0]
                live = [c for c in candidates
                        if all(a <= b + 1e-4 * (1 + abs(b))
                               for a, b in zip(c[0], fb))]
                live.sort(key=lambda c: c[0])
                for tupf, ex2 in live[:12]:
                    self._finalize(pre, ex2, objs, best, accept)
            if best["values"] is None and not best["core"]:
                # no region certified: complete exact search
                leaf_branchy([], frozenset(), 0, ())
        else:
            leaf_branchy([], frozenset(), 0, ())
        if best["values"] is None:
            if not best["core"]:
                res, labels = self._lp(pre, [], objs[0])
                if res.status == "infeasible":
                    for ridx in (res.support_rows or ()):
                        if ridx < len(labels) and labels[ridx] is not MANY:
                            best["core"] |= labels[ridx] or set()
            return False, None, best["core"]
        return True, best["values"], None

    def _finalize(self, pre, ex2, objs, best, accept):
        """Exact lexicographic solve of a committed region, certified
        against the uncommitted relaxation at every level."""
        ex_cand = list(ex2)
        ex_bound = [e for e in ex2 if False] or []
        tup = ()
        values = None
        for k, obj in enumerate(objs):
            cand, _ = self._lp(pre, ex_cand, obj)
            if cand.status != "optimal":
                return
            bnd, _ = self._lp(pre, ex_bound, obj)
            if bnd.status != "optimal" or cand.obj != bnd.obj:
                return      # region not provably optimal; others may be
            tup = tup + (cand.obj,)
            if best["tuple"] is not None and tup > best["tuple"][:k + 1]:
                return
            values = cand.x
            pin = (Atom("=", {pre.names[i]: w for i, w in obj[0].items()},
                        cand.obj - obj[1]), frozenset())
            ex_cand = ex_cand + [pin]
            ex_bound = ex_bound + [pin]
        accept(tup, values)


def _to_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


# ---------------------------------------------------------------------------
# CLI

def format_model(model: dict) -> str:
    lines = ["("]
    for name in sorted(model):
        v = model[name]
        if v.denominator == 1:
            s = str(v.numerator) if v >= 0 else f"(- {-v.numerator})"
        elif v >= 0:
            s = f"(/ {v.numerator} {v.denominator})"
        else:
            s = f"(- (/ {-v.numerator} {v.denominator}))"
        lines.append(f"  (define-fun {name} () Real {s})")
    lines.append(")")
    return "\n".join(lines)


def solve_text(text: str) -> str:
    try:
        script = parse_script(text)
    except Unsupported as exc:
        return f'(error "{exc}")\nunknown\n'
    solver = Solver(script).run()
    out = [solver.status]
    if solver.status == "sat":
        out.append(format_model(solver.model))
        if script.objectives:
            vals = []
            for coeffs, const in script.objectives:
                v = sum((solver.model.get(n, Fraction(0)) * Fraction(
                    int(w.numerator), int(w.denominator))
                    for n, w in coeffs.items()),
                    Fraction(int(const.numerator), int(const.denominator)))
                vals.append(v)
            body = " ".join(
                f"(obj{k} {v.numerator})" if v.denominator == 1 else
                f"(obj{k} (/ {v.numerator} {v.denominator}))"
                for k, v in enumerate(vals))
            out.append(f"(objectives {body})")
    elif solver.status == "unsat":
        out.append("(" + " ".join(solver.core) + ")")
    return "\n".join(out) + "\n"


def main(argv=None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    if argv:
        with open(argv[0]) as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    sys.stdout.write(solve_text(text))
    return 0


if __name__ == "__main__":
    sys.exit(main())


