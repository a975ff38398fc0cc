"""Generic linear programs and a self-contained dense simplex solver.

Maximization LPs over nonnegative variables with optional upper bounds and
rows of the form  a.x {<=,==,>=} b.  The solver runs a two-phase dense
tableau simplex in floating point (largest-coefficient pivoting, switching
to Bland's rule after 10*(rows+cols) iterations to break cycles) and, when
every coefficient is rational, re-derives the final vertex with a revised
simplex over Fractions.  The exact layer certifies optimality through exact
reduced costs and repairs the rare case where the float run stopped one
degenerate pivot short, so callers can assert objectives like 11/5 exactly.

Desk-scale only by design: a few hundred rows and columns.  ``solve_lp`` is
the seam to swap in an external solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import to_fraction
from .errors import NumericalFailure

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_RELS = ("<=", "==", ">=")


@dataclass
class LinearProgram:
    """objective: coefficients to maximize; rows: (coeffs, rel, rhs);
    upper_bounds: optional per-variable caps (None entries = unbounded);
    var_keys: opaque builder metadata identifying each column."""

    objective: list
    rows: list
    upper_bounds: list | None = None
    names: list | None = None
    var_keys: list | None = None

    def __post_init__(self):
        n = len(self.objective)
        for coeffs, rel, _rhs in self.rows:
            if len(coeffs) != n:
                raise ValueError("row dimension does not match variable count")
            if rel not in _RELS:
                raise ValueError(f"unknown relation {rel!r}")
        if self.upper_bounds is not None and len(self.upper_bounds) != n:
            raise ValueError("upper bound vector has wrong length")
        for c in self.objective:
            if isinstance(c, float) and not math.isfinite(c):
                raise ValueError("non-finite objective coefficient")
        if self.names is None:
            self.names = [f"x{k}" for k in range(n)]

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def is_rational(self) -> bool:
        def ok(v):
            return isinstance(v, (int, Fraction))

        return (
            all(ok(c) for c in self.objective)
            and all(
                ok(rhs) and all(ok(a) for a in coeffs) for coeffs, _r, rhs in self.rows
            )
            and (
                self.upper_bounds is None
                or all(u is None or ok(u) for u in self.upper_bounds)
            )
        )


@dataclass
class LpSolution:
    status: str
    values: list = field(default_factory=list)
    objective: float = 0.0
    exact_values: list | None = None
    exact_objective: Fraction | None = None
    basis: list | None = None
    iterations: int = 0

    def value_map(self, lp: LinearProgram) -> dict:
        """Map var_keys to (exact when available) solution values."""
        if lp.var_keys is None:
            raise ValueError("LP carries no variable keys")
        vals = self.exact_values if self.exact_values is not None else self.values
        return dict(zip(lp.var_keys, vals))


# ---------------------------------------------------------------------------
# standard form


def _standard_form(lp: LinearProgram):
    """Rows (incl. upper-bound rows) normalized to b >= 0, slack/surplus
    columns appended.  Returns float arrays plus the exact sparse columns
    used by the rational layer."""
    n = lp.n_vars
    rows = [(list(coeffs), rel, rhs) for coeffs, rel, rhs in lp.rows]
    if lp.upper_bounds is not None:
        for k, u in enumerate(lp.upper_bounds):
            if u is None:
                continue
            coeffs = [0] * n
            coeffs[k] = 1
            rows.append((coeffs, "<=", u))
    norm = []
    for coeffs, rel, rhs in rows:
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "==": "=="}[rel]
        norm.append((coeffs, rel, rhs))
    m = len(norm)
    n_slack = sum(1 for _c, rel, _b in norm if rel in ("<=", ">="))
    ncols = n + n_slack
    A = np.zeros((m, ncols))
    b = np.zeros(m)
    cols_exact = [dict() for _ in range(ncols)]
    b_exact = []
    slack_at = 0
    art_rows = []
    slack_basic = {}
    for r, (coeffs, rel, rhs) in enumerate(norm):
        for k, a in enumerate(coeffs):
            if a:
                A[r, k] = float(a)
                cols_exact[k][r] = to_fraction(a)
        b[r] = float(rhs)
        b_exact.append(to_fraction(rhs))
        if rel in ("<=", ">="):
            col = n + slack_at
            sign = 1 if rel == "<=" else -1
            A[r, col] = sign
            cols_exact[col][r] = Fraction(sign)
            slack_at += 1
            if rel == "<=":
                slack_basic[r] = col
            else:
                art_rows.append(r)
        else:
            art_rows.append(r)
    return A, b, cols_exact, b_exact, art_rows, slack_basic, m, ncols


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _obj_row(T, basis, c):
    """Bottom row holding z_j - c_j, with z itself in the rhs slot."""
    r = np.zeros(T.shape[1])
    r[: len(c)] = -c
    for i, bcol in enumerate(basis):
        cb = c[bcol]
        if cb != 0.0:
            r += cb * T[i]
    return r


def _simplex_phase(T, basis, barred, tol, max_iter, bland_after, start_iter=0):
    m = T.shape[0] - 1
    it = start_iter
    while True:
        obj = T[-1, :-1]
        candidates = [j for j in np.where(obj < -tol)[0] if j not in barred]
        if not candidates:
            return OPTIMAL, it
        if it - start_iter >= bland_after:
            col = min(candidates)
        else:
            col = min(candidates, key=lambda j: (obj[j], j))
        ratios = []
        for i in range(m):
            a = T[i, col]
            if a > tol:
                ratios.append((T[i, -1] / a, basis[i], i))
        if not ratios:
            return UNBOUNDED, it
        _, _, row = min(ratios, key=lambda t: (t[0], t[1]))
        _pivot(T, basis, row, col)
        it += 1
        if it - start_iter > max_iter:
            raise NumericalFailure("pivot limit exceeded")


def _float_solve(lp: LinearProgram, tol, warm_basis=None):
    A, b, cols_exact, b_exact, art_rows, slack_basic, m, ncols = _standard_form(lp)
    n = lp.n_vars
    n_art = len(art_rows)
    total = ncols + n_art
    T = np.zeros((m + 1, total + 1))
    T[:m, :ncols] = A
    T[:m, -1] = b
    basis = [None] * m
    art_cols = set()
    for k, r in enumerate(art_rows):
        col = ncols + k
        T[r, col] = 1.0
        basis[r] = col
        art_cols.add(col)
    for r, col in slack_basic.items():
        basis[r] = col
    bland_after = 10 * (m + total)
    max_iter = max(2000, 60 * (m + total))
    iters = 0

    warm_ok = False
    if warm_basis is not None and not art_cols:
        cand = list(warm_basis)
        if len(cand) == m and len(set(cand)) == m and all(
            isinstance(c, int) and 0 <= c < ncols for c in cand
        ):
            Tw = np.zeros((m + 1, total + 1))
            Tw[:m, :ncols] = A
            Tw[:m, -1] = b
            bw = [None] * m
            ok = True
            remaining = list(range(m))
            for col in cand:
                piv = None
                for r in remaining:
                    if abs(Tw[r, col]) > 1e-8:
                        piv = r
                        break
                if piv is None:
                    ok = False
                    break
                _pivot(Tw, bw, piv, col)
                remaining.remove(piv)
            if ok and all(Tw[i, -1] >= -1e-7 for i in range(m)):
                T, basis = Tw, bw
                warm_ok = True

    if not warm_ok and art_cols:
        c1 = np.zeros(total)
        for col in art_cols:
            c1[col] = -1.0
        T[-1] = _obj_row(T, basis, c1)
        status, iters = _simplex_phase(T, basis, set(), tol, max_iter, bland_after)
        if status != OPTIMAL:
            raise NumericalFailure("phase 1 did not terminate at an optimum")
        if -T[-1, -1] > max(tol, 1e-7):
            return INFEASIBLE, basis, None, None, iters, cols_exact, b_exact, ncols
        for i in range(m):
            if basis[i] in art_cols and T[i, -1] <= 1e-9:
                for j in range(ncols):
                    if j not in art_cols and abs(T[i, j]) > 1e-8:
                        _pivot(T, basis, i, j)
                        break

    c2 = np.zeros(total)
    for k in range(n):
        c2[k] = float(lp.objective[k])
    T[-1] = _obj_row(T, basis, c2)
    status, iters = _simplex_phase(
        T, basis, art_cols, tol, max_iter, bland_after, start_iter=iters
    )
    if status == UNBOUNDED:
        return UNBOUNDED, basis, None, None, iters, cols_exact, b_exact, ncols
    x = [0.0] * ncols
    for i, col in enumerate(basis):
        if col is not None and col < ncols:
            x[col] = T[i, -1]
    z = T[-1, -1]
    return OPTIMAL, basis, x, z, iters, cols_exact, b_exact, ncols


# ---------------------------------------------------------------------------
# exact layer: sparse Gaussian elimination and revised simplex on Fractions


def _solve_sparse(cols, rhs):
    """Solve B x = rhs, B given column-wise as {row: Fraction} dicts.
    Markowitz-style pivoting keeps slack-heavy bases cheap.  Returns None
    when B is singular."""
    m = len(rhs)
    rows = [dict() for _ in range(m)]
    for k, col in enumerate(cols):
        for r, v in col.items():
            if v:
                rows[r][k] = v
    b = list(rhs)
    col_rows = [set() for _ in range(m)]
    for r in range(m):
        for k in rows[r]:
            col_rows[k].add(r)
    active_cols = set(range(m))
    elim = []
    while active_cols:
        k = min(active_cols, key=lambda c: (len(col_rows[c]), c))
        if not col_rows[k]:
            return None
        r = min(col_rows[k], key=lambda rr: (len(rows[rr]), rr))
        piv = rows[r][k]
        elim.append((r, k))
        active_cols.discard(k)
        for kk in rows[r]:
            col_rows[kk].discard(r)
        for rr in list(col_rows[k]):
            f = rows[rr][k] / piv
            target = rows[rr]
            for kk, v in rows[r].items():
                if kk == k:
                    continue
                old = target.get(kk)
                nv = (old - f * v) if old is not None else (-f * v)
                if nv:
                    target[kk] = nv
                    if old is None:
                        col_rows[kk].add(rr)
                else:
                    if old is not None:
                        del target[kk]
                        col_rows[kk].discard(rr)
            del target[k]
            col_rows[k].discard(rr)
            if f:
                b[rr] -= f * b[r]
    x = [Fraction(0)] * m
    for r, k in reversed(elim):
        s = b[r]
        for kk, v in rows[r].items():
            if kk != k:
                s -= v * x[kk]
        x[k] = s / rows[r][k]
    return x


def _transpose_cols(bcols, m):
    t = [dict() for _ in range(m)]
    for pos, col in enumerate(bcols):
        for r, v in col.items():
            t[r][pos] = v
    return t


def _exact_revised_simplex(cols, b, c, basis, barred, max_pivots=2000):
    """Exact revised simplex with Bland's rule from a starting basis.

    Returns (status, basis, x_basic) where x_basic aligns with basis rows;
    status may also be 'singular' or 'infeasible-basis' when the starting
    basis is unusable."""
    m = len(b)
    basis = list(basis)
    for _ in range(max_pivots):
        bcols = [cols[j] for j in basis]
        xB = _solve_sparse(bcols, b)
        if xB is None:
            return "singular", basis, None
        if any(v < 0 for v in xB):
            return "infeasible-basis", basis, None
        cB = [c[j] for j in basis]
        y = _solve_sparse(_transpose_cols(bcols, m), cB)
        if y is None:
            return "singular", basis, None
        entering = None
        in_basis = set(basis)
        for j in range(len(cols)):
            if j in in_basis or j in barred:
                continue
            rj = c[j] - sum(y[r] * v for r, v in cols[j].items())
            if rj > 0:
                entering = j
                break
        if entering is None:
            return OPTIMAL, basis, xB
        d = _solve_sparse(bcols, _col_dense(cols[entering], m))
        if d is None:
            return "singular", basis, None
        best = None
        for i in range(m):
            if d[i] > 0:
                key = (xB[i] / d[i], basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return UNBOUNDED, basis, None
        basis[best[1]] = entering
    raise NumericalFailure("exact pivot limit exceeded")


def _col_dense(col, m):
    out = [Fraction(0)] * m
    for r, v in col.items():
        out[r] = v
    return out


def _exact_from_scratch(cols, b, c, barred):
    """Exact two-phase solve: artificial columns appended, driven out, then
    the real objective optimized with artificials barred."""
    m = len(b)
    total = len(cols)
    c1 = [Fraction(0)] * total
    basis = []
    for r in range(m):
        cols.append({r: Fraction(1)})
        c1.append(Fraction(-1))
        basis.append(total + r)
    c_full = list(c) + [Fraction(0)] * m
    status, basis, xB = _exact_revised_simplex(
        cols, b, c1, basis, barred=set(barred), max_pivots=5000
    )
    if status != OPTIMAL:
        raise NumericalFailure(f"exact phase 1 failed: {status}")
    art_cols = set(range(total, total + m))
    if any(xB[i] > 0 and basis[i] in art_cols for i in range(m)):
        return INFEASIBLE, basis, None
    status, basis, xB = _exact_revised_simplex(
        cols, b, c_full, basis, barred=set(barred) | art_cols, max_pivots=5000
    )
    if status == UNBOUNDED:
        return UNBOUNDED, basis, None
    if status != OPTIMAL:
        raise NumericalFailure(f"exact phase 2 failed: {status}")
    return OPTIMAL, basis, xB


def solve_lp(lp: LinearProgram, tolerance: float = 1e-9, warm_basis=None) -> LpSolution:
    """Solve a maximization LP.

    The result is primal-feasible within ``tolerance``; for rational input
    data the final vertex is re-derived and certified exactly, populating
    ``exact_values`` and ``exact_objective``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    n = lp.n_vars
    if n == 0:
        for _coeffs, rel, rhs in lp.rows:
            r = float(rhs)
            if (rel == "<=" and r < 0) or (rel == ">=" and r > 0) or (rel == "==" and r != 0):
                return LpSolution(status=INFEASIBLE)
        return LpSolution(
            status=OPTIMAL, values=[], objective=0.0,
            exact_values=[], exact_objective=Fraction(0), basis=[],
        )

    piv_tol = max(tolerance, 1e-11)
    status, basis, x, z, iters, cols_exact, b_exact, ncols = _float_solve(
        lp, piv_tol, warm_basis=warm_basis
    )
    if status in (INFEASIBLE, UNBOUNDED):
        return LpSolution(status=status, iterations=iters)

    if lp.is_rational():
        c_exact = [to_fraction(v) for v in lp.objective] + [Fraction(0)] * (ncols - n)
        st = "restart"
        eb = xB = None
        if all(col is not None and col < ncols for col in basis):
            st, eb, xB = _exact_revised_simplex(
                [dict(c) for c in cols_exact], b_exact, c_exact, basis, barred=set()
            )
        if st in ("singular", "infeasible-basis", "restart"):
            st, eb, xB = _exact_from_scratch(
                [dict(c) for c in cols_exact], b_exact, c_exact, barred=set()
            )
        if st in (INFEASIBLE, UNBOUNDED):
            return LpSolution(status=st, iterations=iters)
        if st != OPTIMAL:
            raise NumericalFailure(f"exact layer failed: {st}")
        full = [Fraction(0)] * (max(eb) + 1 if eb else 0)
        for i, col in enumerate(eb):
            full[col] = xB[i]
        exact_values = (full + [Fraction(0)] * n)[:n]
        exact_obj = sum(
            (to_fraction(lp.objective[k]) * exact_values[k] for k in range(n)),
            Fraction(0),
        )
        _verify_exact(lp, exact_values)
        return LpSolution(
            status=OPTIMAL,
            values=[float(v) for v in exact_values],
            objective=float(exact_obj),
            exact_values=exact_values,
            exact_objective=exact_obj,
            basis=list(eb),
            iterations=iters,
        )

    if not _check_residuals(lp, x[:n], tolerance):
        status, basis, x, z, it2, *_ = _float_solve(lp, 1e-13)
        iters += it2
        if status != OPTIMAL or not _check_residuals(lp, x[:n], tolerance):
            raise NumericalFailure("residual above tolerance after re-solve")
    obj = float(sum(float(lp.objective[k]) * x[k] for k in range(n)))
    return LpSolution(
        status=OPTIMAL, values=x[:n], objective=obj, basis=list(basis), iterations=iters
    )


def _check_residuals(lp, x, tol):
    for coeffs, rel, rhs in lp.rows:
        lhs = sum(float(a) * x[k] for k, a in enumerate(coeffs))
        scale = 1.0 + abs(float(rhs))
        if rel == "<=" and lhs > float(rhs) + tol * scale:
            return False
        if rel == ">=" and lhs < float(rhs) - tol * scale:
            return False
        if rel == "==" and abs(lhs - float(rhs)) > tol * scale:
            return False
    if lp.upper_bounds is not None:
        for k, u in enumerate(lp.upper_bounds):
            if u is not None and x[k] > float(u) + tol * (1 + abs(float(u))):
                return False
    return not any(v < -tol for v in x)


def _verify_exact(lp, xs):
    for k, v in enumerate(xs):
        if v < 0:
            raise NumericalFailure("exact vertex has a negative coordinate")
        if lp.upper_bounds is not None and lp.upper_bounds[k] is not None:
            if v > to_fraction(lp.upper_bounds[k]):
                raise NumericalFailure("exact vertex violates an upper bound")
    for coeffs, rel, rhs in lp.rows:
        lhs = sum(
            (to_fraction(a) * xs[k] for k, a in enumerate(coeffs) if a), Fraction(0)
        )
        rhs = to_fraction(rhs)
        if (
            (rel == "<=" and lhs > rhs)
            or (rel == ">=" and lhs < rhs)
            or (rel == "==" and lhs != rhs)
        ):
            raise NumericalFailure("exact vertex violates a row")


def lp_to_text(lp: LinearProgram) -> str:
    """Render the LP in CPLEX-style text (grammar documented in the README)."""

    def num(v):
        return repr(float(v))

    out = ["Maximize"]
    terms = " + ".join(
        f"{num(c)} {lp.names[k]}" for k, c in enumerate(lp.objective) if float(c) != 0
    )
    out.append(f" obj: {terms if terms else '0'}")
    out.append("Subject To")
    relmap = {"<=": "<=", ">=": ">=", "==": "="}
    for r, (coeffs, rel, rhs) in enumerate(lp.rows):
        terms = " + ".join(
            f"{num(a)} {lp.names[k]}" for k, a in enumerate(coeffs) if float(a) != 0
        )
        out.append(f" c{r}: {terms if terms else '0'} {relmap[rel]} {num(rhs)}")
    out.append("Bounds")
    for k in range(lp.n_vars):
        ub = None if lp.upper_bounds is None else lp.upper_bounds[k]
        if ub is None:
            out.append(f" 0 <= {lp.names[k]}")
        else:
            out.append(f" 0 <= {lp.names[k]} <= {num(ub)}")
    out.append("End")
    return "\n".join(out) + "\n"
