"""Exact rational linear algebra and an exact LP feasibility kernel.

Every geometric predicate in this package (membership, face nonemptiness,
relative-interior points, cone triviality) reduces to questions answered
here, over `fractions.Fraction`.  There is deliberately no floating point
in this module.

Vectors are tuples of Fraction, matrices are tuples of row tuples.  The
simplex solver uses integer pivoting (fraction-free Gaussian elimination a
la Bareiss, as in lrs) so the hot loop runs on Python ints rather than
Fraction objects; Bland's rule guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

Rational = Fraction
Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]

# Constraint relations understood by lp_feasible / lp_solve.
LE = "<="
EQ = "=="
LT = "<"


class LinAlgError(ValueError):
    """Usage error: dimension mismatch, det of non-square matrix, etc."""


def frac(x) -> Fraction:
    """Coerce ints / strings like '3/4' / Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise LinAlgError(f"refusing to coerce float {x!r}; pass exact data")
    return Fraction(x)


def vec(entries: Iterable) -> Vec:
    return tuple(frac(e) for e in entries)


def mat(rows: Iterable[Iterable]) -> Mat:
    m = tuple(vec(r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise LinAlgError("ragged matrix")
    return m


def zeros(n: int) -> Vec:
    return (Fraction(0),) * n


def unit(n: int, i: int) -> Vec:
    return tuple(Fraction(1 if j == i else 0) for j in range(n))


def identity(n: int) -> Mat:
    return tuple(unit(n, i) for i in range(n))


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    if len(a) != len(b):
        raise LinAlgError("dot: length mismatch")
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def vadd(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c: Fraction, a: Sequence[Fraction]) -> Vec:
    return tuple(c * x for x in a)


def vneg(a: Sequence[Fraction]) -> Vec:
    return tuple(-x for x in a)


def is_zero_vec(a: Sequence[Fraction]) -> bool:
    return all(x == 0 for x in a)


def norm_sq(a: Sequence[Fraction]) -> Fraction:
    return sum((x * x for x in a), Fraction(0))


def mat_vec(m: Mat, x: Sequence[Fraction]) -> Vec:
    return tuple(dot(row, x) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(dot(ra, cb) for cb in bt) for ra in a)


def transpose(m: Mat) -> Mat:
    if not m:
        return ()
    return tuple(zip(*m))


def mat_t_vec(m: Mat, x: Sequence[Fraction]) -> Vec:
    """m^T x without materializing the transpose."""
    if not m:
        return ()
    n = len(m[0])
    return tuple(sum((row[j] * xi for row, xi in zip(m, x)), Fraction(0)) for j in range(n))


def primitive(v: Sequence[Fraction]) -> Vec:
    """Scale a nonzero rational vector to a primitive integer vector,
    preserving direction.  Canonical representative of a ray."""
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for t in ints:
        g = gcd(g, abs(t))
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    return tuple(Fraction(t // g) for t in ints)


# ---------------------------------------------------------------------------
# Gaussian elimination: rref, rank, kernel, solving, determinants
# ---------------------------------------------------------------------------


def rref(m: Mat) -> tuple[Mat, list[int]]:
    """Reduced row echelon form and pivot column indices."""
    rows = [list(r) for r in m]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return tuple(tuple(row) for row in rows), pivots


def rank(m: Mat) -> int:
    if not m:
        return 0
    return len(rref(m)[1])


def kernel_basis(m: Mat, ncols: Optional[int] = None) -> list[Vec]:
    """Basis of {x : m x = 0}; canonical (one vector per free column of rref)."""
    if not m:
        if ncols is None:
            raise LinAlgError("kernel_basis of empty matrix needs ncols")
        return [unit(ncols, i) for i in range(ncols)]
    n = len(m[0])
    red, pivots = rref(m)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -red[i][fc]
        basis.append(tuple(v))
    return basis


def column_space_basis(m: Mat) -> list[Vec]:
    """Basis of the column span, as a subset of the columns (canonical)."""
    if not m:
        return []
    _, pivots = rref(m)
    cols = transpose(m)
    return [cols[c] for c in pivots]


def row_space_basis(rows: Sequence[Vec], n: int) -> list[Vec]:
    """Basis of span(rows) in primitive form; [] for the zero space."""
    live = [r for r in rows if not is_zero_vec(r)]
    if not live:
        return []
    red, pivots = rref(tuple(live))
    return [primitive(red[i]) for i in range(len(pivots))]


def det(m: Mat) -> Fraction:
    """Exact determinant (Bareiss over ints after clearing denominators)."""
    n = len(m)
    if any(len(r) != n for r in m):
        raise LinAlgError("det: matrix not square")
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    a: list[list[int]] = []
    for row in m:
        den = 1
        for x in row:
            den = den * x.denominator // gcd(den, x.denominator)
        scale *= den
        a.append([int(x * den) for x in row])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            pr = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if pr is None:
                return Fraction(0)
            a[k], a[pr] = a[pr], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return Fraction(sign * a[n - 1][n - 1], 1) / scale


def principal_minors(m: Mat) -> list[tuple[tuple[int, ...], Fraction]]:
    """All principal minors det m[J,J] over nonempty index sets J."""
    n = len(m)
    if any(len(r) != n for r in m):
        raise LinAlgError("principal_minors: matrix not square")
    out = []
    for mask in range(1, 1 << n):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        sub = tuple(tuple(m[i][j] for j in idx) for i in idx)
        out.append((idx, det(sub)))
    return out


def is_p_matrix(m: Mat) -> bool:
    """Classical LCP uniqueness criterion: every principal minor positive."""
    return all(v > 0 for _, v in principal_minors(m))


def solve_linear(m: Mat, b: Sequence[Fraction]) -> Optional[tuple[Vec, list[Vec]]]:
    """Solve m x = b exactly.

    Returns None iff inconsistent, else (particular solution, kernel basis).
    """
    if len(m) != len(b):
        raise LinAlgError("solve_linear: row count mismatch")
    if not m:
        raise LinAlgError("solve_linear: empty system without column count")
    n = len(m[0])
    aug = tuple(tuple(row) + (bi,) for row, bi in zip(m, b))
    red, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for i, pc in enumerate(pivots):
        x[pc] = red[i][n]
    return tuple(x), kernel_basis(m, n)


def gram_solve(basis: Sequence[Vec], z: Sequence[Fraction]) -> Vec:
    """Coefficients c with (basis^T) c = orthogonal projection data:
    solves G c = basis . z where G is the Gram matrix (basis independent)."""
    g = tuple(tuple(dot(bi, bj) for bj in basis) for bi in basis)
    rhs = tuple(dot(bi, z) for bi in basis)
    sol = solve_linear(g, rhs)
    assert sol is not None  # Gram matrix of independent vectors is invertible
    return sol[0]


def project_onto_span(basis: Sequence[Vec], z: Sequence[Fraction]) -> Vec:
    """Exact orthogonal projection of z onto span(basis)."""
    if not basis:
        return zeros(len(z))
    c = gram_solve(basis, z)
    out = zeros(len(z))
    for ci, bi in zip(c, basis):
        out = vadd(out, vscale(ci, bi))
    return out


# ---------------------------------------------------------------------------
# Exact simplex with integer pivoting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[Vec] = None
    value: Optional[Fraction] = None


def _row_to_int(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[list[int], int]:
    den = rhs.denominator
    for c in coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    return [int(c * den) for c in coeffs], int(rhs * den)


def lp_solve(
    n: int,
    objective: Optional[Sequence[Fraction]] = None,
    constraints: Sequence[tuple[Sequence[Fraction], Fraction, str]] = (),
) -> LPResult:
    """Maximize objective . x over free variables x in R^n subject to
    constraints (coeffs, rhs, rel) with rel in {LE, EQ}.

    Two-phase primal simplex, Bland's rule, integer (fraction-free)
    pivoting.  All results exact.
    """
    for coeffs, _, rel in constraints:
        if len(coeffs) != n:
            raise LinAlgError("lp_solve: constraint dimension mismatch")
        if rel not in (LE, EQ):
            raise LinAlgError(f"lp_solve: bad relation {rel!r}")
    if objective is not None and len(objective) != n:
        raise LinAlgError("lp_solve: objective dimension mismatch")

    m = len(constraints)
    nle = sum(1 for _, _, rel in constraints if rel == LE)
    # Columns: 2n split vars (x = u - v), slacks, artificials, rhs.
    slack0 = 2 * n
    art0 = slack0 + nle
    # Assemble integer rows; normalize rhs >= 0.
    rows: list[list[int]] = []
    slack_sign: list[int] = []  # per LE row, +1 if slack kept basic-eligible
    si = 0
    for coeffs, rhs, rel in constraints:
        icoef, irhs = _row_to_int(tuple(frac(c) for c in coeffs), frac(rhs))
        row = [0] * (art0 + m + 1)
        for j, c in enumerate(icoef):
            row[2 * j] = c
            row[2 * j + 1] = -c
        if rel == LE:
            row[slack0 + si] = 1
        neg = irhs < 0
        if neg:
            row = [-t for t in row]
            irhs = -irhs
        row[-1] = irhs
        rows.append(row)
        slack_sign.append((1 if not neg else -1) if rel == LE else 0)
        if rel == LE:
            si += 1

    basis: list[int] = []
    nart = 0
    art_cols: list[int] = []
    si = 0
    for i, (_, _, rel) in enumerate(constraints):
        col = None
        if rel == LE:
            if slack_sign[i] == 1:
                col = slack0 + si
            si += 1
        if col is None:
            col = art0 + nart
            rows[i][col] = 1
            art_cols.append(col)
            nart += 1
        basis.append(col)

    used_cols = art0 + nart
    rows = [r[:used_cols] + [r[-1]] for r in rows]
    rhs_col = used_cols

    # Objective rows carried through every pivot.
    if objective is None:
        obj_int, obj_scale_den = [0] * n, 1
    else:
        den = 1
        for c in objective:
            c = frac(c)
            den = den * c.denominator // gcd(den, c.denominator)
        obj_int = [int(frac(c) * den) for c in objective]
        obj_scale_den = den
    zrow = [0] * (used_cols + 1)
    for j, c in enumerate(obj_int):
        zrow[2 * j] = -c
        zrow[2 * j + 1] = c
    wrow = [0] * (used_cols + 1)
    for i in range(m):
        if basis[i] in art_cols:
            for j in range(used_cols + 1):
                wrow[j] -= rows[i][j]
    for c in art_cols:
        wrow[c] = 0

    prev = 1

    def pivot(r: int, c: int) -> None:
        nonlocal prev
        piv_row = rows[r]
        p = piv_row[c]
        assert p > 0
        for tgt in rows:
            if tgt is piv_row:
                continue
            f = tgt[c]
            for j in range(used_cols + 1):
                tgt[j] = (tgt[j] * p - f * piv_row[j]) // prev
        for tgt in (zrow, wrow):
            f = tgt[c]
            for j in range(used_cols + 1):
                tgt[j] = (tgt[j] * p - f * piv_row[j]) // prev
        basis[r] = c
        prev = p

    def ratio_row(c: int) -> Optional[int]:
        best = None
        for i in range(m):
            a = rows[i][c]
            if a > 0:
                if best is None:
                    best = i
                else:
                    bi = rows[best]
                    # compare rows[i][rhs]/a vs rows[best][rhs]/rows[best][c]
                    lhs = rows[i][rhs_col] * bi[c]
                    rhs_ = bi[rhs_col] * a
                    if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[best]):
                        best = i
        return best

    def run(obj: list[int], allow: int) -> str:
        while True:
            enter = next(
                (j for j in range(allow) if obj[j] < 0 and j not in art_set), None
            )
            if enter is None:
                return "optimal"
            leave = ratio_row(enter)
            if leave is None:
                return "unbounded"
            pivot(leave, enter)

    art_set = set(art_cols)
    if nart:
        st = run(wrow, used_cols)
        assert st == "optimal"  # phase 1 objective is bounded by 0
        if wrow[rhs_col] != 0:
            return LPResult("infeasible")
        # Drive remaining (degenerate) artificials out of the basis.  Such a
        # row has rhs 0, so negating it (to keep the pivot positive) cannot
        # break feasibility.
        for i in range(m):
            if basis[i] in art_set:
                c = next(
                    (j for j in range(art0) if rows[i][j] != 0), None
                )
                if c is not None:
                    if rows[i][c] < 0:
                        rows[i] = [-t for t in rows[i]]
                    pivot(i, c)
        # Rows still basic in an artificial are redundant zero rows; harmless.

    st = run(zrow, art0)
    if st == "unbounded":
        return LPResult("unbounded")

    xs = [Fraction(0)] * (2 * n)
    for i in range(m):
        if basis[i] < 2 * n:
            xs[basis[i]] = Fraction(rows[i][rhs_col], prev)
    x = tuple(xs[2 * j] - xs[2 * j + 1] for j in range(n))
    if objective is None:
        value = Fraction(0)
    else:
        value = dot(tuple(frac(c) for c in objective), x)
        # consistency with the tableau's account of the objective
        assert value == Fraction(zrow[rhs_col], prev * obj_scale_den)
    for coeffs, rhs, rel in constraints:
        lhs = dot(tuple(frac(c) for c in coeffs), x)
        ok = lhs == frac(rhs) if rel == EQ else lhs <= frac(rhs)
        if not ok:
            raise AssertionError("lp_solve produced an infeasible point (bug)")
    return LPResult("optimal", x, value)


def lp_feasible(
    ineqs: Sequence[tuple[Sequence[Fraction], Fraction, str]],
    n: int,
) -> Optional[Vec]:
    """Exact feasible point of a system of <=, ==, < constraints, or None.

    Strict constraints are handled by maximizing one shared slack variable t
    (capped at 1): the system is strictly feasible iff the optimum is > 0.
    """
    for coeffs, _, rel in ineqs:
        if len(coeffs) != n:
            raise LinAlgError("lp_feasible: constraint dimension mismatch")
        if rel not in (LE, EQ, LT):
            raise LinAlgError(f"lp_feasible: bad relation {rel!r}")
    strict = [c for c in ineqs if c[2] == LT]
    if not strict:
        res = lp_solve(n, None, [(c, r, rel) for c, r, rel in ineqs])
        return res.x if res.status == "optimal" else None
    ext: list[tuple[Vec, Fraction, str]] = []
    for coeffs, rhs, rel in ineqs:
        row = vec(coeffs) + (Fraction(1 if rel == LT else 0),)
        ext.append((row, frac(rhs), LE if rel == LT else rel))
    ext.append((unit(n + 1, n), Fraction(1), LE))  # t <= 1
    obj = unit(n + 1, n)
    res = lp_solve(n + 1, obj, ext)
    if res.status != "optimal" or res.value is None or res.value <= 0:
        return None
    assert res.x is not None
    return res.x[:n]


def lp_max(
    objective: Sequence[Fraction],
    ineqs: Sequence[tuple[Sequence[Fraction], Fraction, str]],
    n: int,
) -> LPResult:
    """Maximize objective over a (<=, ==) system; thin wrapper over lp_solve."""
    return lp_solve(n, objective, list(ineqs))
