"""Exact all-solutions solver for z in Ax + N(C,x), plus the normal map.

The solver enumerates faces of C: the solutions whose minimal face is F are
exactly the points of the closed piece

    P_F(z) = {x : x in C, <y_i,x> = alpha_i (i in I(F)), z - Ax in N(C,F)}

(the normal-cone condition becomes finitely many linear inequalities once
N(C,F) is in H-form).  The union of pieces over all faces is the whole
solution set; every point of a piece is a genuine solution because
N(C,F) subset N(C,F_min(x)) for x in F.

This module is deliberately unsophisticated: it is the independent oracle
the regularity certificates are audited against, at desk scale (n <= 6).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import EmptySetError, NonUniqueError, UsageError
from .linalg import (
    EQ,
    LE,
    LT,
    Mat,
    Vec,
    dot,
    lp_feasible,
    lp_max,
    mat,
    mat_t_vec,
    mat_vec,
    norm_sq,
    rank,
    vadd,
    vec,
    vneg,
    vscale,
    vsub,
    zeros,
)
from .polyhedra import (
    Face,
    FaceLattice,
    HPolyhedron,
    PolyCone,
    enumerate_faces,
    face_subcone,
)


@dataclass
class AVIInstance:
    a: Mat
    c: HPolyhedron
    base_point: Optional[Vec] = None
    _lattice: Optional[FaceLattice] = field(default=None, repr=False)
    _face_data: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = self.c.n
        if len(self.a) != n or any(len(r) != n for r in self.a):
            raise UsageError("A must be square of the ambient dimension")
        if self.base_point is not None and len(self.base_point) != n:
            raise UsageError("base point dimension mismatch")

    @property
    def n(self) -> int:
        return self.c.n

    def lattice(self) -> FaceLattice:
        if self._lattice is None:
            self._lattice = enumerate_faces(self.c)
        return self._lattice

    def _face_solve_data(self, face: Face) -> "_FaceSolveData":
        """Static reduction of the per-face solvability system to face
        coordinates x = x0 + V t.

        On aff F the face equalities hold identically and the inactive rows
        of C are strict at the relative-interior point x0, so the reduced
        system consists of the inactive rows (constant positive slack at
        t = 0) plus one row per H-form generator w of N(C,F), whose
        right-hand side is the only part depending on z.
        """
        cached = self._face_data.get(face.key)
        if cached is not None:
            return cached
        c = self.c
        x0 = face.ri_point
        basis = face.span_basis
        wrows = self.lattice().normal_cone(face).rows
        c_coefs: list[Vec] = []
        c_rhs: list[Fraction] = []
        for j, (y, al) in enumerate(zip(c.rows, c.alphas)):
            if j in face.active_set:
                continue
            c_coefs.append(tuple(dot(y, v) for v in basis))
            c_rhs.append(al - dot(y, x0))
        a_rows = [vneg(mat_t_vec(self.a, w)) for w in wrows]
        data = _FaceSolveData(
            x0=x0,
            basis=basis,
            wrows=tuple(wrows),
            a_consts=tuple(dot(r, x0) for r in a_rows),
            a_coefs=tuple(tuple(dot(r, v) for v in basis) for r in a_rows),
            c_coefs=tuple(c_coefs),
            c_rhs=tuple(c_rhs),
            a_rows=tuple(a_rows),
        )
        self._face_data[face.key] = data
        return data

    def piece_polyhedron(self, face: Face, z: Sequence[Fraction]) -> HPolyhedron:
        data = self._face_solve_data(face)
        c = self.c
        all_rows = list(c.rows)
        all_rhs = list(c.alphas)
        for i in face.key:
            all_rows.append(vneg(c.rows[i]))
            all_rhs.append(-c.alphas[i])
        for w, r in zip(data.wrows, data.a_rows):
            all_rows.append(r)
            all_rhs.append(-dot(w, vec(z)))
        return HPolyhedron.from_inequalities(
            self.n, list(zip(all_rows, all_rhs))
        )


@dataclass(frozen=True)
class SolutionPiece:
    face_key: tuple[int, ...]
    witness: Vec
    piece: HPolyhedron


@dataclass(frozen=True)
class _FaceSolveData:
    x0: Vec
    basis: tuple[Vec, ...]
    wrows: Mat
    a_consts: Vec            # dot(-A^T w, x0) per w-row
    a_coefs: Mat             # reduced -A^T w rows in t-coordinates
    c_coefs: Mat             # reduced inactive C rows
    c_rhs: Vec               # positive slacks of inactive rows at x0
    a_rows: Mat              # -A^T w in ambient coordinates


def _interval_point(
    coefs: Sequence[Vec], rhs: Sequence[Fraction]
) -> Optional[Fraction]:
    """Feasible t of a one-variable system coef*t <= rhs, or None."""
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    for (c,), b in zip(coefs, rhs):
        if c == 0:
            if b < 0:
                return None
        elif c > 0:
            v = b / c
            hi = v if hi is None or v < hi else hi
        else:
            v = b / c
            lo = v if lo is None or v > lo else lo
    if lo is not None and hi is not None:
        if lo > hi:
            return None
        return (lo + hi) / 2
    if lo is not None:
        return lo + 1
    if hi is not None:
        return hi - 1
    return Fraction(0)


def _reduced_rhs(data: _FaceSolveData, z: Vec) -> Vec:
    return tuple(
        -dot(w, z) - c0 for w, c0 in zip(data.wrows, data.a_consts)
    )


def _point_from_t(data: _FaceSolveData, t: Sequence[Fraction]) -> Vec:
    out = data.x0
    for ti, bv in zip(t, data.basis):
        out = vadd(out, vscale(ti, bv))
    return out


def _feasible_point_on_face(
    inst: AVIInstance, face: Face, z: Vec
) -> Optional[Vec]:
    """Feasible point of the face's piece, in face coordinates.

    t = 0 (the relative-interior point) is checked first; dimension-one
    faces reduce to interval arithmetic; only higher-dimensional faces
    need an LP, and a small one.
    """
    data = inst._face_solve_data(face)
    a_rhs = _reduced_rhs(data, z)
    if all(b >= 0 for b in a_rhs):
        return data.x0
    d = len(data.basis)
    if d == 0:
        return None
    coefs = data.c_coefs + data.a_coefs
    rhs = data.c_rhs + a_rhs
    if d == 1:
        t = _interval_point(coefs, rhs)
        return None if t is None else _point_from_t(data, (t,))
    cons = [(cf, b, LE) for cf, b in zip(coefs, rhs)]
    t = lp_feasible(cons, d)
    return None if t is None else _point_from_t(data, t)


def solve_all(inst: AVIInstance, z: Sequence[Fraction], dedup: bool = True) -> list[SolutionPiece]:
    """All solution pieces of z in Ax + N(C,x), one per contributing face."""
    zv = vec(z)
    if len(zv) != inst.n:
        raise UsageError("z dimension mismatch")
    pieces: list[SolutionPiece] = []
    for face in inst.lattice().faces:
        x = _feasible_point_on_face(inst, face, zv)
        if x is not None:
            pieces.append(SolutionPiece(face.key, x, inst.piece_polyhedron(face, zv)))
    if dedup and len(pieces) > 1:
        kept: list[SolutionPiece] = []
        for p in pieces:
            if not any(_piece_equal(p.piece, q.piece) for q in kept):
                kept.append(p)
        pieces = kept
    return pieces


def _piece_contains(outer: HPolyhedron, inner: HPolyhedron) -> bool:
    """inner subset outer, by maximizing each outer row over inner."""
    cons = inner.constraints()
    for y, a in zip(outer.rows, outer.alphas):
        res = lp_max(y, cons, outer.n)
        if res.status == "unbounded" or (res.value is not None and res.value > a):
            return False
    return True


def _piece_equal(p: HPolyhedron, q: HPolyhedron) -> bool:
    return _piece_contains(p, q) and _piece_contains(q, p)


def _second_point(inst: AVIInstance, face: Face, z: Vec, x0: Vec) -> Optional[Vec]:
    """A point of the face's piece different from x0, or None.

    x0 is a known member; the search runs in face coordinates relative to
    x0 and looks for any nonzero feasible offset."""
    if face.dim == 0:
        return None
    data = inst._face_solve_data(face)
    a_rhs = _reduced_rhs(data, z)
    coefs = data.c_coefs + data.a_coefs
    # shift to coordinates around x0: x = x0 + V s
    shift = vsub(x0, data.x0)
    tstar = None
    if any(x != 0 for x in shift):
        from .linalg import gram_solve

        tstar = gram_solve(data.basis, shift)
    rhs = []
    base_rhs = data.c_rhs + a_rhs
    for cf, b in zip(coefs, base_rhs):
        off = dot(cf, tstar) if tstar is not None else Fraction(0)
        rhs.append(b - off)
    d = len(data.basis)
    if d == 1:
        lo: Optional[Fraction] = None
        hi: Optional[Fraction] = None
        unbounded_lo = unbounded_hi = True
        for (c,), b in zip(coefs, rhs):
            if c > 0:
                v = b / c
                hi = v if hi is None or v < hi else hi
                unbounded_hi = False
            elif c < 0:
                v = b / c
                lo = v if lo is None or v > lo else lo
                unbounded_lo = False
            elif b < 0:
                return None
        # s = 0 is feasible (x0 lies in the piece), so lo <= 0 <= hi
        if unbounded_hi:
            s = Fraction(1)
        elif unbounded_lo:
            s = Fraction(-1)
        elif lo == hi:
            return None  # the piece is the single point x0
        else:
            s = hi if hi != 0 else lo
        return vadd(x0, vscale(s, data.basis[0]))
    cons = [(cf, b, LE) for cf, b in zip(coefs, rhs)]
    for i in range(d):
        for sign in (1, -1):
            e = tuple(Fraction(sign if j == i else 0) for j in range(d))
            t = lp_feasible(cons + [(vneg(e), Fraction(0), LT)], d)
            if t is not None:
                out = x0
                for ti, bv in zip(t, data.basis):
                    out = vadd(out, vscale(ti, bv))
                return out
    return None


def solution_count(inst: AVIInstance, z: Sequence[Fraction]) -> tuple[str, list[Vec]]:
    """Exact solution count class for one right-hand side: '0', '1', 'many'.

    Returns up to two distinct witnesses as evidence.
    """
    zv = vec(z)
    hits: list[tuple[Face, Vec]] = []
    for face in inst.lattice().faces:
        x = _feasible_point_on_face(inst, face, zv)
        if x is not None:
            hits.append((face, x))
    if not hits:
        return "0", []
    witnesses = []
    for _, x in hits:
        if x not in witnesses:
            witnesses.append(x)
        if len(witnesses) >= 2:
            return "many", witnesses[:2]
    x0 = witnesses[0]
    for face, _ in hits:
        other = _second_point(inst, face, zv, x0)
        if other is not None:
            return "many", [x0, other]
    return "1", [x0]


def is_single_valued(
    inst: AVIInstance, z_samples: Sequence[Sequence[Fraction]]
) -> tuple[bool, Optional[Vec]]:
    """True if every sampled z has exactly one solution; else a witness z."""
    if not z_samples:
        raise UsageError("empty sample list")
    for z in z_samples:
        cls, _ = solution_count(inst, z)
        if cls != "1":
            return False, vec(z)
    return True, None


def unique_solution(inst: AVIInstance, z: Sequence[Fraction]) -> Vec:
    cls, wit = solution_count(inst, z)
    if cls != "1":
        raise NonUniqueError(f"z={z} has {cls} solutions")
    return wit[0]


def lipschitz_estimate(
    inst: AVIInstance, pair_samples: Sequence[tuple[Sequence[Fraction], Sequence[Fraction]]]
) -> Fraction:
    """Exact max of ||x(z)-x(z')||^2 / ||z-z'||^2 over sampled pairs.

    A certified lower bound on the squared Lipschitz constant of the
    solution map; raises NonUniqueError if a sample is not single-valued.
    """
    best = Fraction(0)
    for z, zp in pair_samples:
        zv, zpv = vec(z), vec(zp)
        if zv == zpv:
            continue
        x = unique_solution(inst, zv)
        xp = unique_solution(inst, zpv)
        ratio = norm_sq(vsub(x, xp)) / norm_sq(vsub(zv, zpv))
        if ratio > best:
            best = ratio
    return best


def normal_map_eval(inst: AVIInstance, y: Sequence[Fraction]) -> Vec:
    """A_C(y) = A Pi_C(y) + y - Pi_C(y), exactly."""
    yv = vec(y)
    p = inst.lattice().project(yv)
    return vadd(mat_vec(inst.a, p), vsub(yv, p))


def stress_samples(
    inst: AVIInstance,
    budget: int = 120,
    seed: int = 0,
    extra: Sequence[Vec] = (),
) -> list[Vec]:
    """Deterministic stress set of right-hand sides.

    For every face F and every face G of N(C,F) it contains
    z = A ri(F) + ri(G): these sit exactly where solution pieces meet.
    Covering pairs additionally get small two-sided perturbations, then
    seeded random points fill up to `budget`.
    """
    from .linalg import kernel_basis, primitive, row_space_basis

    lat = inst.lattice()
    a = inst.a
    n = inst.n
    zs: list[Vec] = []
    seen = set()

    def push(z: Vec) -> None:
        if z not in seen:
            seen.add(z)
            zs.append(z)

    for face in lat.faces:
        ax = mat_vec(a, face.ri_point)
        ncone = lat.normal_cone(face)
        push(vadd(ax, ncone.ri_point()))
        for g in ncone.lattice().faces:
            sub = face_subcone(ncone, g)
            push(vadd(ax, sub.ri_point()))
    # two-sided perturbations across the hyperplane where adjacent pieces
    # meet; capped so large lattices do not blow the budget up
    deltas = (Fraction(1, 8), Fraction(1, 64))
    cap = 2 * budget
    for f, fprime in lat.covering_pairs:
        if len(zs) >= cap:
            break
        ax = mat_vec(a, f.ri_point)
        z0 = vadd(ax, lat.normal_cone(fprime).ri_point())
        push(z0)
        img_span = [mat_vec(a, b) for b in f.span_basis]
        e_basis = row_space_basis(
            img_span + list(lat.normal_cone(fprime).span_basis()), n
        )
        if len(e_basis) == n - 1:
            dirs = [primitive(kernel_basis(tuple(e_basis), n)[0])]
        else:
            dirs = [tuple(Fraction(1 if j == d else 0) for j in range(n)) for d in range(n)]
        for e in dirs:
            for delta in deltas:
                push(vadd(z0, vscale(delta, e)))
                push(vsub(z0, vscale(delta, e)))
    for z in extra:
        push(vec(z))
    rng = random.Random(seed)
    while len(zs) < budget:
        push(tuple(Fraction(rng.randint(-24, 24), 8) for _ in range(n)))
    return zs
