"""Face complementarity of cone pairs and complementarity relations on
polyhedral sets.

A complementarity relation assigns to every face F of a polyhedron C a
polyhedral cone Lambda(F), antitone in F, such that each tangential
extension is a face-complementary cone pair.  The canonical instance is
F -> N(C,F); it is non-singular for every C.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    MalformedRelationError,
    NotInSetError,
    SingularRelationError,
    UsageError,
)
from .linalg import (
    Mat,
    Vec,
    dot,
    mat_vec,
    rank,
    solve_linear,
    transpose,
    unit,
    vec,
    vsub,
)
from .polyhedra import (
    Face,
    FaceLattice,
    HPolyhedron,
    Key,
    PolyCone,
    enumerate_faces,
    face_subcone,
)


@dataclass
class ComplementarityRelation:
    """Total assignment from canonical face keys of `base` to cones."""

    base: HPolyhedron
    lattice: FaceLattice
    assignment: dict[Key, PolyCone]

    def cone_at(self, face: Face) -> PolyCone:
        try:
            return self.assignment[face.key]
        except KeyError:
            raise MalformedRelationError(f"no cone assigned to face {face.key}")

    def is_total(self) -> bool:
        return all(f.key in self.assignment for f in self.lattice.faces)


@dataclass
class ConePair:
    """Two cones with a face bijection Lambda keyed by canonical active sets.

    `provenance` optionally links each K-face key back to the face of the
    originating polyhedron (tangential extension / factorization audits).
    """

    k: PolyCone
    h: PolyCone
    lam: dict[Key, Key]
    provenance: dict[Key, Key] = field(default_factory=dict)

    def lam_inverse(self) -> dict[Key, Key]:
        return {v: k for k, v in self.lam.items()}


@dataclass
class ComplementarityMap:
    """Phi(x) = T x + S(Lambda(F_min(x))); T = S = identity by default."""

    relation: ComplementarityRelation
    t: Optional[Mat] = None
    s: Optional[Mat] = None


@dataclass
class PairReport:
    bijective: bool
    dim_entries: list[tuple[Key, int, int, bool]]  # key, dim L(F), dim L(Lam F), ok
    order_failures: list[tuple[Key, Key]]
    ok: bool


def canonical_normal_relation(
    poly: HPolyhedron, lattice: Optional[FaceLattice] = None
) -> ComplementarityRelation:
    """The canonical relation F -> N(C,F) in generator form."""
    lat = lattice if lattice is not None else enumerate_faces(poly)
    assignment = {f.key: lat.normal_cone(f) for f in lat.faces}
    return ComplementarityRelation(poly, lat, assignment)


def verify_face_complementarity(pair: ConePair) -> PairReport:
    """Check Definition of face complementarity for a cone pair.

    (i) dim L(F) + dim L(Lambda(F)) = n for every face of K;
    (ii) F subset F' implies Lambda(F') subset Lambda(F);
    Lambda a bijection between the two face lattices.
    """
    if pair.k.n != pair.h.n:
        raise UsageError("cone pair must share the ambient dimension")
    n = pair.k.n
    klat, hlat = pair.k.lattice(), pair.h.lattice()
    kkeys = [f.key for f in klat.faces]
    hkeys = {f.key for f in hlat.faces}
    if set(pair.lam.keys()) != set(kkeys):
        raise MalformedRelationError("lambda is not total on the faces of K")
    vals = list(pair.lam.values())
    bijective = len(set(vals)) == len(vals) and set(vals) == hkeys
    if not bijective:
        raise MalformedRelationError("lambda is not a bijection onto faces of H")

    dim_entries = []
    for f in klat.faces:
        g = hlat.by_key[frozenset(pair.lam[f.key])]
        ok = f.dim + g.dim == n
        dim_entries.append((f.key, f.dim, g.dim, ok))

    order_failures = []
    for f1, f2 in klat.containment_pairs:  # f1 subset f2
        g1 = pair.lam[f1.key]
        g2 = pair.lam[f2.key]
        if not set(g2) >= set(g1):  # need Lambda(f2) subset Lambda(f1)
            order_failures.append((f1.key, f2.key))

    ok = bijective and all(e[3] for e in dim_entries) and not order_failures
    return PairReport(bijective, dim_entries, order_failures, ok)


def check_nonsingular(rel: ComplementarityRelation) -> tuple[bool, Optional[Key]]:
    """L(F) + L(Lambda(F)) = R^n for every face; first violator if any."""
    n = rel.base.n
    for f in rel.lattice.faces:
        cone = rel.cone_at(f)
        joint = tuple(f.span_basis) + tuple(cone.span_basis())
        if rank(joint) != n:
            return False, f.key
    return True, None


def _locate_as_face(cone: PolyCone, host: PolyCone) -> Face:
    """Find the face of `host` equal (as a set) to `cone`, or raise."""
    p = cone.ri_point()
    hlat = host.lattice()
    if not host.contains(p):
        raise MalformedRelationError("assigned cone is not contained in the host cone")
    face = hlat.minimal_face(p)
    sub = face_subcone(host, face)
    if not (sub.contains_cone(cone) and cone.contains_cone(sub)):
        raise MalformedRelationError("assigned cone is not a face of the host cone")
    return face


def tangential_extension(rel: ComplementarityRelation, fbar: Face) -> ConePair:
    """(K_Fbar, H_Fbar, Lambda_Fbar): K = T(C, Fbar), H = Lambda(Fbar),
    with cone(F - Fbar) mapped to Lambda(F) for every F containing Fbar."""
    lat = rel.lattice
    if fbar.active_set not in lat.by_key:
        raise UsageError("face is not in the lattice of the base polyhedron")
    kcone = lat.tangent_cone(fbar)
    hcone = rel.cone_at(fbar)
    klat = kcone.lattice()

    above = [f for f in lat.faces if set(f.key) <= set(fbar.key)]
    by_global_key = {}
    for kf in klat.faces:
        by_global_key[kcone.key_of(kf)] = kf
    if set(by_global_key.keys()) != {f.key for f in above}:
        raise AssertionError(
            "faces of the tangent cone do not match faces above the base face"
        )

    lam: dict[Key, Key] = {}
    provenance: dict[Key, Key] = {}
    for f in above:
        kf = by_global_key[f.key]
        gface = _locate_as_face(rel.cone_at(f), hcone)
        lam[kf.key] = gface.key
        provenance[kf.key] = f.key
    return ConePair(kcone, hcone, lam, provenance)


def factorization(rel: ComplementarityRelation, fbar: Face) -> ConePair:
    """Factor (C, Lambda) along Fbar into the subspace M = L(Lambda(Fbar)):
    K' = M cap T(C,Fbar), H' = Lambda(Fbar), expressed in M-coordinates."""
    nonsing, bad = check_nonsingular(rel)
    if not nonsing:
        raise SingularRelationError(f"relation singular at face {bad}")
    lat = rel.lattice
    n = rel.base.n
    hcone = rel.cone_at(fbar)
    bl = list(fbar.span_basis)
    bm = list(hcone.span_basis())
    if len(bl) + len(bm) != n or rank(tuple(bm) + tuple(bl)) != n:
        raise SingularRelationError(
            "L(Fbar) and span Lambda(Fbar) are not complementary subspaces"
        )
    m = len(bm)

    # coords(x) = first m entries of P^{-1} x where P = [Bm | Bl] as columns.
    p_cols = bm + bl
    pt = tuple(zip(*p_cols))  # the matrix P itself (rows over R^n)
    inv_cols = []
    for i in range(n):
        sol = solve_linear(pt, unit(n, i))
        assert sol is not None
        inv_cols.append(sol[0])
    pinv = tuple(zip(*inv_cols))  # P^{-1} as rows
    coords_m = pinv[:m]  # a(x) = coords_m . x

    def coords(x: Sequence[Fraction]) -> Vec:
        return tuple(dot(r, x) for r in coords_m)

    krows = []
    for i in fbar.key:
        row = tuple(dot(rel.base.rows[i], b) for b in bm)
        krows.append(row)
    kprime = PolyCone.from_rows(m, krows, row_index_map=fbar.key if krows else None)
    hgens = [coords(g) for g in hcone.all_generators()]
    for g, a in zip(hcone.all_generators(), hgens):
        back = tuple(
            sum((bm[j][i] * a[j] for j in range(m)), Fraction(0)) for i in range(n)
        )
        if back != g:
            raise MalformedRelationError("Lambda(Fbar) is not contained in M")
    hprime = PolyCone.from_generators(m, hgens)

    kplat = kprime.lattice()
    kt = lat.tangent_cone(fbar)
    ktlat = kt.lattice()
    lam: dict[Key, Key] = {}
    provenance: dict[Key, Key] = {}
    above = [f for f in lat.faces if set(f.key) <= set(fbar.key)]
    for f in above:
        ktf = next(kf for kf in ktlat.faces if kt.key_of(kf) == f.key)
        a = coords(ktf.ri_point)
        kpface = kplat.minimal_face(a)
        gcone_coords = PolyCone.from_generators(
            m, [coords(g) for g in rel.cone_at(f).all_generators()]
        )
        gface = _locate_as_face(gcone_coords, hprime)
        if kpface.key in lam and lam[kpface.key] != gface.key:
            raise MalformedRelationError("factorization collapsed distinct faces")
        lam[kpface.key] = gface.key
        provenance[kpface.key] = f.key
    return ConePair(kprime, hprime, lam, provenance)


def phi_membership(
    cmap: ComplementarityMap, x: Sequence[Fraction], z: Sequence[Fraction]
) -> bool:
    """z in Phi(x) = T x + S(Lambda(F_min(x))), exactly."""
    rel = cmap.relation
    xv, zv = vec(x), vec(z)
    face = rel.lattice.minimal_face(xv)  # raises NotInSetError if x not in C
    cone = rel.cone_at(face)
    tx = xv if cmap.t is None else mat_vec(cmap.t, xv)
    target = vsub(zv, tx)
    if cmap.s is None:
        return cone.contains(target)
    image = PolyCone.from_generators(
        rel.base.n, [mat_vec(cmap.s, g) for g in cone.all_generators()]
    )
    return image.contains(target)


def fmax_pair(pair: ConePair, point: Sequence[Fraction], side: str = "K") -> Face:
    """F_max of a point: Lambda_K(F_min^K(x)) for side 'K' (a face of H),
    Lambda_H(F_min^H(y)) for side 'H' (a face of K)."""
    p = vec(point)
    if side == "K":
        src, dst, table = pair.k, pair.h, pair.lam
    elif side == "H":
        src, dst, table = pair.h, pair.k, pair.lam_inverse()
    else:
        raise UsageError("side must be 'K' or 'H'")
    if not src.contains(p):
        raise NotInSetError(f"point not in the {side} cone")
    fmin = src.lattice().minimal_face(p)
    return dst.lattice().by_key[frozenset(table[fmin.key])]
