"""H-polyhedra, polyhedral cones, face lattices, tangent/normal cones,
polars and exact Euclidean projection.

A face is identified by its canonical *maximal* active index set: the set of
all inequalities that hold with equality everywhere on the face.  Keyed this
way, geometrically equal faces produced by redundant constraints collapse to
one lattice node, and containment is plain reverse inclusion of keys.

Face enumeration is a breadth-first closure over active sets: starting from
the implicit-equality set of the whole polyhedron, tighten one inequality at
a time and canonicalize.  The raw 2^k sweep is kept (`enumerate_faces_bruteforce`)
as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .errors import EmptySetError, NotInSetError, UsageError
from .linalg import (
    EQ,
    LE,
    LT,
    Mat,
    Vec,
    dot,
    frac,
    is_zero_vec,
    kernel_basis,
    lp_feasible,
    lp_max,
    lp_solve,
    mat_t_vec,
    primitive,
    project_onto_span,
    rank,
    row_space_basis,
    rref,
    solve_linear,
    unit,
    vadd,
    vec,
    vneg,
    vscale,
    vsub,
    zeros,
)

Key = tuple[int, ...]  # sorted canonical active set


@dataclass(frozen=True)
class HPolyhedron:
    """{x in R^n : <y_i, x> <= alpha_i}; y_i nonzero after parsing."""

    n: int
    rows: Mat
    alphas: Vec
    forced_empty: bool = False

    @staticmethod
    def from_inequalities(n: int, ineqs: Iterable[tuple[Sequence, object]]) -> "HPolyhedron":
        rows: list[Vec] = []
        alphas: list[Fraction] = []
        empty = False
        for y, a in ineqs:
            yv, av = vec(y), frac(a)
            if len(yv) != n:
                raise UsageError(f"inequality dimension {len(yv)} != n={n}")
            if is_zero_vec(yv):
                if av < 0:
                    empty = True
                continue  # 0.x <= a with a >= 0 is vacuous
            rows.append(yv)
            alphas.append(av)
        return HPolyhedron(n, tuple(rows), tuple(alphas), empty)

    @property
    def k(self) -> int:
        return len(self.rows)

    def contains(self, x: Sequence[Fraction]) -> bool:
        if self.forced_empty:
            return False
        if len(x) != self.n:
            raise UsageError("point dimension mismatch")
        return all(dot(y, x) <= a for y, a in zip(self.rows, self.alphas))

    def active_set(self, x: Sequence[Fraction]) -> frozenset[int]:
        return frozenset(
            i for i, (y, a) in enumerate(zip(self.rows, self.alphas)) if dot(y, x) == a
        )

    def feasible_point(self) -> Optional[Vec]:
        if self.forced_empty:
            return None
        return lp_feasible(
            [(y, a, LE) for y, a in zip(self.rows, self.alphas)], self.n
        )

    def is_empty(self) -> bool:
        return self.feasible_point() is None

    def is_cone(self) -> bool:
        return all(a == 0 for a in self.alphas)

    def constraints(self) -> list[tuple[Vec, Fraction, str]]:
        return [(y, a, LE) for y, a in zip(self.rows, self.alphas)]


@dataclass(frozen=True)
class Face:
    """A face of an H-polyhedron, keyed by its maximal active set."""

    key: Key
    dim: int
    span_basis: tuple[Vec, ...]  # basis of L(F) = span(F - F)
    ri_point: Vec

    @property
    def active_set(self) -> frozenset[int]:
        return frozenset(self.key)


def _canonicalize(
    poly: HPolyhedron, active: frozenset[int], memo: dict
) -> Optional[Face]:
    """Canonical face for candidate active set, or None if empty.

    The canonical key adds every constraint that is implicitly forced to
    equality on F_active; ri_point strictly satisfies all others.
    """
    orig = frozenset(active)
    if orig in memo:
        return memo[orig]
    active = orig
    n, rows, alphas = poly.n, poly.rows, poly.alphas

    def shared_slack(act: frozenset[int]):
        cons: list[tuple[Vec, Fraction, str]] = []
        for i in range(poly.k):
            if i in act:
                cons.append((rows[i], alphas[i], EQ))
            else:
                cons.append((rows[i], alphas[i], LT))
        return cons

    point = lp_feasible(shared_slack(active), n)
    if point is None:
        # Either F_active is empty, or some inactive row is implicitly forced.
        base = [
            (rows[i], alphas[i], EQ if i in active else LE) for i in range(poly.k)
        ]
        if lp_feasible(base, n) is None:
            memo[orig] = None
            return None
        forced = set(active)
        for j in range(poly.k):
            if j in forced:
                continue
            test = list(base)
            test[j] = (rows[j], alphas[j], LT)
            if lp_feasible(test, n) is None:
                forced.add(j)
        active = frozenset(forced)
        if active in memo:
            memo[orig] = memo[active]
            return memo[active]
        point = lp_feasible(shared_slack(active), n)
        assert point is not None  # all non-implicit rows admit joint slack
    key = tuple(sorted(active))
    eq_rows = tuple(rows[i] for i in key)
    basis = tuple(kernel_basis(eq_rows, n))
    face = Face(key=key, dim=len(basis), span_basis=basis, ri_point=point)
    memo[frozenset(key)] = face
    memo[orig] = face
    return face


class FaceLattice:
    """All faces of a nonempty H-polyhedron with containment structure."""

    def __init__(self, poly: HPolyhedron, faces: Sequence[Face]):
        self.poly = poly
        self.faces = tuple(sorted(faces, key=lambda f: f.key))
        self.by_key: dict[frozenset[int], Face] = {f.active_set: f for f in self.faces}
        self._tangent: dict[Key, "PolyCone"] = {}
        self._normal: dict[Key, "PolyCone"] = {}
        self._aff_proj: dict[Key, tuple[Mat, Vec]] = {}

    # -- order structure ----------------------------------------------------

    def contains_face(self, inner: Face, outer: Face) -> bool:
        return set(inner.key) >= set(outer.key)

    @property
    def containment_pairs(self) -> tuple[tuple[Face, Face], ...]:
        cached = getattr(self, "_containment", None)
        if cached is None:
            cached = tuple(
                (f1, f2)
                for f1 in self.faces
                for f2 in self.faces
                if f1 is not f2 and self.contains_face(f1, f2)
            )
            self._containment = cached
        return cached

    @property
    def covering_pairs(self) -> tuple[tuple[Face, Face], ...]:
        """(F, F') with F subset F' and dim F' = dim F + 1."""
        cached = getattr(self, "_covering", None)
        if cached is None:
            cached = tuple(
                (f1, f2)
                for f1 in self.faces
                for f2 in self.faces
                if f2.dim == f1.dim + 1 and self.contains_face(f1, f2)
            )
            self._covering = cached
        return cached

    def top(self) -> Face:
        return max(self.faces, key=lambda f: f.dim)

    def vertices(self) -> list[Face]:
        return [f for f in self.faces if f.dim == 0]

    def minimal_face(self, x: Sequence[Fraction]) -> Face:
        if not self.poly.contains(x):
            raise NotInSetError(f"point {x} not in the polyhedron")
        key = frozenset(self.poly.active_set(x))
        face = self.by_key.get(key)
        assert face is not None, "active set of a member point must be canonical"
        return face

    # -- per-face geometry, cached -------------------------------------------

    def tangent_cone(self, face: Face) -> "PolyCone":
        c = self._tangent.get(face.key)
        if c is None:
            rows = tuple(self.poly.rows[i] for i in face.key)
            c = PolyCone.from_rows(self.poly.n, rows, row_index_map=face.key)
            self._tangent[face.key] = c
        return c

    def normal_cone(self, face: Face) -> "PolyCone":
        c = self._normal.get(face.key)
        if c is None:
            gens = tuple(primitive(self.poly.rows[i]) for i in face.key)
            tangent = self.tangent_cone(face)
            c = PolyCone.from_generators(self.poly.n, gens, h_rows=tangent.all_generators())
            self._normal[face.key] = c
        return c

    def _aff_projection(self, face: Face) -> tuple[Mat, Vec]:
        """Exact affine projection onto aff F as x -> M x + c."""
        cached = self._aff_proj.get(face.key)
        if cached is not None:
            return cached
        n = self.poly.n
        g_rows = row_space_basis([self.poly.rows[i] for i in face.key], n)
        if not g_rows:
            m = tuple(unit(n, i) for i in range(n))
            cv: Vec = zeros(n)
        else:
            # x - G^T (G G^T)^{-1} (G x - g): M = I - G^T (GG^T)^{-1} G
            x0 = face.ri_point
            cols = []
            for i in range(n):
                e = unit(n, i)
                p = project_onto_span(g_rows, e)
                cols.append(vsub(e, p))
            m = tuple(zip(*cols))  # columns -> matrix acting on x
            mx0 = tuple(dot(rw, x0) for rw in m)
            cv = vsub(x0, mx0)
        self._aff_proj[face.key] = (m, cv)
        return m, cv

    def project(self, z: Sequence[Fraction]) -> Vec:
        """Exact projection onto the polyhedron: unique x with z - x in N(C,x)."""
        z = vec(z)
        if self.poly.contains(z):
            return z
        for face in self.faces:
            m, c = self._aff_projection(face)
            x = vadd(tuple(dot(rw, z) for rw in m), c)
            if not self.poly.contains(x):
                continue
            d = vsub(z, x)
            ncone = self.normal_cone(face)
            if ncone.contains(d):
                return x
        raise AssertionError("projection failed on every face (bug)")


@lru_cache(maxsize=512)
def enumerate_faces(poly: HPolyhedron) -> FaceLattice:
    """Breadth-first face enumeration keyed by canonical maximal active sets."""
    if poly.forced_empty or poly.is_empty():
        raise EmptySetError("cannot enumerate faces of an empty polyhedron")
    memo: dict = {}
    root = _canonicalize(poly, frozenset(), memo)
    assert root is not None
    found: dict[Key, Face] = {root.key: root}
    queue = [root]
    while queue:
        face = queue.pop()
        for j in range(poly.k):
            if j in face.active_set:
                continue
            cand = _canonicalize(poly, face.active_set | {j}, memo)
            if cand is not None and cand.key not in found:
                found[cand.key] = cand
                queue.append(cand)
    return FaceLattice(poly, list(found.values()))


def enumerate_faces_bruteforce(poly: HPolyhedron) -> FaceLattice:
    """Oracle enumerator: canonicalize every subset of {1..k}."""
    if poly.forced_empty or poly.is_empty():
        raise EmptySetError("cannot enumerate faces of an empty polyhedron")
    memo: dict = {}
    found: dict[Key, Face] = {}
    k = poly.k
    for mask in range(1 << k):
        subset = frozenset(i for i in range(k) if mask >> i & 1)
        face = _canonicalize(poly, subset, memo)
        if face is not None:
            found.setdefault(face.key, face)
    return FaceLattice(poly, list(found.values()))


def minimal_face(poly: HPolyhedron, lattice: FaceLattice, x: Sequence[Fraction]) -> Face:
    return lattice.minimal_face(x)


def project(poly: HPolyhedron, z: Sequence[Fraction]) -> Vec:
    if poly.forced_empty or poly.is_empty():
        raise EmptySetError("cannot project onto an empty polyhedron")
    return enumerate_faces(poly).project(z)


# ---------------------------------------------------------------------------
# Polyhedral cones
# ---------------------------------------------------------------------------


@dataclass
class PolyCone:
    """Polyhedral cone with an H-form and/or a generator (V-) form.

    V-form is stored as extreme rays plus a lineality basis; the full
    generator list is rays + (+/-) lineality basis.  Missing forms are
    computed on demand by double description through the face lattice.
    `row_index_map` optionally labels H-rows with indices of an ambient
    polyhedron's inequalities (used by tangent cones).
    """

    n: int
    _rows: Optional[Mat] = None
    _rays: Optional[tuple[Vec, ...]] = None
    _lineality: Optional[tuple[Vec, ...]] = None
    row_index_map: Optional[Key] = None
    _lattice: Optional[FaceLattice] = field(default=None, repr=False)

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def from_rows(
        n: int, rows: Iterable[Sequence], row_index_map: Optional[Key] = None
    ) -> "PolyCone":
        rws = tuple(vec(r) for r in rows)
        if any(len(r) != n for r in rws):
            raise UsageError("cone row dimension mismatch")
        if row_index_map is not None and len(row_index_map) != len(rws):
            raise UsageError("row index map length mismatch")
        live = tuple(r for r in rws if not is_zero_vec(r))
        if row_index_map is not None and len(live) != len(rws):
            raise UsageError("zero rows not allowed with a row index map")
        return PolyCone(n, _rows=live, row_index_map=row_index_map)

    @staticmethod
    def from_generators(
        n: int, gens: Iterable[Sequence], h_rows: Optional[Iterable[Sequence]] = None
    ) -> "PolyCone":
        gv = tuple(vec(g) for g in gens)
        if any(len(g) != n for g in gv):
            raise UsageError("generator dimension mismatch")
        cone = PolyCone(n)
        if h_rows is not None:
            rws = tuple(vec(r) for r in h_rows)
            cone._rows = tuple(r for r in rws if not is_zero_vec(r))
        cone._set_v_from_raw(gv)
        return cone

    def _set_v_from_raw(self, gens: tuple[Vec, ...]) -> None:
        """Split raw generators into lineality + pointed rays, canonically.

        A generator g lies in lin K iff -g is also in K; the span of those
        generators is all of lin K.  With H-rows available both the
        lineality test and the extreme-ray test are dot products / ranks;
        otherwise they fall back to exact membership LPs.
        """
        live = [g for g in gens if not is_zero_vec(g)]
        lin: list[Vec] = []
        for g in live:
            if self._rows is not None:
                in_lin = all(dot(r, g) == 0 for r in self._rows)
            else:
                in_lin = self._raw_member(live, vneg(g))
            if in_lin:
                lin.append(g)
        lin_basis = row_space_basis(lin, self.n)
        rays = []
        for g in live:
            red = vsub(g, project_onto_span(lin_basis, g))
            if not is_zero_vec(red):
                rays.append(primitive(red))
        uniq = sorted(set(rays))
        pruned: list[Vec] = []
        if self._rows is not None:
            # r generates an extreme ray iff its minimal face has dim lin+1.
            want = self.n - len(lin_basis) - 1
            for r in uniq:
                act = [row for row in self._rows if dot(row, r) == 0]
                if rank(tuple(act)) == want:
                    pruned.append(r)
        else:
            for i, r in enumerate(uniq):
                others = [g for j, g in enumerate(uniq) if j != i]
                ext = others + lin_basis + [vneg(b) for b in lin_basis]
                if not ext or not self._raw_member(ext, r):
                    pruned.append(r)
        self._rays = tuple(pruned)
        self._lineality = tuple(lin_basis)

    @staticmethod
    def _raw_member(gens: Sequence[Vec], x: Vec) -> bool:
        if is_zero_vec(x):
            return True
        if not gens:
            return False
        n = len(x)
        m = len(gens)
        cons: list[tuple[Vec, Fraction, str]] = []
        for i in range(n):
            cons.append((tuple(g[i] for g in gens), x[i], EQ))
        for j in range(m):
            cons.append((vneg(unit(m, j)), Fraction(0), LE))
        return lp_feasible(cons, m) is not None

    # -- forms ----------------------------------------------------------------

    @property
    def rows(self) -> Mat:
        if self._rows is None:
            polar_cone = PolyCone.from_rows(self.n, self.all_generators())
            self._rows = polar_cone.all_generators()
        return self._rows

    def h_polyhedron(self) -> HPolyhedron:
        return HPolyhedron(self.n, self.rows, zeros(len(self.rows)) if self.rows else ())

    def lattice(self) -> FaceLattice:
        if self._lattice is None:
            self._lattice = enumerate_faces(self.h_polyhedron())
        return self._lattice

    def _ensure_v(self) -> None:
        if self._rays is not None:
            return
        lat = self.lattice()
        lin = lineality_basis_of_rows(self.rows, self.n)
        lin_dim = len(lin)
        rays = []
        for f in lat.faces:
            if f.dim == lin_dim + 1:
                d = vsub(f.ri_point, project_onto_span(lin, f.ri_point))
                rays.append(primitive(d))
        self._rays = tuple(sorted(set(rays)))
        self._lineality = tuple(lin)

    @property
    def rays(self) -> tuple[Vec, ...]:
        self._ensure_v()
        assert self._rays is not None
        return self._rays

    @property
    def lineality_basis(self) -> tuple[Vec, ...]:
        self._ensure_v()
        assert self._lineality is not None
        return self._lineality

    def all_generators(self) -> tuple[Vec, ...]:
        """Rays plus +/- lineality basis: a full conic generating set."""
        gens = list(self.rays)
        for b in self.lineality_basis:
            gens.append(primitive(b))
            gens.append(primitive(vneg(b)))
        return tuple(gens)

    # -- predicates -------------------------------------------------------------

    def contains(self, x: Sequence[Fraction]) -> bool:
        x = vec(x)
        if len(x) != self.n:
            raise UsageError("point dimension mismatch")
        if self._rows is not None:
            return all(dot(r, x) <= 0 for r in self._rows)
        return self._raw_member(list(self.all_generators()), x)

    def contains_cone(self, other: "PolyCone") -> bool:
        return all(self.contains(g) for g in other.all_generators())

    def equals(self, other: "PolyCone") -> bool:
        return self.contains_cone(other) and other.contains_cone(self)

    def is_trivial(self) -> bool:
        """Exactly {0}?"""
        if self._rays is not None:
            return not self._rays and not self._lineality
        return cone_rows_trivial(self.rows, self.n)

    def dim(self) -> int:
        return rank(self.all_generators()) if self.all_generators() else 0

    def span_basis(self) -> tuple[Vec, ...]:
        return tuple(row_space_basis(self.all_generators(), self.n))

    def ri_point(self) -> Vec:
        """A point in the relative interior (sum of all generators)."""
        p = zeros(self.n)
        for g in self.all_generators():
            p = vadd(p, g)
        return p

    def key_of(self, face: Face) -> Key:
        """Translate a face key of this cone's H-form through row_index_map."""
        if self.row_index_map is None:
            return face.key
        return tuple(sorted(self.row_index_map[i] for i in face.key))


def lineality_basis_of_rows(rows: Mat, n: int) -> list[Vec]:
    """lin K = K cap -K = {x : rows x = 0} for an H-form cone."""
    if not rows:
        return [unit(n, i) for i in range(n)]
    return [primitive(b) for b in kernel_basis(rows, n)]


def cone_rows_trivial(rows: Mat, n: int) -> bool:
    """Is {x : rows x <= 0} = {0}?  Decided by 2n exact LPs."""
    if rank(rows) < n:
        return False  # nontrivial lineality
    cons = [(r, Fraction(0), LE) for r in rows]
    for i in range(n):
        for sign in (1, -1):
            e = vscale(Fraction(sign), unit(n, i))
            if lp_feasible(cons + [(vneg(e), Fraction(-1), LE)], n) is not None:
                return False
    return True


def nonzero_point_of_rows(rows: Mat, n: int) -> Optional[Vec]:
    """A nonzero point of {x : rows x <= 0}, or None if trivial."""
    lin = kernel_basis(rows, n) if rows else [unit(n, i) for i in range(n)]
    if lin:
        return primitive(lin[0])
    cons = [(r, Fraction(0), LE) for r in rows]
    for i in range(n):
        for sign in (1, -1):
            e = vscale(Fraction(sign), unit(n, i))
            p = lp_feasible(cons + [(vneg(e), Fraction(-1), LE)], n)
            if p is not None:
                return primitive(p)
    return None


# ---------------------------------------------------------------------------
# Cone operations
# ---------------------------------------------------------------------------


def polar(k: PolyCone) -> PolyCone:
    """K° = {y : <y,x> <= 0 for all x in K}.

    H-rows of K° are the generators of K; generators of K° are the H-rows
    of K (Farkas).  Whichever form K has is converted for free.
    """
    if k._rows is not None and k._rays is not None:
        out = PolyCone.from_generators(k.n, k.rows, h_rows=k.all_generators())
    elif k._rows is not None:
        out = PolyCone(k.n)
        out._set_v_from_raw(tuple(primitive(r) for r in k.rows))
    else:
        out = PolyCone.from_rows(k.n, k.all_generators())
    return out


def cone_convert(k: PolyCone) -> PolyCone:
    """Force both H- and V-forms to be present (double description)."""
    _ = k.rows
    _ = k.rays
    return k


def tangent_cone(poly: HPolyhedron, face: Face, lattice: Optional[FaceLattice] = None) -> PolyCone:
    lat = lattice if lattice is not None else enumerate_faces(poly)
    return lat.tangent_cone(face)


def normal_cone(poly: HPolyhedron, face: Face, lattice: Optional[FaceLattice] = None) -> PolyCone:
    lat = lattice if lattice is not None else enumerate_faces(poly)
    return lat.normal_cone(face)


def lineality(k: PolyCone) -> tuple[Vec, ...]:
    return k.lineality_basis


def span_of(obj) -> tuple[Vec, ...]:
    """Basis of L(.) = span(. - .) for a Face or PolyCone."""
    if isinstance(obj, Face):
        return obj.span_basis
    if isinstance(obj, PolyCone):
        return obj.span_basis()
    raise UsageError(f"span_of: unsupported type {type(obj)!r}")


def cone_sum(a: PolyCone, b: PolyCone) -> PolyCone:
    if a.n != b.n:
        raise UsageError("cone_sum: ambient dimension mismatch")
    return PolyCone.from_generators(a.n, a.all_generators() + b.all_generators())


def cone_intersect(a: PolyCone, b: PolyCone) -> PolyCone:
    if a.n != b.n:
        raise UsageError("cone_intersect: ambient dimension mismatch")
    return PolyCone.from_rows(a.n, tuple(a.rows) + tuple(b.rows))


def face_cone_generators(k: PolyCone, face: Face) -> tuple[Vec, ...]:
    """Generators of a face of a cone: the rays of K lying in the face,
    plus the lineality basis (every face of a cone contains lin K)."""
    rows = k.rows
    gens = [
        r
        for r in k.rays
        if all(dot(rows[i], r) == 0 for i in face.key)
    ]
    out = list(gens)
    for b in k.lineality_basis:
        out.append(b)
        out.append(vneg(b))
    return tuple(out)


def face_subcone(k: PolyCone, face: Face) -> PolyCone:
    """A face of a cone as a cone in its own right (both forms cheap)."""
    h_rows = list(k.rows)
    for i in face.key:
        h_rows.append(vneg(k.rows[i]))
    return PolyCone.from_generators(k.n, face_cone_generators(k, face), h_rows=h_rows)


def cone_minus(k: PolyCone, f2: Face, f1: Face) -> PolyCone:
    """cone(F2 - F1) = F2 + L(F1) for faces F1 subset F2 of a cone."""
    if not set(f1.key) >= set(f2.key):
        raise UsageError("cone_minus requires F1 subset of F2")
    gens = list(face_cone_generators(k, f2))
    for b in f1.span_basis:
        gens.append(b)
        gens.append(vneg(b))
    return PolyCone.from_generators(k.n, gens)
