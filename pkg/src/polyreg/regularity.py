"""Regularity certificates for z in Ax + N(C,x) and their audits.

Certificates:
  * coherent orientation: determinants of the face operators T_F (A on
    L(F), identity on L(N(C,F))) all share one nonzero sign;
  * face separation: for every covering pair the hyperplane spanned by
    L(F) + L(Lambda(F')) properly separates L(F) + Lambda(F) from F';
  * critical face condition: no face pair F1 subset F2 admits a nonzero z
    with z in cone(F2-F1) and A^T z in (F2-F1)°;
  * surjection modulus: exact positivity plus numeric bounds for
    sur Phi(0|0) = min over face pairs of
    r(F1,F2) = inf{ d(T^T z, (F2-F1)°) : |z|=1, S^T z in (Lambda F1 - Lambda F2)° }.

All yes/no answers are exact (rational LPs); floating point appears only
in the numeric refinement of a modulus already certified positive.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .avi import AVIInstance, solution_count, stress_samples
from .complementarity import (
    ComplementarityRelation,
    ConePair,
    canonical_normal_relation,
    check_nonsingular,
)
from .errors import UsageError
from .linalg import (
    EQ,
    LE,
    LT,
    Mat,
    Vec,
    det,
    dot,
    identity,
    kernel_basis,
    lp_feasible,
    lp_max,
    mat_t_vec,
    mat_vec,
    norm_sq,
    primitive,
    rank,
    row_space_basis,
    solve_linear,
    transpose,
    unit,
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
    Key,
    PolyCone,
    cone_minus,
    cone_rows_trivial,
    enumerate_faces,
    face_cone_generators,
    face_subcone,
    nonzero_point_of_rows,
)

# ---------------------------------------------------------------------------
# Coherent orientation
# ---------------------------------------------------------------------------


@dataclass
class CoherentOrientationResult:
    verdict: bool
    signs: dict[Key, int]  # +1 / -1 / 0 per face (0 only when degenerate)
    noncomplementary: list[Key]
    bad_pair: Optional[tuple[Key, Key]] = None

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "signs": {str(list(k)): s for k, s in sorted(self.signs.items())},
            "noncomplementary": [list(k) for k in self.noncomplementary],
            "bad_pair": [list(self.bad_pair[0]), list(self.bad_pair[1])]
            if self.bad_pair
            else None,
        }


def face_operator_det(
    a: Mat,
    lattice: FaceLattice,
    face: Face,
    b_basis: Optional[Sequence[Vec]] = None,
    n_basis: Optional[Sequence[Vec]] = None,
) -> Optional[Fraction]:
    """det T_F = det([A.B | N]) / det([B | N]) for any bases B of L(F) and
    N of L(N(C,F)); None when the subspaces are not complementary.

    The ratio does not depend on the choice of bases; explicit ones can be
    passed to exercise exactly that."""
    n = lattice.poly.n
    b = list(b_basis) if b_basis is not None else list(face.span_basis)
    nb = (
        list(n_basis)
        if n_basis is not None
        else row_space_basis([lattice.poly.rows[i] for i in face.key], n)
    )
    if len(b) + len(nb) != n:
        return None
    cols = b + nb
    denom_mat = transpose(tuple(cols))
    denom = det(tuple(zip(*cols)))
    if denom == 0:
        return None
    img = [mat_vec(a, v) for v in b] + nb
    numer = det(tuple(zip(*img)))
    return numer / denom


def check_coherent_orientation(
    a: Mat,
    poly: HPolyhedron,
    lattice: Optional[FaceLattice] = None,
    all_pairs: bool = False,
) -> CoherentOrientationResult:
    lat = lattice if lattice is not None else enumerate_faces(poly)
    signs: dict[Key, int] = {}
    noncomp: list[Key] = []
    for f in lat.faces:
        d = face_operator_det(a, lat, f)
        if d is None or d == 0:
            signs[f.key] = 0
            if d is None:
                noncomp.append(f.key)
        else:
            signs[f.key] = 1 if d > 0 else -1
    verdict = all(s != 0 for s in signs.values()) and len(set(signs.values())) == 1
    bad = None
    pairs = lat.containment_pairs if all_pairs else lat.covering_pairs
    for f1, f2 in pairs:
        if signs[f1.key] != signs[f2.key] or signs[f1.key] == 0:
            bad = (f1.key, f2.key)
            break
    if bad is None and not verdict:
        zero = next((k for k, s in signs.items() if s == 0), None)
        if zero is not None:
            bad = (zero, zero)
    return CoherentOrientationResult(verdict, signs, noncomp, bad)


# ---------------------------------------------------------------------------
# Face separation
# ---------------------------------------------------------------------------


@dataclass
class FaceSeparationResult:
    verdict: bool
    nonsingular: bool
    violating_pair: Optional[tuple[Key, Key]] = None
    reason: str = ""

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "nonsingular": self.nonsingular,
            "violating_pair": [list(self.violating_pair[0]), list(self.violating_pair[1])]
            if self.violating_pair
            else None,
            "reason": self.reason,
        }


def _signs_of(values: Sequence[Fraction]) -> tuple[bool, bool]:
    """(has positive, has negative)."""
    return any(v > 0 for v in values), any(v < 0 for v in values)


def check_face_separation(rel: ComplementarityRelation) -> FaceSeparationResult:
    """Face separation condition for (C, Lambda).

    For a homogeneous base the separating hyperplane is the subspace
    L(F) + L(Lambda(F')) and the separated sets are L(F) + Lambda(F) and
    F'.  For a non-cone base the hyperplane is the affine translate
    through ri(F) and the first set is F + Lambda(F); F-side signs reduce
    to the Lambda(F) generators either way because aff F lies inside the
    hyperplane.
    """
    nonsing, bad = check_nonsingular(rel)
    if not nonsing:
        return FaceSeparationResult(False, False, (bad, bad), "singular relation")
    lat = rel.lattice
    n = rel.base.n
    is_cone = rel.base.is_cone()
    base_cone = (
        PolyCone.from_rows(n, rel.base.rows) if is_cone and rel.base.rows else None
    )
    for f, fp in lat.covering_pairs:
        lam_f = rel.cone_at(f)
        lam_fp = rel.cone_at(fp)
        e_basis = row_space_basis(
            list(f.span_basis) + list(lam_fp.span_basis()), n
        )
        if len(e_basis) != n - 1:
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "L(F)+L(Lambda(F')) is not a hyperplane"
            )
        normal = kernel_basis(tuple(e_basis), n)
        assert len(normal) == 1
        e = primitive(normal[0])

        side1 = [dot(e, g) for g in lam_f.all_generators()]
        s1_pos, s1_neg = _signs_of(side1)
        if s1_pos and s1_neg:
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "L(F)+Lambda(F) meets both open sides"
            )
        if is_cone:
            assert base_cone is not None
            fp_face = base_cone.lattice().by_key[frozenset(fp.key)]
            side2 = [dot(e, g) for g in face_cone_generators(base_cone, fp_face)]
            s2_pos, s2_neg = _signs_of(side2)
        else:
            x0 = f.ri_point
            cons = [
                (rel.base.rows[i], rel.base.alphas[i], EQ if i in fp.key else LE)
                for i in range(rel.base.k)
            ]
            c0 = dot(e, x0)
            up = lp_max(e, cons, n)
            dn = lp_max(vneg(e), cons, n)
            s2_pos = up.status == "unbounded" or (up.value is not None and up.value > c0)
            s2_neg = dn.status == "unbounded" or (dn.value is not None and -dn.value < c0)
        if s2_pos and s2_neg:
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "F' meets both open sides"
            )
        if not (s1_pos or s1_neg):
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "L(F)+Lambda(F) lies in the hyperplane"
            )
        if not (s2_pos or s2_neg):
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "F' lies in the hyperplane"
            )
        if (s1_pos and s2_pos) or (s1_neg and s2_neg):
            return FaceSeparationResult(
                False, True, (f.key, fp.key), "both sets on the same side"
            )
    return FaceSeparationResult(True, True)


def check_cone_separation(pair: ConePair) -> bool:
    """Theorem-5.6 audit: K cap H = {0} exactly."""
    rows = tuple(pair.k.rows) + tuple(pair.h.rows)
    return cone_rows_trivial(rows, pair.k.n)


# ---------------------------------------------------------------------------
# Critical face condition
# ---------------------------------------------------------------------------


@dataclass
class CriticalFaceResult:
    verdict: bool
    witness: Optional[Vec] = None
    pair: Optional[tuple[Key, Key]] = None

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": [str(x) for x in self.witness] if self.witness else None,
            "pair": [list(self.pair[0]), list(self.pair[1])] if self.pair else None,
        }


def _face_pairs(lat: FaceLattice):
    """All ordered pairs (F1, F2) with F1 subset of F2, including equal."""
    for f1 in lat.faces:
        for f2 in lat.faces:
            if set(f1.key) >= set(f2.key):
                yield f1, f2


def check_critical_face(
    a: Mat, cone: PolyCone, lattice: Optional[FaceLattice] = None
) -> CriticalFaceResult:
    """No nonzero z with z in cone(F2-F1) and A^T z in (F2-F1)°."""
    lat = lattice if lattice is not None else cone.lattice()
    memo: dict = {}
    for f1, f2 in _face_pairs(lat):
        gens_key = None
        diff = cone_minus(cone, f2, f1)
        gens = diff.all_generators()
        gens_key = tuple(sorted(gens))
        rows_d = memo.get(gens_key)
        if rows_d is None:
            rows_d = diff.rows
            memo[gens_key] = rows_d
        w_rows = list(rows_d) + [mat_vec(a, g) for g in gens]
        z = nonzero_point_of_rows(tuple(w_rows), cone.n)
        if z is not None:
            return CriticalFaceResult(False, z, (f1.key, f2.key))
    return CriticalFaceResult(True)


def polar_difference(
    cone: PolyCone, lattice: FaceLattice, f1: Face, f2: Face
) -> PolyCone:
    """(F2 - F1)° computed directly as the polar of cone(F2 - F1)."""
    from .polyhedra import polar

    return polar(cone_minus(cone, f2, f1))


# ---------------------------------------------------------------------------
# Surjection modulus
# ---------------------------------------------------------------------------


@dataclass
class ModulusQuery:
    t: Mat
    s: Mat
    cone: PolyCone
    relation: dict[Key, PolyCone]  # face key of cone -> Lambda(F)

    @staticmethod
    def canonical(a: Mat, cone: PolyCone) -> "ModulusQuery":
        lat = cone.lattice()
        rel = {f.key: lat.normal_cone(f) for f in lat.faces}
        n = cone.n
        return ModulusQuery(a, identity(n), cone, rel)


@dataclass
class ModulusResult:
    positive: bool
    lower: Optional[float]
    upper: Optional[float]
    pair: Optional[tuple[Key, Key]]
    tolerance: float
    per_pair: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "positive": self.positive,
            "lower": self.lower,
            "upper": self.upper,
            "pair": [list(self.pair[0]), list(self.pair[1])] if self.pair else None,
            "tolerance": self.tolerance,
        }


def _orthonormal(basis: Sequence[Vec]) -> Optional[np.ndarray]:
    if not basis:
        return None
    b = np.array([[float(x) for x in v] for v in basis], dtype=float).T  # n x d
    q, _ = np.linalg.qr(b)
    return q[:, : len(basis)]


def _np_of(vectors: Sequence[Vec]) -> np.ndarray:
    return np.array([[float(x) for x in v] for v in vectors], dtype=float)


class _PairProblem:
    """inf d(T^T z, P) / ||z|| over 0 != z in Z, with float screening and
    exact certification of the best candidates."""

    def __init__(self, t: Mat, zcone: PolyCone, p_rows: Mat, n: int):
        self.t = t
        self.n = n
        self.zcone = zcone
        self.z_rows = zcone.rows
        self.p_poly = HPolyhedron.from_inequalities(n, [(r, 0) for r in p_rows])
        self.p_lat = enumerate_faces(self.p_poly)
        self.t_np = _np_of(t)
        self.p_rows_np = (
            _np_of(self.p_poly.rows) if self.p_poly.rows else np.zeros((0, n))
        )
        self._face_data = []
        for g in self.p_lat.faces:
            qg = _orthonormal(g.span_basis)
            nc = self.p_lat.normal_cone(g).rows
            nc_np = _np_of(nc) if nc else np.zeros((0, n))
            self._face_data.append((qg, nc_np))
        # candidates: (float value, exactifier) where exactifier() -> Vec in Z
        self.candidates: list[tuple[float, object]] = []

    def float_dist(self, zs: np.ndarray) -> np.ndarray:
        """Distance from T^T z to P per row of zs; per face of P the
        orthogonal projection onto span(G) is accepted when it is in P and
        its residual is in N(P,G), up to float tolerance."""
        ws = zs @ self.t_np
        out = np.full(len(ws), np.inf)
        for qg, nc_np in self._face_data:
            xs = ws @ qg @ qg.T if qg is not None else np.zeros_like(ws)
            resid = ws - xs
            ok = np.ones(len(ws), dtype=bool)
            if len(self.p_rows_np):
                ok &= (xs @ self.p_rows_np.T <= 1e-9).all(axis=1)
            if len(nc_np):
                ok &= (resid @ nc_np.T <= 1e-9).all(axis=1)
            d = np.linalg.norm(resid, axis=1)
            out = np.where(ok, np.minimum(out, d), out)
        return out

    def float_value(self, z: np.ndarray) -> float:
        nz = np.linalg.norm(z)
        if nz < 1e-12:
            return math.inf
        return float(self.float_dist((z / nz)[None, :])[0])

    def add_exact(self, z: Vec) -> None:
        if all(x == 0 for x in z):
            return
        zf = np.array([float(x) for x in z])
        self.candidates.append((self.float_value(zf), ("exact", z)))

    def add_span_coords(self, basis: Sequence[Vec], coords: np.ndarray) -> None:
        z = _np_of(basis).T @ coords if len(basis) else None
        if z is None or np.linalg.norm(z) < 1e-12:
            return
        self.candidates.append((self.float_value(z), ("span", basis, coords)))

    def add_gen_coeffs(self, gens: Sequence[Vec], coeffs: np.ndarray) -> None:
        z = _np_of(gens).T @ np.maximum(coeffs, 0.0)
        if np.linalg.norm(z) < 1e-12:
            return
        self.candidates.append((self.float_value(z), ("gens", gens, coeffs)))

    def _exactify(self, spec) -> Optional[Vec]:
        kind = spec[0]
        if kind == "exact":
            z = spec[1]
        elif kind == "span":
            _, basis, coords = spec
            z = zeros(self.n)
            for c, b in zip(coords, basis):
                z = vadd(z, vscale(Fraction(float(c)).limit_denominator(10**9), b))
        else:
            _, gens, coeffs = spec
            z = zeros(self.n)
            for c, g in zip(coeffs, gens):
                cc = max(0.0, float(c))
                z = vadd(z, vscale(Fraction(cc).limit_denominator(10**9), g))
        if all(x == 0 for x in z):
            return None
        if any(dot(r, z) > 0 for r in self.z_rows):
            return None
        return z

    def exact_ratio_sq(self, z: Vec) -> Fraction:
        w = mat_t_vec(self.t, z)
        proj = self.p_lat.project(w)
        return norm_sq(vsub(w, proj)) / norm_sq(z)

    def certify(self, max_checks: int = 10) -> Optional[Fraction]:
        """Exact value at the best exactly-feasible candidate."""
        self.candidates.sort(key=lambda c: c[0])
        best: Optional[Fraction] = None
        checks = 0
        for fval, spec in self.candidates:
            if checks >= max_checks and best is not None:
                break
            if best is not None and fval > math.sqrt(float(best)) + 1e-9:
                break
            z = self._exactify(spec)
            if z is None:
                continue
            checks += 1
            val = self.exact_ratio_sq(z)
            if best is None or val < best:
                best = val
        return best


def _pair_modulus(
    t: Mat,
    zcone_rows: Mat,
    p_rows: Mat,
    n: int,
    samples: int,
    descent_steps: int,
    rng: random.Random,
) -> Optional[float]:
    """Certified upper bound on r for one face pair, or None when the
    feasible cone Z is trivial (the pair does not constrain the minimum)."""
    zcone = PolyCone.from_rows(n, zcone_rows)
    gens = zcone.all_generators()
    if not gens:
        return None
    prob = _PairProblem(t, zcone, p_rows, n)
    prob.add_exact(zcone.ri_point())
    for g in gens:
        prob.add_exact(g)

    # Stationary patterns: on each face of Z and each face G of P, local
    # minima of ||(I - P_{L(G)}) T^T z||/||z|| restricted to span(face) are
    # right singular vectors of the restricted operator.
    zlat = zcone.lattice()
    spans = []
    for zf in zlat.faces:
        span = face_subcone(zcone, zf).span_basis()
        if span:
            spans.append(span)
    n_eye = np.eye(n)
    for span in spans:
        qz = _orthonormal(span)
        if qz is None:
            continue
        span_np = _np_of(span)
        for qg, _ in prob._face_data:
            proj = n_eye - qg @ qg.T if qg is not None else n_eye
            m_np = proj @ prob.t_np.T @ qz
            try:
                _, _, vt = np.linalg.svd(m_np)
            except np.linalg.LinAlgError:  # pragma: no cover
                continue
            for wrow in vt:
                zdir = qz @ wrow
                coords = np.linalg.lstsq(span_np.T, zdir, rcond=None)[0]
                prob.add_span_coords(span, coords)
                prob.add_span_coords(span, -coords)

    # Seeded dense sampling over generator coefficients plus shrinking-step
    # local descent, evaluated in float; the best few get certified exactly.
    if samples > 0:
        nprng = np.random.default_rng(rng.randrange(2**32))
        coeff = nprng.exponential(size=(samples, len(gens)))
        gf = _np_of(gens)
        zsamp = coeff @ gf
        norms = np.linalg.norm(zsamp, axis=1)
        keep = norms > 1e-12
        coeff, zsamp, norms = coeff[keep], zsamp[keep], norms[keep]
        if len(zsamp):
            dists = prob.float_dist(zsamp / norms[:, None])
            order = np.argsort(dists)
            for idx in order[:3]:
                prob.add_gen_coeffs(gens, coeff[idx])
            cbest = coeff[order[0]].copy()
            vbest = dists[order[0]]
            scale0 = float(np.max(np.abs(cbest))) or 1.0
            for step in range(descent_steps):
                scale = scale0 * (0.5 ** (1 + 6 * step // max(1, descent_steps)))
                trial = np.maximum(cbest + nprng.normal(scale=scale, size=len(gens)), 0.0)
                zt = trial @ gf
                nt = np.linalg.norm(zt)
                if nt < 1e-12:
                    continue
                vt_ = float(prob.float_dist((zt / nt)[None, :])[0])
                if vt_ < vbest:
                    vbest, cbest = vt_, trial
            prob.add_gen_coeffs(gens, cbest)

    best = prob.certify()
    if best is None:
        return None
    return math.sqrt(float(best))


def surjection_modulus(
    q: ModulusQuery,
    samples: int = 20000,
    descent_steps: int = 100,
    seed: int = 0,
    tolerance: float = 1e-7,
) -> ModulusResult:
    """sur Phi(0|0) for Phi(x) = Tx + S(Lambda(F_min(x))) on a cone.

    Positivity is decided exactly per face pair by cone triviality of
    {z : S^T z in (Lambda F1 - Lambda F2)°, T^T z in (F2-F1)°}; the value
    is bounded numerically (certified upper value at exact directions,
    lower = upper - tolerance).
    """
    lat = q.cone.lattice()
    n = q.cone.n
    rng = random.Random(seed)
    positive = True
    best_upper: Optional[float] = None
    best_pair: Optional[tuple[Key, Key]] = None
    per_pair = []
    for f1, f2 in _face_pairs(lat):
        lam1 = q.relation[f1.key]
        lam2 = q.relation[f2.key]
        lam_diff_gens = tuple(lam1.all_generators()) + tuple(
            vneg(g) for g in lam2.all_generators()
        )
        z_rows = tuple(mat_vec(q.s, g) for g in lam_diff_gens)
        diff = cone_minus(q.cone, f2, f1)
        p_rows = diff.all_generators()  # H-form rows of (F2-F1)°
        tp_rows = tuple(mat_vec(q.t, g) for g in p_rows)
        joint = tuple(z_rows) + tuple(tp_rows)
        pair_positive = cone_rows_trivial(joint, n)
        entry = {"pair": (f1.key, f2.key), "positive": pair_positive}
        if not pair_positive:
            positive = False
            entry["r"] = 0.0
            per_pair.append(entry)
            if best_upper is None or 0.0 < best_upper:
                best_upper, best_pair = 0.0, (f1.key, f2.key)
            continue
        r = _pair_modulus(q.t, z_rows, p_rows, n, samples, descent_steps, rng)
        entry["r"] = r
        per_pair.append(entry)
        if r is not None and (best_upper is None or r < best_upper):
            best_upper, best_pair = r, (f1.key, f2.key)
    if best_upper is None:
        return ModulusResult(positive, None, None, None, tolerance, per_pair)
    # one ulp of headroom so float rounding cannot spoil the upper bound of
    # an exactly computed ratio; an exact zero stays zero
    upper = math.nextafter(best_upper, math.inf) if best_upper > 0.0 else 0.0
    lower = max(0.0, upper - tolerance)
    return ModulusResult(positive, lower, upper, best_pair, tolerance, per_pair)


# ---------------------------------------------------------------------------
# Localization, image relation, equivalence audit
# ---------------------------------------------------------------------------


def default_base_face(lat: FaceLattice) -> Face:
    """A vertex if one exists, else a face of minimal dimension."""
    dmin = min(f.dim for f in lat.faces)
    return min((f for f in lat.faces if f.dim == dmin), key=lambda f: f.key)


def localize(inst: AVIInstance) -> tuple[AVIInstance, Face]:
    """Tangent-cone reduction of the instance at the designated base point."""
    lat = inst.lattice()
    if inst.base_point is not None:
        face = lat.minimal_face(inst.base_point)
    else:
        face = default_base_face(lat)
    rows = tuple(inst.c.rows[i] for i in face.key)
    kpoly = HPolyhedron.from_inequalities(inst.n, [(r, 0) for r in rows])
    return AVIInstance(inst.a, kpoly), face


def extend_injective(a: Mat, l_basis: Sequence[Vec], n: int) -> Optional[Mat]:
    """An invertible matrix agreeing with A on span(l_basis), or None if A
    is not injective there.  Off the subspace the extension is irrelevant
    for the certificates, so unit vectors are used greedily."""
    imgs = [mat_vec(a, b) for b in l_basis]
    if rank(tuple(imgs)) != len(l_basis):
        return None
    dom = list(l_basis)
    img = list(imgs)
    for i in range(n):
        e = unit(n, i)
        if rank(tuple(dom) + (e,)) > len(dom):
            dom.append(e)
            cand = None
            for j in range(n):
                u = unit(n, j)
                if rank(tuple(img) + (u,)) > len(img):
                    cand = u
                    break
            assert cand is not None
            img.append(cand)
    # abar columns solve abar . dom_i = img_i: abar = [img] . [dom]^{-1}
    dom_mat = tuple(zip(*dom))  # n x n, columns dom_i
    img_mat = tuple(zip(*img))
    inv_cols = []
    for i in range(n):
        sol = solve_linear(dom_mat, unit(n, i))
        assert sol is not None
        inv_cols.append(sol[0])
    dom_inv = tuple(zip(*inv_cols))
    from .linalg import mat_mul

    return mat_mul(img_mat, dom_inv)


def induced_image_relation(
    a: Mat, poly: HPolyhedron, lattice: Optional[FaceLattice] = None
) -> Optional[ComplementarityRelation]:
    """The relation A(F) -> N(C,F) on D = Abar(C), or None when A is not
    injective on L(C) (then face separation fails by convention)."""
    lat = lattice if lattice is not None else enumerate_faces(poly)
    n = poly.n
    top = lat.top()
    abar = extend_injective(a, top.span_basis, n)
    if abar is None:
        return None
    inv_cols = []
    for i in range(n):
        sol = solve_linear(abar, unit(n, i))
        if sol is None:
            return None
        inv_cols.append(sol[0])
    abar_inv = tuple(zip(*inv_cols))
    d_rows = tuple(mat_t_vec(abar_inv, y) for y in poly.rows)
    dpoly = HPolyhedron.from_inequalities(n, list(zip(d_rows, poly.alphas)))
    dlat = enumerate_faces(dpoly)
    if {f.key for f in dlat.faces} != {f.key for f in lat.faces}:
        raise AssertionError("image polyhedron lattice mismatch (bug)")
    assignment = {f.key: lat.normal_cone(lat.by_key[f.active_set]) for f in dlat.faces}
    return ComplementarityRelation(dpoly, dlat, assignment)


@dataclass
class AuditReport:
    co_global: CoherentOrientationResult
    fs_global: FaceSeparationResult
    co_local: CoherentOrientationResult
    cf_local: CriticalFaceResult
    modulus: ModulusResult
    kh_separation_ok: bool
    kh_violation: Optional[Key]
    nonsingular: bool
    sample_count: int
    all_single: bool
    all_covered: bool
    witness_z: Optional[Vec]
    witness_kind: Optional[str]  # "gap" | "multi"
    inconsistencies: list[str]

    @property
    def regular(self) -> bool:
        return self.co_global.verdict

    @property
    def ok(self) -> bool:
        return not self.inconsistencies

    def to_json_dict(self) -> dict:
        return {
            "coherent_orientation": self.co_global.to_json_dict(),
            "face_separation": self.fs_global.to_json_dict(),
            "coherent_orientation_localized": self.co_local.to_json_dict(),
            "critical_face": self.cf_local.to_json_dict(),
            "modulus": self.modulus.to_json_dict(),
            "kh_separation_ok": self.kh_separation_ok,
            "kh_violation": list(self.kh_violation) if self.kh_violation else None,
            "nonsingular": self.nonsingular,
            "samples": self.sample_count,
            "all_samples_single_valued": self.all_single,
            "all_samples_covered": self.all_covered,
            "witness_z": [str(x) for x in self.witness_z] if self.witness_z else None,
            "witness_kind": self.witness_kind,
            "regular": self.regular,
            "inconsistencies": self.inconsistencies,
            "consistent": self.ok,
        }


def _kh_separation(a: Mat, kinst: AVIInstance) -> tuple[bool, Optional[Key]]:
    """Abar(T(K,F)) cap N(K,F) = {0} for every face of the localized cone."""
    lat = kinst.lattice()
    n = kinst.n
    top = lat.top()
    abar = extend_injective(a, top.span_basis, n)
    if abar is None:
        return False, top.key
    inv_cols = []
    for i in range(n):
        sol = solve_linear(abar, unit(n, i))
        assert sol is not None
        inv_cols.append(sol[0])
    abar_inv = tuple(zip(*inv_cols))
    for f in lat.faces:
        t_rows = tuple(kinst.c.rows[i] for i in f.key)
        img_rows = tuple(mat_t_vec(abar_inv, y) for y in t_rows)
        n_rows = lat.normal_cone(f).rows
        if not cone_rows_trivial(tuple(img_rows) + tuple(n_rows), n):
            return False, f.key
    return True, None


def targeted_boundary_samples(
    inst: AVIInstance, co: CoherentOrientationResult
) -> list[Vec]:
    """Extra right-hand sides around the boundary shared by the pieces of a
    violating covering pair; deterministic witnesses for irregularity."""
    if co.bad_pair is None:
        return []
    lat = inst.lattice()
    out: list[Vec] = []
    k1, k2 = co.bad_pair
    f = lat.by_key.get(frozenset(k1))
    fp = lat.by_key.get(frozenset(k2))
    if f is None or fp is None:
        return []
    if f.dim > fp.dim:
        f, fp = fp, f
    n = inst.n
    z0 = vadd(mat_vec(inst.a, f.ri_point), lat.normal_cone(fp).ri_point())
    out.append(z0)
    img_span = [mat_vec(inst.a, b) for b in f.span_basis]
    e_basis = row_space_basis(
        img_span + list(lat.normal_cone(fp).span_basis()), n
    )
    dirs: list[Vec] = []
    if len(e_basis) == n - 1:
        normal = kernel_basis(tuple(e_basis), n)
        if normal:
            dirs.append(primitive(normal[0]))
    dirs.extend(unit(n, i) for i in range(n))
    for d in dirs:
        for delta in (Fraction(1, 8), Fraction(1, 64), Fraction(1, 512)):
            out.append(vadd(z0, vscale(delta, d)))
            out.append(vsub(z0, vscale(delta, d)))
    return out


def equivalence_audit(
    a: Mat,
    poly: HPolyhedron,
    samples: int = 120,
    seed: int = 0,
    modulus_samples: int = 2000,
) -> AuditReport:
    """Run every certificate plus solver observations; collect inconsistencies.

    Inconsistencies are violations of the proved equivalences (they indicate
    a bug, never a property of the instance).  A certified-irregular
    instance with no sampled witness is reported via witness_kind=None.
    """
    inst = AVIInstance(a, poly)
    lat = inst.lattice()
    co_global = check_coherent_orientation(a, poly, lat)
    rel_img = induced_image_relation(a, poly, lat)
    if rel_img is None:
        fs_global = FaceSeparationResult(False, False, None, "A not injective on L(C)")
    else:
        fs_global = check_face_separation(rel_img)

    kinst, base_face = localize(inst)
    klat = kinst.lattice()
    kcone = PolyCone.from_rows(kinst.n, kinst.c.rows)
    co_local = check_coherent_orientation(a, kinst.c, klat)
    cf_local = check_critical_face(a, kcone)
    modulus = surjection_modulus(
        ModulusQuery.canonical(a, kcone), samples=modulus_samples, descent_steps=20, seed=seed
    )
    kh_ok, kh_bad = _kh_separation(a, kinst)
    nonsing, _ = check_nonsingular(canonical_normal_relation(poly, lat))

    extra = targeted_boundary_samples(inst, co_global) if not co_global.verdict else []
    zs = stress_samples(inst, budget=samples, seed=seed, extra=extra)
    all_single = True
    all_covered = True
    witness_z = None
    witness_kind = None
    for z in zs:
        cls, _ = solution_count(inst, z)
        if cls == "0":
            all_covered = False
        if cls != "1":
            all_single = False
            if witness_z is None:
                witness_z = z
                witness_kind = "gap" if cls == "0" else "multi"

    inconsistencies: list[str] = []
    if co_global.verdict != fs_global.verdict:
        inconsistencies.append("coherent orientation != face separation (Prop 7.2)")
    if cf_local.verdict != modulus.positive:
        inconsistencies.append("critical face != exact modulus positivity (Thm 6.4)")
    if co_local.verdict != cf_local.verdict:
        inconsistencies.append("localized coherent orientation != critical face")
    if co_global.verdict and not co_local.verdict:
        inconsistencies.append("globally regular but localized certificate fails")
    if co_global.verdict and not all_single:
        inconsistencies.append("certified regular but a sampled z is not single-valued")
    if co_global.verdict and not all_covered:
        inconsistencies.append("certified regular but a sampled z has no solution")
    if co_local.verdict and not kh_ok:
        inconsistencies.append("regular but K cap H != {0} (Thm 5.6)")
    if co_global.verdict and not nonsing:
        inconsistencies.append("regular but canonical relation singular (Thm 5.4)")

    return AuditReport(
        co_global=co_global,
        fs_global=fs_global,
        co_local=co_local,
        cf_local=cf_local,
        modulus=modulus,
        kh_separation_ok=kh_ok,
        kh_violation=kh_bad,
        nonsingular=nonsing,
        sample_count=len(zs),
        all_single=all_single,
        all_covered=all_covered,
        witness_z=witness_z,
        witness_kind=witness_kind,
        inconsistencies=inconsistencies,
    )
