import random
from fractions import Fraction as F

import pytest

from polyreg.errors import EmptySetError, NotInSetError, UsageError
from polyreg.linalg import dot, lp_max, norm_sq, rank, vadd, vec, vscale, vsub
from polyreg.polyhedra import (
    HPolyhedron,
    PolyCone,
    cone_convert,
    cone_intersect,
    cone_minus,
    enumerate_faces,
    enumerate_faces_bruteforce,
    face_subcone,
    polar,
    project,
)

from conftest import random_cone, random_cone_poly, random_poly, rand_vec


def lattice_signature(lat):
    return {(f.key, f.dim) for f in lat.faces}


class TestEnumerateFaces:
    def test_orthant(self, orthant2):
        lat = enumerate_faces(orthant2)
        assert lattice_signature(lat) == {((), 2), ((0,), 1), ((1,), 1), ((0, 1), 0)}
        cov = {(a.key, b.key) for a, b in lat.covering_pairs}
        assert cov == {
            ((0, 1), (0,)),
            ((0, 1), (1,)),
            ((0,), ()),
            ((1,), ()),
        }

    def test_unit_square(self, square):
        lat = enumerate_faces(square)
        assert len(lat.faces) == 9
        dims = sorted(f.dim for f in lat.faces)
        assert dims == [0, 0, 0, 0, 1, 1, 1, 1, 2]

    def test_half_space_vs_bruteforce(self):
        half = HPolyhedron.from_inequalities(2, [((1, 0), 0)])
        lat = enumerate_faces(half)
        oracle = enumerate_faces_bruteforce(half)
        assert lattice_signature(lat) == lattice_signature(oracle)
        assert lattice_signature(lat) == {((), 2), ((0,), 1)}

    def test_empty_rejected(self):
        empty = HPolyhedron.from_inequalities(1, [((1,), -1), ((-1,), 0)])
        with pytest.raises(EmptySetError):
            enumerate_faces(empty)

    def test_zero_row_negative_alpha_is_empty(self):
        p = HPolyhedron.from_inequalities(2, [((0, 0), -1)])
        assert p.forced_empty and p.is_empty()

    def test_implicit_equality_pair_detected(self):
        # x1 <= 0 and -x1 <= 0 force x1 = 0 on every face
        p = HPolyhedron.from_inequalities(
            2, [((1, 0), 0), ((-1, 0), 0), ((0, -1), 0)]
        )
        lat = enumerate_faces(p)
        for f in lat.faces:
            assert 0 in f.key and 1 in f.key
        assert lat.top().dim == 1

    def test_redundant_rows_collapse(self):
        # duplicated inequality: faces keyed by the maximal active set
        p = HPolyhedron.from_inequalities(2, [((-1, 0), 0), ((-2, 0), 0), ((0, -1), 0)])
        lat = enumerate_faces(p)
        face_x0 = [f for f in lat.faces if f.dim == 1 and 0 in f.key]
        assert len(face_x0) == 1 and set(face_x0[0].key) >= {0, 1}

    def test_matches_bruteforce_random(self):
        rng = random.Random(11)
        for _ in range(8):
            p = random_poly(rng, rng.randint(1, 3), rng.randint(1, 5))
            lat = enumerate_faces(p)
            oracle = enumerate_faces_bruteforce(p)
            assert lattice_signature(lat) == lattice_signature(oracle)


class TestMinimalFace:
    def test_interior(self, orthant2):
        lat = enumerate_faces(orthant2)
        assert lat.minimal_face(vec([1, 1])).key == ()

    def test_ray(self, orthant2):
        lat = enumerate_faces(orthant2)
        assert lat.minimal_face(vec([0, 3])).key == (0,)

    def test_vertex(self, square):
        lat = enumerate_faces(square)
        f = lat.minimal_face(vec([0, 0]))
        assert f.dim == 0 and f.ri_point == vec([0, 0])

    def test_outside_raises(self, orthant2):
        lat = enumerate_faces(orthant2)
        with pytest.raises(NotInSetError):
            lat.minimal_face(vec([-1, 0]))


class TestTangentNormal:
    def test_tangent_at_vertex(self, orthant2):
        lat = enumerate_faces(orthant2)
        t = lat.tangent_cone(lat.by_key[frozenset({0, 1})])
        assert t.contains(vec([1, 1])) and not t.contains(vec([-1, 0]))

    def test_tangent_at_ray(self, orthant2):
        lat = enumerate_faces(orthant2)
        t = lat.tangent_cone(lat.by_key[frozenset({0})])  # ray x1 = 0
        assert t.contains(vec([1, -5])) and not t.contains(vec([-1, 0]))

    def test_tangent_square_edge(self, square):
        lat = enumerate_faces(square)
        edge_top = lat.minimal_face(vec([F(1, 2), F(1)]))
        t = lat.tangent_cone(edge_top)
        assert t.contains(vec([7, -1])) and not t.contains(vec([0, 1]))

    def test_normal_whole_set_trivial(self, orthant2):
        lat = enumerate_faces(orthant2)
        n = lat.normal_cone(lat.top())
        assert n.is_trivial()

    def test_normal_at_vertex(self, orthant2):
        lat = enumerate_faces(orthant2)
        n = lat.normal_cone(lat.by_key[frozenset({0, 1})])
        assert n.contains(vec([-1, -1])) and not n.contains(vec([1, 0]))

    def test_normal_halfspace_boundary(self):
        y = (F(2), F(-1))
        half = HPolyhedron.from_inequalities(2, [(y, 3)])
        lat = enumerate_faces(half)
        bd = lat.by_key[frozenset({0})]
        n = lat.normal_cone(bd)
        assert n.rays == (vec([2, -1]),)

    def test_normal_equals_polar_of_tangent(self):
        rng = random.Random(5)
        for _ in range(6):
            p = random_poly(rng, 3, 4)
            lat = enumerate_faces(p)
            for f in lat.faces:
                t = lat.tangent_cone(f)
                n = lat.normal_cone(f)
                pt = polar(cone_convert(t))
                assert n.equals(pt)

    def test_same_active_set_same_cones(self):
        # Prop: faces are keyed canonically, so equal active sets give
        # identical tangent/normal cones by construction; check ri points
        # of one face produce that same face.
        rng = random.Random(7)
        p = random_poly(rng, 3, 5)
        lat = enumerate_faces(p)
        for f in lat.faces:
            again = lat.minimal_face(f.ri_point)
            assert again.key == f.key


class TestPolar:
    def test_orthant(self):
        k = PolyCone.from_rows(2, [(-1, 0), (0, -1)])  # R^2_+
        p = polar(k)
        assert set(p.rays) == {vec([-1, 0]), vec([0, -1])}

    def test_trivial_and_full(self):
        zero = PolyCone.from_generators(2, [])
        full = polar(zero)
        assert full.contains(vec([3, -7]))
        back = polar(cone_convert(full))
        assert back.is_trivial()

    def test_double_polar_random(self):
        rng = random.Random(3)
        for _ in range(12):
            k = random_cone(rng, rng.randint(1, 3), rng.randint(1, 4))
            kk = polar(cone_convert(polar(cone_convert(k))))
            assert kk.equals(k)


class TestConeConvert:
    def test_h_to_v_orthant(self):
        k = cone_convert(PolyCone.from_rows(2, [(-1, 0), (0, -1)]))
        assert set(k.rays) == {vec([1, 0]), vec([0, 1])}

    def test_v_to_h_wedge(self):
        k = PolyCone.from_generators(2, [(1, 1), (1, -1)])
        rows = k.rows
        assert all(dot(r, vec([1, 1])) <= 0 and dot(r, vec([1, -1])) <= 0 for r in rows)
        assert not k.contains(vec([0, 1])) and k.contains(vec([2, 1]))

    def test_round_trip_random_3d(self):
        rng = random.Random(9)
        for _ in range(8):
            k = random_cone(rng, 3, rng.randint(1, 4))
            k = cone_convert(k)
            rebuilt = PolyCone.from_generators(3, k.all_generators())
            assert rebuilt.equals(k)
            for _ in range(10):
                x = rand_vec(rng, 3)
                assert k.contains(x) == rebuilt.contains(x)


class TestConeOps:
    def test_lineality(self):
        assert PolyCone.from_rows(2, [(-1, 0), (0, -1)]).lineality_basis == ()
        half = PolyCone.from_rows(2, [(-1, 0)])
        assert len(half.lineality_basis) == 1
        assert half.lineality_basis[0][0] == 0

    def test_cone_minus(self):
        k = PolyCone.from_rows(2, [(-1, 0), (0, -1)])
        lat = k.lattice()
        xaxis = lat.by_key[frozenset({1})]
        everything = lat.top()
        upper = cone_minus(k, everything, xaxis)
        assert upper.contains(vec([-5, 1])) and not upper.contains(vec([0, -1]))

    def test_cone_minus_requires_containment(self):
        k = PolyCone.from_rows(2, [(-1, 0), (0, -1)])
        lat = k.lattice()
        with pytest.raises(UsageError):
            cone_minus(k, lat.by_key[frozenset({1})], lat.by_key[frozenset({0})])

    def test_intersection_trivial(self):
        a = PolyCone.from_rows(2, [(-1, 0), (0, -1)])
        b = PolyCone.from_rows(2, [(1, 0), (0, 1)])
        assert cone_intersect(a, b).is_trivial()

    def test_face_subcone(self):
        k = PolyCone.from_rows(3, [(-1, 0, 0), (0, -1, 0), (0, 0, -1)])
        lat = k.lattice()
        f = lat.by_key[frozenset({2})]
        sub = face_subcone(k, f)
        assert sub.dim() == 2 and sub.contains(vec([1, 1, 0]))


class TestProjection:
    def test_orthant_example(self, orthant2):
        assert project(orthant2, vec([-1, 2])) == vec([0, 2])

    def test_identity_on_member(self, square):
        z = vec([F(1, 3), F(1, 2)])
        assert project(square, z) == z

    def test_idempotent_and_variational(self):
        rng = random.Random(19)
        for _ in range(4):
            p = random_poly(rng, 3, 4)
            lat = enumerate_faces(p)
            for _ in range(15):
                z = rand_vec(rng, 3, 4)
                x = lat.project(z)
                assert lat.project(x) == x
                f = lat.minimal_face(x)
                assert lat.normal_cone(f).contains(vsub(z, x))

    def test_nonexpansive(self):
        rng = random.Random(23)
        p = random_poly(rng, 2, 4)
        lat = enumerate_faces(p)
        for _ in range(200):
            z = rand_vec(rng, 2, 4)
            w = rand_vec(rng, 2, 4)
            dz = norm_sq(vsub(lat.project(z), lat.project(w)))
            assert dz <= norm_sq(vsub(z, w))


class TestLatticeInvariants:
    def test_partition_of_relative_interiors(self):
        rng = random.Random(31)
        p = random_poly(rng, 3, 5)
        lat = enumerate_faces(p)
        verts = [f.ri_point for f in lat.faces]
        for _ in range(100):
            ws = [F(rng.randint(0, 5)) for _ in verts]
            tot = sum(ws)
            if tot == 0:
                continue
            x = vec([0] * 3)
            for w, v in zip(ws, verts):
                x = vadd(x, vscale(w / tot, v))
            owner = [
                f
                for f in lat.faces
                if set(p.active_set(x)) == set(f.key)
            ]
            assert len(owner) == 1  # exactly one face's ri contains x

    def test_local_tangential_representation(self):
        rng = random.Random(37)
        p = random_poly(rng, 2, 4)
        lat = enumerate_faces(p)
        for f in lat.faces:
            t = lat.tangent_cone(f)
            x = f.ri_point
            for _ in range(20):
                h = rand_vec(rng, 2, 2)
                small = vscale(F(1, 64), h)
                if p.contains(vadd(x, small)):
                    assert t.contains(small)
            for g in t.all_generators():
                assert p.contains(vadd(x, vscale(F(1, 64), g)))

    def test_face_heredity(self):
        rng = random.Random(41)
        p = random_poly(rng, 3, 4)
        lat = enumerate_faces(p)
        keys = {f.key: f.dim for f in lat.faces}
        k = p.k
        for f in lat.faces:
            rows = list(zip(p.rows, p.alphas))
            for i in f.key:
                rows.append((vscale(F(-1), p.rows[i]), -p.alphas[i]))
            sub = HPolyhedron.from_inequalities(p.n, rows)
            for g in enumerate_faces(sub).faces:
                orig = tuple(sorted(i for i in g.key if i < k))
                assert orig in keys and keys[orig] == g.dim

    def test_exposedness(self):
        rng = random.Random(43)
        p = random_poly(rng, 2, 4)
        lat = enumerate_faces(p)
        for f in lat.faces:
            if not f.key:
                continue
            y = vec([0] * p.n)
            target = F(0)
            for i in f.key:
                y = vadd(y, p.rows[i])
                target += p.alphas[i]
            res = lp_max(y, p.constraints(), p.n)
            assert res.status == "optimal" and res.value == target
            assert dot(y, f.ri_point) == target
            for g in lat.faces:
                if not set(g.key) >= set(f.key):
                    assert dot(y, g.ri_point) < target
