import random
from fractions import Fraction

import pytest

from polyreg.linalg import Vec, vec
from polyreg.polyhedra import HPolyhedron, PolyCone


def rand_rat(rng: random.Random, bound: int = 3) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def rand_vec(rng: random.Random, n: int, bound: int = 3) -> Vec:
    return tuple(rand_rat(rng, bound) for _ in range(n))


def rand_nonzero_int_vec(rng: random.Random, n: int, bound: int = 3) -> Vec:
    while True:
        v = tuple(Fraction(rng.randint(-bound, bound)) for _ in range(n))
        if any(x != 0 for x in v):
            return v


def rand_matrix(rng: random.Random, n: int, bound: int = 3):
    return tuple(tuple(rand_rat(rng, bound) for _ in range(n)) for _ in range(n))


def random_cone(rng: random.Random, n: int, k: int, bound: int = 3) -> PolyCone:
    rows = [rand_nonzero_int_vec(rng, n, bound) for _ in range(k)]
    return PolyCone.from_rows(n, rows)


def random_cone_poly(rng: random.Random, n: int, k: int, bound: int = 3) -> HPolyhedron:
    rows = [(rand_nonzero_int_vec(rng, n, bound), Fraction(0)) for _ in range(k)]
    return HPolyhedron.from_inequalities(n, rows)


def random_poly(rng: random.Random, n: int, k: int, bound: int = 3) -> HPolyhedron:
    """Nonempty random polyhedron built around a known point."""
    from polyreg.linalg import dot

    x0 = tuple(Fraction(rng.randint(-bound, bound), 2) for _ in range(n))
    rows = []
    for _ in range(k):
        y = rand_nonzero_int_vec(rng, n, bound)
        rows.append((y, dot(y, x0) + Fraction(rng.randint(0, bound))))
    return HPolyhedron.from_inequalities(n, rows)


ORTHANT2 = HPolyhedron.from_inequalities(2, [((-1, 0), 0), ((0, -1), 0)])
SQUARE = HPolyhedron.from_inequalities(
    2, [((-1, 0), 0), ((1, 0), 1), ((0, -1), 0), ((0, 1), 1)]
)


@pytest.fixture
def orthant2():
    return ORTHANT2


@pytest.fixture
def square():
    return SQUARE
