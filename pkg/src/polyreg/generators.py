"""Seeded random instance generation.

Same (seed, config) always yields the same instance, byte for byte once
serialized.  Families span the regimes the certificates distinguish:
always-regular (p_matrix, identity_perturbation), mixed (orthant, box,
random_cone, random_polyhedron with random A), and degenerate C
(random_polyhedron occasionally folds in an implicit equality pair).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .avi import AVIInstance
from .errors import UsageError
from .linalg import Mat, Vec, dot, identity, mat, vec
from .polyhedra import HPolyhedron
from .regularity import check_coherent_orientation

FAMILIES = (
    "orthant",
    "box",
    "random_cone",
    "random_polyhedron",
    "p_matrix",
    "identity_perturbation",
)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    family: str
    n: int = 2
    k: int = 4
    entry_bound: int = 4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}; pick from {FAMILIES}")
        if not (1 <= self.n <= 8):
            raise UsageError("n must be between 1 and 8")
        if not (1 <= self.k <= 16):
            raise UsageError("k must be between 1 and 16")
        if self.entry_bound < 1:
            raise UsageError("entry_bound must be >= 1")


def _rand_rational(rng: random.Random, bound: int) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def _rand_matrix(rng: random.Random, n: int, bound: int) -> Mat:
    return tuple(tuple(_rand_rational(rng, bound) for _ in range(n)) for _ in range(n))


def _rand_nonzero_int_vec(rng: random.Random, n: int, bound: int) -> Vec:
    while True:
        v = tuple(Fraction(rng.randint(-bound, bound)) for _ in range(n))
        if any(x != 0 for x in v):
            return v


def _orthant(n: int) -> HPolyhedron:
    rows = []
    for i in range(n):
        rows.append((tuple(Fraction(-1 if j == i else 0) for j in range(n)), Fraction(0)))
    return HPolyhedron.from_inequalities(n, rows)


def _box(n: int) -> HPolyhedron:
    rows = []
    for i in range(n):
        e = tuple(Fraction(1 if j == i else 0) for j in range(n))
        rows.append((tuple(-x for x in e), Fraction(0)))
        rows.append((e, Fraction(1)))
    return HPolyhedron.from_inequalities(n, rows)


def _random_cone(rng: random.Random, n: int, k: int, bound: int) -> HPolyhedron:
    rows = [(_rand_nonzero_int_vec(rng, n, bound), Fraction(0)) for _ in range(k)]
    return HPolyhedron.from_inequalities(n, rows)


def _random_polyhedron(rng: random.Random, n: int, k: int, bound: int) -> HPolyhedron:
    x0 = tuple(Fraction(rng.randint(-bound, bound), 2) for _ in range(n))
    rows = []
    for _ in range(k):
        y = _rand_nonzero_int_vec(rng, n, bound)
        slack = Fraction(rng.randint(1, bound))
        rows.append((y, dot(y, x0) + slack))
    if rng.random() < 0.25:
        y = _rand_nonzero_int_vec(rng, n, bound)
        a = dot(y, x0)
        rows.append((y, a))
        rows.append((tuple(-t for t in y), -a))
    return HPolyhedron.from_inequalities(n, rows)


def _p_matrix(rng: random.Random, n: int, bound: int) -> Mat:
    """Strictly diagonally dominant with positive diagonal: a P-matrix."""
    rows = []
    for i in range(n):
        off = [Fraction(rng.randint(-bound, bound)) for _ in range(n)]
        diag = sum(abs(x) for j, x in enumerate(off) if j != i) + 1 + rng.randint(0, bound)
        off[i] = Fraction(diag)
        rows.append(tuple(off))
    return tuple(rows)


def generate_instance(cfg: GeneratorConfig) -> AVIInstance:
    rng = random.Random(cfg.seed)
    n, k, bound = cfg.n, cfg.k, cfg.entry_bound
    fam = cfg.family
    if fam == "orthant":
        c = _orthant(n)
        a = _rand_matrix(rng, n, bound)
    elif fam == "box":
        c = _box(n)
        a = _rand_matrix(rng, n, bound)
    elif fam == "random_cone":
        c = _random_cone(rng, n, k, bound)
        a = _rand_matrix(rng, n, bound)
    elif fam == "random_polyhedron":
        c = _random_polyhedron(rng, n, k, bound)
        a = _rand_matrix(rng, n, bound)
    elif fam == "p_matrix":
        c = _orthant(n)
        a = _p_matrix(rng, n, bound)
    elif fam == "identity_perturbation":
        c = _random_cone(rng, n, k, bound) if rng.random() < 0.5 else _random_polyhedron(rng, n, k, bound)
        b = _rand_matrix(rng, n, bound)
        a = identity(n)
        for s in range(2, 14):
            eps = Fraction(1, 2**s)
            cand = tuple(
                tuple(a[i][j] + eps * b[i][j] for j in range(n)) for i in range(n)
            )
            if check_coherent_orientation(cand, c).verdict:
                a = cand
                break
    else:  # pragma: no cover
        raise UsageError(f"unknown family {fam!r}")
    assert not c.is_empty(), "generated polyhedron must be nonempty"
    return AVIInstance(a, c)
