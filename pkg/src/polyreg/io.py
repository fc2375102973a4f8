"""JSON schemas: rationals as "p/q" strings or plain integers.

Polyhedron: {"n": int, "inequalities": [{"y": [rat, ...], "alpha": rat}]}
Cone:       same with alpha omitted (implied 0), optional "generators"
Instance:   {"n": int, "A": [[rat]], "C": <polyhedron>,
             optional "base_point": [rat], optional "relation": <relation>}
Relation:   {"faces": [{"active_set": [int], "lambda": <cone>}]}
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional

from .avi import AVIInstance
from .complementarity import ComplementarityRelation
from .errors import UsageError
from .linalg import Mat, Vec, frac
from .polyhedra import (
    FaceLattice,
    HPolyhedron,
    PolyCone,
    enumerate_faces,
)


def rat_to_json(x: Fraction):
    if x.denominator == 1:
        return int(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rat_from_json(v) -> Fraction:
    if isinstance(v, bool):
        raise UsageError(f"not a rational: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise UsageError(f"bad rational {v!r}: {e}")
    raise UsageError(f"not a rational: {v!r}")


def vec_to_json(v: Vec) -> list:
    return [rat_to_json(x) for x in v]


def vec_from_json(v) -> Vec:
    if not isinstance(v, list):
        raise UsageError("vector must be a JSON array")
    return tuple(rat_from_json(x) for x in v)


def mat_to_json(m: Mat) -> list:
    return [vec_to_json(r) for r in m]


def mat_from_json(m) -> Mat:
    if not isinstance(m, list) or not all(isinstance(r, list) for r in m):
        raise UsageError("matrix must be a JSON array of arrays")
    rows = tuple(vec_from_json(r) for r in m)
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise UsageError("ragged matrix")
    return rows


def poly_to_json(p: HPolyhedron) -> dict:
    return {
        "n": p.n,
        "inequalities": [
            {"y": vec_to_json(y), "alpha": rat_to_json(a)}
            for y, a in zip(p.rows, p.alphas)
        ],
    }


def poly_from_json(d) -> HPolyhedron:
    if not isinstance(d, dict) or "n" not in d or "inequalities" not in d:
        raise UsageError("polyhedron needs 'n' and 'inequalities'")
    n = d["n"]
    if not isinstance(n, int) or n < 0:
        raise UsageError("'n' must be a nonnegative integer")
    ineqs = []
    for item in d["inequalities"]:
        y = vec_from_json(item["y"])
        a = rat_from_json(item.get("alpha", 0))
        ineqs.append((y, a))
    return HPolyhedron.from_inequalities(n, ineqs)


def cone_to_json(c: PolyCone, include_generators: bool = True) -> dict:
    out = {
        "n": c.n,
        "inequalities": [{"y": vec_to_json(y)} for y in c.rows],
    }
    if include_generators:
        out["generators"] = [vec_to_json(g) for g in c.all_generators()]
    return out


def cone_from_json(d) -> PolyCone:
    if not isinstance(d, dict) or "n" not in d:
        raise UsageError("cone needs 'n'")
    n = d["n"]
    rows = [vec_from_json(item["y"]) for item in d.get("inequalities", [])]
    gens = d.get("generators")
    if gens is not None:
        gv = [vec_from_json(g) for g in gens]
        if rows:
            return PolyCone.from_generators(n, gv, h_rows=rows)
        return PolyCone.from_generators(n, gv)
    if not rows and gens is None:
        raise UsageError("cone needs 'inequalities' or 'generators'")
    return PolyCone.from_rows(n, rows)


def instance_to_json(inst: AVIInstance) -> dict:
    out = {"n": inst.n, "A": mat_to_json(inst.a), "C": poly_to_json(inst.c)}
    if inst.base_point is not None:
        out["base_point"] = vec_to_json(inst.base_point)
    return out


def instance_from_json(d) -> tuple[AVIInstance, Optional[dict]]:
    """Parse an instance file; returns (instance, raw relation override)."""
    if not isinstance(d, dict) or "A" not in d or "C" not in d:
        raise UsageError("instance needs 'A' and 'C'")
    c = poly_from_json(d["C"])
    a = mat_from_json(d["A"])
    if "n" in d and d["n"] != c.n:
        raise UsageError("'n' disagrees with the polyhedron dimension")
    base = vec_from_json(d["base_point"]) if "base_point" in d else None
    inst = AVIInstance(a, c, base_point=base)
    return inst, d.get("relation")


def relation_to_json(rel: ComplementarityRelation) -> dict:
    return {
        "faces": [
            {
                "active_set": list(f.key),
                "lambda": cone_to_json(rel.assignment[f.key]),
            }
            for f in rel.lattice.faces
        ]
    }


def relation_from_json(d, base: HPolyhedron) -> ComplementarityRelation:
    if not isinstance(d, dict) or "faces" not in d:
        raise UsageError("relation needs 'faces'")
    lattice = enumerate_faces(base)
    assignment = {}
    for item in d["faces"]:
        key = tuple(sorted(item["active_set"]))
        if frozenset(key) not in lattice.by_key:
            raise UsageError(f"active set {list(key)} is not a face of C")
        assignment[key] = cone_from_json(item["lambda"])
    missing = [f.key for f in lattice.faces if f.key not in assignment]
    if missing:
        raise UsageError(f"relation misses faces: {[list(k) for k in missing]}")
    return ComplementarityRelation(base, lattice, assignment)


def dumps_canonical(obj) -> str:
    """Deterministic JSON used for all machine output."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
