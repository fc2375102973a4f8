"""polyreg command line interface.

Subcommands: faces, check, solve, modulus, audit, generate, relation.
Exit codes: 0 = pass, 1 = certified failure / inconsistency, 2 = usage or
parse error.  Output is a human summary by default, deterministic JSON
with --json; all orderings are fixed (lexicographic face keys).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import io as pio
from .avi import AVIInstance, solve_all
from .complementarity import canonical_normal_relation
from .errors import PolyRegError, UsageError
from .generators import FAMILIES, GeneratorConfig, generate_instance
from .linalg import LinAlgError, vec
from .polyhedra import PolyCone, enumerate_faces, enumerate_faces_bruteforce
from .regularity import (
    ModulusQuery,
    check_coherent_orientation,
    check_critical_face,
    check_face_separation,
    equivalence_audit,
    induced_image_relation,
    localize,
    surjection_modulus,
)


def _threads() -> int:
    raw = os.environ.get("POLYREG_THREADS", "1")
    try:
        v = int(raw)
    except ValueError:
        raise UsageError(f"POLYREG_THREADS must be an integer, got {raw!r}")
    return max(1, v)


def _load_instance(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read instance file {path}: {e}")
    return pio.instance_from_json(data)


def _parse_z(text: str, n: int):
    try:
        parts = [Fraction(p.strip()) for p in text.split(",")]
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad --z value {text!r}: {e}")
    if len(parts) != n:
        raise UsageError(f"--z needs {n} components, got {len(parts)}")
    return vec(parts)


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(pio.dumps_canonical(payload))
    else:
        for line in human_lines:
            print(line)


def cmd_faces(args) -> int:
    inst, _ = _load_instance(args.file)
    lat = (
        enumerate_faces_bruteforce(inst.c) if args.oracle else enumerate_faces(inst.c)
    )
    payload = {
        "faces": [
            {
                "active_set": list(f.key),
                "dim": f.dim,
                "ri_point": pio.vec_to_json(f.ri_point),
            }
            for f in lat.faces
        ],
        "covering_pairs": [
            [list(f.key), list(g.key)] for f, g in lat.covering_pairs
        ],
    }
    lines = [f"{len(lat.faces)} faces"]
    for f in lat.faces:
        lines.append(
            f"  active={list(f.key)} dim={f.dim} ri_point={pio.vec_to_json(f.ri_point)}"
        )
    lines.append("covering pairs:")
    for f, g in lat.covering_pairs:
        lines.append(f"  {list(f.key)} < {list(g.key)}")
    _emit(args, payload, lines)
    return 0


def cmd_check(args) -> int:
    inst, rel_raw = _load_instance(args.file)
    if args.base_point:
        inst = AVIInstance(inst.a, inst.c, base_point=_parse_z(args.base_point, inst.n))
    which = args.which
    results = {}
    if which in ("coherent", "all"):
        results["coherent"] = check_coherent_orientation(
            inst.a, inst.c, inst.lattice()
        ).to_json_dict()
    if which in ("separation", "all"):
        if rel_raw is not None:
            rel = pio.relation_from_json(rel_raw, inst.c)
        else:
            rel = induced_image_relation(inst.a, inst.c, inst.lattice())
        if rel is None:
            results["separation"] = {
                "verdict": False,
                "nonsingular": False,
                "violating_pair": None,
                "reason": "A not injective on L(C)",
            }
        else:
            results["separation"] = check_face_separation(rel).to_json_dict()
    if which in ("critical", "all"):
        kinst, _ = localize(inst)
        kcone = PolyCone.from_rows(kinst.n, kinst.c.rows)
        results["critical"] = check_critical_face(inst.a, kcone).to_json_dict()
    verdicts = [v["verdict"] for v in results.values()]
    payload = {"checks": results, "pass": all(verdicts)}
    lines = [
        f"{name}: {'PASS' if v['verdict'] else 'FAIL'}" for name, v in results.items()
    ]
    _emit(args, payload, lines)
    return 0 if all(verdicts) else 1


def cmd_solve(args) -> int:
    inst, _ = _load_instance(args.file)
    z = _parse_z(args.z, inst.n)
    pieces = solve_all(inst, z)
    payload = {
        "z": pio.vec_to_json(z),
        "solutions": [
            {
                "face_active_set": list(p.face_key),
                "witness": pio.vec_to_json(p.witness),
                "piece": pio.poly_to_json(p.piece),
            }
            for p in pieces
        ],
    }
    lines = [f"{len(pieces)} solution piece(s) for z={args.z}"]
    for p in pieces:
        lines.append(f"  face={list(p.face_key)} witness={pio.vec_to_json(p.witness)}")
    _emit(args, payload, lines)
    return 0


def cmd_modulus(args) -> int:
    inst, _ = _load_instance(args.file)
    kinst, _ = localize(inst)
    kcone = PolyCone.from_rows(kinst.n, kinst.c.rows)
    res = surjection_modulus(
        ModulusQuery.canonical(inst.a, kcone),
        samples=args.samples,
        seed=args.seed,
    )
    payload = res.to_json_dict()
    lines = [
        f"positive: {res.positive}",
        f"bounds: [{res.lower}, {res.upper}]",
        f"argmin pair: {res.pair and [list(res.pair[0]), list(res.pair[1])]}",
    ]
    _emit(args, payload, lines)
    return 0


def _audit_one(inst: AVIInstance, samples: int, seed: int) -> dict:
    rep = equivalence_audit(inst.a, inst.c, samples=samples, seed=seed)
    return rep.to_json_dict()


def cmd_audit(args) -> int:
    samples = args.samples
    if args.file:
        inst, _ = _load_instance(args.file)
        report = _audit_one(inst, samples, args.seed)
        payload = {"reports": [report], "consistent": report["consistent"]}
    else:
        if not args.family:
            raise UsageError("audit needs --file or --family")
        cfgs = [
            GeneratorConfig(
                seed=args.seed + i,
                family=args.family,
                n=args.n,
                k=args.k,
                entry_bound=args.entry_bound,
            )
            for i in range(args.count)
        ]
        insts = [generate_instance(c) for c in cfgs]
        workers = _threads()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(
                    pool.map(lambda ic: _audit_one(ic[0], samples, ic[1].seed), zip(insts, cfgs))
                )
        else:
            reports = [_audit_one(i, samples, c.seed) for i, c in zip(insts, cfgs)]
        payload = {
            "reports": reports,
            "consistent": all(r["consistent"] for r in reports),
        }
    lines = []
    for i, r in enumerate(payload["reports"]):
        lines.append(
            f"instance {i}: regular={r['regular']} consistent={r['consistent']}"
            + (
                f" witness={r['witness_kind']}"
                if r["witness_kind"]
                else ""
            )
        )
    lines.append(f"overall: {'CONSISTENT' if payload['consistent'] else 'INCONSISTENT'}")
    _emit(args, payload, lines)
    return 0 if payload["consistent"] else 1


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        seed=args.seed,
        family=args.family,
        n=args.n,
        k=args.k,
        entry_bound=args.entry_bound,
    )
    inst = generate_instance(cfg)
    text = pio.dumps_canonical(pio.instance_to_json(inst))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_relation(args) -> int:
    inst, _ = _load_instance(args.file)
    rel = canonical_normal_relation(inst.c, inst.lattice())
    payload = pio.relation_to_json(rel)
    lines = ["canonical complementarity relation F -> N(C,F):"]
    for entry in payload["faces"]:
        lines.append(
            f"  face={entry['active_set']} generators={entry['lambda'].get('generators')}"
        )
    _emit(args, payload, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polyreg",
        description="Exact regularity analysis of affine variational inequalities over polyhedra",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("faces", help="list the face lattice")
    p.add_argument("--file", required=True)
    p.add_argument("--oracle", action="store_true", help="use the brute-force enumerator")
    add_common(p)
    p.set_defaults(func=cmd_faces)

    p = sub.add_parser("check", help="run regularity certificates")
    p.add_argument("--file", required=True)
    p.add_argument(
        "--which",
        choices=["coherent", "separation", "critical", "all"],
        default="all",
    )
    p.add_argument("--base-point", default=None, help="rationals 'p/q,p/q,...'")
    add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="all solutions of z in Ax + N(C,x)")
    p.add_argument("--file", required=True)
    p.add_argument("--z", required=True, help="rationals 'p/q,p/q,...'")
    add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("modulus", help="surjection modulus bounds")
    p.add_argument("--file", required=True)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_modulus)

    p = sub.add_parser("audit", help="cross-check certificates against the solver")
    p.add_argument("--file", default=None)
    p.add_argument("--family", choices=list(FAMILIES), default=None)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--entry-bound", type=int, default=4)
    p.add_argument("--count", type=int, default=1, help="instances when generating")
    p.add_argument("--samples", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("--family", choices=list(FAMILIES), required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--entry-bound", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("relation", help="emit the canonical complementarity relation")
    p.add_argument("--file", required=True)
    add_common(p)
    p.set_defaults(func=cmd_relation)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except (UsageError, LinAlgError, PolyRegError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
