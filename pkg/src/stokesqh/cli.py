"""Command-line interface.  All input and output is JSON; complex numbers are [re, im] pairs.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .irregular import IrregularType, centralizer, two_level_type, degree_sum, levi_chain, singular_directions, stokes_space_dim
from .lie import BlockGrading


class InputError(ValueError):
    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _complex(x, field: str) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InputError("expected a number or an [re, im] pair", field)


def _matrix(x, field: str) -> np.ndarray:
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise InputError("expected a matrix as a list of rows", field)
    rows = [[_complex(v, f"{field}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)]
    if len({len(r) for r in rows}) != 1:
        raise InputError("matrix rows have different lengths", field)
    return np.array(rows, dtype=complex)


def _mat_json(M) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M)]


def _clean(obj):
    """Convert numpy scalars and complex numbers for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _irregular(data, field: str) -> IrregularType:
    if not isinstance(data, dict) or "n" not in data:
        raise InputError("irregular type needs fields 'n' and 'terms'", field)
    try:
        return IrregularType.from_json(data)
    except (TypeError, ValueError, KeyError) as e:
        raise InputError(str(e), field) from None


def _load(path: str | None) -> dict:
    if path is None:
        raise InputError("this command needs --input", "--input")
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read input: {e}", "--input") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}", "--input") from None
    if not isinstance(data, dict):
        raise InputError("top-level JSON value must be an object", "--input")
    return data


def _curve(data: dict):
    from .wild import IrregularCurve

    if "points" not in data or not isinstance(data["points"], list) or not data["points"]:
        raise InputError("curve needs a non-empty 'points' list", "points")
    genus = data.get("genus", 0)
    if not isinstance(genus, int) or genus < 0:
        raise InputError("genus must be a non-negative integer", "genus")
    pts = tuple(_irregular(q, f"points[{i}]") for i, q in enumerate(data["points"]))
    try:
        return IrregularCurve(genus, pts, tuple(data["cuts"]) if data.get("cuts") is not None else None)
    except ValueError as e:
        raise InputError(str(e), "points") from None


def _classes(data: dict, curve, required: bool):
    from .wild import ConjugacyClassSpec

    raw = data.get("classes")
    if raw is None:
        if required:
            raise InputError("this command needs 'classes'", "classes")
        return None
    if not isinstance(raw, list) or len(raw) != curve.m:
        raise InputError(f"'classes' must list one entry per marked point ({curve.m})", "classes")
    out = []
    for i, c in enumerate(raw):
        if c is None:
            if required:
                raise InputError("every marked point needs a class", f"classes[{i}]")
            out.append(None)
            continue
        ev = c.get("eigenvalues") if isinstance(c, dict) else None
        if not isinstance(ev, list) or len(ev) != curve.n:
            raise InputError(f"need {curve.n} eigenvalues", f"classes[{i}].eigenvalues")
        vals = tuple(_complex(v, f"classes[{i}].eigenvalues[{j}]") for j, v in enumerate(ev))
        try:
            spec = ConjugacyClassSpec(vals, c.get("unipotent", "trivial"))
            spec.representative(centralizer(curve.points[i]))
        except ValueError as e:
            raise InputError(str(e), f"classes[{i}]") from None
        out.append(spec)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_stokes(args) -> tuple[dict, int]:
    data = _load(args.input)
    Q = _irregular(data.get("Q", data), "Q")
    st = singular_directions(Q, data.get("cut"))
    chain = levi_chain(Q)
    rep = st.report()
    rep.update({
        "n": Q.n,
        "pole_orders": list(Q.pole_orders),
        "centralizer": [list(p) for p in centralizer(Q)],
        "levi_chain": [[list(p) for p in parts] for parts in chain.chain],
        "degree_sum": degree_sum(Q),
        "stokes_group_dim": st.dim(),
        "space_dim": stokes_space_dim(Q),
    })
    return rep, 0


_SPACE_RE = {
    "double": re.compile(r"^double(\d+)$"),
    "fused-double": re.compile(r"^fused-double(\d+)$"),
    "class": re.compile(r"^class(\d+)$"),
    "fission": re.compile(r"^fission([\d,]+)r(\d+)$"),
    "vdb": re.compile(r"^vdb(\d+),(\d+)$"),
}


def build_named_space(name: str):
    """Space menu: double<n>, fused-double<n>, class<n>, fission<b1,b2,..>r<r>, vdb<v>,<w>, two-level."""
    from .qh import ConjugacyClass, Double, Fission, InternallyFusedDouble, StokesSpace, VanDenBergh

    if name == "two-level":
        return StokesSpace(two_level_type())
    for kind, rx in _SPACE_RE.items():
        m = rx.match(name)
        if not m:
            continue
        if kind == "double":
            return Double(int(m.group(1)))
        if kind == "fused-double":
            return InternallyFusedDouble(int(m.group(1)))
        if kind == "class":
            n = int(m.group(1))
            return ConjugacyClass(np.exp(1j * np.arange(1, n + 1)))
        if kind == "fission":
            blocks = tuple(int(b) for b in m.group(1).split(",") if b)
            return Fission(BlockGrading(blocks), int(m.group(2)))
        return VanDenBergh(int(m.group(1)), int(m.group(2)))
    raise InputError(f"unknown space '{name}'", "--space")


def cmd_verify(args) -> tuple[dict, int]:
    from .qh import Scaled, Tolerances, verify_space

    if args.input:
        data = _load(args.input)
        if "space" not in data:
            raise InputError("missing 'space'", "space")
        name = data["space"]
        scale = float(data.get("scale", args.scale))
    else:
        if not args.space:
            raise InputError("give --space or --input", "--space")
        name, scale = args.space, args.scale
    space = build_named_space(name)
    if scale != 1.0:
        space = Scaled(space, scale)
    rng = np.random.default_rng(args.seed)
    points = [space.random_point(rng) for _ in range(args.samples)]
    tol = Tolerances(qh1=args.tol if args.tol is not None else 1e-5)
    rep = verify_space(space, points, tol, seed=args.seed)
    rep.pop("rows")
    return rep, 0 if rep["passed"] else 1


def _sampled(data, curve, classes, seed):
    from .wild import StokesRepresentation, sample_point

    if "representation" in data:
        rep = StokesRepresentation.from_json({"curve": curve.to_json(), **data["representation"]})
        return rep
    return sample_point(curve, classes, seed=seed)


def cmd_stability(args) -> tuple[dict, int]:
    from .wild import SampleError, check_relation, galois_crosscheck, invariant_subspace_witness, stability_report

    data = _load(args.input)
    curve = _curve(data)
    classes = _classes(data, curve, required=False)
    try:
        rep = _sampled(data, curve, classes, args.seed)
    except SampleError as e:
        return {"sampled": False, "reason": e.reason, "message": str(e)}, 1
    st = stability_report(rep)
    wit = invariant_subspace_witness(rep, args.seed)
    out = {
        "sampled": True,
        "relation": check_relation(rep),
        "stable": st["stable"],
        "algebra_dim": st["algebra_dim"],
        "galois_agrees": galois_crosscheck(rep),
        "invariant_subspace_dim": None if wit is None else int(wit.shape[1]),
        "exceptional_curve": curve.is_exceptional(),
    }
    return out, 0


def cmd_genericity(args) -> tuple[dict, int]:
    from .wild import is_generic

    data = _load(args.input)
    curve = _curve(data)
    classes = _classes(data, curve, required=True)
    return is_generic(curve, classes, tol=args.tol or 1e-9).to_json(), 0


def cmd_dims(args) -> tuple[dict, int]:
    from .wild import SampleError, expected_dim, hom_dim, is_stable, numeric_dim_check

    data = _load(args.input)
    curve = _curve(data)
    classes = _classes(data, curve, required=True)
    out = {"hom_dim": hom_dim(curve), "expected_dim": expected_dim(curve, classes)}
    try:
        rep = _sampled(data, curve, classes, args.seed)
    except SampleError as e:
        out["numeric"] = {"skipped": True, "reason": e.reason}
        return out, 0
    if not is_stable(rep):
        out["numeric"] = {"skipped": True, "reason": "sampled point is not stable"}
        return out, 0
    chk = numeric_dim_check(curve, classes, rep)
    out["numeric"] = chk.to_json()
    return out, 0 if chk.passed or chk.skipped else 1


def _path(data: dict, curve):
    from .braiding import DeformationPath

    p = data.get("path")
    if not isinstance(p, dict):
        raise InputError("missing 'path' object", "path")
    point = p.get("point", 0)
    if not isinstance(point, int) or not 0 <= point < curve.m:
        raise InputError("path point index out of range", "path.point")
    cut = curve.cut(point)
    if p.get("kind") == "wind":
        pair = p.get("pair")
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(i, int) for i in pair)):
            raise InputError("wind path needs 'pair': [i, j]", "path.pair")
        if max(pair) >= curve.n or min(pair) < 0 or pair[0] == pair[1]:
            raise InputError("wind pair indices out of range", "path.pair")
        turns = p.get("turns", 1)
        if not isinstance(turns, (int, float)):
            raise InputError("turns must be a number", "path.turns")
        return DeformationPath.wind(point, curve.points[point], tuple(pair), float(turns),
                                    steps=int(p.get("steps", 64)), cut=cut)
    samples = p.get("samples")
    if not isinstance(samples, list) or len(samples) < 1:
        raise InputError("path needs 'samples' or kind 'wind'", "path.samples")
    Qs = [_irregular(q, f"path.samples[{i}]") for i, q in enumerate(samples)]
    return DeformationPath.from_samples(point, Qs, p.get("times"), cut=cut)


def cmd_braid(args) -> tuple[dict, int]:
    from .braiding import InadmissiblePathError, RefinePathError, validate_path, verify_transport
    from .wild import SampleError

    data = _load(args.input)
    curve = _curve(data)
    classes = _classes(data, curve, required=False)
    path = _path(data, curve)
    ok, why = validate_path(path)
    if not ok:
        return {"valid": False, "violation": why}, 1
    try:
        rep = _sampled(data, curve, classes, args.seed)
    except SampleError as e:
        return {"sampled": False, "reason": e.reason}, 1
    try:
        res = verify_transport(rep, path, tol=args.tol or 1e-9)
    except (RefinePathError, InadmissiblePathError) as e:
        return {"valid": True, "refused": str(e), "time": e.time}, 1
    out = {"valid": True, "events": [e.to_json() for e in res.events], "report": res.report}
    if data.get("emit_representation"):
        out["representation"] = res.representation.to_json()
    return out, 0 if res.report["passed"] else 1


def cmd_vdb(args) -> tuple[dict, int]:
    from .morphisms import edge_reversal, vdb_lift, vdb_morphism, vdb_relations, verify_pullback

    data = _load(args.input) if args.input else {}
    if "a" in data:
        a = _matrix(data["a"], "a")
        b = _matrix(data.get("b"), "b") if "b" in data else None
        if b is None or b.shape != a.T.shape:
            raise InputError("b must have the transposed shape of a", "b")
        dv, dw = a.shape
    else:
        dv, dw = int(data.get("dim_v", 2)), int(data.get("dim_w", 1))
        rng = np.random.default_rng(args.seed)
        a, b = vdb_morphism(dv, dw).source.random_point(rng)
    if abs(np.linalg.det(np.eye(dv) + a @ b)) < 1e-12:
        raise InputError("det(1 + ab) vanishes", "a")
    pt = vdb_lift(a, b)
    rel = vdb_relations(pt, dv)
    b2, c2 = edge_reversal(a, b)
    target = np.linalg.solve(np.eye(dv) + a @ b, a)
    M = vdb_morphism(dv, dw)
    rng = np.random.default_rng(args.seed)
    pb = verify_pullback(M, [[a, b]] + [M.source.random_point(rng) for _ in range(max(args.samples - 1, 0))],
                         args.tol or 1e-9)
    edge = max(float(np.max(np.abs(b2 - b))), float(np.max(np.abs(c2 + target))))
    out = {
        "slice_point": {"C": _mat_json(pt[0]), "h": _mat_json(pt[1]), "S": [_mat_json(s) for s in pt[2:]]},
        "relations": rel,
        "edge_reversal": {"b": _mat_json(b2), "c": _mat_json(c2), "residual": edge},
        "pullback": pb,
    }
    passed = max(rel.values()) <= 1e-12 and pb["passed"] and edge <= 1e-12
    return out, 0 if passed else 1


def emit_plot_data(source) -> str:
    """CSV rows: a singular-direction diagram for a StokesStructure, or angles along a path."""
    from .braiding import DeformationPath, direction_table

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(source, DeformationPath):
        w.writerow(["time", "instance", "angle"])
        for t, label, phi in direction_table(source):
            w.writerow([repr(t), label, repr(phi)])
    else:
        w.writerow(["index", "angle", "roots"])
        for i, d in enumerate(source.directions):
            w.writerow([i, repr(d.angle), " ".join(f"{a}{b}" for a, b in sorted(d.roots))])
    return buf.getvalue()


def cmd_plot_data(args) -> tuple[str, int]:
    data = _load(args.input)
    if "path" in data:
        curve = _curve(data)
        return emit_plot_data(_path(data, curve)), 0
    Q = _irregular(data.get("Q", data), "Q")
    return emit_plot_data(singular_directions(Q, data.get("cut"))), 0


COMMANDS = {
    "stokes": cmd_stokes,
    "verify": cmd_verify,
    "stability": cmd_stability,
    "genericity": cmd_genericity,
    "dims": cmd_dims,
    "braid": cmd_braid,
    "vdb": cmd_vdb,
    "plot-data": cmd_plot_data,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stokesqh", description="Stokes data and quasi-Hamiltonian spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", help="JSON input file ('-' for stdin)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--samples", type=int, default=5)
        if name == "verify":
            sp.add_argument("--space", help="double<n> | fused-double<n> | class<n> | fission<b,..>r<r> | "
                                            "vdb<v>,<w> | two-level")
            sp.add_argument("--scale", type=float, default=1.0, help="rescale the two-form (negative control)")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        result, code = COMMANDS[args.command](args)
    except InputError as e:
        sys.stderr.write(json.dumps({"error": str(e), "field": e.field}) + "\n")
        return 2
    text = result if isinstance(result, str) else json.dumps(_clean(result), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
