"""Command line entry point: ``python -m quintessence <command>``.

Commands print UTF-8 JSON (or text tables) terminated by a newline.  Exit
codes: 0 success, 1 error or failed check, 2 infeasible puzzle.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import quat as Q
from .cell120 import build_complex, cell_geometry, pole_symmetries
from .dodeca import generate_group, real_part_census, rotation_census, verify_dodeca_trig
from .meshgen import (
    DesignParams,
    DegenerateDesign,
    check_mesh,
    export_obj,
    export_skeleton_obj,
    export_stl,
    rib_mesh,
    skeleton_polylines,
)
from .puzzle import (
    Board,
    Infeasible,
    catalog,
    check_rib_limits,
    count_solutions,
    load_spec,
    solve,
    validate_assembly,
)
from .strata import (
    LAYER_SIZES,
    RIB_SIZES,
    TABLE_COLUMNS,
    Layer,
    RibType,
    hopf_check,
    layer_histogram,
    rib_cells,
    ring_by_name,
    ring_layer_table,
    rings,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
CONFIG_ENV = "QUINT_CONFIG"

# the layer and ring table rows as printed in the source tables
RING_TABLE = np.array(
    [
        [1, 1, 0, 0, 0, 0],
        [12, 2, 0, 10, 2, 0],
        [20, 0, 0, 20, 2, 2],
        [12, 2, 0, 10, 0, 2],
        [30, 0, 10, 20, 2, 2],
        [12, 2, 0, 10, 0, 2],
        [20, 0, 0, 20, 2, 2],
        [12, 2, 0, 10, 2, 0],
        [1, 1, 0, 0, 0, 0],
    ]
)


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    eps_alg: float = Q.EPS_ALG
    eps_match: float = Q.EPS_MATCH
    design: DesignParams = field(default_factory=DesignParams)
    output_dir: Path = Path(".")
    pretty: bool = True


_DESIGN_KEYS = {
    "frame_width": float,
    "membrane_thickness": float,
    "base_thickness": float,
    "tessellation_level": int,
    "scale_mm": float,
    "vent": lambda s: _parse_bool(s),
}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_config(text: str) -> Config:
    """Read ``key = value`` lines; ``#`` starts a comment.

    Keys: ``eps_alg``, ``eps_match``, ``output_dir``, ``pretty``, the design
    parameters and ``grade.<Layer>`` (e.g. ``grade.Antarctic = 1.2``).
    """
    cfg = Config()
    design: dict = {}
    grade = dict(cfg.design.thickness_grade)
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key in ("eps_alg", "eps_match"):
                x = float(val)
                if not x > 0:
                    raise ConfigError(f"line {n}: {key} must be positive")
                setattr(cfg, key, x)
            elif key == "output_dir":
                cfg.output_dir = Path(val)
            elif key == "pretty":
                cfg.pretty = _parse_bool(val)
            elif key in _DESIGN_KEYS:
                design[key] = _DESIGN_KEYS[key](val)
            elif key.startswith("grade."):
                grade[Layer[key.split(".", 1)[1]]] = float(val)
            else:
                raise ConfigError(f"line {n}: unknown key {key!r}")
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {n}: bad value for {key!r}: {exc}") from exc
    try:
        cfg.design = DesignParams(thickness_grade=grade, **design).validate()
    except DegenerateDesign as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(env=None) -> Config:
    env = os.environ if env is None else env
    path = env.get(CONFIG_ENV)
    if not path:
        return Config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _emit(obj, cfg: Config, out=None) -> None:
    text = json.dumps(obj, indent=2 if cfg.pretty else None, ensure_ascii=False)
    _write(text, out)


def _write(text: str, out=None) -> None:
    out = out or sys.stdout
    if not text.endswith("\n"):
        text += "\n"
    buf = getattr(out, "buffer", None)
    if buf is not None:
        buf.write(text.encode("utf-8"))
        buf.flush()
    else:
        out.write(text)


def _board(cfg: Config) -> Board:
    grp = generate_group(eps_match=cfg.eps_match)
    return Board(build_complex(grp, eps=cfg.eps_alg))


def verify_report(cfg: Config | None = None) -> dict:
    """Run the invariant checks; every entry has a ``passed`` flag."""
    cfg = cfg or Config()
    checks: dict[str, dict] = {}

    def add(name, passed, **values):
        checks[name] = {"passed": bool(passed), **values}

    t0 = time.perf_counter()
    grp = generate_group(eps_match=cfg.eps_match)
    t_group = time.perf_counter() - t0
    E = grp.elements
    add("group_order", len(grp) == 120 and t_group < 1.0, measured=len(grp))
    closed = all(
        np.max(np.abs(Q.mul(E[a], E) - E[grp.mul_table[a]])) < cfg.eps_match for a in range(len(grp))
    )
    conj_closed = np.max(np.abs(Q.conj(E) - E[grp.conj_table])) < cfg.eps_match
    add("group_closure", closed and conj_closed)
    census = real_part_census(grp, cfg.eps_alg)
    add("layer_census", census == list(LAYER_SIZES), measured=census)
    rot = rotation_census(grp)
    add("rotation_census", list(rot.values()) == [1, 12, 20, 12, 15], measured=rot)

    cx = build_complex(grp, eps=cfg.eps_alg)
    add("complex_counts", cx.counts == (120, 720, 1200, 600), measured=list(cx.counts))
    add("euler_sum", cx.euler_sum == 0, measured=cx.euler_sum)

    q, qp = E[grp.named["q"]], E[grp.named["q_prime"]]
    re = float(Q.mul(Q.inverse(q), qp)[0])
    add("neighbour_real_part", abs(re - math.cos(math.pi / 5)) < cfg.eps_alg, measured=re)
    geom = cell_geometry(cx, 0)
    vre = float(np.max(np.abs(geom.vertices[:, 0] - 0.5 * math.sqrt(1 + 3 * math.cos(math.pi / 5)))))
    add("flag_vertex_real_part", vre < cfg.eps_alg, max_error=vre)
    dih = geom.dihedral_angles(cx)
    derr = float(np.max(np.abs(np.array(dih) - 2 * math.pi / 3)))
    add("dihedral", derr < cfg.eps_alg, measured=float(np.mean(dih)), pairs=len(dih), max_error=derr)

    ring_list = rings(cx)
    table = ring_layer_table(cx, ring_list)
    full = np.column_stack([LAYER_SIZES, table])
    add("ring_table", np.array_equal(full, RING_TABLE))
    hopf = hopf_check(cx, ring_list)
    add("hopf_fibres", all(h["passed"] for h in hopf.values()),
        max_sigma_ratio=max(h["sigma_ratio"] for h in hopf.values()))
    sizes = {t.value: len(rib_cells(cx, ring_list, t).cells) for t in RibType}
    add("rib_sizes", all(sizes[t.value] == RIB_SIZES[t] for t in RibType), measured=sizes)

    trig = verify_dodeca_trig()
    add("trigonometry", trig["passed"], failed=[k for k, v in trig["checks"].items() if not v["passed"]])

    rho = [Q.stereographic(Q.ONE), Q.stereographic(Q.I), Q.stereographic(Q.J), Q.stereographic(Q.K)]
    fixes = np.allclose(rho[0], 0.0, atol=0) and all(
        np.array_equal(r, e[1:]) for r, e in zip(rho[1:], (Q.I, Q.J, Q.K))
    )
    add("stereographic_fixes", fixes)
    add("stereo_derivative", Q.stereo_derivative(0.0) == 0.5 and Q.stereo_derivative(math.pi / 2) == 1.0)
    kernel = [
        g for g in range(len(grp))
        if np.allclose(Q.rotation_matrix(E[g]), np.eye(3), atol=cfg.eps_match)
    ]
    add("double_cover_kernel", sorted(kernel) == sorted([0, grp.named["-1"]]), size=len(kernel))
    add("pole_symmetries", len(pole_symmetries(cx, include_reflections=True)) == 120)

    ordered = [k for k, v in checks.items() if not v["passed"]]
    return {
        "passed": not ordered,
        "first_failure": ordered[0] if ordered else None,
        "group_order": len(grp),
        "dihedral_angle": float(np.mean(dih)),
        "euler_sum": cx.euler_sum,
        "checks": checks,
    }


def _angle_label(k: int) -> str:
    fr = ("0", "pi/5", "pi/3", "2pi/5", "pi/2", "3pi/5", "2pi/3", "4pi/5", "pi")
    return fr[k]


def tables(kind: str, board: Board | None = None) -> dict:
    if kind == "layers":
        return {
            "kind": "layers",
            "columns": ["number of cells"],
            "rows": [
                {"layer": L.label, "angle": _angle_label(L.value), "values": [LAYER_SIZES[L]]}
                for L in Layer
            ],
        }
    if kind == "rings":
        board = board or Board()
        table = ring_layer_table(board.complex, board.rings)
        return {
            "kind": "rings",
            "columns": list(TABLE_COLUMNS),
            "rows": [
                {
                    "layer": L.label,
                    "angle": _angle_label(L.value),
                    "values": [LAYER_SIZES[L]] + [int(x) for x in table[L]],
                }
                for L in Layer
            ],
        }
    raise ValueError(f"unknown table {kind!r}")


def format_table(data: dict) -> str:
    head = ["layer", "angle"] + data["columns"]
    rows = [[r["layer"], r["angle"]] + [str(v) for v in r["values"]] for r in data["rows"]]
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    fmt = lambda row: "  ".join(x.ljust(w) if i < 2 else x.rjust(w) for i, (x, w) in enumerate(zip(row, widths)))  # noqa: E731
    return "\n".join([fmt(head)] + [fmt(r) for r in rows]) + "\n"


def table_schema() -> dict:
    text = resources.files("quintessence").joinpath("schemas/tables.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def cmd_verify(args, cfg: Config) -> int:
    rep = verify_report(cfg)
    _emit(rep, cfg)
    if not rep["passed"]:
        print(f"check failed: {rep['first_failure']}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_tables(args, cfg: Config) -> int:
    data = tables(args.kind, _board(cfg) if args.kind == "rings" else None)
    if args.format == "text":
        _write(format_table(data))
    else:
        _emit(data, cfg)
    return EXIT_OK


def cmd_solve(args, cfg: Config) -> int:
    board = _board(cfg)
    spec = load_spec(args.puzzle)
    out = {"puzzle": spec.to_json(), "limits": check_rib_limits(spec)}
    if args.count:
        out["counts"] = count_solutions(spec, board, allow_mirror=args.allow_mirror)
    limit = None if args.max == 0 else args.max
    try:
        found = solve(spec, board, allow_mirror=args.allow_mirror, max_solutions=limit)
    except Infeasible as exc:
        out["assemblies"] = []
        out["infeasible"] = str(exc)
        _emit(out, cfg)
        return EXIT_INFEASIBLE
    out["assemblies"] = [a.to_json() for a in found]
    _emit(out, cfg)
    return EXIT_OK


def _design_from_args(args, cfg: Config) -> DesignParams:
    changes = {}
    if args.scale_mm is not None:
        changes["scale_mm"] = args.scale_mm
    if args.frame_width is not None:
        changes["frame_width"] = args.frame_width
    if args.tess is not None:
        changes["tessellation_level"] = args.tess
    return cfg.design.replace(**changes).validate()


def cmd_ribs(args, cfg: Config) -> int:
    params = _design_from_args(args, cfg)
    board = _board(cfg)
    rib_type = RibType.parse(args.type)
    rib = rib_cells(board.complex, board.rings, rib_type)
    mesh = rib_mesh(board.complex, rib, params)
    path = Path(args.out) if args.out else cfg.output_dir / f"{rib_type.value}.{args.format}"
    (export_stl if args.format == "stl" else export_obj)(mesh, path)
    rep = check_mesh(mesh)
    _emit(
        {
            "rib": rib_type.value,
            "cells": list(rib.cells),
            "layers": {L.name: n for L, n in sorted(layer_histogram(board.complex, rib.cells).items())},
            "path": str(path),
            "format": args.format,
            "mesh": rep.to_dict(),
        },
        cfg,
    )
    return EXIT_OK


def cmd_catalog(args, cfg: Config) -> int:
    board = _board(cfg) if args.validate else None
    entries, ok = [], True
    for spec in catalog():
        for s in (spec,) + spec.variants:
            e = s.to_json()
            e["variant"] = s is not spec
            e["consistent"] = s.counts_consistent()
            if args.validate:
                try:
                    a = solve(s, board)[0]
                    e["solved"] = not validate_assembly(a, s, board)
                except Infeasible:
                    e["solved"] = False
                ok &= e["solved"] and e["consistent"]
            else:
                ok &= e["consistent"]
            entries.append(e)
    _emit({"entries": entries, "passed": bool(ok)}, cfg)
    return EXIT_OK if ok else EXIT_ERROR


def cmd_skeleton(args, cfg: Config) -> int:
    board = _board(cfg)
    cx = board.complex
    if args.ring:
        cells = list(ring_by_name(board.rings, args.ring).cells)
    elif args.cells:
        cells = [int(c) for c in args.cells.split(",")]
    else:
        cells = [c for c in range(len(cx.centers)) if cx.centers[c, 0] >= -cfg.eps_alg]
    lines = skeleton_polylines(cx, cells, args.segments, cfg.design.scale_mm)
    path = Path(args.out) if args.out else cfg.output_dir / "skeleton.obj"
    export_skeleton_obj(lines, path)
    _emit({"cells": cells, "edges": len(lines), "path": str(path)}, cfg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quintessence", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", help="run the invariant checks").set_defaults(func=cmd_verify)

    p = sub.add_parser("tables", help="layer or ring tables")
    p.add_argument("--kind", choices=["layers", "rings"], default="layers")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("solve", help="assemble a puzzle from ribs")
    p.add_argument("--puzzle", required=True, help="catalog name or spec file")
    p.add_argument("--count", action="store_true", help="also count all assemblies")
    p.add_argument("--allow-mirror", action="store_true")
    p.add_argument("--max", type=int, default=1, help="assemblies to print (0: all)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ribs", help="export a rib mesh")
    p.add_argument("--type", required=True, help="spine|inner6|inner4|outer6|outer4|equator")
    p.add_argument("--format", choices=["obj", "stl"], default="stl")
    p.add_argument("--out")
    p.add_argument("--scale-mm", type=float)
    p.add_argument("--frame-width", type=float)
    p.add_argument("--tess", type=int)
    p.set_defaults(func=cmd_ribs)

    p = sub.add_parser("catalog", help="list (and check) the catalogued puzzles")
    p.add_argument("--validate", action="store_true")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("skeleton", help="export projected cell edges as OBJ polylines")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ring", help="spine, equator, inner0..4, outer0..4")
    group.add_argument("--cells", help="comma separated cell ids")
    p.add_argument("--segments", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_skeleton)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config()
        return args.func(args, cfg)
    except (ConfigError, DegenerateDesign, KeyError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
