"""Command-line driver.

Exit codes: 0 success, 1 configuration error, 2 norm validation failure,
3 flow failure, 4 a bound check failed (sandwich or flow-vs-curvature flag).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load, with_overrides
from .errors import (ConfigError, EllipticityViolation, InvalidGrid, InvalidSpec, MeanConvexityLost,
                     NonPositiveRadius, StepLimitExceeded)
from .flow import capacity_upper_from_trace, run_iamcf
from .functionals import SLACK, bounds_report
from .grid import make_grid
from .norm import make_norm
from .surface import geometry, integrate, is_convex, make_surface, write_node_csv, write_obj

EXIT_OK, EXIT_CONFIG, EXIT_NORM, EXIT_FLOW, EXIT_CHECK = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _out(args, name) -> Path:
    base = Path(args.out) if args.out else Path(".")
    base.mkdir(parents=True, exist_ok=True)
    return base / name


def _norm(cfg: RunConfig):
    try:
        return make_norm(cfg.norm)
    except (EllipticityViolation, InvalidSpec) as exc:
        raise _Fail(EXIT_NORM, f"norm rejected: {exc}") from None


def _surface(cfg: RunConfig, norm):
    try:
        grid = make_grid(*cfg.grid, order=cfg.grid_order)
        return make_surface(grid, cfg.body, norm)
    except (InvalidSpec, InvalidGrid, NonPositiveRadius) as exc:
        raise _Fail(EXIT_CONFIG, f"invalid body or grid: {exc}") from None


def duality_residuals(norm, count: int = 1000, seed: int = 0):
    """max |F(DF^0(x)) - 1| and max |F^0(x) DF(DF^0(x)) - x| / |x| on random x."""
    x = np.random.default_rng(seed).standard_normal((count, norm.dimension))
    y = norm.dual_grad(x)
    r1 = np.abs(norm.F(y) - 1.0).max()
    back = norm.dual(x)[:, None] * norm.grad(y)
    r2 = (np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1)).max()
    return float(r1), float(r2)


def cmd_validate_norm(cfg: RunConfig, args) -> int:
    norm = _norm(cfg)
    r1, r2 = duality_residuals(norm)
    summary = {"family": norm.family, "dimension": norm.dimension,
               "ellipticity_margin": norm.ellipticity_margin,
               "duality_F_of_DF0": r1, "duality_round_trip": r2}
    print(f"family: {norm.family} (n={norm.dimension})")
    print(f"ellipticity margin: {norm.ellipticity_margin:.12g}")
    print(f"duality residuals: |F(DF0(x)) - 1| = {r1:.3e}, round trip = {r2:.3e}")
    if args.out:
        _out(args, "norm.json").write_text(_dump_json(summary), encoding="utf-8")
    return EXIT_OK


def cmd_make_surface(cfg: RunConfig, args) -> int:
    norm = _norm(cfg)
    surface = _surface(cfg, norm)
    fields = geometry(surface, norm)
    mesh = _out(args, cfg.outputs.mesh_dir)
    mesh.mkdir(parents=True, exist_ok=True)
    write_obj(surface, mesh / "surface.obj")
    write_node_csv(surface, fields, mesh / "surface_nodes.csv")
    print(f"area_F = {integrate(surface, fields, 1.0, 'dmuF'):.12g}")
    print(f"min H_F = {fields.HF.min():.6g}, convex = {is_convex(fields)}")
    print(f"wrote {mesh / 'surface.obj'} and {mesh / 'surface_nodes.csv'}")
    return EXIT_OK


def _bounds(cfg, norm, surface):
    fields = geometry(surface, norm)
    return [bounds_report(surface, norm, p, cfg.q, cfg.body, fields) for p in cfg.p_list]


def cmd_bounds(cfg: RunConfig, args) -> int:
    norm = _norm(cfg)
    surface = _surface(cfg, norm)
    reports = _bounds(cfg, norm, surface)
    for rep in reports:
        print(f"p = {rep.p:g}")
        print(rep.table())
        for key, note in sorted(rep.notes.items()):
            if note.startswith("hypothesis"):
                print(f"warning: {key}: {note}", file=sys.stderr)
    doc = {"version": __version__, "reports": [r.as_dict() for r in reports]}
    _out(args, cfg.outputs.report_path).write_text(_dump_json(doc), encoding="utf-8")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


def _flow(cfg, norm, surface, args):
    try:
        trace = run_iamcf(surface, norm, cfg.flow, cfg.p_list)
    except (MeanConvexityLost, StepLimitExceeded, NonPositiveRadius) as exc:
        raise _Fail(EXIT_FLOW, f"flow failed: {type(exc).__name__}: {exc}") from None
    if "csv" in cfg.outputs.formats:
        trace.write_csv(_out(args, cfg.outputs.trace_path))
    if "obj" in cfg.outputs.formats:
        mesh = _out(args, cfg.outputs.mesh_dir)
        mesh.mkdir(parents=True, exist_ok=True)
        for k, surf in enumerate(trace.surfaces):
            write_obj(surf, mesh / f"snapshot_{k:04d}.obj")
    upper = {}
    for p in cfg.p_list:
        if trace.times[-1] >= 2.0:
            upper[f"{p:g}"] = capacity_upper_from_trace(trace, p)
    return trace, upper


def cmd_flow(cfg: RunConfig, args) -> int:
    norm = _norm(cfg)
    surface = _surface(cfg, norm)
    trace, upper = _flow(cfg, norm, surface, args)
    print(f"steps: {trace.steps}, snapshots: {len(trace.times)}, t_end = {trace.times[-1]:g}")
    print(f"final shape deviation: {trace.shape_dev[-1]:.3e}")
    print(f"hawking mass: {trace.hawking[0]:.6e} -> {trace.hawking[-1]:.6e}")
    for p, v in upper.items():
        print(f"capacity upper estimate (p = {p}): {v:.10g}")
    if not upper:
        print("capacity estimate skipped: trace shorter than t = 2")
    doc = {"version": __version__, "steps": trace.steps, "times": trace.times,
           "shape_dev": trace.shape_dev, "hawking": trace.hawking, "capacity_upper": upper}
    if "json" in cfg.outputs.formats:
        _out(args, "flow.json").write_text(_dump_json(doc), encoding="utf-8")
    return EXIT_OK


def cmd_report(cfg: RunConfig, args) -> int:
    """Bounds plus the flow estimate, cross-checked against the curvature bound."""
    norm = _norm(cfg)
    surface = _surface(cfg, norm)
    reports = _bounds(cfg, norm, surface)
    _, upper = _flow(cfg, norm, surface, args)
    docs = []
    ok = True
    for rep in reports:
        d = rep.as_dict()
        est = upper.get(f"{rep.p:g}")
        d["flow_upper"] = est
        thm1 = rep.upper.get("thm1")
        if est is not None and thm1 is not None:
            d["flags"]["flow_vs_thm1"] = bool(est <= thm1 * (1 + 2 * SLACK))
        ok = ok and rep.passed and d["flags"].get("flow_vs_thm1", True)
        docs.append(d)
        print(f"p = {rep.p:g}")
        print(rep.table())
        if est is not None:
            print(f"flow upper estimate: {est:.10g}")
    doc = {"version": __version__, "reports": docs}
    _out(args, cfg.outputs.report_path).write_text(_dump_json(doc), encoding="utf-8")
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "validate-norm": cmd_validate_norm,
    "make-surface": cmd_make_surface,
    "flow": cmd_flow,
    "bounds": cmd_bounds,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anicap", description="Anisotropic capacity laboratory")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="key = value configuration file")
        sp.add_argument("--grid", help="override grid, e.g. 48x96")
        sp.add_argument("--p", help="override p list, e.g. 2,2.5")
        sp.add_argument("--out", help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = with_overrides(load(args.config), grid=args.grid, p_list=args.p)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Fail as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
