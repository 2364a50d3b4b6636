"""Command-line front end: config parsing, dispatch, and report files.

This is the only module that performs I/O.  Configuration is a single JSON
document; reports are JSON files (floats at 17 significant digits) and
landscape tables are CSV.  Stdout carries a one-line summary; progress goes
to stderr unless --quiet.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import energy as en
from . import oracle as orc
from .boundary import (
    FourierPhase,
    boundary_data_for,
    check_compatibility,
    degree,
)
from .errors import CirclemapError, SchemaError
from .geometry import Curve, PunctureSet, build_domain

_PROG = "circlemap-renorm"
_COMMANDS = ("degree-check", "dirichlet-energy", "neumann-energy",
             "verify", "landscape")


# --------------------------------------------------------------------------
# schema


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) \
        and np.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


_CURVE_SCHEMA = {
    "circle": {"center": "pair", "radius": "number"},
    "fourier": {"ax": "numbers", "bx": "numbers",
                "ay": "numbers", "by": "numbers"},
}

_SCHEMA = {
    "domain": {
        "outer": _CURVE_SCHEMA,
        "holes": [_CURVE_SCHEMA],
        "punctures": [{"point": "pair", "degree": "int"}],
    },
    "boundary": {
        "windings": "ints",
        "phases": [{"cos": "numbers", "sin": "numbers"}],
    },
    "solver": {"panels": "int", "band_factor": "number"},
    "dirichlet": {"search_radius": "int"},
    "neumann": {"mode": "str", "degrees": "ints", "search_radius": "int"},
    "verify": {"kind": "str", "rho0": "number", "steps": "int",
               "compare": "bool"},
    "landscape": {"kind": "str", "moving_index": "int",
                  "x": "triple", "y": "triple", "points": "pairs"},
}

_LEAF_CHECKS = {
    "number": _is_number,
    "int": _is_int,
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "pair": lambda v: isinstance(v, list) and len(v) == 2
    and all(_is_number(x) for x in v),
    "triple": lambda v: isinstance(v, list) and len(v) == 3
    and all(_is_number(x) for x in v[:2]) and _is_int(v[2]),
    "pairs": lambda v: isinstance(v, list)
    and all(isinstance(p, list) and len(p) == 2
            and all(_is_number(x) for x in p) for p in v),
    "numbers": lambda v: isinstance(v, list)
    and all(_is_number(x) for x in v),
    "ints": lambda v: isinstance(v, list) and all(_is_int(x) for x in v),
}


def _validate(node, schema, path):
    if isinstance(schema, dict):
        if not isinstance(node, dict):
            raise SchemaError(f"{path or 'config'}: expected an object")
        for key, sub in node.items():
            if key not in schema:
                raise SchemaError(f"{path + '.' if path else ''}{key}: "
                                  "unknown key")
            _validate(sub, schema[key], f"{path + '.' if path else ''}{key}")
    elif isinstance(schema, list):
        if not isinstance(node, list):
            raise SchemaError(f"{path}: expected a list")
        for i, item in enumerate(node):
            _validate(item, schema[0], f"{path}[{i}]")
    else:
        if not _LEAF_CHECKS[schema](node):
            raise SchemaError(f"{path}: expected {schema}, got {node!r}")


def _curve_from(spec, path):
    if len(spec) != 1:
        raise SchemaError(f"{path}: give exactly one of 'circle'/'fourier'")
    if "circle" in spec:
        c = spec["circle"]
        if "center" not in c or "radius" not in c:
            raise SchemaError(f"{path}.circle: needs center and radius")
        return Curve.circle(c["center"], c["radius"])
    f = spec["fourier"]
    for k in ("ax", "bx", "ay", "by"):
        if k not in f:
            raise SchemaError(f"{path}.fourier: missing {k}")
    return Curve.fourier(f["ax"], f["bx"], f["ay"], f["by"])


@dataclass
class RunConfig:
    """Validated run configuration with defaults applied."""

    domain: object
    windings: tuple | None
    phases: tuple | None
    panels: int
    options: dict
    normalized: dict


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc
    _validate(raw, _SCHEMA, "")
    if "domain" not in raw or "outer" not in raw["domain"]:
        raise SchemaError("domain.outer: required")

    solver = dict(raw.get("solver", {}))
    panels = solver.get("panels", 256)
    if panels < 64 or panels > 8192 or panels & (panels - 1):
        raise SchemaError(
            f"solver.panels: must be a power of two in [64, 8192], "
            f"got {panels}")
    band = solver.get("band_factor", 5.0)

    dom = raw["domain"]
    outer = _curve_from(dom["outer"], "domain.outer")
    holes = tuple(_curve_from(h, f"domain.holes[{i}]")
                  for i, h in enumerate(dom.get("holes", [])))
    punct = PunctureSet(
        tuple(tuple(p["point"]) for p in dom.get("punctures", [])),
        tuple(p["degree"] for p in dom.get("punctures", [])),
    )
    domain = build_domain(outer, holes, punct, panels=panels,
                          band_factor=band)

    windings = phases = None
    if "boundary" in raw:
        b = raw["boundary"]
        windings = tuple(b.get("windings", []))
        if len(windings) != 1 + domain.n_holes:
            raise SchemaError(
                f"boundary.windings: need {1 + domain.n_holes} entries, "
                f"got {len(windings)}")
        phases = tuple(
            FourierPhase(tuple(p.get("cos", [])) or (0.0,),
                         tuple(p.get("sin", [])) or (0.0,))
            for p in b.get("phases", [])
        ) or None
        if phases is not None and len(phases) != len(windings):
            raise SchemaError("boundary.phases: one entry per component")

    options = {
        "dirichlet": {"search_radius": 3,
                      **raw.get("dirichlet", {})},
        "neumann": {"mode": "optimal", "degrees": None, "search_radius": 3,
                    **raw.get("neumann", {})},
        "verify": {"kind": "dirichlet", "rho0": 0.1, "steps": 6,
                   "compare": True, **raw.get("verify", {})},
        "landscape": raw.get("landscape", {}),
    }
    normalized = dict(raw)
    normalized.setdefault("solver", {})
    normalized["solver"] = {"panels": panels, "band_factor": band}
    return RunConfig(domain=domain, windings=windings, phases=phases,
                     panels=panels, options=options, normalized=normalized)


# --------------------------------------------------------------------------
# serialization


def _format_value(v):
    if isinstance(v, bool) or v is None:
        return "true" if v is True else ("false" if v is False else "null")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, complex):
        return _format_value({"re": v.real, "im": v.imag})
    if isinstance(v, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_format_value(x)}"
                          for k, x in v.items())
        return "{" + items + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    return json.dumps(str(v))


def dumps_report(obj) -> str:
    """JSON text with floats at 17 significant digits."""
    return _format_value(obj) + "\n"


def _energy_report_dict(rep):
    return {
        "total": rep.total,
        "term_pairwise": rep.term_pairwise,
        "term_boundary": rep.term_boundary,
        "term_regular": rep.term_regular,
        "term_topological": rep.term_topological,
        "alpha": rep.alpha,
        "shifts": rep.shifts,
        "theta": rep.theta,
        "degrees": rep.degrees,
        "beta": rep.beta,
        "diagnostics": rep.diagnostics,
    }


# --------------------------------------------------------------------------
# commands


def _need_boundary(cfg):
    if cfg.windings is None:
        raise SchemaError("boundary: required for this command")
    return boundary_data_for(cfg.domain, cfg.windings, cfg.phases)


def _cmd_degree_check(cfg):
    bd = _need_boundary(cfg)
    degs, resids = [], []
    for c in range(1 + cfg.domain.n_holes):
        d, r = degree(bd, c)
        degs.append(d)
        resids.append(r)
    verdict = check_compatibility(bd, cfg.domain.punctures)
    outer = degs[0]
    inner = sum(degs[1:])
    total = cfg.domain.punctures.total_degree
    report = {
        "component_degrees": degs,
        "degree_residuals": resids,
        "puncture_total": total,
        "relation_holds": verdict.relation_holds,
        "unpunctured_class_nonempty": verdict.unpunctured_class_nonempty,
    }
    if verdict.relation_holds:
        summary = f"degree-check: relation holds ({outer} = {total} + {inner})"
    else:
        summary = f"degree-check: relation fails: {outer} != {total} + {inner}"
    return report, summary


def _cmd_dirichlet(cfg):
    bd = _need_boundary(cfg)
    rep = en.dirichlet_renormalized_energy(
        cfg.domain, bd, cfg.options["dirichlet"]["search_radius"])
    return _energy_report_dict(rep), \
        f"dirichlet-energy: W = {rep.total:.12g}"


def _cmd_neumann(cfg):
    o = cfg.options["neumann"]
    rep = en.neumann_renormalized_energy(
        cfg.domain, o["mode"], o["degrees"], o["search_radius"])
    return _energy_report_dict(rep), \
        f"neumann-energy: W = {rep.total:.12g}, degrees = {rep.degrees}"


def _cmd_verify(cfg):
    o = cfg.options["verify"]
    kind = o["kind"]
    bd = _need_boundary(cfg) if kind == "dirichlet" else None
    study = orc.convergence_study(
        cfg.domain, kind, o["rho0"], o["steps"], bd=bd,
        mode=cfg.options["neumann"]["mode"],
        degrees=cfg.options["neumann"]["degrees"],
        search_radius=cfg.options["neumann"]["search_radius"]
        if kind == "neumann"
        else cfg.options["dirichlet"]["search_radius"],
    )
    report = {
        "kind": kind,
        "schedule": study.schedule,
        "values": study.values,
        "deflated": study.deflated,
        "extrapolated": study.extrapolated,
        "order": study.order,
        "monotone": "PASS",
    }
    if o["compare"]:
        if kind == "dirichlet":
            closed = en.dirichlet_renormalized_energy(cfg.domain, bd).total
        else:
            closed = en.neumann_renormalized_energy(
                cfg.domain, cfg.options["neumann"]["mode"],
                cfg.options["neumann"]["degrees"]).total
        report["closed_form"] = closed
        report["difference"] = study.extrapolated - closed
    summary = (f"verify: monotone PASS, extrapolated = "
               f"{study.extrapolated:.12g}, order = {study.order}")
    return report, summary


def _grid_points(o):
    if "points" in o:
        return [tuple(p) for p in o["points"]]
    if "x" not in o or "y" not in o:
        raise SchemaError("landscape: needs 'points' or 'x' and 'y' ranges")
    xs = np.linspace(o["x"][0], o["x"][1], int(o["x"][2]))
    ys = np.linspace(o["y"][0], o["y"][1], int(o["y"][2]))
    return [(float(x), float(y)) for y in ys for x in xs]


_CSV_FIELDS = ("x", "y", "W", "term_pairwise", "term_boundary",
               "term_regular", "term_topological")


def _cmd_landscape(cfg):
    o = cfg.options["landscape"]
    kind = o.get("kind", "dirichlet")
    bd = _need_boundary(cfg) if kind == "dirichlet" else None
    rows = en.energy_landscape(
        cfg.domain, kind, _grid_points(o),
        moving_index=o.get("moving_index", 0), bd=bd,
        mode=cfg.options["neumann"]["mode"],
        degrees=cfg.options["neumann"]["degrees"],
    )
    lines = [",".join(_CSV_FIELDS)]
    for row in rows:
        lines.append(",".join(
            "" if row[k] is None else f"{row[k]:.17g}" for k in _CSV_FIELDS))
    done = sum(1 for r in rows if r["W"] is not None)
    summary = f"landscape: {done}/{len(rows)} grid points evaluated"
    return "\n".join(lines) + "\n", summary


def run(cfg: RunConfig, command: str, out_dir: str = ".",
        quiet: bool = False) -> int:
    """Execute one command, write its report file, print a summary line."""
    import os

    def progress(msg):
        if not quiet:
            print(msg, file=sys.stderr)

    progress(f"{_PROG}: running {command}")
    try:
        if command == "degree-check":
            report, summary = _cmd_degree_check(cfg)
        elif command == "dirichlet-energy":
            report, summary = _cmd_dirichlet(cfg)
        elif command == "neumann-energy":
            report, summary = _cmd_neumann(cfg)
        elif command == "verify":
            report, summary = _cmd_verify(cfg)
        elif command == "landscape":
            report, summary = _cmd_landscape(cfg)
        else:
            raise SchemaError(f"unknown command {command!r}")
    except SchemaError:
        raise
    except CirclemapError as exc:
        print(f"{_PROG}: {command} failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    if command == "landscape":
        path = os.path.join(out_dir, "landscape.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        path = os.path.join(out_dir, f"{command}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_report(report))
    progress(f"{_PROG}: wrote {path}")
    print(summary)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog=_PROG,
        description="Renormalized energies of circle-valued harmonic maps.",
    )
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", required=True,
                        help="path to the JSON configuration")
    parser.add_argument("--out", default=".",
                        help="output directory for report files")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress lines on stderr")
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text)
    except (OSError, CirclemapError) as exc:
        print(f"{_PROG}: config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, args.command, args.out, args.quiet)
    except SchemaError as exc:
        print(f"{_PROG}: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
