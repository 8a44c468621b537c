"""Command line front end.

Every subcommand reads a JSON object (``--config FILE`` or standard input)
and writes JSON, CSV or SVG to ``--out`` or standard output.  Exit status is
0 on success, 1 when a verification suite finds a violation and 2 for bad
input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import confmetric, formulas, suites
from .dome import DomePoint, geodesic_distance
from .geom import GeometryError, ext, is_inf
from .hull import build_hull, hull_to_json, points_from_json, validate
from .npr import FiniteDomain, cell_decomposition, retract, svg_export

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def _cplx(v) -> complex:
    if isinstance(v, dict):
        return complex(float(v["re"]), float(v.get("im", 0.0)))
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return ext(v)


def _cjson(z: complex):
    return "inf" if is_inf(z) else {"re": z.real, "im": z.imag}


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise InputError(f"missing key {key!r}")
    return cfg[key]


def _points(cfg: dict) -> list[complex]:
    if "points" in cfg:
        return points_from_json(cfg["points"])
    if "hull" in cfg and "vertices" in cfg["hull"]:
        return points_from_json(cfg["hull"]["vertices"])
    raise InputError("missing key 'points'")


def _domain(cfg: dict) -> FiniteDomain:
    return FiniteDomain(_points(cfg))


# -- subcommands ---------------------------------------------------------------


def cmd_hull(cfg, args):
    P = build_hull(_points(cfg))
    d = validate(P)
    out = hull_to_json(P)
    out["diagnostics"] = {
        "max_vertex_residual": d.max_vertex_residual,
        "theta_sum_residual": d.theta_sum_residual,
        "euler_ok": d.euler_ok,
        "ok": d.ok(),
    }
    return out


def cmd_retract(cfg, args):
    D = _domain(cfg)
    r = retract(D, _cplx(_require(cfg, "z")))
    foot = {"kind": r.kind, r.kind: r.index, "face_chart": r.foot.face, "coords": _cjson(r.foot.w)}
    foot["ambient"] = {"x": _cjson(r.ambient.x), "t": r.ambient.t}
    return {"foot": foot, "h": r.h, "tau": r.tau}


def _metric_row(cfg, z):
    if "annulus" in cfg:
        s = float(_require(cfg["annulus"], "s"))
        lo, hi = confmetric.annulus_bp_envelope(s, z)
        return {
            "q": confmetric.annulus_qh_density(s, z),
            "beta": confmetric.annulus_beta(s, z),
            "rho_exact": confmetric.annulus_poincare_density(s, z),
            "rho_bounds": [lo, hi],
            "tau": confmetric.annulus_thurston_density(s, z),
        }
    X = _points(cfg)
    D = FiniteDomain(X)
    lo, hi = confmetric.bp_envelope(X, z)
    return {
        "q": confmetric.qh_density(X, z),
        "beta": confmetric.beta(X, z),
        "rho_bounds": [lo, hi],
        "tau": float(D.tau(np.array([z]))[0]),
    }


def cmd_metric(cfg, args):
    if args.sweep:
        zs = cfg.get("zs", cfg.get("z"))
        if not isinstance(zs, list) or (zs and not isinstance(zs[0], (list, dict, str, int, float))):
            raise InputError("sweep mode needs a list of points under 'zs'")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "q", "beta", "rho_lower", "rho_upper", "rho_exact", "tau"])
        for v in zs:
            z = _cplx(v)
            row = _metric_row(cfg, z)
            lo, hi = row["rho_bounds"]
            exact = row.get("rho_exact")
            w.writerow([repr(z.real), repr(z.imag), repr(row["q"]), repr(row["beta"]), repr(lo), repr(hi), "" if exact is None else repr(exact), repr(row["tau"])])
        return buf.getvalue()
    return _metric_row(cfg, _cplx(_require(cfg, "z")))


def _dome_point(v) -> DomePoint:
    if not isinstance(v, dict) or "face" not in v:
        raise InputError("dome points need 'face' and 'w'")
    w = _cplx(_require(v, "w"))
    if not w.imag > 0:
        raise InputError("chart coordinates must lie in the upper half-plane")
    return DomePoint(int(v["face"]), w)


def cmd_dome_dist(cfg, args):
    D = _domain(cfg)
    S = D.surface
    a, b = _dome_point(_require(cfg, "a")), _dome_point(_require(cfg, "b"))
    for p in (a, b):
        if not 0 <= p.face < S.n_faces or not S.charts[p.face].contains(p.w):
            raise InputError(f"point {p} is not in its face")
    L, path = geodesic_distance(S, a, b, int(cfg.get("budget", 100_000)))
    return {
        "distance": L,
        "certified": path.certified,
        "intersection": path.intersection,
        "crossings": [{"edge": c.edge, "theta": c.theta, "angle": c.angle} for c in path.crossings],
    }


def cmd_tau_dist(cfg, args):
    D = _domain(cfg)
    sched = tuple(float(h) for h in cfg.get("schedule", confmetric.DEFAULT_SCHEDULE))
    b = confmetric.tau_distance_bracket(D, _cplx(_require(cfg, "z")), _cplx(_require(cfg, "w")), sched)
    return b.to_json()


def cmd_annulus(cfg, args):
    s = float(_require(cfg, "s"))
    cf = confmetric.annulus_closed_forms(s)
    out = {
        "s": s,
        "rho_core": cf.rho_core,
        "dome_core": cf.dome_core,
        "tau_core": cf.tau_core,
        "t_s": cf.t_s,
        "t_s_defined": cf.t_s_defined,
    }
    if "n" in cfg:
        n = int(cfg["n"])
        pts = confmetric.annulus_points(s, n, cfg.get("twist"), bool(cfg.get("aligned", False)))
        D = FiniteDomain(pts)
        g = suites.annulus_core(D, n)
        out["approximation"] = {
            "n": n,
            "faces": len(D.hull.faces),
            "dome_core": g.length,
            "core_intersection": g.intersection,
            "tau_core_circle": suites.circle_tau_length(D, math.exp(0.5 * s), 8 * n),
        }
    return out


def cmd_constants(cfg, args):
    return formulas.constants().as_table()


def cmd_svg(cfg, args):
    D = _domain(cfg)
    vp = cfg.get("viewport", [-3.0, -3.0, 3.0, 3.0])
    if len(vp) != 4:
        raise InputError("viewport is [xmin, ymin, xmax, ymax]")
    return svg_export(cell_decomposition(D), tuple(float(v) for v in vp))


def cmd_verify(cfg, args):
    if args.suite:
        cfg = dict(cfg)
        cfg["suite"] = args.suite
    if args.seed is not None:
        cfg = dict(cfg)
        cfg["seed"] = args.seed
    sc = suites.SuiteConfig.from_json(cfg)
    rep = suites.run_suite(sc)
    print(rep.summary() + f" in {rep.wall_time:.1f}s", file=sys.stderr)
    return rep


COMMANDS = {
    "hull": cmd_hull,
    "retract": cmd_retract,
    "metric": cmd_metric,
    "dome-dist": cmd_dome_dist,
    "tau-dist": cmd_tau_dist,
    "annulus": cmd_annulus,
    "constants": cmd_constants,
    "svg": cmd_svg,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="domeforge", description="Domes, nearest point retractions and conformal metrics of punctured spheres.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("suite", nargs="?", help="suite name (verify only)")
    p.add_argument("--config", help="JSON input file (default: standard input)")
    p.add_argument("--seed", type=int, help="random seed (verify)")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--sweep", action="store_true", help="metric: one CSV row per point in 'zs'")
    return p


def _load(args) -> dict:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    elif args.command == "constants" or (args.command == "verify" and args.suite):
        text = "{}"
    else:
        text = sys.stdin.read()
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("input must be a JSON object")
    return data


def _emit(payload, path):
    if isinstance(payload, suites.VerifyReport):
        data = payload.to_bytes()
    elif isinstance(payload, str):
        data = payload.encode("utf-8")
    else:
        data = (json.dumps(payload, indent=2, default=_default) + "\n").encode("utf-8")
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _default(x):
    if isinstance(x, complex):
        return _cjson(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.suite and args.command != "verify":
        parser.print_usage(sys.stderr)
        print(f"domeforge: unexpected argument {args.suite!r}", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = _load(args)
        payload = COMMANDS[args.command](cfg, args)
    except (InputError, suites.ConfigError, GeometryError, KeyError, TypeError, ValueError, OSError) as exc:
        print(f"domeforge: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(payload, args.out)
    if isinstance(payload, suites.VerifyReport):
        return EXIT_OK if payload.passed else EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
