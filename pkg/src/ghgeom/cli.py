"""Command-line front end.

Every command writes one CSV or JSON document, to ``--out`` or stdout. The
output carries a provenance header listing the settings that produced it
and contains nothing run-dependent, so identical invocations give identical
bytes.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, entropy as ent, geodesic as geo, ghsurface as gh, monge
from .errors import GhGeomError
from .numerics import OdeSettings, QuadratureRule

MAP_FIELDS = ("entropy", "H1", "H2", "H3", "lambda1", "lambda2", "lambda3", "rho")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def _floats(text: str, n: int, flag: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag}: expected {n} comma-separated numbers, got {text!r}")
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{flag}: expected {n} finite comma-separated numbers, got {text!r}")
    return np.array(vals)


def parse_grid(text: str) -> dict[str, np.ndarray]:
    """Parse ``x1=lo:hi:n,x3=lo:hi:n`` into coordinate axes."""
    axes = {}
    for part in text.split(","):
        name, _, spec = part.partition("=")
        name = name.strip()
        if name not in ("x1", "x3") or name in axes:
            raise UsageError(f"--grid: bad or repeated axis {name!r} (use x1 and x3)")
        try:
            lo, hi, n = spec.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError:
            raise UsageError(f"--grid: axis {name} must read lo:hi:n, got {spec!r}")
        if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise UsageError(f"--grid: axis {name} needs finite bounds and a positive count")
        axes[name] = np.linspace(lo, hi, n)
    if set(axes) != {"x1", "x3"}:
        raise UsageError("--grid: both x1 and x3 axes are required")
    return axes


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GHGEOM_THREADS", "1")))
    except ValueError:
        return 1


def _nu_from_args(args) -> gh.NuFunction | None:
    kind = getattr(args, "nu", None)
    if kind is None:
        return None
    if kind == "identity":
        return gh.NuFunction.identity()
    if kind == "power":
        return gh.NuFunction.power(2.0 if args.alpha is None else args.alpha)
    return gh.NuFunction.exp_type(math.e if args.base is None else args.base, 1.0 if args.b is None else args.b)


def _log_from_args(args) -> ent.GeneralizedLog:
    if args.log == "natural":
        return ent.GeneralizedLog.natural()
    if args.log == "tsallis":
        if args.q is None:
            raise UsageError("--q is required with --log tsallis")
        return ent.GeneralizedLog.tsallis(args.q)
    if args.k is None:
        raise UsageError("--k is required with --log kaniadakis")
    return ent.GeneralizedLog.kaniadakis(args.k)


def _quad_rule(args) -> QuadratureRule:
    if args.quad_nodes is not None:
        return QuadratureRule(kind="hermite", nodes=args.quad_nodes, tol=args.quad_tol)
    return QuadratureRule(tol=args.quad_tol)


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v) + 0.0)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) + 0.0
    return obj


def render(fmt: str, provenance: dict, columns=None, rows=None, report=None) -> str:
    if fmt == "json":
        doc = {"provenance": provenance}
        if report is not None:
            doc.update(report)
        if columns is not None:
            doc["data"] = [dict(zip(columns, r)) for r in rows]
        return json.dumps(_jsonable(doc), indent=2) + "\n"

    buf = io.StringIO()
    for key, val in provenance.items():
        buf.write(f"# {key}={val}\n")
    if report is not None:
        for key, val in _flatten(report):
            buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    if columns is None:
        columns, rows = ["quantity", "value"], []
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _flatten(report: dict, prefix: str = ""):
    for key, val in report.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _flatten(val, name + ".")
        elif isinstance(val, (list, tuple, np.ndarray)):
            yield name, json.dumps(_jsonable(val))
        else:
            yield name, _fmt(val) if isinstance(val, (int, float, np.floating, np.integer)) else val


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _provenance(args, **extra) -> dict:
    prov = {"tool": f"ghgeom {__version__}", "command": args.command}
    for key in sorted(vars(args)):
        if key in ("command", "out", "format", "func"):
            continue
        val = getattr(args, key)
        if val is not None:
            prov[key] = val
    prov.update(extra)
    return {k: (v if isinstance(v, (str, int, float, bool)) else str(v)) for k, v in prov.items()}


# ---------------------------------------------------------------- commands


def _report_rows(rep: monge.CurvatureReport, labelled=None):
    rows = []
    rows.append(("a", rep.forms.a))
    for i in range(3):
        for j in range(i, 3):
            rows.append((f"g{i+1}{j+1}", rep.forms.g[i, j]))
    for i in range(3):
        for j in range(i, 3):
            rows.append((f"h{i+1}{j+1}", rep.forms.h[i, j]))
    rows += [(f"N{i+1}", v) for i, v in enumerate(rep.forms.normal)]
    lam = labelled if labelled is not None else rep.principal
    rows += [(f"lambda{i+1}", v) for i, v in enumerate(lam)]
    rows += [(f"H{i+1}", v) for i, v in enumerate(rep.mean)]
    rows += [(f"H{i+1}_paper", v) for i, v in enumerate(rep.mean_paper)]
    for k in range(3):
        for i in range(3):
            for j in range(i, 3):
                if rep.christoffel[k, i, j] != 0.0:
                    rows.append((f"Gamma{k+1}_{i+1}{j+1}", rep.christoffel[k, i, j]))
    idx = np.argwhere(rep.riemann != 0.0)
    rows += [("R" + "".join(str(i + 1) for i in ix), rep.riemann[tuple(ix)]) for ix in idx]
    for i in range(3):
        for j in range(i, 3):
            rows.append((f"Ric{i+1}{j+1}", rep.ricci[i, j]))
    rows.append(("rho", rep.scalar))
    return rows


def _report_json(rep: monge.CurvatureReport, labelled=None) -> dict:
    d = rep.as_dict()
    lam = labelled if labelled is not None else rep.principal
    d.update({f"lambda{i+1}": float(v) for i, v in enumerate(lam)})
    d.update({f"H{i+1}": float(v) for i, v in enumerate(rep.mean)})
    d.update({f"H{i+1}_paper": float(v) for i, v in enumerate(rep.mean_paper)})
    d["riemann_nonzero"] = {
        "R" + "".join(str(i + 1) for i in ix): float(rep.riemann[tuple(ix)])
        for ix in np.argwhere(rep.riemann != 0.0)
    }
    del d["riemann"]
    return d


def _curvature_at(x, source: str, nu=None):
    if nu is not None:
        field = gh.nu_patch(nu)
        return monge.curvature_report(field.with_fd() if source == "fd" else field, x), None
    if source == "closed":
        return gh.closed_curvatures(x), gh.principal_curvatures(x)
    field = gh.entropy_field(use_fd=(source == "fd"))
    return monge.curvature_report(field, x), gh.principal_curvatures(x)


def cmd_curvature(args):
    x = _floats(args.point, 3, "--point")
    rep, labelled = _curvature_at(x, args.source)
    prov = _provenance(args)
    if args.format == "json":
        return render("json", prov, report=_report_json(rep, labelled))
    rows = _report_rows(rep, labelled)
    return render("csv", prov, ["quantity", "value"], rows)


def _map_value(field: str, x, nu):
    if field == "entropy":
        return (gh.entropy(x) if nu is None else gh.nu_entropy(nu, x),)
    if nu is None:
        if field == "rho":
            return (gh.scalar_curvature(x),)
        if field.startswith("lambda"):
            return (gh.principal_curvatures(x)[int(field[-1]) - 1],)
        rep = gh.closed_curvatures(x)
    else:
        rep = monge.curvature_report(gh.nu_patch(nu), x)
        if field == "rho":
            return (rep.scalar,)
        if field.startswith("lambda"):
            return (rep.principal[int(field[-1]) - 1],)
    k = int(field[-1]) - 1
    return rep.mean[k], rep.mean_paper[k]


def cmd_map(args):
    axes = parse_grid(args.grid)
    nu = _nu_from_args(args)
    points = [np.array([x1, args.x2, x3]) for x1 in axes["x1"] for x3 in axes["x3"]]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        values = list(pool.map(lambda p: _map_value(args.field, p, nu), points))
    columns = ["x1", "x2", "x3", "value"]
    if args.field in ("H1", "H2", "H3"):
        columns.append("value_paper")
    rows = [(*p, *v) for p, v in zip(points, values)]
    return render(args.format, _provenance(args), columns, rows)


GEODESIC_COLUMNS = ["t", "x1", "x2", "x3", "v1", "v2", "v3", "energy", "arclen"]


def _ode_settings(args) -> OdeSettings:
    if args.method == "rk4":
        return OdeSettings(method="rk4", step=args.step)
    return OdeSettings(rtol=args.ode_tol, atol=args.ode_tol * 1e-2)


def cmd_geodesic(args):
    pos = _floats(args.pos, 3, "--pos")
    vel = _floats(args.vel, 3, "--vel")
    if not args.tmax > 0:
        raise UsageError("--tmax must be positive")
    path = geo.integrate_geodesic(geo.GeodesicState(pos, vel), args.tmax, _ode_settings(args))
    prov = _provenance(args, energy_drift=_fmt(path.energy_drift()), samples=len(path.t))
    return render(args.format, prov, GEODESIC_COLUMNS, list(path.rows()))


def cmd_shoot(args):
    start = _floats(getattr(args, "from"), 3, "--from")
    target = _floats(args.to, 3, "--to")
    if np.array_equal(start, target):
        raise UsageError("--from and --to must differ")
    res = geo.shoot(start, target, tol=args.tol)
    summary = {
        "velocity": res.velocity,
        "miss": res.miss,
        "iterations": res.iterations,
        "restarts": res.restarts,
        "converged": bool(res.converged),
        "length": geo.arc_length(res.path),
    }
    text = render(args.format, _provenance(args), GEODESIC_COLUMNS, list(res.path.rows()), report={"shoot": summary})
    if not res.converged:
        _emit(args, text)
        raise geo.NoConvergence(f"miss {res.miss:.3g} above tolerance {args.tol:.3g}")
    return text


def cmd_levelset(args):
    if args.radius is None and args.rho is None:
        raise UsageError("one of --radius or --rho is required")
    radius = args.radius if args.radius is not None else gh.rho_level_radius(args.rho)
    spec = gh.LevelSetSpec(args.entropy_level, radius, args.samples)
    theta, pts, mate = gh.intersection_arrays(spec)
    rows = [(t, *p, m) for t, p, m in zip(theta, pts, mate)]
    prov = _provenance(
        args,
        resolved_radius=_fmt(radius),
        rho_level=_fmt(spec.rho_level),
        scalar_curvature=_fmt(spec.scalar_curvature),
    )
    return render(args.format, prov, ["theta", "x1", "x2", "x3", "mate"], rows)


def cmd_equiv(args):
    phi = _log_from_args(args)
    rule = _quad_rule(args)
    family = ent.GaussianFamily.solving(phi, mean=args.mu)
    if args.sweep:
        rng = np.random.default_rng(args.seed)
        points = []
        while len(points) < args.sweep:
            x = rng.uniform(-3.0, 3.0, 3)
            try:
                ent.sigma_closed(phi, gh.entropy(x))
            except GhGeomError:
                continue
            points.append(x)
    else:
        points = [_floats(args.point, 3, "--point")]
    results = [ent.equivalence_residual(phi, family, x, rule) for x in points]
    columns = ["x1", "x2", "x3", "entropy", "sigma", "integral", "residual", "quad_error"]
    rows = [(*r.point, r.entropy, r.sigma, r.integral, r.residual, r.error) for r in results]
    report = {
        "log": phi.label(),
        "max_abs_residual": max(abs(r.residual) for r in results),
    }
    if not args.sweep:
        report["report"] = results[0].as_dict()
    if args.format == "json":
        return render("json", _provenance(args, quad_kind=rule.kind), columns, rows, report=report)
    return render("csv", _provenance(args, quad_kind=rule.kind), columns, rows, report=report)


def cmd_nu(args):
    nu = _nu_from_args(args)
    x = _floats(args.point, 3, "--point")
    rep, _ = _curvature_at(x, args.source, nu=nu)
    e = rep.principal
    e2 = e[0] * e[1] + e[0] * e[2] + e[1] * e[2]
    report = _report_json(rep)
    report["nu_entropy"] = gh.nu_entropy(nu, x)
    report["gauss_defect"] = rep.scalar - 2.0 * e2
    if args.format == "json":
        return render("json", _provenance(args), report=report)
    rows = [("nu_entropy", report["nu_entropy"]), ("gauss_defect", report["gauss_defect"])]
    return render("csv", _provenance(args), ["quantity", "value"], rows + _report_rows(rep))


# ---------------------------------------------------------------- parser


def _add_common(p, default_format="csv"):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def _add_nu(p, required=False):
    p.add_argument("--nu", choices=("identity", "power", "exp"), required=required,
                   help="scale function of the deformed entropy")
    p.add_argument("--alpha", type=float, help="exponent for --nu power (default 2)")
    p.add_argument("--base", type=float, help="base a > 1 for --nu exp (default e)")
    p.add_argument("--b", type=float, help="exponent b > 0 for --nu exp (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghgeom", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"ghgeom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="all invariants at one point")
    p.add_argument("--point", required=True, help="x1,x2,x3")
    p.add_argument("--source", choices=("closed", "generic", "fd"), default="closed")
    _add_common(p, "json")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("map", help="a field sampled on an (x1, x3) grid")
    p.add_argument("--field", choices=MAP_FIELDS, required=True)
    p.add_argument("--grid", default="x1=-5:5:41,x3=-5:5:41", help="x1=lo:hi:n,x3=lo:hi:n")
    p.add_argument("--x2", type=float, default=0.0)
    _add_nu(p)
    _add_common(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("geodesic", help="integrate a geodesic from initial data")
    p.add_argument("--pos", required=True, help="x1,x2,x3 at t=0")
    p.add_argument("--vel", required=True, help="dx1,dx2,dx3 at t=0")
    p.add_argument("--tmax", type=float, default=5.0)
    p.add_argument("--method", choices=("dopri45", "rk4"), default="dopri45")
    p.add_argument("--ode-tol", type=float, default=1e-10)
    p.add_argument("--step", type=float, default=1e-3, help="fixed step for --method rk4")
    _add_common(p)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("shoot", help="geodesic between two states")
    p.add_argument("--from", required=True, help="x1,x2,x3 start")
    p.add_argument("--to", required=True, help="x1,x2,x3 target")
    p.add_argument("--tol", type=float, default=1e-8)
    _add_common(p)
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("levelset", help="entropy level set crossed with a curvature cylinder")
    p.add_argument("--entropy-level", type=float, required=True)
    p.add_argument("--radius", type=float)
    p.add_argument("--rho", type=float, help="nominal level -4/(R^2+2) in [-1, 0) instead of --radius")
    p.add_argument("--samples", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=cmd_levelset)

    p = sub.add_parser("equiv", help="residual of the entropy equivalence equation")
    p.add_argument("--log", choices=("natural", "tsallis", "kaniadakis"), default="natural")
    p.add_argument("--q", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--point", default="1,1,1")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--quad-tol", type=float, default=1e-10)
    p.add_argument("--quad-nodes", type=int, help="use the fixed Gauss-Hermite rule with this many nodes")
    p.add_argument("--sweep", type=int, default=0, help="evaluate at this many random admissible points")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, "json")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("nu", help="invariants of the nu-deformed entropy surface")
    _add_nu(p, required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--source", choices=("generic", "fd"), default="generic")
    _add_common(p, "json")
    p.set_defaults(func=cmd_nu)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ghgeom {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except GhGeomError as exc:
        print(f"ghgeom {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(args, text)
    return 0
