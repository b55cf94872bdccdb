"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
"acceptance criteria" section of the pytest terminal summary.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

from ghgeom import cli, monge
from ghgeom import entropy as ent
from ghgeom import geodesic as geo
from ghgeom import ghsurface as gh
from ghgeom.errors import DomainError
from ghgeom.numerics import OdeSettings

SQRT2 = math.sqrt(2.0)
ODE_TOL = OdeSettings(rtol=1e-10, atol=1e-12)


def _points(seed, n=200, lo=-5.0, hi=5.0):
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, 3))


def _max_dev(rep, ref):
    pairs = [
        (rep.forms.g, ref.forms.g),
        (rep.forms.h, ref.forms.h),
        (rep.forms.normal, ref.forms.normal),
        (rep.christoffel, ref.christoffel),
        (rep.riemann, ref.riemann),
        (rep.ricci, ref.ricci),
        (rep.scalar, ref.scalar),
    ]
    return max(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in pairs)


def test_criterion_01_closed_vs_generic(record_criterion):
    exact, fd = gh.entropy_field(), gh.entropy_field(use_fd=True)
    dev_exact = dev_fd = r1313 = 0.0
    for x in _points(101):
        ref = gh.closed_curvatures(x)
        a2 = 2 + x[0] ** 2 + x[2] ** 2
        rep = monge.curvature_report(exact, x)
        dev_exact = max(dev_exact, _max_dev(rep, ref))
        dev_fd = max(dev_fd, _max_dev(monge.curvature_report(fd, x), ref))
        r1313 = max(r1313, abs(rep.riemann[0, 2, 0, 2] + 1 / a2), abs(rep.scalar + 4 / a2**2))
    ok = dev_exact <= 1e-8 and dev_fd <= 1e-5 and r1313 <= 1e-8
    record_criterion(1, "closed forms vs generic engine", ok,
                     f"analytic {dev_exact:.2e} <= 1e-8, finite-diff {dev_fd:.2e} <= 1e-5")
    assert ok


def test_criterion_02_principal_bounds(record_criterion):
    field = gh.entropy_field()
    worst_null, ok_bounds = 0.0, True
    for x in _points(102):
        spec = monge.curvature_report(field, x).principal  # descending: lambda1, 0, lambda2
        lam1, lam2, lam3 = gh.principal_curvatures(x)
        worst_null = max(worst_null, abs(spec[1]), abs(lam3))
        for l1, l2 in ((spec[0], spec[2]), (lam1, lam2)):
            ok_bounds &= 0 < l1 <= SQRT2 / 2 + 1e-15 and -SQRT2 / 2 - 1e-15 <= l2 < 0
    axis = max(abs(gh.principal_curvatures([0, c, 0])[0] - SQRT2 / 2) for c in (-7.0, 0.0, 3.5))
    axis = max(axis, abs(monge.curvature_report(field, [0, 2, 0]).principal[0] - SQRT2 / 2))
    ok = worst_null <= 1e-10 and ok_bounds and axis <= 1e-12
    record_criterion(2, "principal curvature bounds", ok,
                     f"|lambda3| {worst_null:.1e}, bounds {'held' if ok_bounds else 'violated'}, axis dev {axis:.1e}")
    assert ok


def test_criterion_03_scalar_curvature(record_criterion):
    field = gh.entropy_field()
    in_range, rel = True, 0.0
    for x in _points(103):
        rep = monge.curvature_report(field, x)
        in_range &= -1.0 <= rep.scalar < 0.0
        rel = max(rel, abs(rep.scalar - 6 * rep.mean[1]), abs(rep.scalar - 2 / 3 * rep.mean_paper[1]))
    axis = max(abs(monge.curvature_report(field, [0, c, 0]).scalar + 1) for c in (-3.0, 0.0, 8.0))
    monotone = True
    radii = np.logspace(-3, 3, 200)
    for phi in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        rho = np.array([gh.scalar_curvature([r * math.cos(phi), 1.0, r * math.sin(phi)]) for r in radii])
        monotone &= bool(np.all(np.diff(rho) > 0) and rho[-1] < 0 and rho[-1] > -1e-11)
    ok = in_range and axis <= 1e-12 and rel <= 1e-9 and monotone
    record_criterion(3, "scalar curvature range and identities", ok,
                     f"axis dev {axis:.1e}, rho vs 6 H2 {rel:.1e}, rays {'monotone to 0' if monotone else 'FAILED'}")
    assert ok


def test_criterion_04_mean_curvatures(record_criterion):
    field = gh.entropy_field()
    h3 = max(abs(monge.curvature_report(field, x).mean[2]) for x in _points(104))
    dev = 0.0
    for x in _points(105, n=20):
        rep = monge.curvature_report(field, x)
        a = math.sqrt(2 + x[0] ** 2 + x[2] ** 2)
        closed = np.array([6 * x[0] * x[2] / a**3, -6 / a**4])
        dev = max(dev, float(np.max(np.abs(rep.mean_paper[:2] - closed))),
                  float(np.max(np.abs(rep.mean_paper[:2] - 9 * rep.mean[:2]))))
    ok = h3 <= 1e-10 and dev <= 1e-9
    record_criterion(4, "mean curvature scalings", ok, f"|H3| {h3:.1e}, scaled vs 9 H and closed form {dev:.1e}")
    assert ok


def test_criterion_05_geodesics(record_criterion):
    rng = np.random.default_rng(106)
    slow_diag = geo.GeodesicState([1, 1, 1], [1, 10, 1])
    fast_diag = geo.GeodesicState([1, 1, 1], [10, 1, 10])
    inits = [slow_diag, fast_diag] + [geo.GeodesicState(rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)) for _ in range(8)]
    drift = max(geo.integrate_geodesic(s, 10.0, ODE_TOL).energy_drift() for s in inits)

    line = 0.0
    for _ in range(5):
        p, v = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        a = geo.integrate_geodesic(geo.GeodesicState([p[0], p[1], 0], [v[0], v[1], 0]), 10.0, ODE_TOL)
        line = max(line, np.max(np.abs(a.x[:, 2])), np.max(np.abs(a.x[:, 0] - p[0] - v[0] * a.t)),
                   np.max(np.abs(a.x[:, 1] - p[1] - v[1] * a.t)))
        b = geo.integrate_geodesic(geo.GeodesicState([0, p[0], p[1]], [0, v[0], v[1]]), 10.0, ODE_TOL)
        line = max(line, np.max(np.abs(b.x[:, 0])), np.max(np.abs(b.x[:, 1] - p[0] - v[0] * b.t)),
                   np.max(np.abs(b.x[:, 2] - p[1] - v[1] * b.t)))

    diag = geo.integrate_geodesic(slow_diag, 10.0, ODE_TOL)
    inv = geo.diagonal_invariant(diag.x[:, 0])
    fit = np.polyval(np.polyfit(diag.t, inv, 1), diag.t)
    fit_res = float(np.max(np.abs(inv - fit)))

    sym = 0.0
    for s in (slow_diag, fast_diag):
        path = geo.integrate_geodesic(s, 10.0, ODE_TOL)
        sym = max(sym, float(np.max(np.abs(path.x[:, 0] - path.x[:, 2]))))

    ok = drift <= 1e-6 and line <= 1e-9 and fit_res <= 1e-6 and sym <= 1e-8
    record_criterion(5, "geodesic integration", ok,
                     f"drift {drift:.1e}, lines {line:.1e}, diagonal fit {fit_res:.1e}, symmetry {sym:.1e}")
    assert ok


def test_criterion_06_shooting(record_criterion):
    targets = np.random.default_rng(107).uniform(-2, 2, size=(20, 3))
    good = 0
    worst = 0.0
    for t in targets:
        res = geo.shoot([0, 0, 0], t, tol=1e-8)
        if res.converged and res.miss <= 1e-8 and res.iterations <= geo.MAX_NEWTON:
            good += 1
        worst = max(worst, res.miss)
    ok = good >= 19
    record_criterion(6, "geodesic shooting", ok, f"{good}/20 converged, worst miss {worst:.1e}")
    assert ok


LOGS = [
    ent.GeneralizedLog.natural(),
    ent.GeneralizedLog.tsallis(0.5),
    ent.GeneralizedLog.tsallis(1.5),
    ent.GeneralizedLog.kaniadakis(0.25),
    ent.GeneralizedLog.kaniadakis(-0.25),
    ent.GeneralizedLog.kaniadakis(0.5),
    ent.GeneralizedLog.kaniadakis(-0.5),
]


def test_criterion_07_entropy_equivalence(record_criterion):
    rng = np.random.default_rng(108)
    resid = solve_rel = spread = 0.0
    for phi in LOGS:
        family = ent.GaussianFamily.solving(phi)
        pts = []
        while len(pts) < 50:
            x = rng.uniform(-3, 3, 3)
            try:
                ent.sigma_closed(phi, gh.entropy(x))
            except DomainError:
                continue
            pts.append(x)
        for x in pts:
            r = ent.equivalence_residual(phi, family, x)
            resid = max(resid, abs(r.residual))
            solve_rel = max(solve_rel, abs(ent.sigma_solve(phi, r.entropy) / r.sigma - 1))
        spread = max(spread, ent.mu_independence_check(phi, gh.entropy(pts[0]), np.linspace(-100, 100, 5)))
    try:
        ent.sigma_closed(ent.GeneralizedLog.tsallis(2.5), 0.0)
        rejected = False
    except DomainError:
        rejected = True
    ok = resid <= 1e-6 and solve_rel <= 1e-6 and spread <= 1e-8 and rejected
    record_criterion(7, "entropy equivalence", ok,
                     f"residual {resid:.1e}, solve vs closed {solve_rel:.1e}, mean spread {spread:.1e}, "
                     f"q=2.5 {'rejected' if rejected else 'ACCEPTED'}")
    assert ok


def test_criterion_08_intersection_curve(record_criterion):
    rng = np.random.default_rng(109)
    worst = 0.0
    positive = True
    count = 0
    for _ in range(100):
        R, c = rng.uniform(SQRT2, 10), rng.uniform(-10, 10)
        _, pts, mate = gh.intersection_arrays(gh.LevelSetSpec(c, R, samples=100))
        x1, x2, x3 = pts.T
        worst = max(worst,
                    float(np.max(np.abs(x1 * x3 - x2 - c))),
                    float(np.max(np.abs(x1 * x1 + x3 * x3 - R * R))),
                    float(np.max(np.abs(mate**2 + (x2 + c) ** 2 - R**4 / 4))))
        positive &= bool(np.all(x3 > 0))
        count += len(pts)
    ok = count == 10_000 and worst <= 1e-10 and positive
    record_criterion(8, "level-set intersection curve", ok, f"{count} samples, worst {worst:.1e}, x3 > 0 {positive}")
    assert ok


def test_criterion_09_nu_generalization(record_criterion):
    pts = _points(101)
    pts = pts[pts[:, 2] > 0]  # nu lives on (0, inf)
    base, ident = gh.entropy_field(), gh.nu_patch(gh.NuFunction.identity())
    bitwise = True
    for x in pts:
        a, b = monge.curvature_report(base, x), monge.curvature_report(ident, x)
        for name in ("principal", "mean", "christoffel", "riemann", "ricci"):
            bitwise &= np.array_equal(getattr(a, name), getattr(b, name))
        for name in ("g", "h", "normal"):
            bitwise &= np.array_equal(getattr(a.forms, name), getattr(b.forms, name))
        bitwise &= a.scalar == b.scalar
    gauss = 0.0
    rng = np.random.default_rng(110)
    for alpha in (0.5, 2.0):
        field = gh.nu_patch(gh.NuFunction.power(alpha))
        for _ in range(50):
            x = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.1, 3)])
            rep = monge.curvature_report(field, x)
            lam = rep.principal
            e2 = lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2]
            gauss = max(gauss, abs(rep.scalar - 2 * e2))
    ok = bitwise and len(pts) > 50 and gauss <= 1e-8
    record_criterion(9, "nu-deformed surfaces", ok,
                     f"identity bitwise at {len(pts)} points: {bitwise}, rho - 2 e2 {gauss:.1e}")
    assert ok


PLOT_COMMANDS = [
    ["map", "--field", "entropy"],
    ["map", "--field", "H1"],
    ["map", "--field", "H2"],
    ["map", "--field", "lambda1"],
    ["map", "--field", "lambda2"],
    ["map", "--field", "rho"],
    ["geodesic", "--pos", "1,1,1", "--vel", "1,10,1", "--tmax", "5"],
    ["geodesic", "--pos", "1,1,1", "--vel", "10,1,10", "--tmax", "5"],
    ["levelset", "--entropy-level", "1", "--radius", "2"],
]


def test_criterion_10_cli_determinism(record_criterion, tmp_path, monkeypatch):
    identical = 0
    for i, argv in enumerate(PLOT_COMMANDS):
        outs = []
        for run, threads in enumerate(("1", "4")):
            monkeypatch.setenv("GHGEOM_THREADS", threads)
            path = tmp_path / f"plot{i}_{run}.csv"
            assert cli.main(argv + ["--out", str(path)]) == 0
            outs.append(path.read_bytes())
        identical += outs[0] == outs[1] and len(outs[0]) > 0
    # one more run in a fresh interpreter
    fresh = tmp_path / "fresh.csv"
    subprocess.run([sys.executable, "-m", "ghgeom", *PLOT_COMMANDS[1], "--out", str(fresh)], check=True)
    cross = fresh.read_bytes() == (tmp_path / "plot1_0.csv").read_bytes()
    ok = identical == len(PLOT_COMMANDS) and cross
    record_criterion(10, "CLI determinism", ok,
                     f"{identical}/{len(PLOT_COMMANDS)} commands byte-identical, fresh process {cross}")
    assert ok
