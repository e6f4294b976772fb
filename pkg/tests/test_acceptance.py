"""The eleven acceptance criteria at their stated tolerances.

Each test records one line through the ``acceptance`` fixture; the summary
is printed at the end of the pytest run.
"""

import math

import numpy as np
import pytest
import sympy as sp

from oracles import ellipse_identity_terms, horizon_ratio_limit
from substatic.curvature import check_brendle, q_from_jet, sample_grid
from substatic.fields import div_X_closed, divergence_convergence, divergence_scale, p_function
from substatic.identities import (
    check_alexandrov,
    check_heintze_karcher,
    check_magnanini_poggesi,
    check_main_identity,
    check_volume_balance,
    compute_c,
    extrapolate_reports,
    horizon_constant,
    horizon_positivity,
)
from substatic.solver.convergence import FemProblem, RadialProblem
from substatic.solver.fem import hopf_positivity_check, solve_flat_fem
from substatic.solver.mesh import ellipse_mesh
from substatic.solver.radial import RadialDomain, solve_radial

from conftest import CATALOG, HORIZON_MODELS, STATIC_MODELS, outer_slice

CHECKS = {
    "main": check_main_identity,
    "volume": check_volume_balance,
    "alexandrov": check_alexandrov,
    "hk": check_heintze_karcher,
}


def _round_problem(geom, c=None):
    outer = outer_slice(geom)
    if geom.horizon is None:
        return RadialProblem(geom, RadialDomain("center", outer))
    return RadialProblem(geom, RadialDomain("horizon", outer), compute_c(geom) if c is None else c)


def _run(problem, names):
    sols = [problem.solve(k) for k in range(3)]
    levels = {k: [CHECKS[k](problem.geom, s) for s in sols] for k in names}
    return sols, levels


@pytest.fixture(scope="module")
def round_runs(catalog):
    """Three-level solves on the round slice of every catalog model (cancelling c)."""
    return {name: _run(_round_problem(geom), CHECKS) for name, geom in catalog.items()}


@pytest.fixture(scope="module")
def horizon_value_runs(schwarzschild):
    """Schwarzschild [2, 4] with arbitrary horizon values."""
    return {c: _run(_round_problem(schwarzschild, c), ("main", "volume", "hk")) for c in (0.1, 1.0, 4.0, 10.0)}


@pytest.fixture(scope="module")
def ellipse_runs():
    prob = FemProblem("ellipse", {"a": 1.5, "b": 1.0}, base_rings=16)
    return [prob.solve(k) for k in range(3)]


def _relative_divergence_gap(geom, sol, rho, step):
    steps, gaps, orders, extrap = divergence_convergence(geom, sol, rho, step)
    closed = float(np.max(np.abs(div_X_closed(geom, sol, rho).div_closed)))
    terms = divergence_scale(geom, sol, rho, step)
    # when div X vanishes identically, compare with the size of its summands
    scale = closed if closed > 1e-3 * terms else terms
    return orders, extrap / scale


def test_criterion_01_divergence_formula(acceptance, schwarzschild, hemisphere):
    schw = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), 1.0, nodes=1025).continuous
    cap = solve_radial(hemisphere, RadialDomain("center", math.pi / 3), nodes=1025).continuous
    results = []
    for label, geom, sol, lo, hi, step in (
        ("schwarzschild", schwarzschild, schw, schw.rho_min, schw.rho_max, 0.02),
        ("hemisphere", hemisphere, cap, 0.0, math.pi / 3, 0.004),
    ):
        rho = np.linspace(lo, hi, 52)[1:-1]
        orders, rel = _relative_divergence_gap(geom, sol, rho, step)
        results.append((label, float(np.min(orders)), rel))
    ok = all(o >= 1.8 and r <= 1e-8 for _, o, r in results)
    acceptance(1, ok, ", ".join(f"{l}: order {o:.3f}, rel {r:.2e}" for l, o, r in results))
    assert ok


def test_criterion_02_nonnegativity(acceptance, catalog):
    worst_div, worst_q, worst_static = math.inf, math.inf, 0.0
    for name, geom in catalog.items():
        x = sample_grid(geom, 64)
        q_r, q_t = q_from_jet(geom.jet(x), geom.n, geom.spec.c)
        worst_q = min(worst_q, float(np.min(q_r)), float(np.min(q_t)))
        if name in STATIC_MODELS:
            worst_static = max(worst_static, float(np.max(np.abs(q_r))), float(np.max(np.abs(q_t))))
        outer = outer_slice(geom)
        for c in ((None,) if geom.horizon is None else (1.0, compute_c(geom))):
            dom = RadialDomain("center" if geom.horizon is None else "horizon", outer)
            sol = solve_radial(geom, dom, c, nodes=513)
            worst_div = min(worst_div, float(np.min(div_X_closed(geom, sol, sol.rho).div_closed)))
    ok = worst_div >= -1e-9 and worst_q >= -1e-9 and worst_static <= 1e-9
    acceptance(2, ok, f"min div X {worst_div:.2e}, min Q {worst_q:.2e}, max |Q| static {worst_static:.2e}")
    assert ok


def _substitutes_to_zero(u, h, n):
    rho = sp.Symbol("rho")
    u, h = u(rho), h(rho)
    f = sp.diff(h, rho)
    lap = sp.diff(u, rho, 2) + (n - 1) * sp.diff(h, rho) / h * sp.diff(u, rho)
    w = sp.diff(f, rho, 2) / f + (n - 1) * sp.diff(h, rho, 2) / h
    return sp.simplify(lap + 1 - w * u) == 0


def test_criterion_03_closed_form_oracles(acceptance, catalog, flat2, hemisphere):
    r2 = math.pi / 3
    verified = _substitutes_to_zero(lambda r: (1 - r**2) / 6, lambda r: r, 3) and _substitutes_to_zero(
        lambda r: (sp.cos(r) / sp.cos(sp.pi / 3) - 1) / 2, sp.sin, 2
    )
    cases = []
    for label, geom, R, exact in (
        ("flat n=3", catalog["flat"], 1.0, lambda r: (1 - r**2) / 6),
        ("flat n=2", flat2, 1.0, lambda r: (1 - r**2) / 4),
        ("hemisphere", hemisphere, r2, lambda r: (np.cos(r) / math.cos(r2) - 1) / 2),
    ):
        sol = solve_radial(geom, RadialDomain("center", R), nodes=1024)
        cases.append((label, float(np.max(np.abs(sol.u - exact(sol.rho))))))
    ok = verified and all(e <= 1e-6 for _, e in cases)
    acceptance(3, ok, f"oracles verified: {verified}; " + ", ".join(f"{l} {e:.1e}" for l, e in cases))
    assert ok


def test_criterion_04_p_function(acceptance, flat2, catalog):
    devs = []
    for geom in (flat2, catalog["flat"]):
        res = p_function(solve_radial(geom, RadialDomain("center", 1.0), nodes=1025))
        devs.append(float(np.max(np.abs(res.P - 1 / geom.n**2))))
    fem = p_function(solve_flat_fem(ellipse_mesh(64)))
    ok = max(devs) <= 1e-8 and fem.max_on_boundary
    acceptance(
        4,
        ok,
        f"flat ball max |P - R^2/n^2| {max(devs):.1e}; ellipse max P boundary {fem.boundary_max:.6f} >= interior {fem.interior_max:.6f}",
    )
    assert ok


def test_criterion_05_horizon_constant(acceptance, catalog, schwarzschild):
    agreements = {name: horizon_constant(catalog[name]).agreement for name in HORIZON_MODELS}
    hc = horizon_constant(schwarzschild)
    eps_limit = horizon_ratio_limit("1 - 2/r", 2.0, 3)
    eps_ratio = 0.25 / (0.25 * eps_limit)
    positive = {name: horizon_positivity(catalog[name]).positive for name in HORIZON_MODELS}
    ok = (
        max(agreements.values()) <= 1e-8
        and abs(hc.ratio - 4.0) <= 1e-8
        and abs(eps_ratio - 4.0) <= 1e-8
        and all(positive.values())
    )
    acceptance(
        5,
        ok,
        f"ratio {hc.ratio:.12g} (eps-limit {eps_ratio:.12g}), worst agreement {max(agreements.values()):.1e}, "
        f"positivity on {sum(positive.values())}/{len(positive)} horizon models; identities use h/(n h'') = {hc.value:.12g}",
    )
    assert ok


def test_criterion_06_main_identity(acceptance, horizon_value_runs, schwarzschild):
    rels = {c: extrapolate_reports(horizon_value_runs[c][1]["main"]).residual_rel for c in (1.0, 4.0, 10.0)}
    sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), compute_c(schwarzschild), nodes=1025)
    bracket = abs(check_main_identity(schwarzschild, sol).terms["horizon_bracket"])
    ok = max(rels.values()) <= 1e-6 and bracket <= 1e-10
    acceptance(6, ok, ", ".join(f"c={c:g}: {r:.1e}" for c, r in rels.items()) + f"; bracket at compute_c {bracket:.1e}")
    assert ok


def test_criterion_07_alexandrov(acceptance, round_runs, catalog, ellipse_runs):
    worst_term, worst_h = -math.inf, 0.0
    for name, (sols, levels) in round_runs.items():
        geom = catalog[name]
        ex = extrapolate_reports(levels["alexandrov"])
        worst_term = max([worst_term] + [abs(ex.terms[k]) for k in ex.deficits])
        j = geom.jet(outer_slice(geom))
        H = (geom.n - 1) * float(j.h1 / j.h)
        worst_h = max(worst_h, abs(H - ex.terms["Hbar"]) / ex.terms["Hbar"])
    ex = extrapolate_reports([check_alexandrov(None, s) for s in ellipse_runs], (2, 3))
    exact = ellipse_identity_terms(1.5, 1.0)
    flat_ok = ex.lhs > 0 and ex.rhs > 0 and ex.residual_rel <= 1e-2
    ok = worst_term <= 1e-6 and worst_h <= 1e-6 and flat_ok
    acceptance(
        7,
        ok,
        f"round slices: max deficit {worst_term:.1e}, max |H-Hbar|/Hbar {worst_h:.1e}; "
        f"ellipse lhs {ex.lhs:.7f} rhs {ex.rhs:.7f} (exact {exact['lhs']:.7f}), rel {ex.residual_rel:.1e}",
    )
    assert ok


def test_criterion_08_heintze_karcher(acceptance, round_runs, horizon_value_runs, ellipse_runs):
    residuals, inequality, equality = [], [], []
    for name, (_, levels) in round_runs.items():
        ex = extrapolate_reports(levels["hk"])
        residuals.append(ex.verdict_residual)
        inequality += [r.flags["inequality"] for r in levels["hk"]]
        equality.append(ex.flags["equality"])
    for _, levels in horizon_value_runs.values():
        inequality += [r.flags["inequality"] for r in levels["hk"]]
    ellipse = [check_heintze_karcher(None, s) for s in ellipse_runs]
    inequality += [r.flags["inequality"] for r in ellipse]
    ellipse_strict = not any(r.flags["equality"] for r in ellipse)
    ok = max(residuals) <= 1e-6 and all(inequality) and all(equality) and ellipse_strict
    acceptance(
        8,
        ok,
        f"max extrapolated residual {max(residuals):.1e}; inequality true in {sum(inequality)}/{len(inequality)} runs; "
        f"equality on {sum(equality)}/{len(equality)} round slices, strict on the ellipse: {ellipse_strict}",
    )
    assert ok


def test_criterion_09_volume_balance(acceptance, round_runs, horizon_value_runs, schwarzschild, ellipse_runs):
    radial = [extrapolate_reports(levels["volume"]).residual_rel for _, levels in round_runs.values()]
    radial += [extrapolate_reports(levels["volume"]).residual_rel for _, levels in horizon_value_runs.values()]
    annulus = RadialProblem(schwarzschild, RadialDomain(3.0, 6.0))
    radial.append(extrapolate_reports(_run(annulus, ("volume",))[1]["volume"]).residual_rel)
    fem = extrapolate_reports([check_volume_balance(None, s) for s in ellipse_runs], (2, 3)).residual_rel
    ok = max(radial) <= 1e-8 and fem <= 1e-3
    acceptance(9, ok, f"radial max {max(radial):.1e} over {len(radial)} problems; FEM {fem:.1e}")
    assert ok


def test_criterion_10_hopf(acceptance, round_runs, horizon_value_runs, ellipse_runs):
    sols = [s for sols, _ in round_runs.values() for s in sols]
    sols += [s for sols, _ in horizon_value_runs.values() for s in sols]
    sols += ellipse_runs
    diags = [hopf_positivity_check(s) for s in sols]
    ok = all(d.ok for d in diags)
    acceptance(10, ok, f"{sum(d.ok for d in diags)}/{len(diags)} solves positive with outward derivative < 0 (incl. c = 0.1, 1, 10)")
    assert ok


def test_criterion_11_brendle(acceptance, catalog):
    schw = check_brendle(catalog["schwarzschild"])
    schw_ok = all((schw.h0_ok, schw.h1_ok, schw.h2_ok, schw.h3_ok, schw.h4_ok))
    forms = {k: check_brendle(catalog[k]) for k in ("flat", "hemisphere", "hyperbolic")}
    h4_fail = all(not r.h4_ok for r in forms.values())
    flat_h1 = not forms["flat"].h1_ok
    ok = schw_ok and h4_fail and flat_h1
    acceptance(11, ok, f"schwarzschild passes H0-H4: {schw_ok}; space forms fail H4: {h4_fail}; flat fails H1: {flat_h1}")
    assert ok
