import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import umbilical_solution
from substatic.identities import compute_c
from substatic.models import ModelSpec, build_model
from substatic.solver.convergence import RadialProblem, observed_order, refine_and_extrapolate, richardson
from substatic.solver.fem import hopf_positivity_check
from substatic.solver.radial import ExactBallSolution, RadialDomain, solve_radial


def _pde_residual_symbolic(u, h, n):
    """``u'' + (n-1)(h'/h) u' + 1 - (f''/f + (n-1) h''/h) u`` with ``f = h'``."""
    rho = sp.Symbol("rho")
    u, h = u(rho), h(rho)
    f = sp.diff(h, rho)
    lap = sp.diff(u, rho, 2) + (n - 1) * sp.diff(h, rho) / h * sp.diff(u, rho)
    w = sp.diff(f, rho, 2) / f + (n - 1) * sp.diff(h, rho, 2) / h
    return sp.simplify(lap + 1 - w * u)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_flat_ball_oracle_solves_pde(n):
    R = sp.Rational(1)
    assert _pde_residual_symbolic(lambda r: (R**2 - r**2) / (2 * n), lambda r: r, n) == 0


def test_hemisphere_cap_oracle_solves_pde():
    r2 = sp.pi / 3
    assert _pde_residual_symbolic(lambda r: (sp.cos(r) / sp.cos(r2) - 1) / 2, sp.sin, 2) == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_flat_ball(n):
    geom = build_model(ModelSpec("flat", n))
    sol = solve_radial(geom, RadialDomain("center", 1.0), nodes=1024)
    exact = (1 - sol.rho**2) / (2 * n)
    assert np.max(np.abs(sol.u - exact)) <= 1e-6
    assert sol.boundary_flux == pytest.approx(1 / n, rel=1e-6)


def test_hemisphere_cap(hemisphere):
    r2 = math.pi / 3
    sol = solve_radial(hemisphere, RadialDomain("center", r2), nodes=1024)
    exact = (np.cos(sol.rho) / math.cos(r2) - 1) / 2
    assert np.max(np.abs(sol.u - exact)) <= 1e-6
    assert sol.achieved_order == pytest.approx(2.0, abs=0.2)
    np.testing.assert_allclose(ExactBallSolution(hemisphere, r2).evaluate(sol.rho)[1], exact, rtol=1e-14, atol=1e-15)


def test_schwarzschild_annulus_properties(schwarzschild):
    sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), c_inner=4.0, nodes=4096)
    assert np.all(sol.u[1:-1] > 0)
    assert sol.du[-1] < 0
    assert np.max(np.abs(sol.residual())) <= 1e-8
    assert sol.u[0] == 4.0


def test_cancelling_value_gives_umbilical_solution(schwarzschild):
    c = compute_c(schwarzschild)
    sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), c_inner=c, nodes=2049)
    V = lambda r: 1 - 2 / r  # noqa: E731
    idx = np.arange(64, sol.nodes - 1, 128)
    ref = np.array([umbilical_solution(V, float(sol.coord[i]), 4.0, 3) for i in idx])
    np.testing.assert_allclose(sol.u[idx], ref, rtol=2e-6)
    assert sol.boundary_flux == pytest.approx(4 / (3 * math.sqrt(0.5)), rel=1e-6)


@pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
def test_hopf_on_horizon_values(schwarzschild, c):
    sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), c_inner=c, nodes=1024)
    d = hopf_positivity_check(sol)
    assert d.positive_interior and d.hopf


def test_inner_radius_annulus_hopf_both_ends(schwarzschild):
    sol = solve_radial(schwarzschild, RadialDomain(3.0, 6.0), nodes=1024)
    d = hopf_positivity_check(sol)
    assert d.ok
    assert sol.du[0] > 0  # outward normal at the inner slice is -d/drho


def test_refinement_hemisphere_flux(hemisphere):
    r2 = math.pi / 3
    rep = refine_and_extrapolate(RadialProblem(hemisphere, RadialDomain("center", r2), base_intervals=128), levels=3)
    assert rep.orders["boundary_flux"] == pytest.approx(2.0, abs=0.2)
    assert rep.extrapolated["boundary_flux"] == pytest.approx(math.tan(r2) / 2, abs=1e-9)


def test_refinement_flat_disk_flux(flat2):
    rep = refine_and_extrapolate(RadialProblem(flat2, RadialDomain("center", 1.0), base_intervals=64), levels=3)
    # the scheme reproduces quadratics, so the error is at rounding level
    assert rep.orders["boundary_flux"] == math.inf or rep.orders["boundary_flux"] == pytest.approx(2.0, abs=0.2)
    assert rep.extrapolated["boundary_flux"] == pytest.approx(0.5, abs=1e-6)


def test_uniqueness_surrogate(schwarzschild):
    dom = RadialDomain("horizon", 4.0)
    a = refine_and_extrapolate(RadialProblem(schwarzschild, dom, 4.0, base_intervals=128), levels=3)
    b = refine_and_extrapolate(RadialProblem(schwarzschild, dom, 4.0, base_intervals=192), levels=3)
    assert a.extrapolated["boundary_flux"] == pytest.approx(b.extrapolated["boundary_flux"], rel=1e-6)


def test_nodal_error_is_second_order(hemisphere):
    r2 = math.pi / 3
    errs = []
    for nodes in (129, 257, 513):
        sol = solve_radial(hemisphere, RadialDomain("center", r2), nodes=nodes)
        errs.append(np.max(np.abs(sol.u - (np.cos(sol.rho) / math.cos(r2) - 1) / 2)))
    assert math.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.2)


def test_interpolant_agrees_with_grid(schwarzschild):
    sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), c_inner=2.0, nodes=1025)
    mid = 0.5 * (sol.rho[100:900:50] + sol.rho[101:901:50])
    u_cont = sol.continuous.evaluate(mid)[1]
    np.testing.assert_allclose(u_cont, np.interp(mid, sol.rho, sol.u), rtol=1e-5)


def test_under_resolution_warns(schwarzschild):
    with pytest.warns(UserWarning, match="under-resolved"):
        sol = solve_radial(schwarzschild, RadialDomain("horizon", 4.0), c_inner=1.0, nodes=8, check_order=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hopf_positivity_check(sol)


@pytest.mark.parametrize(
    "domain, c, nodes",
    [
        (RadialDomain("horizon", 4.0), 0.0, 256),
        (RadialDomain("horizon", 4.0), None, 256),
        (RadialDomain(5.0, 4.0), None, 256),
        (RadialDomain("center", 4.0), None, 256),
        (RadialDomain("horizon", 4.0), 1.0, 3),
    ],
)
def test_invalid_inputs(schwarzschild, domain, c, nodes):
    with pytest.raises(ValueError):
        solve_radial(schwarzschild, domain, c, nodes=nodes)


def test_richardson_and_order_helpers():
    h = 0.1 * 0.5 ** np.arange(3)
    vals = 1.0 + 3 * h**2 + 5 * h**4
    assert richardson(vals, (2, 4)) == pytest.approx(1.0, abs=1e-14)
    assert observed_order(*vals) == pytest.approx(2.0, abs=0.1)
    with pytest.raises(ValueError):
        refine_and_extrapolate(None, levels=2)


@settings(max_examples=15, deadline=None)
@given(m=st.floats(0.5, 2.0), stretch=st.floats(1.3, 4.0), c=st.floats(0.05, 20.0))
def test_maximum_principle_surrogate(m, stretch, c):
    geom = build_model(ModelSpec("schwarzschild", 3, m=m))
    sol = solve_radial(geom, RadialDomain("horizon", stretch * geom.horizon), c_inner=c, nodes=256)
    assert np.all(sol.u[1:-1] > 0)
    assert sol.du[-1] < 0
