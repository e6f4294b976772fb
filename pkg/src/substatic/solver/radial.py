"""Radial reduction of ``Delta u = -1 + (Delta f / f) u`` on warped products.

On a rotationally symmetric domain the problem is the two-point boundary
value problem

    u'' + (n-1) (h'/h) u' - (Delta f / f) u = -1

in arc length.  The horizon is a regular point in arc length (it is not in
the area-radius chart), so all grids are uniform in ``rho``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from ..models import WarpedGeometry

MIN_NODES = 64


class SolverError(RuntimeError):
    pass


class SingularMatrixError(SolverError):
    pass


class NonConvergenceError(SolverError):
    pass


@dataclass(frozen=True)
class RadialDomain:
    """Annulus or ball ``{inner < coord < outer}`` in native coordinates.

    ``inner`` is ``"horizon"``, ``"center"`` or a coordinate value; in the
    last case ``u = 0`` on both boundary slices.
    """

    inner: Union[str, float]
    outer: float

    def validate(self, geom: WarpedGeometry):
        if self.inner == "horizon":
            if geom.horizon is None:
                raise ValueError(f"{geom.family} has no horizon")
            lo = geom.horizon
        elif self.inner == "center":
            if not geom.has_center:
                raise ValueError(f"{geom.family} has no center")
            lo = geom.lower
        else:
            lo = float(self.inner)
            geom.check_coord(lo)
        if not lo < self.outer:
            raise ValueError("inner boundary must lie below the outer one")
        geom.check_coord(self.outer)
        return lo


def _lap_coefficients(geom, jet):
    n = geom.n
    with np.errstate(divide="ignore", invalid="ignore"):
        drift = (n - 1) * jet.h1 / jet.h
        # at a pole h''/h -> h'''/h'
        curv = np.where(jet.h == 0, jet.h3 / jet.h1, jet.h2 / jet.h)
    return drift, jet.hess_ratio + (n - 1) * curv


def _arc_grid(geom, lo, outer, nodes):
    rho_lo = float(geom.rho_of(lo))
    rho_hi = float(geom.rho_of(outer))
    rho = np.linspace(rho_lo, rho_hi, nodes)
    coord = geom.coord_of(rho, coord_max=outer)
    coord[0], coord[-1] = lo, outer
    return rho, coord


def _fd_solve(geom, domain, lo, c_inner, nodes):
    rho, coord = _arc_grid(geom, lo, domain.outer, nodes)
    jet = geom.jet(coord)
    drift, pot = _lap_coefficients(geom, jet)
    d = rho[1] - rho[0]
    N = nodes
    ab = np.zeros((3, N))
    rhs = np.full(N, -1.0)
    i = np.arange(1, N - 1)
    ab[0, i + 1] = 1 / d**2 + drift[i] / (2 * d)
    ab[1, i] = -2 / d**2 - pot[i]
    ab[2, i - 1] = 1 / d**2 - drift[i] / (2 * d)
    # outer slice, decoupled so the Dirichlet value is kept exactly
    ab[1, N - 1] = 1.0
    rhs[N - 1] = 0.0
    ab[0, N - 1] = 0.0
    if domain.inner == "center":
        # u'(0) = 0 via the even reflection u_{-1} = u_1; (n-1)u'/rho -> (n-1)u''
        n = geom.n
        ab[1, 0] = -2 * n / d**2 - pot[0]
        ab[0, 1] = 2 * n / d**2
        drift = drift.copy()
        drift[0] = 0.0
    else:
        ab[1, 0] = 1.0
        ab[0, 1] = 0.0
        rhs[0] = c_inner if domain.inner == "horizon" else 0.0
        rhs[1] -= ab[2, 0] * rhs[0]
        ab[2, 0] = 0.0
    try:
        u = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise SingularMatrixError("non-finite radial solution")
    return rho, coord, jet, drift, pot, u


def _first_derivative(u, d, center):
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2 * d)
    # fourth-order one-sided ends keep the boundary error in even powers of d
    w = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / (12 * d)
    du[-1] = w @ u[-1:-6:-1]
    if center:
        du[0] = 0.0
    else:
        du[0] = -(w @ u[:5])
    return du


@dataclass(frozen=True)
class RadialSolution:
    """Nodal solution on a uniform arc-length grid.

    ``du`` is the second-order finite difference, ``d2u`` is read off the
    equation itself.  ``achieved_order`` compares the solve against two
    refinements (``inf`` when the scheme is exact to rounding).
    """

    geom: WarpedGeometry
    domain: RadialDomain
    c_inner: float
    rho: np.ndarray
    coord: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    jet: object
    potential: np.ndarray
    achieved_order: float

    @property
    def n(self):
        return self.geom.n

    @property
    def nodes(self):
        return self.rho.size

    @property
    def step(self):
        return float(self.rho[1] - self.rho[0])

    @property
    def boundary_flux(self):
        return abs(float(self.du[-1]))

    @property
    def has_horizon(self):
        return self.domain.inner == "horizon"

    @property
    def has_center(self):
        return self.domain.inner == "center"

    def residual(self):
        """Discrete residual of ``Delta u + 1 - (Delta f/f) u`` at interior nodes."""
        d = self.step
        u = self.u
        d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / d**2
        drift, _ = _lap_coefficients(self.geom, self.jet)
        lap = d2 + drift[1:-1] * self.du[1:-1]
        return lap + 1 - self.potential[1:-1] * u[1:-1]

    def evaluate(self, rho):
        """``(jet, u, u', u'')`` at arc lengths; grid nodes are returned exactly."""
        rho = np.asarray(rho, dtype=float)
        idx = np.rint((rho - self.rho[0]) / self.step).astype(int)
        on_grid = (
            np.all(idx >= 0)
            and np.all(idx < self.nodes)
            and np.allclose(self.rho[np.clip(idx, 0, self.nodes - 1)], rho, rtol=0, atol=1e-12)
        )
        if on_grid:
            return self.geom.jet(self.coord[idx]), self.u[idx], self.du[idx], self.d2u[idx]
        return self.continuous.evaluate(rho)

    @cached_property
    def continuous(self):
        return RadialInterpolant.from_outer_boundary(self.geom, self.rho[-1], self.coord[-1], self.du[-1], self.rho[0])


def solve_radial(geom: WarpedGeometry, domain: RadialDomain, c_inner=None, nodes: int = 1024, check_order=True) -> RadialSolution:
    """Second-order centred finite differences plus a tridiagonal solve.

    Parameters
    ----------
    geom : WarpedGeometry
    domain : RadialDomain
    c_inner : float, optional
        Dirichlet value on the horizon; required and positive when
        ``domain.inner == "horizon"``.
    nodes : int
        Grid nodes including both ends.  Fewer than 64 only warns.
    check_order : bool
        Re-solve on two refinements and raise `NonConvergenceError` when the
        observed order drops below 1.5.
    """
    lo = domain.validate(geom)
    if domain.inner == "horizon":
        if c_inner is None or not c_inner > 0:
            raise ValueError("horizon boundary value must be positive")
        c_inner = float(c_inner)
    else:
        c_inner = 0.0
    if nodes < 5:
        raise ValueError("need at least 5 nodes")
    if nodes < MIN_NODES:
        warnings.warn(f"under-resolved radial grid ({nodes} < {MIN_NODES} nodes)", stacklevel=2)

    rho, coord, jet, drift, pot, u = _fd_solve(geom, domain, lo, c_inner, nodes)
    d = rho[1] - rho[0]
    center = domain.inner == "center"
    du = _first_derivative(u, d, center)
    d2u = -1 + pot * u - drift * du
    if center:
        d2u[0] = (-1 + pot[0] * u[0]) / geom.n

    order = math.nan
    if check_order:
        M = nodes - 1
        u2 = _fd_solve(geom, domain, lo, c_inner, 2 * M + 1)[-1]
        u4 = _fd_solve(geom, domain, lo, c_inner, 4 * M + 1)[-1]
        e1 = np.max(np.abs(u - u2[::2]))
        e2 = np.max(np.abs(u2[::2] - u4[::4]))
        # rounding in the banded solve grows like the condition number, ~N^2
        floor = (4 * M) ** 2 * np.finfo(float).eps * max(1.0, np.max(np.abs(u)))
        if e1 <= floor:
            order = math.inf
        else:
            order = math.log2(e1 / max(e2, 1e-300))
            if nodes >= MIN_NODES and order < 1.5:
                raise NonConvergenceError(f"observed order {order:.3g} < 1.5")
    return RadialSolution(geom, domain, c_inner, rho, coord, u, du, d2u, jet, pot, order)


class RadialInterpolant:
    """A radial solution of the equation evaluated anywhere by dense IVP output.

    Built by integrating the ODE inward from the outer slice with
    ``u = 0`` and a given slope; for area-radius charts the state carries
    ``s = sqrt(r - r0)``, which is smooth in arc length through the horizon.
    """

    def __init__(self, geom, sol, rho_min, rho_max, area):
        self.geom = geom
        self._sol = sol
        self.rho_min = rho_min
        self.rho_max = rho_max
        self._area = area

    @property
    def n(self):
        return self.geom.n

    @classmethod
    def from_outer_boundary(cls, geom, rho_out, coord_out, slope, rho_in, rtol=1e-13):
        area = geom.chart == "area_radius"
        r0 = geom.horizon if area else None
        stop = rho_in
        if geom.has_center and rho_in <= geom.lower + 1e-14:
            stop = rho_in + 1e-3 * (rho_out - rho_in)

        def rhs(t, y):
            if area:
                s, u, du = y
                coord = r0 + s * s
            else:
                u, du = y
                coord = t
            j = geom.jet(coord)
            drift, pot = _lap_coefficients(geom, j)
            d2u = -1 + pot * u - drift * du
            if area:
                ds = 0.5 * math.sqrt(float(geom._potential.V_over_gap(coord, r0)))
                return [ds, du, float(d2u)]
            return [du, float(d2u)]

        y0 = [0.0, float(slope)]
        if area:
            y0 = [math.sqrt(coord_out - r0)] + y0
        sol = solve_ivp(rhs, (rho_out, stop), y0, method="DOP853", rtol=rtol, atol=1e-15, dense_output=True)
        if not sol.success:
            raise SolverError(sol.message)
        return cls(geom, sol, stop, rho_out, area)

    def coord(self, rho):
        if self._area:
            s = self._sol.sol(np.asarray(rho, dtype=float))[0]
            return self.geom.horizon + s * s
        return np.asarray(rho, dtype=float)

    def evaluate(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < self.rho_min - 1e-12) or np.any(rho > self.rho_max + 1e-12):
            raise ValueError("point outside the interpolated range")
        y = self._sol.sol(rho)
        if self._area:
            s, u, du = y
            coord = np.maximum(self.geom.horizon + s * s, self.geom.horizon)
        else:
            u, du = y
            coord = rho
        j = self.geom.jet(coord)
        drift, pot = _lap_coefficients(self.geom, j)
        return j, u, du, -1 + pot * u - drift * du


class ExactBallSolution:
    """Closed-form solution on a geodesic ball of a space form.

    ``u = (R^2 - rho^2)/(2n)`` when ``K = 0`` and ``u = (f/f(R) - 1)/(n K)``
    otherwise, with ``f = h'``.
    """

    def __init__(self, geom, radius):
        if not geom.is_space_form:
            raise ValueError("closed form only available on space forms")
        geom.check_coord(radius)
        self.geom = geom
        self.radius = float(radius)
        self.rho_min = 0.0
        self.rho_max = self.radius
        self.domain = RadialDomain("center", self.radius)
        self.c_inner = 0.0

    @property
    def n(self):
        return self.geom.n

    def evaluate(self, rho):
        rho = np.asarray(rho, dtype=float)
        n, K = self.geom.n, self.geom.spec.curvature
        j = self.geom.jet(rho)
        if K == 0:
            R = self.radius
            u, du, d2u = (R**2 - rho**2) / (2 * n), -rho / n, np.full_like(rho, -1.0 / n)
        else:
            f2 = float(self.geom.jet(self.radius).h1)
            u = (j.f / f2 - 1) / (n * K)
            du, d2u = j.f1 / (f2 * n * K), j.f2 / (f2 * n * K)
        return j, u, du, d2u

    @property
    def boundary_flux(self):
        return abs(float(self.evaluate(self.radius)[2]))
