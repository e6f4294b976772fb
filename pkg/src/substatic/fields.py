"""The vector field X and its divergence for radial solutions.

``X = f grad|grad u|^2 + (2/n) f grad u - Hess f grad(u^2) - (2/n) u grad f
- 2u Hess u grad f + 2u^2 (Hess f / f) grad f``

is radial when ``u`` is, so everything reduces to its ``d/drho`` component.
Solutions are any object with ``geom`` and ``evaluate(rho) -> (jet, u, u', u'')``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .curvature import q_from_jet

log = logging.getLogger(__name__)


class PDEResidualError(ValueError):
    pass


class StepTooLargeError(ValueError):
    pass


class WrongGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class XSample:
    rho: np.ndarray
    terms: tuple
    value: np.ndarray


@dataclass(frozen=True)
class FieldSample:
    rho: np.ndarray
    x_radial: np.ndarray
    div_closed: np.ndarray
    traceless_term: np.ndarray
    q_term: np.ndarray
    div_numeric: np.ndarray = None


def _pole_safe(jet, du, d2u):
    """``h'/h u'`` and ``h''/h`` with their limits at a pole (``h = 0``)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        at_pole = jet.h == 0
        tang_u = np.where(at_pole, d2u, jet.h1 / jet.h * du)
        curv = np.where(at_pole, jet.h3 / jet.h1, jet.h2 / jet.h)
    return tang_u, curv


def eval_X(geom, sol, rho) -> XSample:
    """Radial component of X with its six summands kept separately."""
    rho = np.asarray(rho, dtype=float)
    jet, u, du, d2u = sol.evaluate(rho)
    n = geom.n
    f, f1, f2 = jet.f, jet.f1, jet.f2
    terms = (
        f * 2 * du * d2u,
        (2 / n) * f * du,
        -2 * f2 * u * du,
        -(2 / n) * u * f1,
        -2 * u * d2u * f1,
        2 * u**2 * jet.hess_ratio * f1,
    )
    if log.isEnabledFor(logging.DEBUG):
        for k, t in enumerate(terms, 1):
            log.debug("X summand %d: %s", k, np.array2string(np.atleast_1d(t), precision=6))
    return XSample(rho, terms, sum(terms))


def pde_residual(geom, jet, u, du, d2u):
    tang_u, curv = _pole_safe(jet, du, d2u)
    lap_u = d2u + (geom.n - 1) * tang_u
    lap_f_over_f = jet.hess_ratio + (geom.n - 1) * curv
    return lap_u + 1 - lap_f_over_f * u


def traceless_and_q(geom, jet, u, du, d2u):
    """``|Hess u - (Delta u/n) g - u(Hess f/f - Delta f/(n f) g)|^2`` and
    ``Q(grad u - (u/f) grad f, same)``.

    ``Q(d/drho, d/drho)`` vanishes identically on warped products with
    ``f = h'``, so the Q-term is extended by zero where ``f = 0``.
    """
    n = geom.n
    tang_u, curv = _pole_safe(jet, du, d2u)
    lap_u = d2u + (n - 1) * tang_u
    w = jet.hess_ratio + (n - 1) * curv
    t_rad = d2u - lap_u / n - u * (jet.hess_ratio - w / n)
    t_tan = tang_u - lap_u / n - u * (curv - w / n)
    traceless = t_rad**2 + (n - 1) * t_tan**2
    with np.errstate(divide="ignore", invalid="ignore"):
        q_rad, _ = q_from_jet(jet, n, geom.spec.c)
        v = du - u * jet.f1 / jet.f
        # at a pole v = 0 since u' = f' = 0
        q_term = np.where((jet.f == 0) | (jet.h == 0), 0.0, q_rad * v * v)
    return traceless, q_term


def div_X_closed(geom, sol, rho, tol=1e-8) -> FieldSample:
    """Divergence of X from the closed formula ``2 f |T|^2 + 2 Q(v, v)``.

    Raises `PDEResidualError` when the supplied jet does not solve the
    equation to ``tol`` (relative), since the formula assumes it does.
    """
    rho = np.asarray(rho, dtype=float)
    jet, u, du, d2u = sol.evaluate(rho)
    res = pde_residual(geom, jet, u, du, d2u)
    scale = 1.0 + np.abs(u) * np.abs(jet.hess_ratio) + np.abs(d2u)
    if np.any(np.abs(res) > tol * scale):
        raise PDEResidualError(f"PDE residual {np.max(np.abs(res)):.3g} exceeds {tol:g}")
    traceless, q_term = traceless_and_q(geom, jet, u, du, d2u)
    x = eval_X(geom, sol, rho).value
    return FieldSample(rho, x, 2 * jet.f * traceless + 2 * q_term, traceless, q_term)


def div_X_numeric(geom, sol, rho, step) -> np.ndarray:
    """Central difference of ``h^(1-n) d/drho (h^(n-1) X_rho)``."""
    rho = np.asarray(rho, dtype=float)
    lo, hi = _solution_range(sol)
    if np.any(rho - 2 * step < lo) or np.any(rho + 2 * step > hi):
        raise StepTooLargeError("point closer than 2*step to the domain boundary")
    n = geom.n

    def flux(t):
        jet = sol.evaluate(t)[0]
        return jet.h ** (n - 1) * eval_X(geom, sol, t).value

    h = sol.evaluate(rho)[0].h
    return (flux(rho + step) - flux(rho - step)) / (2 * step * h ** (n - 1))


def divergence_scale(geom, sol, rho, step) -> float:
    """Largest numerical divergence among the six summands of X.

    The natural size for relative comparisons when ``div X`` itself
    vanishes, as on umbilical space-form balls.
    """
    rho = np.asarray(rho, dtype=float)
    n = geom.n

    def fluxes(t):
        jet = sol.evaluate(t)[0]
        return [jet.h ** (n - 1) * term for term in eval_X(geom, sol, t).terms]

    h = sol.evaluate(rho)[0].h
    up, down = fluxes(rho + step), fluxes(rho - step)
    return max(float(np.max(np.abs((a - b) / (2 * step * h ** (n - 1))))) for a, b in zip(up, down))


def _solution_range(sol):
    if hasattr(sol, "rho_min"):
        return sol.rho_min, sol.rho_max
    cont = sol.continuous
    return max(cont.rho_min, float(sol.rho[0])), float(sol.rho[-1])


def divergence_convergence(geom, sol, rho, step, levels=3):
    """Closed-vs-numeric divergence gap under step halving.

    Returns ``(steps, gaps, orders, extrapolated_gap)`` where ``gaps`` are
    max-norm differences and the extrapolation is Richardson on the numeric
    divergence (order 2 then 4).
    """
    closed = div_X_closed(geom, sol, rho).div_closed
    steps = step * 0.5 ** np.arange(levels)
    nums = [div_X_numeric(geom, sol, rho, s) for s in steps]
    gaps = np.array([np.max(np.abs(d - closed)) for d in nums])
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(gaps[:-1] / gaps[1:])
    table = nums
    for p in (2, 4)[: levels - 1]:
        table = [(2**p * table[i + 1] - table[i]) / (2**p - 1) for i in range(len(table) - 1)]
    extrap = np.max(np.abs(table[0] - closed))
    return steps, gaps, orders, extrap


@dataclass(frozen=True)
class PFunctionResult:
    rho: np.ndarray
    P: np.ndarray
    divergence_gap: np.ndarray
    laplacian: np.ndarray
    subharmonic_gap: np.ndarray


@dataclass(frozen=True)
class FemPFunctionResult:
    P: np.ndarray
    boundary_max: float
    interior_max: float

    @property
    def max_on_boundary(self) -> bool:
        return self.boundary_max >= self.interior_max


def p_function(sol, K=None):
    """``P_K = |grad u|^2 + (2/n) u + K u^2`` at the nodes of a solution.

    For radial solutions also returns, at interior nodes, the gap between
    ``div X`` and ``f Delta P_K`` (finite differences) and between
    ``Delta P_K`` and ``2 |Hess u - (Delta u/n) g|^2``.  Pointwise
    ``X = f grad P_K`` holds only where ``f`` is constant, so only the
    divergences are compared.  For flat FEM solutions (``K = 0``)
    the recovered gradient is used and the boundary and interior maxima
    are reported.
    """
    from .solver.fem import FemSolution

    if isinstance(sol, FemSolution):
        if K not in (None, 0, 0.0):
            raise WrongGeometryError("FEM solutions live in flat space (K = 0)")
        P = np.sum(sol.gradient**2, axis=1) + sol.u
        return FemPFunctionResult(P, float(P[~sol.interior].max()), float(P[sol.interior].max()))
    geom = sol.geom
    if not geom.is_space_form:
        raise WrongGeometryError("the P-function reduction needs a space form")
    K = geom.spec.curvature if K is None else K
    n = geom.n
    rho = getattr(sol, "rho", None)
    if rho is None:
        rho = np.linspace(sol.rho_min, sol.rho_max, 513)
    jet, u, du, d2u = sol.evaluate(rho)
    P = du**2 + (2 / n) * u + K * u**2
    d = rho[1] - rho[0]
    lap = np.full_like(P, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap[1:-1] = (P[2:] - 2 * P[1:-1] + P[:-2]) / d**2 + (n - 1) * jet.h1[1:-1] / jet.h[1:-1] * (
            P[2:] - P[:-2]
        ) / (2 * d)
    traceless, q_term = traceless_and_q(geom, jet, u, du, d2u)
    div_closed = 2 * jet.f * traceless + 2 * q_term
    return PFunctionResult(rho, P, div_closed - jet.f * lap, lap, lap - 2 * traceless)


def write_field_csv(path, sample: FieldSample):
    cols = ["rho", "x_radial", "div_closed", "div_numeric", "traceless_term", "q_term"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        num = sample.div_numeric if sample.div_numeric is not None else np.full_like(sample.rho, np.nan)
        for row in zip(sample.rho, sample.x_radial, sample.div_closed, num, sample.traceless_term, sample.q_term):
            w.writerow([f"{v:.17g}" for v in row])
