"""Ricci, Hessian and substaticity tensor of warped products.

Warped-product Ricci and the Hessian of ``f = f(rho)`` are simultaneously
diagonal: one eigenvalue on ``d/drho`` and one, with multiplicity ``n - 1``,
on unit cross-section directions.  Everything here returns those eigenvalues.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .models import ProfileJet, WarpedGeometry


@dataclass(frozen=True)
class CurvatureSample:
    ric_radial: np.ndarray
    ric_tangential: np.ndarray
    q_radial: np.ndarray
    q_tangential: np.ndarray
    mean_curvature: np.ndarray


def ricci_from_jet(jet: ProfileJet, n: int, c: float):
    ric_r = -(n - 1) * jet.h2 / jet.h
    ric_t = -jet.h2 / jet.h + (n - 2) * (c - jet.h1**2) / jet.h**2
    return ric_r, ric_t


def hessian_f_from_jet(jet: ProfileJet):
    """Eigenvalues of ``nabla nabla f``: ``f''`` and ``(h'/h) f' = f h''/h``."""
    return jet.f2, jet.h1 * jet.h2 / jet.h


def q_from_jet(jet: ProfileJet, n: int, c: float):
    ric_r, ric_t = ricci_from_jet(jet, n, c)
    hf_r, hf_t = hessian_f_from_jet(jet)
    lap_f = hf_r + (n - 1) * hf_t
    return jet.f * ric_r - hf_r + lap_f, jet.f * ric_t - hf_t + lap_f


def ricci_eigen(geom: WarpedGeometry, coord):
    """Radial and tangential Ricci eigenvalues at an interior point."""
    geom.check_coord(coord)
    return ricci_from_jet(geom.jet(coord), geom.n, geom.spec.c)


def q_eigen(geom: WarpedGeometry, coord):
    """Eigenvalues of ``Q = f Ric - nabla nabla f + (Delta f) g``."""
    geom.check_coord(coord)
    return q_from_jet(geom.jet(coord), geom.n, geom.spec.c)


def mean_curvature_slice(geom: WarpedGeometry, coord):
    """``H = (n-1) h'/h`` of ``{rho = const}`` for the normal ``d/drho``.

    Zero on the (minimal) horizon.
    """
    geom.check_coord(coord, closed=True)
    j = geom.jet(coord)
    H = (geom.n - 1) * j.h1 / j.h
    if geom.horizon is not None:
        H = np.where(np.asarray(coord) == geom.horizon, 0.0, H)
    return H[()] if np.ndim(H) == 0 else H


def curvature_sample(geom: WarpedGeometry, coord) -> CurvatureSample:
    geom.check_coord(coord)
    j = geom.jet(coord)
    ric_r, ric_t = ricci_from_jet(j, geom.n, geom.spec.c)
    q_r, q_t = q_from_jet(j, geom.n, geom.spec.c)
    return CurvatureSample(ric_r, ric_t, q_r, q_t, (geom.n - 1) * j.h1 / j.h)


def h3_function(geom: WarpedGeometry, coord):
    """``2 h''/h - (n-2)(c - h'^2)/h^2``; monotone iff ``Q`` tangential >= 0."""
    j = geom.jet(coord)
    return 2 * j.h2 / j.h - (geom.n - 2) * (geom.spec.c - j.h1**2) / j.h**2


def h4_function(geom: WarpedGeometry, coord):
    j = geom.jet(coord)
    return j.h2 / j.h + (geom.spec.c - j.h1**2) / j.h**2


@dataclass
class ConditionReport:
    h0_ok: bool
    h1_ok: bool
    h1prime_ok: bool
    h2_ok: bool
    h3_ok: bool
    h4_ok: bool
    substatic_ok: bool
    implication_ok: bool
    min_q: float
    witnesses: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def sample_grid(geom: WarpedGeometry, size: int) -> np.ndarray:
    """Open-interval sample of native coordinates, denser near the lower end."""
    lo, hi = geom.lower, geom.upper
    if not np.isfinite(hi):
        hi = lo + 10.0 * max(1.0, abs(lo))
    t = (np.arange(1, size + 1) / (size + 1)) ** 1.5
    return lo + (hi - lo) * t


def check_brendle(geom: WarpedGeometry, grid_size: int = 64, tol: float = 1e-10) -> ConditionReport:
    """Evaluate conditions (H0)-(H4), (H1') and substaticity on a sample grid.

    Failures are recorded with a witnessing coordinate and value rather than
    raised.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be >= 16")
    n, c = geom.n, geom.spec.c
    x = sample_grid(geom, grid_size)
    j = geom.jet(x)
    wit = {}

    h0 = bool(np.isfinite(c))
    if not h0:
        wit["h0"] = (None, c)

    if geom.horizon is not None:
        jh = geom.jet(geom.horizon)
        h1 = bool(abs(float(jh.h1)) <= 1e-12 and float(jh.h2) > 0)
        if not h1:
            wit["h1"] = (geom.horizon, (float(jh.h1), float(jh.h2)))
    else:
        j0 = geom.jet(geom.lower)
        h1 = False
        wit["h1"] = (geom.lower, (float(j0.h1), float(j0.h2)))

    h1p = False
    if geom.has_center and c == 1.0:
        j0 = geom.jet(geom.lower)
        small = geom.lower + np.array([1e-3, 2e-3, 4e-3])
        phi = geom.jet(small).h / (small - geom.lower)
        # h = rho phi(rho^2): h(0) = 0, h'(0) = 1, h''(0) = 0, phi -> 1 like rho^2
        h1p = bool(
            abs(float(j0.h)) <= 1e-12
            and abs(float(j0.h1) - 1.0) <= 1e-12
            and abs(float(j0.h2)) <= 1e-12
            and np.all(np.abs(phi - 1.0) <= 10 * (small - geom.lower) ** 2 + 1e-12)
        )
    if not h1p:
        wit["h1prime"] = (geom.lower, float(geom.jet(geom.lower).h))

    h2 = bool(np.all(j.h1 > 0))
    if not h2:
        k = int(np.argmin(j.h1))
        wit["h2"] = (float(x[k]), float(j.h1[k]))

    g3 = h3_function(geom, x)
    dg = np.diff(g3)
    scale3 = max(1.0, float(np.max(np.abs(g3))))
    h3 = bool(np.all(dg >= -tol * scale3))
    if not h3:
        k = int(np.argmin(dg))
        wit["h3"] = (float(x[k]), float(dg[k]))

    g4 = np.abs(h4_function(geom, x))
    h4 = bool(np.min(g4) > tol)
    if not h4:
        k = int(np.argmin(g4))
        wit["h4"] = (float(x[k]), float(g4[k]))

    qr, qt = q_from_jet(j, n, c)
    qmin = float(min(qr.min(), qt.min()))
    qscale = max(1.0, float(np.max(np.abs(qt))))
    sub = qmin >= -1e-9 * qscale
    if not sub:
        wit["substatic"] = (float(x[int(np.argmin(np.minimum(qr, qt)))]), qmin)

    implication = (not (h0 and h2 and h3)) or sub
    return ConditionReport(h0, h1, h1p, h2, h3, h4, sub, implication, qmin, wit)
