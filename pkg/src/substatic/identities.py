"""Horizon constants and the integral identities of the torsion problem.

All radial integrals are per unit cross-section area: a bulk integral is
``int F h^(n-1) drho`` and a slice contributes ``G h^(n-1)``.  Flat FEM
integrals are over the actual planar domain.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np
from scipy.integrate import simpson

from .curvature import ricci_from_jet
from .fields import traceless_and_q
from .models import horizon_data
from .solver.convergence import observed_order, richardson
from .solver.fem import FemSolution

RESIDUAL_FLOOR = 1e-14
DEFICIT_TOL = 1e-9
INEQUALITY_TOL = 1e-8


class HorizonConstantError(ValueError):
    pass


class NonPositiveMeanCurvatureError(ValueError):
    pass


class UnsupportedSurfaceError(ValueError):
    pass


# ---------------------------------------------------------------- constants


@dataclass(frozen=True)
class HorizonConstant:
    """The Dirichlet value on the horizon and the quantities behind it.

    ``ratio`` is ``int|grad f| / int|grad f|(Delta f/f - ...)`` and
    ``closed_form`` its value ``h/((n-1) h'')``; ``value`` is the constant
    that cancels the horizon terms of the main identity, ``(n-1)/n * ratio``.
    """

    value: float
    ratio: float
    closed_form: float
    flux_density: float
    weighted_density: float

    @property
    def agreement(self) -> float:
        return abs(self.ratio - self.closed_form) / abs(self.closed_form)


def horizon_constant(geom) -> HorizonConstant:
    hd = horizon_data(geom)
    j = geom.jet(geom.horizon)
    n = geom.n
    area = float(j.h) ** (n - 1)
    flux = hd.surface_gravity * area
    weighted = hd.surface_gravity * hd.integrand_limit * area
    if not weighted > 0:
        raise HorizonConstantError("horizon integral is not positive; no mean-convex exterior slice")
    ratio = flux / weighted
    closed = float(j.h) / ((n - 1) * float(j.h2))
    return HorizonConstant((n - 1) / n * ratio, ratio, closed, flux, weighted)


def compute_c(geom, convention: str = "cancelling") -> float:
    """Horizon Dirichlet value.

    ``"cancelling"`` (default) returns ``h/(n h'')``, the value for which the
    horizon terms of the main identity vanish.  ``"ratio"`` returns the plain
    ratio ``h/((n-1) h'')``.
    """
    hc = horizon_constant(geom)
    if convention == "cancelling":
        return hc.value
    if convention == "ratio":
        return hc.ratio
    raise ValueError(f"unknown convention {convention!r}")


@dataclass(frozen=True)
class HorizonPositivity:
    value: float
    positive: bool
    minus_ric_normal: float
    static_agreement: float


def horizon_positivity(geom) -> HorizonPositivity:
    """``|grad f| (Delta f/f - ...)`` on the horizon, per unit area.

    Also compares the bracket with ``-Ric(nu, nu)`` taken as a limit from
    the exterior, which is how they coincide on static horizons.
    """
    hd = horizon_data(geom)
    value = hd.surface_gravity * hd.integrand_limit
    minus_ric = -float(ricci_from_jet(geom.jet(geom.horizon), geom.n, geom.spec.c)[0])
    gap = abs(minus_ric - hd.integrand_limit) / max(abs(hd.integrand_limit), RESIDUAL_FLOOR)
    return HorizonPositivity(value, bool(value > 0), minus_ric, gap)


# -------------------------------------------------------- integration layer


@dataclass(frozen=True)
class _Slice:
    rho: float
    area: float  # h^(n-1)
    f: float
    grad: float  # |u'|
    H: float  # mean curvature for the outward normal of the domain


@dataclass
class _Pieces:
    """Everything an identity needs, reduced to numbers and arrays."""

    n: int
    bulk_f: float
    bulk_traceless: float
    bulk_q: float
    slices: List[_Slice]
    c: float = 0.0
    horizon_flux: float = 0.0  # int_N |grad f|
    horizon_weighted: float = 0.0  # int_N |grad f| (Delta f/f - ...)
    resolution: object = None
    volume: float = None


def _gauss_nodes(a, b, panels=16, order=16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _radial_pieces(geom, sol, horizon_c=None) -> _Pieces:
    n = geom.n
    if hasattr(sol, "rho") and hasattr(sol, "domain"):
        rho = sol.rho
        jet, u, du, d2u = sol.evaluate(rho)

        def integrate(y):
            return float(simpson(y * jet.h ** (n - 1), x=rho))

        inner = sol.domain.inner
        lo, hi = float(rho[0]), float(rho[-1])
        du_lo, du_hi = float(du[0]), float(du[-1])
        c = sol.c_inner
        resolution = sol.nodes
    else:
        lo, hi = sol.rho_min, sol.rho_max
        rho, w = _gauss_nodes(lo, hi)
        jet, u, du, d2u = sol.evaluate(rho)

        def integrate(y):
            return float(np.sum(w * y * jet.h ** (n - 1)))

        inner = sol.domain.inner if hasattr(sol, "domain") else "radius"
        du_lo = float(sol.evaluate(np.array([lo]))[2][0])
        du_hi = float(sol.evaluate(np.array([hi]))[2][0])
        c = float(sol.evaluate(np.array([lo]))[1][0]) if inner == "horizon" else 0.0
        resolution = "exact"

    traceless, q_term = traceless_and_q(geom, jet, u, du, d2u)
    p = _Pieces(
        n,
        integrate(jet.f),
        integrate(jet.f * traceless),
        integrate(q_term),
        [],
        resolution=resolution,
    )
    jo = sol.evaluate(np.array([hi]))[0]
    p.slices.append(_Slice(hi, float(jo.h[0]) ** (n - 1), float(jo.f[0]), abs(du_hi), (n - 1) * float(jo.h1[0] / jo.h[0])))
    if inner not in ("horizon", "center"):
        ji = sol.evaluate(np.array([lo]))[0]
        p.slices.append(_Slice(lo, float(ji.h[0]) ** (n - 1), float(ji.f[0]), abs(du_lo), -(n - 1) * float(ji.h1[0] / ji.h[0])))
    if inner == "horizon":
        hd = horizon_data(geom)
        area = float(geom.jet(geom.horizon).h) ** (n - 1)
        p.c = c
        p.horizon_flux = hd.surface_gravity * area
        p.horizon_weighted = hd.surface_gravity * hd.integrand_limit * area
    return p


def _fem_pieces(sol: FemSolution) -> _Pieces:
    """Flat pieces with ``f = 1`` through the general weighted formulas."""
    mesh = sol.mesh
    mass = mesh.vertex_mass()
    H = sol.hessian
    lap = H[:, 0, 0] + H[:, 1, 1]
    n = 2
    # general tensor: Hess u - (Delta u/n) g - u (Hess f/f - Delta f/(n f) g), Hess f = 0
    T = H - (lap / n)[:, None, None] * np.eye(2)
    traceless = np.einsum("vij,vij->v", T, T)
    f = np.ones_like(sol.u)
    q_term = np.zeros_like(sol.u)  # Q vanishes in flat space
    w = mesh.boundary_weights()
    grad = sol.boundary_gradient_norm
    p = _Pieces(n, float(mass @ f), float(mass @ (f * traceless)), float(mass @ q_term), [], resolution=len(mesh.triangles))
    p.volume = float(mesh.areas.sum())
    p.slices = [_Slice(math.nan, float(wi), 1.0, float(g), float(k)) for wi, g, k in zip(w, grad, mesh.boundary_curvature)]
    return p


def _pieces(geom, sol) -> _Pieces:
    if isinstance(sol, FemSolution):
        return _fem_pieces(sol)
    return _radial_pieces(geom, sol)


def _bsum(p: _Pieces, fn):
    return float(sum(s.area * fn(s) for s in p.slices))


# --------------------------------------------------------------- reporting


@dataclass
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    terms: Dict[str, float] = field(default_factory=dict)
    deficits: tuple = ()
    resolution: object = None
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def residual_abs(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def residual_rel(self) -> float:
        return self.residual_abs / max(abs(self.lhs), abs(self.rhs), RESIDUAL_FLOOR)

    @property
    def residual_scaled(self) -> float:
        """Residual relative to the largest individual term.

        Meaningful when both sides vanish and ``residual_rel`` is noise.
        """
        scale = max([abs(self.lhs), abs(self.rhs)] + [abs(v) for v in self.terms.values()] + [RESIDUAL_FLOOR])
        return self.residual_abs / scale

    @property
    def verdict_residual(self) -> float:
        """``residual_rel``, or ``residual_scaled`` once both sides have
        cancelled to below 1e-3 of the largest term."""
        big = max([abs(v) for v in self.terms.values()] + [RESIDUAL_FLOOR])
        if max(abs(self.lhs), abs(self.rhs)) > 1e-3 * big:
            return self.residual_rel
        return self.residual_scaled

    @property
    def deficit_verdicts(self) -> Dict[str, bool]:
        return {k: self.terms[k] >= -DEFICIT_TOL for k in self.deficits}

    @property
    def passed(self) -> bool:
        return all(self.deficit_verdicts.values()) and all(self.flags.get(k, True) for k in ("inequality",))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["deficits"] = list(self.deficits)
        d.update(
            residual_abs=self.residual_abs,
            residual_rel=self.residual_rel,
            residual_scaled=self.residual_scaled,
            deficit_verdicts=self.deficit_verdicts,
        )
        return d

    def csv_row(self) -> dict:
        row = {
            "identity": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual_abs": self.residual_abs,
            "residual_rel": self.residual_rel,
            "residual_scaled": self.residual_scaled,
            "resolution": self.resolution,
        }
        row.update({f"term_{k}": v for k, v in self.terms.items()})
        return row


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v


def write_reports_csv(path_or_file, reports):
    rows = [r.csv_row() for r in reports]
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    finally:
        if own:
            fh.close()


def reports_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, default=str)


def extrapolate_reports(levels: List[IdentityReport], orders=(2, 4)) -> IdentityReport:
    """Richardson-extrapolate every number in a coarse-to-fine report list."""
    last = levels[-1]
    vals = levels[-3:] if len(levels) >= 3 else levels

    def ex(get):
        return richardson([get(r) for r in vals], orders)

    out = IdentityReport(
        last.name,
        ex(lambda r: r.lhs),
        ex(lambda r: r.rhs),
        {k: ex(lambda r, k=k: r.terms[k]) for k in last.terms},
        last.deficits,
        f"extrapolated({','.join(str(r.resolution) for r in vals)})",
        dict(last.flags),
    )
    return out


def residual_order(levels: List[IdentityReport]) -> float:
    r = [lv.residual_abs for lv in levels[-3:]]
    # residuals shrink towards 0, so the order is read from consecutive ratios
    return observed_order(r[0], r[1], r[2]) if r[2] != 0 else math.inf


# --------------------------------------------------------------- constants


@dataclass
class Constants:
    c: float
    R: float
    Hbar: float
    bulk_f: float
    boundary_f_grad: float
    horizon_term: float

    @property
    def volume_balance_residual(self) -> float:
        return self.bulk_f - (self.boundary_f_grad - self.horizon_term)


def _constants_from(p: _Pieces) -> Constants:
    n = p.n
    sigma_f = _bsum(p, lambda s: s.f)
    R = (p.bulk_f + p.c * p.horizon_flux) / sigma_f
    return Constants(
        p.c,
        R,
        (n - 1) / (n * R),
        p.bulk_f,
        _bsum(p, lambda s: s.f * s.grad),
        p.c * p.horizon_flux,
    )


def compute_constants(geom, sol) -> Constants:
    """``R``, ``Hbar`` and the three volume-balance integrals."""
    return _constants_from(_pieces(geom, sol))


def check_volume_balance(geom, sol) -> IdentityReport:
    k = compute_constants(geom, sol)
    p = _pieces(geom, sol)
    return IdentityReport(
        "volume_balance",
        k.bulk_f,
        k.boundary_f_grad - k.horizon_term,
        {"bulk_f": k.bulk_f, "boundary_f_grad": k.boundary_f_grad, "horizon_term": k.horizon_term},
        (),
        p.resolution,
    )


# --------------------------------------------------------------- identities


def check_main_identity(geom, sol) -> IdentityReport:
    """Bulk ``div X`` plus horizon bracket against the boundary flux terms.

    The bulk uses the closed-form divergence, so agreement tests the
    divergence theorem rather than restating it.  Any positive horizon value
    is allowed.
    """
    p = _pieces(geom, sol)
    n = p.n
    a = (n - 1) / n
    bulk_div = 2 * p.bulk_traceless + 2 * p.bulk_q
    bracket = 2 * (a * p.c * p.horizon_flux - p.c**2 * p.horizon_weighted)
    b_h = -2 * _bsum(p, lambda s: s.f * s.grad**2 * s.H)
    b_flux = 2 * a * _bsum(p, lambda s: s.f * s.grad)
    terms = {
        "bulk_traceless": p.bulk_traceless,
        "bulk_q": p.bulk_q,
        "horizon_bracket": bracket,
        "boundary_mean_curvature": b_h,
        "boundary_flux": b_flux,
    }
    return IdentityReport("main_identity", bulk_div + bracket, b_h + b_flux, terms, ("bulk_traceless", "bulk_q"), p.resolution)


def _alexandrov_terms(p: _Pieces):
    n = p.n
    k = _constants_from(p)
    R, Hbar = k.R, k.Hbar
    boundary = (n - 1) / n / R * _bsum(p, lambda s: s.f * (R - s.grad) ** 2)
    rhs = _bsum(p, lambda s: s.f * s.grad**2 * (Hbar - s.H))
    return k, boundary, rhs


def check_alexandrov(geom, sol, tol=1e-6) -> IdentityReport:
    """Three nonnegative deficits against ``int f |grad u|^2 (Hbar - H)``.

    Needs the cancelling horizon value of `compute_c` when a horizon is
    present; ``umbilical`` is flagged when the right side is below ``tol``
    relative to the boundary scale.
    """
    p = _pieces(geom, sol)
    if p.horizon_flux:
        c_star = compute_c(geom)
        if abs(p.c - c_star) > 1e-9 * c_star:
            raise HorizonConstantError(f"horizon value {p.c} differs from the cancelling constant {c_star}")
    k, boundary, rhs = _alexandrov_terms(p)
    terms = {"bulk_traceless": p.bulk_traceless, "bulk_q": p.bulk_q, "boundary_deviation": boundary, "R": k.R, "Hbar": k.Hbar}
    scale = _bsum(p, lambda s: s.f * s.grad**2 * abs(s.H)) or 1.0
    rep = IdentityReport(
        "alexandrov",
        p.bulk_traceless + p.bulk_q + boundary,
        rhs,
        terms,
        ("bulk_traceless", "bulk_q", "boundary_deviation"),
        p.resolution,
    )
    rep.flags["umbilical"] = bool(abs(rhs) <= tol * scale)
    return rep


def check_magnanini_poggesi(sol: FemSolution) -> IdentityReport:
    """The flat identity computed directly from the recovered Hessian.

    Shares no code with the weighted path of `check_alexandrov` beyond the
    solution arrays, so the two serve as cross-checks.
    """
    if not isinstance(sol, FemSolution):
        raise TypeError("expected a FemSolution")
    mesh = sol.mesh
    mass = mesh.vertex_mass()
    H = sol.hessian
    tr = 0.5 * (H[:, 0, 0] + H[:, 1, 1])
    dev = (H[:, 0, 0] - tr) ** 2 + (H[:, 1, 1] - tr) ** 2 + 2 * H[:, 0, 1] ** 2
    bulk = float(mass @ dev)
    w = mesh.boundary_weights()
    g = sol.boundary_gradient_norm
    kappa = mesh.boundary_curvature
    volume = float(mesh.areas.sum())
    perimeter = float(w.sum())
    R = volume / perimeter
    Hbar = 1 / (2 * R)
    boundary = 0.5 / R * float(w @ (R - g) ** 2)
    lhs = float(w @ (g**2 * (Hbar - kappa)))
    terms = {"bulk_traceless": bulk, "boundary_deviation": boundary, "R": R, "Hbar": Hbar}
    rep = IdentityReport("magnanini_poggesi", lhs, bulk + boundary, terms, ("bulk_traceless", "boundary_deviation"), len(mesh.triangles))
    # Hoelder consequence with p = 2: ||H - Hbar||_2 >= bulk / || |grad u|^2 ||_2
    l2_dev = math.sqrt(float(w @ (kappa - Hbar) ** 2))
    l2_grad = math.sqrt(float(w @ g**4))
    rep.terms["l2_mean_curvature_deviation"] = l2_dev
    rep.flags["quantitative_bound"] = bool(l2_dev >= bulk / l2_grad - 1e-12)
    return rep


def check_heintze_karcher(geom, sol) -> IdentityReport:
    """Deficit form of the Heintze-Karcher inequality.

    ``lhs = n/(n-1) (bulk deficits) + (n-1)/n int (f/H)(1 - n/(n-1) H|grad u|)^2``
    and ``rhs = (n-1)/n int f/H - int f - c int_N |grad f|`` with ``c`` from
    `compute_c`; the inequality verdict is ``rhs >= -1e-8 * scale``.  The
    identity ``lhs = rhs`` additionally needs the solution to carry that
    ``c`` on the horizon (flag ``identity_applicable``).
    """
    p = _pieces(geom, sol)
    if any(not s.H > 0 for s in p.slices):
        raise NonPositiveMeanCurvatureError("boundary is not strictly mean-convex")
    n = p.n
    a = (n - 1) / n
    bulk = (p.bulk_traceless + p.bulk_q) / a
    boundary = a * _bsum(p, lambda s: s.f / s.H * (1 - s.H * s.grad / a) ** 2)
    willmore = a * _bsum(p, lambda s: s.f / s.H)
    volume = p.bulk_f
    # the inequality is geometric: its horizon weight is the cancelling
    # constant whatever Dirichlet value the solution carries
    c_star = compute_c(geom) if p.horizon_flux else 0.0
    horizon = c_star * p.horizon_flux
    rhs = willmore - volume - horizon
    terms = {
        "bulk_deficit": bulk,
        "boundary_deficit": boundary,
        "weighted_inverse_mean_curvature": willmore,
        "bulk_f": volume,
        "horizon_term": horizon,
    }
    rep = IdentityReport("heintze_karcher", bulk + boundary, rhs, terms, ("bulk_deficit", "boundary_deficit"), p.resolution)
    scale = max(abs(willmore), abs(volume) + abs(horizon))
    rep.flags["inequality"] = bool(rhs >= -INEQUALITY_TOL * scale)
    rep.flags["equality"] = bool(abs(rhs) <= 1e-6 * scale)
    # lhs = rhs needs the solution built with that same constant
    rep.flags["identity_applicable"] = bool(not p.horizon_flux or abs(p.c - c_star) <= 1e-9 * c_star)
    return rep


# ------------------------------------------------------------ umbilicality


@dataclass(frozen=True)
class UmbilicalityReport:
    deficit: float
    ricci_gap: float = None
    note: str = ""


def umbilicality_deficit(geom_or_mesh, surface) -> UmbilicalityReport:
    """L2 norm of the traceless second fundamental form of a surface.

    ``surface`` is a slice coordinate for a warped product (slices are
    umbilical; the Ricci eigenvalue gap at the slice is reported) or
    ``"boundary"`` for a planar mesh (curves are trivially umbilical).
    """
    from .solver.mesh import PlanarMesh

    if isinstance(geom_or_mesh, PlanarMesh):
        if surface != "boundary":
            raise UnsupportedSurfaceError("planar meshes only support their boundary curve")
        return UmbilicalityReport(0.0, None, "planar curves are umbilical")
    geom = geom_or_mesh
    try:
        x = float(surface)
    except (TypeError, ValueError) as exc:
        raise UnsupportedSurfaceError(f"unsupported surface {surface!r}") from exc
    geom.check_coord(x)
    r, t = ricci_from_jet(geom.jet(x), geom.n, geom.spec.c)
    return UmbilicalityReport(0.0, float(abs(r - t)), "slices of a warped product are umbilical")
