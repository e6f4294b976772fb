"""Warped-product model geometries ``g = drho^2 + h(rho)^2 g_N``.

Every model carries the potential ``f = h'(rho)``.  Space forms are
parameterised by arc length ``rho``; black-hole families by the area radius
``r`` (``h = r``) with ``f(r) = sqrt(V(r))`` and

    V(r) = c - 2 m r^(2-n) - K r^2 + q^2 r^(4-2n).

Integrals over slices ``{rho = const}`` are always per unit cross-section
volume.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate

FAMILIES = (
    "flat",
    "hemisphere",
    "hyperbolic",
    "schwarzschild",
    "desitter_schwarzschild",
    "ads_schwarzschild",
    "reissner_nordstrom",
    "custom_profile",
)
SPACE_FORMS = ("flat", "hemisphere", "hyperbolic")
BLACK_HOLES = (
    "schwarzschild",
    "desitter_schwarzschild",
    "ads_schwarzschild",
    "reissner_nordstrom",
)
STATIC_FAMILIES = SPACE_FORMS + BLACK_HOLES[:3]

# width of the linear blend that replaces f''/f next to a numerical horizon
HORIZON_BLEND = 1e-4


class ModelError(ValueError):
    pass


class InvalidDimensionError(ModelError):
    pass


class NoHorizonError(ModelError):
    pass


class NonRegularHorizonError(ModelError):
    pass


class OutOfIntervalError(ModelError):
    pass


class QuadratureError(ModelError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one catalog model.

    ``K`` defaults to +1 for the hemisphere, -1 for hyperbolic space and 0
    otherwise.  ``c`` is the Einstein constant of the cross-section,
    ``Ric_N = (n-2) c g_N``.  ``custom_profile`` needs ``profile`` (a callable
    returning ``(h, h', h'', h''')`` at arc length ``rho``) and ``interval``.
    """

    family: str
    n: int
    m: float = 0.0
    q: float = 0.0
    K: Optional[float] = None
    c: float = 1.0
    profile: Optional[Callable] = field(default=None, compare=False)
    interval: Optional[tuple] = None

    @property
    def curvature(self) -> float:
        if self.K is not None:
            return float(self.K)
        return {"hemisphere": 1.0, "hyperbolic": -1.0}.get(self.family, 0.0)


@dataclass(frozen=True)
class ProfileJet:
    """Warping function and its first three arc-length derivatives.

    ``f = h'``, ``f' = h''`` and ``f'' = h'''``.  ``hess_ratio`` is ``f''/f``
    extended continuously to the horizon and ``dcoord_drho`` is the chart
    factor (``f`` in the area-radius chart, 1 in arc length).
    """

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    hess_ratio: np.ndarray
    dcoord_drho: np.ndarray

    @property
    def f(self):
        return self.h1

    @property
    def f1(self):
        return self.h2

    @property
    def f2(self):
        return self.h3


@dataclass(frozen=True)
class HorizonData:
    location: float
    h: float
    surface_gravity: float
    integrand_limit: float
    oracle_limit: float
    oracle_rel_error: float
    per_unit_area: bool = True


def _power_diff_quotient(r, r0, p):
    """(r^p - r0^p) / (r - r0) without cancellation."""
    r = np.asarray(r, dtype=float)
    d = r - r0
    with np.errstate(invalid="ignore", divide="ignore"):
        q = r0**p * np.expm1(p * np.log1p(d / r0)) / d
    return np.where(d == 0.0, p * r0 ** (p - 1), q)


class _Potential:
    """Lapse squared ``V`` of an area-radius family and its derivatives."""

    def __init__(self, n, m, q, K, c):
        self.n, self.m, self.q, self.K, self.c = n, m, q, K, c

    def V(self, r):
        n, m, q, K, c = self.n, self.m, self.q, self.K, self.c
        r = np.asarray(r, dtype=float)
        return c - 2 * m * r ** (2 - n) - K * r**2 + q**2 * r ** (4 - 2 * n)

    def dV(self, r):
        n, m, q, K = self.n, self.m, self.q, self.K
        r = np.asarray(r, dtype=float)
        return (
            2 * m * (n - 2) * r ** (1 - n)
            - 2 * K * r
            + q**2 * (4 - 2 * n) * r ** (3 - 2 * n)
        )

    def d2V(self, r):
        n, m, q, K = self.n, self.m, self.q, self.K
        r = np.asarray(r, dtype=float)
        return (
            2 * m * (n - 2) * (1 - n) * r ** (-n)
            - 2 * K
            + q**2 * (4 - 2 * n) * (3 - 2 * n) * r ** (2 - 2 * n)
        )

    def V_over_gap(self, r, r0):
        """``V(r) / (r - r0)`` for a root ``r0``; stable as ``r -> r0``."""
        n, m, q, K = self.n, self.m, self.q, self.K
        r = np.asarray(r, dtype=float)
        return (
            -2 * m * _power_diff_quotient(r, r0, 2 - n)
            - K * (r + r0)
            + q**2 * _power_diff_quotient(r, r0, 4 - 2 * n)
        )

    def positive_roots(self):
        n, m, q, K, c = self.n, self.m, self.q, self.K, self.c
        # V(r) r^(2n-4) as a polynomial in r
        deg = 2 * n - 2
        coeffs = np.zeros(deg + 1)
        coeffs[deg - (2 * n - 2)] += -K
        coeffs[deg - (2 * n - 4)] += c
        coeffs[deg - (n - 2)] += -2 * m
        coeffs[deg] += q**2
        coeffs = np.trim_zeros(coeffs, "f")
        if coeffs.size < 2:
            return []
        roots = np.roots(coeffs)
        real = sorted(
            float(z.real) for z in roots if abs(z.imag) <= 1e-9 * max(1.0, abs(z)) and z.real > 0
        )
        polished = []
        # tiny inner roots (e.g. r ~ q^2/2m) overflow r^(2-n); they are dropped
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for r in real:
                for _ in range(6):
                    dv = float(self.dV(r))
                    if dv == 0.0 or not math.isfinite(dv):
                        break
                    r -= float(self.V(r)) / dv
                if math.isfinite(r) and r > 0 and math.isfinite(float(self.dV(r))):
                    polished.append(r)
        return polished


class WarpedGeometry:
    """A warped-product model with its chart, interval and horizon.

    ``lower``/``upper`` bound the native coordinate.  ``horizon`` is the
    native coordinate of the horizon slice (arc length 0 there) or ``None``;
    ``has_center`` marks a smooth pole at ``lower``.
    """

    def __init__(self, spec, chart, lower, upper, horizon=None, has_center=False, potential=None):
        self.spec = spec
        self.chart = chart
        self.lower = float(lower)
        self.upper = float(upper)
        self.horizon = horizon
        self.has_center = has_center
        self._potential = potential

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def is_static(self) -> bool:
        return self.family in STATIC_FAMILIES

    @property
    def is_space_form(self) -> bool:
        return self.family in SPACE_FORMS

    def __repr__(self):
        return (
            f"WarpedGeometry({self.family}, n={self.n}, chart={self.chart}, "
            f"interval=({self.lower:.6g}, {self.upper:.6g}), horizon={self.horizon})"
        )

    def contains(self, coord, closed=False):
        coord = np.asarray(coord, dtype=float)
        if closed:
            return np.all((coord >= self.lower) & (coord <= self.upper))
        return np.all((coord > self.lower) & (coord < self.upper))

    def check_coord(self, coord, closed=False):
        if not self.contains(coord, closed=closed):
            raise OutOfIntervalError(
                f"coordinate outside ({self.lower}, {self.upper}) for {self.family}"
            )

    # -- profile ---------------------------------------------------------

    def jet(self, coord) -> ProfileJet:
        """Profile jet at native coordinates, endpoints allowed."""
        coord = np.asarray(coord, dtype=float)
        self.check_coord(coord, closed=True)
        fam = self.family
        if fam in SPACE_FORMS:
            return _space_form_jet(self.spec.curvature, coord)
        if fam == "custom_profile":
            return self._custom_jet(coord)
        pot = self._potential
        r0 = self.horizon
        F = np.sqrt(np.maximum(coord - r0, 0.0) * np.maximum(pot.V_over_gap(coord, r0), 0.0))
        d2V = pot.d2V(coord)
        return ProfileJet(
            h=coord,
            h1=F,
            h2=0.5 * pot.dV(coord),
            h3=0.5 * F * d2V,
            hess_ratio=0.5 * d2V,
            dcoord_drho=F,
        )

    def _custom_jet(self, rho):
        h, h1, h2, h3 = (np.asarray(v, dtype=float) for v in self.spec.profile(rho))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = h3 / h1
        if self.horizon is not None:
            # continuous extension of f''/f: linear through rho0+delta, rho0+2delta
            d = HORIZON_BLEND
            r1, r2 = self.horizon + d, self.horizon + 2 * d
            p1, p2 = self.spec.profile(r1), self.spec.profile(r2)
            v1, v2 = p1[3] / p1[1], p2[3] / p2[1]
            s = rho - self.horizon
            ratio = np.where(s < d, v1 + (v2 - v1) * (s - d) / d, ratio)
        shape = np.broadcast(rho).shape
        return ProfileJet(
            h=np.broadcast_to(h, shape),
            h1=np.broadcast_to(h1, shape),
            h2=np.broadcast_to(h2, shape),
            h3=np.broadcast_to(h3, shape),
            hess_ratio=np.broadcast_to(ratio, shape),
            dcoord_drho=np.ones(shape),
        )

    def laplacian_f_over_f(self, coord):
        """``Delta f / f = f''/f + (n-1) h''/h``, continuous up to the horizon."""
        j = self.jet(coord)
        return j.hess_ratio + (self.n - 1) * j.h2 / j.h

    # -- charts ----------------------------------------------------------

    @cached_property
    def _arc_table(self):
        return _ArcLengthMap(self)

    def rho_of(self, coord):
        """Arc length measured from the horizon (area-radius) or the identity."""
        if self.chart == "arc_length":
            return np.asarray(coord, dtype=float)
        return self._arc_table.rho(coord)

    def coord_of(self, rho, coord_max=None):
        if self.chart == "arc_length":
            return np.asarray(rho, dtype=float)
        return self._arc_table.coord(rho, coord_max)


def _space_form_jet(K, rho):
    if K == 0:
        h, h1 = rho, np.ones_like(rho)
        h2 = np.zeros_like(rho)
        h3 = np.zeros_like(rho)
    elif K > 0:
        k = math.sqrt(K)
        h, h1 = np.sin(k * rho) / k, np.cos(k * rho)
        h2, h3 = -k * np.sin(k * rho), -K * np.cos(k * rho)
    else:
        k = math.sqrt(-K)
        h, h1 = np.sinh(k * rho) / k, np.cosh(k * rho)
        h2, h3 = k * np.sinh(k * rho), -K * np.cosh(k * rho)
    return ProfileJet(h, h1, h2, h3, np.full_like(rho, -K), np.ones_like(rho))


class _ArcLengthMap:
    """Arc length of an area-radius geometry, ``rho(r) = int dr / f``.

    With ``r = r0 + s^2`` the integrand ``2 / sqrt(V/(r - r0))`` is smooth in
    ``s``; composite 16-point Gauss-Legendre gives it to rounding.
    """

    _nodes, _weights = np.polynomial.legendre.leggauss(16)

    def __init__(self, geom):
        self.geom = geom
        self.r0 = geom.horizon

    def _integrand(self, s):
        return 2.0 / np.sqrt(self.geom._potential.V_over_gap(self.r0 + s * s, self.r0))

    def _panel_integrals(self, a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * self._nodes[None, :]
        return half * (self._integrand(pts) @ self._weights)

    def rho_of_s(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        order = np.argsort(s)
        ss = s[order]
        # refine so that no panel exceeds max_width
        max_width = 0.02
        edges = [0.0]
        for v in ss:
            gap = v - edges[-1]
            if gap > max_width:
                k = int(math.ceil(gap / max_width))
                edges.extend(edges[-1] + gap * np.arange(1, k) / k)
            edges.append(v)
        edges = np.asarray(edges)
        cum = np.concatenate([[0.0], np.cumsum(self._panel_integrals(edges[:-1], edges[1:]))])
        idx = np.searchsorted(edges, ss, side="right") - 1
        out = np.empty_like(s)
        out[order] = cum[idx]
        return out

    def rho(self, r):
        r = np.asarray(r, dtype=float)
        s = np.sqrt(np.maximum(r - self.r0, 0.0))
        return self.rho_of_s(s).reshape(r.shape)

    def coord(self, rho, coord_max=None):
        rho = np.asarray(rho, dtype=float)
        flat = np.atleast_1d(rho).ravel()
        if coord_max is None:
            coord_max = self.r0 + 1.0
            while self.rho(coord_max) < flat.max():
                coord_max = self.r0 + 2 * (coord_max - self.r0)
        s_max = math.sqrt(coord_max - self.r0)
        s_tab = np.linspace(0.0, s_max, 2049)
        rho_tab = self.rho_of_s(s_tab)
        s = np.interp(flat, rho_tab, s_tab)
        for _ in range(3):
            s = s - (self.rho_of_s(s) - flat) / self._integrand(s)
            s = np.maximum(s, 0.0)
        return (self.r0 + s * s).reshape(rho.shape)


# -- operations -------------------------------------------------------------


def build_model(spec: ModelSpec) -> WarpedGeometry:
    """Instantiate the geometry described by ``spec``.

    Raises
    ------
    InvalidDimensionError
        ``n < 2`` or a black-hole family with ``n < 3``.
    NoHorizonError
        a black-hole family whose ``V`` has no regular positive root.
    """
    if spec.family not in FAMILIES:
        raise ModelError(f"unknown family {spec.family!r}")
    n = int(spec.n)
    if n < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {n}")
    fam = spec.family
    K = spec.curvature

    if fam in SPACE_FORMS:
        if fam == "flat" and K != 0:
            raise ModelError("flat model requires K = 0")
        if fam == "hemisphere" and K <= 0:
            raise ModelError("hemisphere requires K > 0")
        if fam == "hyperbolic" and K >= 0:
            raise ModelError("hyperbolic space requires K < 0")
        if spec.c != 1.0:
            raise ModelError("space forms close smoothly only over unit spheres (c = 1)")
        upper = math.pi / (2 * math.sqrt(K)) if K > 0 else math.inf
        return WarpedGeometry(spec, "arc_length", 0.0, upper, horizon=None, has_center=True)

    if fam == "custom_profile":
        if spec.profile is None or spec.interval is None:
            raise ModelError("custom_profile needs profile and interval")
        lo, hi = map(float, spec.interval)
        h, h1, h2, _ = (float(v) for v in spec.profile(lo))
        horizon = center = None
        if abs(h1) <= 1e-12 and h > 0:
            if h2 <= 0:
                raise NonRegularHorizonError("h''(rho0) must be positive at a horizon")
            horizon = lo
        center = abs(h) <= 1e-12
        return WarpedGeometry(spec, "arc_length", lo, hi, horizon=horizon, has_center=center)

    if n < 3:
        raise InvalidDimensionError("black-hole families need n >= 3")
    m, q = float(spec.m), float(spec.q)
    if fam == "schwarzschild":
        K, q = 0.0, 0.0
    elif fam == "desitter_schwarzschild":
        if K <= 0:
            raise ModelError("desitter_schwarzschild requires K > 0")
        q = 0.0
    elif fam == "ads_schwarzschild":
        if K >= 0:
            raise ModelError("ads_schwarzschild requires K < 0")
        q = 0.0
    else:
        K = 0.0
        if n == 3 and m * m < q * q:
            raise NoHorizonError("reissner_nordstrom needs m^2 >= q^2")
    if m <= 0:
        raise NoHorizonError(f"{fam} with m = {m} has no horizon")
    pot = _Potential(n, m, q, K, float(spec.c))
    roots = pot.positive_roots()
    regular = [r for r in roots if pot.dV(r) > 0]
    if not regular:
        if roots:
            raise NonRegularHorizonError(f"{fam}: degenerate horizon (V' = 0)")
        raise NoHorizonError(f"{fam}: V has no positive root")
    r0 = regular[-1]
    if pot.dV(r0) <= 1e-10:
        raise NonRegularHorizonError(f"{fam}: degenerate horizon (V' = 0)")
    above = [r for r in roots if r > r0 * (1 + 1e-10)]
    upper = above[0] if above else math.inf
    return WarpedGeometry(spec, "area_radius", r0, upper, horizon=r0, potential=pot)


def eval_profile(geom: WarpedGeometry, coord) -> ProfileJet:
    """Closed-form jet at an interior point (horizon excluded)."""
    geom.check_coord(coord)
    return geom.jet(coord)


def horizon_data(geom: WarpedGeometry) -> HorizonData:
    """Surface gravity and ``Delta f/f - (nabla nabla f/f)(nu, nu)`` at the horizon.

    The closed form ``(n-1) h''/h`` is compared with a Richardson limit of
    the naive quotient evaluated at ``horizon + eps``.
    """
    if geom.horizon is None:
        raise NoHorizonError(f"{geom.family} has no horizon")
    n = geom.n
    j = geom.jet(geom.horizon)
    kappa = float(j.h2)
    if kappa <= 0:
        raise NonRegularHorizonError("h'' <= 0 at the horizon")
    closed = (n - 1) * kappa / float(j.h)

    # naive quotient from the raw jet, no regularisation
    def naive(eps):
        jj = geom.jet(geom.horizon + eps)
        lap = jj.h3 + (n - 1) * jj.h1 / jj.h * jj.h2
        return float((lap - jj.h3) / jj.h1)

    scale = max(1e-3 * max(abs(geom.horizon), 1.0), 0.0)
    if math.isfinite(geom.upper):
        scale = min(scale, 0.1 * (geom.upper - geom.lower))
    eps = scale * 0.5 ** np.arange(6)
    table = [naive(e) for e in eps]
    for k in range(1, len(table)):
        table = [(2**k * table[i + 1] - table[i]) / (2**k - 1) for i in range(len(table) - 1)]
    oracle = table[0]
    rel = abs(oracle - closed) / max(abs(closed), 1e-300)
    return HorizonData(
        location=float(geom.horizon),
        h=float(j.h),
        surface_gravity=kappa,
        integrand_limit=closed,
        oracle_limit=oracle,
        oracle_rel_error=rel,
    )


def chart_to_arclength(geom: WarpedGeometry, r: float) -> float:
    """Arc length ``rho(r)``; adaptive quadrature after ``r = r0 + s^2``."""
    if geom.chart == "arc_length":
        geom.check_coord(r, closed=True)
        return float(r)
    geom.check_coord(r, closed=True)
    r0 = geom.horizon
    smax = math.sqrt(r - r0)
    if smax == 0.0:
        return 0.0
    pot = geom._potential
    val, err = integrate.quad(
        lambda s: 2.0 / math.sqrt(float(pot.V_over_gap(r0 + s * s, r0))),
        0.0,
        smax,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    if not math.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"arc-length quadrature did not converge (err={err:g})")
    return val


def load_model_spec(path) -> ModelSpec:
    """Read the ``[model]`` section of an INI-style key-value file."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    return model_spec_from_mapping(cp["model"])


def model_spec_from_mapping(sec) -> ModelSpec:
    known = {"family", "n", "m", "q", "k", "c"}
    extra = set(k.lower() for k in sec) - known
    if extra:
        raise ModelError(f"unknown model keys: {sorted(extra)}")
    lower = {k.lower(): v for k, v in sec.items()}
    if "family" not in lower or "n" not in lower:
        raise ModelError("model section needs 'family' and 'n'")
    K = lower.get("k")
    return ModelSpec(
        family=lower["family"].strip(),
        n=int(lower["n"]),
        m=float(lower.get("m", 0.0)),
        q=float(lower.get("q", 0.0)),
        K=None if K is None else float(K),
        c=float(lower.get("c", 1.0)),
    )
