"""Independent reference computations used by the tests.

Nothing here imports the package: the curvature oracle builds Christoffel
symbols of the full metric with sympy, the radial oracles use mpmath
quadrature, and the planar ones are classical closed forms.
"""

from __future__ import annotations

import functools
import math

import mpmath as mp
import numpy as np
import sympy as sp


# ------------------------------------------------------------ curvature


def _sphere_metric(angles):
    """Round metric on S^k in the angles (chi_1, ..., chi_k)."""
    diag = []
    w = sp.Integer(1)
    for a in angles:
        diag.append(w)
        w = w * sp.sin(a) ** 2
    return diag


@functools.lru_cache(maxsize=None)
def _symbolic_tensors(n, V_src):
    r = sp.Symbol("r", positive=True)
    angles = sp.symbols(f"a1:{n}", positive=True)
    coords = (r,) + angles
    V = sp.sympify(V_src, locals={"r": r})
    g = sp.diag(1 / V, *[r**2 * s for s in _sphere_metric(angles)])
    ginv = g.inv()
    dim = n
    Gam = [[[sp.simplify(sum(ginv[k, l] * (sp.diff(g[l, i], coords[j]) + sp.diff(g[l, j], coords[i]) - sp.diff(g[i, j], coords[l])) for l in range(dim)) / 2) for j in range(dim)] for i in range(dim)] for k in range(dim)]

    def ricci(i, j):
        expr = 0
        for k in range(dim):
            expr += sp.diff(Gam[k][i][j], coords[k]) - sp.diff(Gam[k][i][k], coords[j])
            for l in range(dim):
                expr += Gam[k][k][l] * Gam[l][i][j] - Gam[k][j][l] * Gam[l][i][k]
        return sp.simplify(expr)

    f = sp.sqrt(V)

    def hess(i, j):
        return sp.simplify(sp.diff(f, coords[i], coords[j]) - sum(Gam[k][i][j] * sp.diff(f, coords[k]) for k in range(dim)))

    # mixed components on the diagonal, evaluated on the equator of the sphere
    at = {a: sp.pi / 2 for a in angles}
    ric_r = sp.simplify((ginv[0, 0] * ricci(0, 0)).subs(at))
    ric_t = sp.simplify((ginv[1, 1] * ricci(1, 1)).subs(at))
    hf_r = sp.simplify((ginv[0, 0] * hess(0, 0)).subs(at))
    hf_t = sp.simplify((ginv[1, 1] * hess(1, 1)).subs(at))
    lap = sp.simplify(hf_r + (n - 1) * hf_t)
    q_r = sp.simplify(f * ric_r - hf_r + lap)
    q_t = sp.simplify(f * ric_t - hf_t + lap)
    return {name: sp.lambdify(r, e, "mpmath") for name, e in dict(ric_r=ric_r, ric_t=ric_t, q_r=q_r, q_t=q_t, hf_r=hf_r, hf_t=hf_t).items()}


def symbolic_curvature(n, V_src, r):
    """Ricci, Hessian-of-f and Q eigenvalues of ``dr^2/V + r^2 g_sphere``."""
    t = _symbolic_tensors(n, V_src)
    return {k: float(fn(mp.mpf(r))) for k, fn in t.items()}


# -------------------------------------------------------- radial models


def schwarzschild_arclength(r, m=1.0):
    """Proper distance from the horizon ``2m`` to radius ``r`` in n = 3."""
    r, m = mp.mpf(r), mp.mpf(m)
    return float(mp.sqrt(r * (r - 2 * m)) + 2 * m * mp.log((mp.sqrt(r) + mp.sqrt(r - 2 * m)) / mp.sqrt(2 * m)))


def horizon_ratio_limit(V_src, r0, n, eps="1e-30"):
    """``(Delta f - Hess f(nu, nu)) / f`` evaluated naively at ``r0 + eps``
    in 60-digit arithmetic.

    With ``f = sqrt(V)`` and ``d/drho = f d/dr`` the quotient is
    ``(n-1)(h'/h) f' / f``; the cancellation of ``f`` is left to the extended
    precision rather than done by hand.
    """
    r = sp.Symbol("r", positive=True)
    F = sp.sqrt(sp.sympify(V_src, locals={"r": r}))
    d1 = F * sp.diff(F, r)
    expr = ((n - 1) * F / r * d1) / F
    fn = sp.lambdify(r, expr, "mpmath")
    with mp.workdps(60):
        return float(fn(mp.mpf(r0) + mp.mpf(eps)))


def umbilical_solution(V, r, r_out, n):
    """``u = F(r) int_r^{r_out} s / (n V(s)^(3/2)) ds`` in the area chart.

    Solves the radial torsion equation with ``u(r_out) = 0`` and the
    horizon value that makes every slice deficit vanish.
    """
    with mp.workdps(30):
        F = mp.sqrt(V(mp.mpf(r)))
        I = mp.quad(lambda s: s / (n * V(s) ** mp.mpf(1.5)), [r, r_out])
        return float(F * I)


def umbilical_horizon_value(r0, h2, n):
    """``h/(n h'')`` at the horizon."""
    return r0 / (n * h2)


# ---------------------------------------------------------------- planar


def square_torsion_center(terms_per_axis=100):
    """``u(1/2, 1/2)`` for ``-Delta u = 1`` on the unit square, double sine series."""
    k = 2 * np.arange(terms_per_axis) + 1.0
    m, n = np.meshgrid(k, k, indexing="ij")
    sign = (-1.0) ** ((m - 1) / 2 + (n - 1) / 2)
    return float(np.sum(16 / (np.pi**4 * m * n * (m * m + n * n)) * sign))


def ellipse_solution(x, y, a, b):
    A = a * a * b * b / (2 * (a * a + b * b))
    return A * (1 - x * x / a**2 - y * y / b**2)


def ellipse_identity_terms(a, b):
    """Exact bulk, boundary and mean-curvature terms of the flat identity."""
    A = a * a * b * b / (2 * (a * a + b * b))
    area = math.pi * a * b
    bulk = area * 2 * A**2 * (1 / b**2 - 1 / a**2) ** 2

    def ds(t):
        return mp.sqrt(a**2 * mp.sin(t) ** 2 + b**2 * mp.cos(t) ** 2)

    def grad(t):
        return 2 * A * mp.sqrt(mp.cos(t) ** 2 / a**2 + mp.sin(t) ** 2 / b**2)

    def kappa(t):
        return a * b / ds(t) ** 3

    perim = float(mp.quad(ds, [0, 2 * mp.pi]))
    R = area / perim
    Hbar = 1 / (2 * R)
    lhs = float(mp.quad(lambda t: grad(t) ** 2 * (Hbar - kappa(t)) * ds(t), [0, 2 * mp.pi]))
    bdry = float(mp.quad(lambda t: (R - grad(t)) ** 2 * ds(t), [0, 2 * mp.pi])) / (2 * R)
    inv_h = float(mp.quad(lambda t: ds(t) / kappa(t), [0, 2 * mp.pi]))
    return {"bulk": bulk, "boundary": bdry, "lhs": lhs, "R": R, "Hbar": Hbar, "area": area, "inverse_mean_curvature": inv_h}
