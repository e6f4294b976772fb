"""Refinement studies with Richardson extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence

import numpy as np

from .radial import RadialDomain, solve_radial


def observed_order(coarse, mid, fine, ratio=2.0):
    """``log_ratio(|coarse - mid| / |mid - fine|)``; ``inf`` at the rounding floor."""
    e1, e2 = abs(coarse - mid), abs(mid - fine)
    floor = 1e3 * np.finfo(float).eps * max(1.0, abs(fine))
    if e1 <= floor:
        return math.inf
    if e2 == 0:
        return math.inf
    return math.log(e1 / e2) / math.log(ratio)


def richardson(values: Sequence[float], orders: Sequence[int] = (2, 4), ratio: float = 2.0) -> float:
    """Repeated Richardson elimination of the given error orders.

    ``values`` run coarse to fine; ``len(values) - 1`` orders are used.
    """
    table = [float(v) for v in values]
    if len(table) < 2:
        raise ValueError("need at least two levels")
    for p in list(orders)[: len(table) - 1]:
        k = ratio**p
        table = [(k * table[i + 1] - table[i]) / (k - 1) for i in range(len(table) - 1)]
    return table[-1]


@dataclass
class ConvergenceReport:
    """Functionals per level, observed orders and extrapolated limits."""

    resolutions: list
    values: Dict[str, list]
    orders: Dict[str, float] = field(default_factory=dict)
    extrapolated: Dict[str, float] = field(default_factory=dict)
    solutions: list = field(default_factory=list, repr=False)

    def rows(self):
        for k, res in enumerate(self.resolutions):
            yield {"resolution": res, **{name: vals[k] for name, vals in self.values.items()}}


@dataclass
class RadialProblem:
    """A radial torsion problem refined by doubling the number of intervals."""

    geom: object
    domain: RadialDomain
    c_inner: float = None
    base_intervals: int = 256

    def resolution(self, level: int) -> int:
        return self.base_intervals * 2**level + 1

    def solve(self, level: int):
        return solve_radial(self.geom, self.domain, self.c_inner, nodes=self.resolution(level), check_order=False)

    error_orders = (2, 4)


@dataclass
class FemProblem:
    """A flat planar torsion problem refined by doubling the ring count."""

    shape: str
    params: dict = field(default_factory=dict)
    base_rings: int = 16

    def resolution(self, level: int) -> int:
        return self.base_rings * 2**level

    def solve(self, level: int):
        from .fem import make_mesh, solve_flat_fem

        return solve_flat_fem(make_mesh(self.shape, self.resolution(level), **self.params))

    error_orders = (2, 3)


def default_functionals(sol) -> Dict[str, float]:
    if hasattr(sol, "boundary_flux"):
        return {"boundary_flux": float(sol.boundary_flux), "u_max": float(np.max(sol.u))}
    return {"u_max": float(np.max(sol.u))}


def refine_and_extrapolate(problem, levels: int = 3, functionals: Callable = default_functionals, keep=False) -> ConvergenceReport:
    """Solve ``problem`` on ``levels`` nested resolutions and extrapolate.

    ``functionals(solution)`` maps a solve to named scalars; each one gets an
    observed order from the three finest levels and a Richardson limit using
    ``problem.error_orders``.
    """
    if levels < 3:
        raise ValueError("need at least three levels")
    sols = [problem.solve(k) for k in range(levels)]
    per_level = [functionals(s) for s in sols]
    names = list(per_level[0])
    values = {k: [p[k] for p in per_level] for k in names}
    report = ConvergenceReport([problem.resolution(k) for k in range(levels)], values)
    for name, vals in values.items():
        report.orders[name] = observed_order(*vals[-3:])
        report.extrapolated[name] = richardson(vals[-3:], problem.error_orders)
    if keep:
        report.solutions = sols
    return report
