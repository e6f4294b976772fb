"""Schwarzschild exterior between the horizon and r = 4.

Solves the torsion problem for several horizon values and shows that only
the cancelling constant makes the round slice satisfy every deficit with
equality.  Run with ``python demos/horizon_value.py``.
"""

from substatic.identities import (
    check_alexandrov,
    check_heintze_karcher,
    check_main_identity,
    compute_c,
    extrapolate_reports,
    horizon_constant,
)
from substatic.models import ModelSpec, build_model
from substatic.solver.convergence import RadialProblem
from substatic.solver.radial import RadialDomain


def main():
    geom = build_model(ModelSpec("schwarzschild", 3, m=1.0))
    hc = horizon_constant(geom)
    print(f"horizon at r = {geom.horizon}")
    print(f"flux ratio h/((n-1)h'') = {hc.ratio:.17g}")
    print(f"cancelling value h/(n h'') = {hc.value:.17g}")

    domain = RadialDomain("horizon", 4.0)
    for c in (1.0, compute_c(geom, "ratio"), compute_c(geom), 10.0):
        prob = RadialProblem(geom, domain, c)
        sols = [prob.solve(k) for k in range(3)]
        main_id = extrapolate_reports([check_main_identity(geom, s) for s in sols])
        hk = check_heintze_karcher(geom, sols[-1])
        print(
            f"c = {c:8.5f}  main identity residual {main_id.verdict_residual:.1e}"
            f"  horizon bracket {main_id.terms['horizon_bracket']:+.3e}"
            f"  HK deficits {hk.lhs:.3e} vs {hk.rhs:.3e}"
        )

    sol = RadialProblem(geom, domain, compute_c(geom)).solve(2)
    alex = check_alexandrov(geom, sol)
    print("Alexandrov terms at the cancelling value:")
    for k, v in alex.terms.items():
        print(f"  {k:20s} {v:.3e}")
    print(f"  umbilical slice: {alex.flags['umbilical']}")


if __name__ == "__main__":
    main()
