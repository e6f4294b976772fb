"""Curvature conditions across the model catalog."""

from substatic.curvature import check_brendle
from substatic.identities import horizon_constant, horizon_positivity
from substatic.models import ModelSpec, build_model

CATALOG = [
    ModelSpec("flat", 3),
    ModelSpec("hemisphere", 2),
    ModelSpec("hyperbolic", 3),
    ModelSpec("schwarzschild", 3, m=1.0),
    ModelSpec("schwarzschild", 4, m=1.0),
    ModelSpec("desitter_schwarzschild", 3, m=1.0, K=0.01),
    ModelSpec("ads_schwarzschild", 3, m=1.0, K=-1.0),
    ModelSpec("reissner_nordstrom", 3, m=1.0, q=0.5),
]


def main():
    head = f"{'model':24s} n  H0 H1 H2 H3 H4 substatic  min Q       c"
    print(head)
    for spec in CATALOG:
        geom = build_model(spec)
        rep = check_brendle(geom)
        flags = " ".join(" y" if ok else " n" for ok in (rep.h0_ok, rep.h1_ok, rep.h2_ok, rep.h3_ok, rep.h4_ok))
        extra = ""
        if geom.horizon is not None:
            hc = horizon_constant(geom)
            extra = f"{hc.value:.6g} (positivity {horizon_positivity(geom).value:.3g})"
        print(f"{spec.family:24s} {spec.n} {flags}  {str(rep.substatic_ok):9s} {rep.min_q:+.2e}  {extra}")


if __name__ == "__main__":
    main()
