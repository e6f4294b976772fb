"""Command-line entry point: ``substatic {check-model,solve,verify,sweep}``.

Configuration is an INI file::

    [model]
    family = schwarzschild
    n = 3
    m = 1

    [problem]
    kind = radial          ; radial | fem
    inner = horizon        ; horizon | center | <coordinate>
    outer = 4
    horizon_value = auto   ; auto | <float>

    [run]
    resolutions = 257, 513, 1025
    identities = main, volume_balance, alexandrov, heintze_karcher

Exit status is 0 when every verdict passes, 2 when one fails and 1 on any
error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import identities as ids
from .curvature import check_brendle
from .models import ModelError, build_model, model_spec_from_mapping
from .solver.convergence import observed_order
from .solver.fem import hopf_positivity_check, solve_flat_fem
from .solver.mesh import make_mesh, read_mesh
from .solver.radial import RadialDomain, solve_radial

log = logging.getLogger("substatic")

IDENTITY_REGISTRY = ("main", "volume_balance", "alexandrov", "heintze_karcher", "magnanini_poggesi")
RADIAL_TOL = 1e-6
FEM_TOL = 1e-2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: dict
    kind: str = "radial"
    inner: str = "center"
    outer: float = 1.0
    horizon_value: Optional[float] = None  # None means compute_c
    shape: str = "disk"
    shape_params: dict = field(default_factory=dict)
    mesh_path: Optional[str] = None
    resolutions: List[int] = field(default_factory=lambda: [1025])
    identities: Optional[List[str]] = None
    tol: Optional[float] = None
    grid_size: int = 64

    @property
    def tolerance(self) -> float:
        if self.tol is not None:
            return self.tol
        return FEM_TOL if self.kind == "fem" else RADIAL_TOL


def _locate(lines, section, key):
    """1-based line of ``key`` inside ``[section]``, or None."""
    current = None
    for i, raw in enumerate(lines, 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].strip().lower() == key:
            return i
    return None


def load_config(path) -> RunConfig:
    """Parse a run configuration; errors carry the file's line numbers."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            text = fh.read()
        cp.read_string(text, source=str(path))
    except configparser.ParsingError as exc:
        lineno, raw = exc.errors[0]
        raise ConfigError(f"{path}, line {lineno}: cannot parse {raw.strip()!r}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if "model" not in cp:
        raise ConfigError(f"{path}: missing [model] section")

    def get(section, key, conv, default):
        if section not in cp or key not in cp[section]:
            return default
        raw = cp[section][key]
        try:
            return conv(raw.strip())
        except (ValueError, ConfigError) as exc:
            line = _locate(lines, section, key)
            where = f"{path}, line {line}" if line else str(path)
            raise ConfigError(f"{where}: bad value for [{section}] {key} = {raw!r}: {exc}") from exc

    def kind(v):
        if v not in ("radial", "fem"):
            raise ConfigError(f"unknown problem kind {v!r}")
        return v

    def identity_list(v):
        names = [t.strip() for t in v.split(",") if t.strip()]
        bad = [t for t in names if t not in IDENTITY_REGISTRY]
        if bad:
            raise ConfigError(f"unknown identities {bad}; choose from {IDENTITY_REGISTRY}")
        return names

    def resolutions(v):
        out = [int(t) for t in v.replace(",", " ").split()]
        if not out:
            raise ConfigError("at least one resolution is required")
        return out

    cfg = RunConfig(model=dict(cp["model"]))
    cfg.kind = get("problem", "kind", kind, "radial")
    cfg.inner = get("problem", "inner", lambda v: v if v in ("horizon", "center") else repr(float(v)), "center")
    cfg.outer = get("problem", "outer", float, 1.0)
    cfg.horizon_value = get("problem", "horizon_value", lambda v: None if v == "auto" else float(v), None)
    cfg.shape = get("problem", "shape", str, "disk")
    cfg.shape_params = {k: get("problem", k, float, None) for k in ("a", "b", "radius", "side")}
    cfg.shape_params = {k: v for k, v in cfg.shape_params.items() if v is not None}
    cfg.mesh_path = get("problem", "mesh", str, None)
    cfg.resolutions = get("run", "resolutions", resolutions, [16, 32, 64] if cfg.kind == "fem" else [1025])
    cfg.identities = get("run", "identities", identity_list, None)
    cfg.tol = get("run", "tol", float, None)
    cfg.grid_size = get("run", "grid_size", int, 64)
    return cfg


# ------------------------------------------------------------------ pipeline


def _geometry(cfg):
    return build_model(model_spec_from_mapping(cfg.model))


def _inner(cfg):
    if cfg.inner in ("horizon", "center"):
        return cfg.inner
    return float(cfg.inner)


def _c_inner(cfg, geom):
    if cfg.inner != "horizon":
        return None
    return ids.compute_c(geom) if cfg.horizon_value is None else cfg.horizon_value


def _solve(cfg, geom, resolution):
    if cfg.kind == "fem":
        mesh = read_mesh(cfg.mesh_path) if cfg.mesh_path else make_mesh(cfg.shape, resolution, **cfg.shape_params)
        return solve_flat_fem(mesh)
    domain = RadialDomain(_inner(cfg), cfg.outer)
    return solve_radial(geom, domain, _c_inner(cfg, geom), nodes=resolution, check_order=resolution >= 64)


def _default_identities(cfg, geom):
    if cfg.kind == "fem":
        names = ["magnanini_poggesi", "alexandrov", "volume_balance", "heintze_karcher"]
        return names if cfg.shape != "square" else ["volume_balance"]
    names = ["main", "volume_balance"]
    cancelling = cfg.inner != "horizon" or cfg.horizon_value is None
    if cancelling:
        names.append("alexandrov")
        if cfg.inner in ("horizon", "center"):
            names.append("heintze_karcher")
    return names


def _check(name, geom, sol):
    if name == "main":
        return ids.check_main_identity(geom, sol)
    if name == "volume_balance":
        return ids.check_volume_balance(geom, sol)
    if name == "alexandrov":
        return ids.check_alexandrov(geom, sol)
    if name == "heintze_karcher":
        return ids.check_heintze_karcher(geom, sol)
    if name == "magnanini_poggesi":
        return ids.check_magnanini_poggesi(sol)
    raise ConfigError(f"unknown identity {name!r}")


def _verdicts(report: ids.IdentityReport, tol):
    v = {f"deficit_{k}": ok for k, ok in report.deficit_verdicts.items()}
    v["residual"] = report.verdict_residual <= tol
    if "inequality" in report.flags:
        v["inequality"] = report.flags["inequality"]
    return v


def _emit(records, out_dir: Path, stem: str, fmt: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    if fmt == "json":
        path.write_text(json.dumps(records, indent=2, default=_json_default) + "\n")
    else:
        import csv

        records = [_flatten(r) for r in records]
        cols = []
        for r in records:
            cols += [k for k in r if k not in cols]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in records:
                w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    return path


def _flatten(rec, prefix=""):
    out = {}
    for k, v in rec.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            out[prefix + k] = ";".join(str(x) for x in v)
        else:
            out[prefix + k] = v
    return out


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def cmd_check_model(cfg, args):
    geom = _geometry(cfg)
    rep = check_brendle(geom, grid_size=cfg.grid_size)
    rec = {"verb": "check-model", "family": geom.family, "n": geom.n, **rep.to_dict()}
    rec["witnesses"] = {k: list(v) for k, v in rep.witnesses.items()}
    if geom.horizon is not None:
        hc = ids.horizon_constant(geom)
        hp = ids.horizon_positivity(geom)
        rec.update(horizon=geom.horizon, c=hc.value, c_ratio=hc.ratio, horizon_positivity=hp.value)
    ok = rep.substatic_ok and rep.implication_ok
    rec["verdicts"] = {"substatic": rep.substatic_ok, "implication": rep.implication_ok}
    return [rec], ok


def cmd_solve(cfg, args):
    geom = _geometry(cfg)
    res = cfg.resolutions[-1]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = _solve(cfg, geom, res)
        diag = hopf_positivity_check(sol)
    notes = [str(w.message) for w in caught]
    for n in notes:
        log.warning(n)
    rec = {
        "verb": "solve",
        "kind": cfg.kind,
        "resolution": res,
        "min_interior_u": diag.min_interior_u,
        "max_normal_derivative": diag.max_normal_derivative,
        "warnings": notes,
    }
    if cfg.kind == "radial":
        rec.update(
            boundary_flux=sol.boundary_flux,
            achieved_order=sol.achieved_order,
            max_residual=float(np.max(np.abs(sol.residual()))),
            c_inner=sol.c_inner,
        )
    else:
        rec.update(u_max=float(sol.u.max()), triangles=len(sol.mesh.triangles), cg_iterations=sol.cg_iterations)
    rec["verdicts"] = {"positive_interior": diag.positive_interior, "hopf": diag.hopf}
    return [rec], diag.ok


def _reports_per_level(cfg, geom, names):
    levels = []
    for res in cfg.resolutions:
        sol = _solve(cfg, geom, res)
        levels.append((res, sol, [_check(n, geom, sol) for n in names]))
    return levels


def cmd_verify(cfg, args):
    geom = _geometry(cfg)
    names = cfg.identities or _default_identities(cfg, geom)
    levels = _reports_per_level(cfg, geom, names)
    orders = (2, 3) if cfg.kind == "fem" else (2, 4)
    records, ok = [], True
    finest = levels[-1]
    diag = hopf_positivity_check(finest[1])
    ok &= diag.ok
    for k, name in enumerate(names):
        series = [lv[2][k] for lv in levels]
        rep = ids.extrapolate_reports(series, orders) if len(series) >= 3 else series[-1]
        verdicts = _verdicts(rep, cfg.tolerance)
        ok &= all(verdicts.values())
        rec = rep.to_dict()
        rec["verdicts"] = verdicts
        rec["finest_residual_rel"] = series[-1].residual_rel
        records.append(rec)
    records.append({"name": "hopf_positivity", "min_interior_u": diag.min_interior_u, "max_normal_derivative": diag.max_normal_derivative, "verdicts": {"ok": diag.ok}})
    return records, ok


def cmd_sweep(cfg, args):
    if len(cfg.resolutions) < 3:
        raise ConfigError("sweep needs at least three resolutions")
    geom = _geometry(cfg)
    names = cfg.identities or _default_identities(cfg, geom)
    levels = _reports_per_level(cfg, geom, names)
    rows = []
    for k, name in enumerate(names):
        res_abs = [lv[2][k].residual_abs for lv in levels]
        for i, (res, _, reps) in enumerate(levels):
            r = reps[k]
            order = observed_order(*res_abs[i - 2 : i + 1]) if i >= 2 else math.nan
            rows.append(
                {
                    "identity": name,
                    "resolution": res,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "residual_abs": r.residual_abs,
                    "residual_rel": r.residual_rel,
                    "residual_scaled": r.residual_scaled,
                    "observed_order": order,
                }
            )
    return rows, True


VERBS = {"check-model": cmd_check_model, "solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep}


def run(config_path, verb="verify", out=".", fmt=None, tol=None) -> int:
    """Programmatic form of the command line; returns the exit status."""
    argv = [verb, "--config", str(config_path), "--out", str(out)]
    if fmt:
        argv.append(f"--{fmt}")
    if tol is not None:
        argv += ["--tol", repr(tol)]
    return main(argv)


def sweep(config_path, out=".") -> int:
    """Convergence CSV, one row per identity and resolution."""
    return run(config_path, "sweep", out, "csv")


def build_parser():
    p = argparse.ArgumentParser(prog="substatic", description="Torsion problems and integral identities on warped products.")
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tol", type=float, help="override the identity residual tolerance")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    fmt = args.fmt or ("csv" if args.verb == "sweep" else "json")
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            cfg.tol = args.tol
        records, ok = VERBS[args.verb](cfg, args)
        path = _emit(records, Path(args.out), args.verb.replace("-", "_"), fmt)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver and quadrature failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{args.verb}: {'pass' if ok else 'FAIL'} -> {path}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
