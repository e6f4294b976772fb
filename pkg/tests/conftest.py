import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from substatic.models import ModelSpec, build_model  # noqa: E402

CATALOG = {
    "flat": ModelSpec("flat", 3),
    "hemisphere": ModelSpec("hemisphere", 2),
    "hyperbolic": ModelSpec("hyperbolic", 3),
    "schwarzschild": ModelSpec("schwarzschild", 3, m=1.0),
    "schwarzschild_n4": ModelSpec("schwarzschild", 4, m=1.0),
    "desitter_schwarzschild": ModelSpec("desitter_schwarzschild", 3, m=1.0, K=0.01),
    "ads_schwarzschild": ModelSpec("ads_schwarzschild", 3, m=1.0, K=-1.0),
    "reissner_nordstrom": ModelSpec("reissner_nordstrom", 3, m=1.0, q=0.5),
}
HORIZON_MODELS = [k for k in CATALOG if k not in ("flat", "hemisphere", "hyperbolic")]
STATIC_MODELS = [k for k in CATALOG if k != "reissner_nordstrom"]


def outer_slice(geom):
    """A slice comfortably inside the model's interval."""
    if geom.horizon is None:
        return {"flat": 1.0, "hemisphere": math.pi / 3, "hyperbolic": 1.0}[geom.family]
    if math.isfinite(geom.upper):
        return geom.horizon + 0.5 * (geom.upper - geom.horizon)
    return 2.0 * geom.horizon


@pytest.fixture(scope="session")
def catalog():
    return {k: build_model(v) for k, v in CATALOG.items()}


@pytest.fixture(scope="session")
def schwarzschild(catalog):
    return catalog["schwarzschild"]


@pytest.fixture(scope="session")
def hemisphere(catalog):
    return catalog["hemisphere"]


@pytest.fixture(scope="session")
def flat2():
    return build_model(ModelSpec("flat", 2))


# ---------------------------------------------------- acceptance summary

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(number, passed, detail=""):
        prev = _ACCEPTANCE.get(number)
        ok = bool(passed) and (prev is None or prev[0])
        details = ([prev[1]] if prev and prev[1] else []) + ([detail] if detail else [])
        _ACCEPTANCE[number] = (ok, "; ".join(details))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
