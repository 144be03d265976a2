from importlib import resources

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DATA = resources.files("bubblekit") / "data"


def scenario_path(name: str) -> str:
    return str(DATA / name)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def half_sphere_vectors(n: int, boundary: bool = False):
    """Hypothesis strategy for unit vectors of the closed upper half-sphere in R^{n+1}."""
    coord = st.floats(-1.0, 1.0, allow_nan=False)

    def build(xs):
        v = np.array(xs)
        if boundary:
            v[-1] = 0.0
        else:
            v[-1] = abs(v[-1])
        return v

    return (
        st.lists(coord, min_size=n + 1, max_size=n + 1)
        .map(build)
        .filter(lambda v: np.linalg.norm(v) > 0.2)
        .map(unit)
    )


def random_tangent(rng, x):
    """Unit tangent vector at x, uniformly distributed."""
    v = rng.standard_normal(x.size)
    v -= (v @ x) * x
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def acceptance_line(criterion: int, title: str, ok: bool, detail: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {title} | {detail}"


@pytest.fixture
def record_criterion():
    def record(criterion, title, ok, detail):
        line = acceptance_line(criterion, title, ok, detail)
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
