import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from incidence_calib.camera import Intrinsics

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle() -> dict:
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def K500():
    return Intrinsics(500.0, 500.0, 320.0, 240.0)


def intrinsics_strategy(w=640, h=480):
    m = max(w, h)
    return st.builds(
        Intrinsics,
        fx=st.floats(0.3 * m, 3 * m),
        fy=st.floats(0.3 * m, 3 * m),
        bx=st.floats(0.1 * w, 0.9 * w),
        by=st.floats(0.1 * h, 0.9 * h),
    )


# Filled by test_acceptance.py; one (name, passed, detail) entry per criterion.
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
