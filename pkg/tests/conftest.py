import sys

import numpy as np
import pytest

from evstereo import _accel
from evstereo.core import CameraRig, DisparityConfig

BACKENDS = ["numpy", "numba"] if _accel.HAVE_NUMBA else ["numpy"]


@pytest.fixture
def rig():
    return CameraRig(f=300.0, cx=173.0, cy=130.0, b=0.1, width=346, height=260)


@pytest.fixture
def small_rig():
    return CameraRig(f=300.0, cx=31.5, cy=23.5, b=0.1, width=64, height=48)


@pytest.fixture
def cfg():
    return DisparityConfig()


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per kernel path."""
    monkeypatch.setattr(_accel, "USE_NUMBA", request.param == "numba")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
