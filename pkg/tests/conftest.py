import numpy as np
import pytest

from aeroloop import shapes
from aeroloop.render import CameraRig


@pytest.fixture
def small_rig() -> CameraRig:
    return CameraRig(views=((0.0, 20.0), (180.0, 20.0)), resolution=32)


@pytest.fixture
def cube():
    return shapes.cube()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    entries = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" not in report.nodeid:
                continue
            name = report.nodeid.split("::")[-1]
            if report.when == "call" or status == "error":
                entries[name] = status == "passed"
    if not entries:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(entries):
        verdict = "PASS" if entries[name] else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
