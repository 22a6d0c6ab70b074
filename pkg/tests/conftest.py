import sys
from pathlib import Path

import numpy as np
import pytest

from lymphmargin import _backend

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = [b for b in _backend.BACKENDS if b != "numba" or _backend.HAVE_NUMBA]


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel backend."""
    with _backend.using_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_trilabel(rng, h, w):
    """Random Normal/Neoplastic/Irrelevant grid with at least one of each."""
    while True:
        lab = rng.integers(1, 4, size=(h, w)).astype(np.uint8)
        if h * w >= 3:
            if all((lab == c).any() for c in (1, 2, 3)):
                return lab
        elif (lab == 1).any() and (lab == 2).any():
            return lab


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        _acceptance[report.nodeid] = (props.get("criterion", report.nodeid), report.outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(_acceptance.values(), key=lambda v: str(v[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}" + (f"  ({detail})" if detail else ""))
