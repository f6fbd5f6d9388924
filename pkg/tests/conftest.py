import numpy as np
import pytest

from poincare.mixture import SmoothedMixture


@pytest.fixture
def two_point():
    return SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 1.0)


@pytest.fixture
def gaussian1():
    return SmoothedMixture.gaussian(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE = {}


@pytest.fixture
def record():
    """Log one acceptance criterion for the end-of-run summary, then assert it."""

    def _record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
