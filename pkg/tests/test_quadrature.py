import math

import numpy as np
import pytest
from scipy import integrate

from poincare.errors import QuadratureError
from poincare.quadrature import adaptive_simpson


@pytest.mark.parametrize(
    "func, a, b, exact",
    [
        (np.sin, 0.0, math.pi, 2.0),
        (np.exp, -1.0, 2.0, math.e**2 - math.exp(-1)),
        (lambda x: x**3 - x, -2.0, 3.0, (81 / 4 - 9 / 2) - (4 - 2)),
        (lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi), -12.0, 12.0, 1.0),
    ],
)
def test_known_integrals(func, a, b, exact):
    res = adaptive_simpson(func, a, b, tol=1e-11)
    assert res.value == pytest.approx(exact, abs=1e-10)


def test_sharp_peak_matches_scipy_quad():
    f = lambda x: 1.0 / (1e-4 + (x - 0.3) ** 2)
    ref, _ = integrate.quad(f, 0, 1, points=[0.3], epsabs=1e-12, limit=500)
    res = adaptive_simpson(f, 0, 1, tol=1e-8)
    assert res.value == pytest.approx(ref, abs=1e-7)


def test_error_estimate_is_reported():
    res = adaptive_simpson(np.cos, 0, 1, tol=1e-6)
    assert 0 <= res.error <= 1e-6
    assert res.n_evals > 0


def test_depth_limit_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: np.sign(x - 1 / 3), 0, 1, tol=1e-15, max_depth=3)
