import math

import numpy as np
import pytest
import sympy
from scipy.linalg import eigh_tridiagonal

from poincare import bounds, spectral
from poincare import mixture as mx
from poincare.errors import ValidationError, WindowError
from poincare.mixture import SmoothedMixture
from poincare.polynomial import PolyFn


def test_ou_operator_symbolic():
    # D g = rho g' + g'' with the standard normal score rho(x) = -x sends x to -x
    x = sympy.symbols("x")
    f = sympy.exp(-x**2 / 2) / sympy.sqrt(2 * sympy.pi)
    rho = sympy.diff(f, x) / f
    for k, g in enumerate([x, x**2 - 1, x**3 - 3 * x], start=1):
        assert sympy.simplify(rho * sympy.diff(g, x) + sympy.diff(g, x, 2) + k * g) == 0


class TestAssemble:
    def test_kernel(self, gaussian1):
        res = spectral.solve_gap(spectral.assemble(gaussian1, 2001, 10.0), rayleigh_degree=0)
        assert abs(res.lambda0) < 1e-8
        count = spectral.SturmCounter(res.problem.diag, res.problem.off)
        assert count(-1e-8) == 0 and count(1e-8) == 1

    def test_row_sums_vanish(self, rng):
        for m in (mx.random_mixture(rng), mx.random_mixture(rng)):
            p = spectral.assemble(m)
            rows = p.a_diag.copy()
            rows[:-1] += p.a_off
            rows[1:] += p.a_off
            assert np.max(np.abs(rows)) <= 1e-12 * np.max(p.a_diag)

    def test_off_diagonals_negative(self, two_point):
        p = spectral.assemble(two_point)
        assert np.all(p.off < 0) and np.all(p.a_off < 0)

    def test_similarity(self, two_point):
        p = spectral.assemble(two_point, 201)
        f = p.weights
        s = 1 / np.sqrt(f)
        np.testing.assert_allclose(p.diag, p.a_diag * s * s, rtol=1e-12)
        np.testing.assert_allclose(p.off, p.a_off * s[:-1] * s[1:], rtol=1e-12)

    def test_operator_on_identity(self, gaussian1):
        # -D x = x for the standard normal; the scheme is second order
        errs = []
        for n in (2001, 4001):
            p = spectral.assemble(gaussian1, n, 10.0)
            inner = np.abs(p.x) < 6
            err = np.max(np.abs(p.apply_operator(p.x)[inner] - p.x[inner]))
            assert err <= 10 * p.h**2
            errs.append(err)
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    @pytest.mark.parametrize("n", [100, 2000])
    def test_rejects_bad_sizes(self, gaussian1, n):
        with pytest.raises(ValidationError):
            spectral.assemble(gaussian1, n)

    def test_rejects_narrow_window(self, gaussian1):
        with pytest.raises(ValidationError):
            spectral.assemble(gaussian1, 401, 5.0)
        with pytest.raises(WindowError):
            spectral.assemble(gaussian1, 401, 6.5)

    def test_refines_coarse_grid(self):
        m = SmoothedMixture.from_atoms([3.0, -3.0], [0.5, 0.5], 0.04)
        with pytest.warns(RuntimeWarning):
            p = spectral.assemble(m, 101)
        assert p.h <= math.sqrt(m.tau) / 4 and p.n_points % 2 == 1


class TestSolve:
    def test_ou_gap(self, gaussian1):
        res = spectral.solve_gap(spectral.assemble(gaussian1, 4001, 10.0))
        assert abs(res.lambda1 - 1) <= 1e-3 and abs(res.r_estimate - 1) <= 1e-3
        # eigenfunction is the identity up to normalization
        inner = np.abs(res.x) < 5
        np.testing.assert_allclose(res.eigenfunction[inner], res.x[inner], rtol=1e-4, atol=1e-6)

    @pytest.mark.parametrize("tau", [0.25, 1.0, 4.0])
    def test_normal_equality(self, tau):
        assert spectral.estimate(SmoothedMixture.gaussian(tau)).r_estimate == pytest.approx(tau, rel=1e-3)

    def test_two_point_sandwich(self, two_point):
        r = spectral.estimate(two_point).r_estimate
        assert 2.0 <= r <= 1 + 2 * math.e**2

    def test_matches_lapack(self, rng):
        m = mx.random_mixture(rng)
        res = spectral.estimate(m)
        p = res.problem
        ref = eigh_tridiagonal(p.diag, p.off, eigvals_only=True, select="i", select_range=(1, 1))[0]
        assert res.lambda1 == pytest.approx(ref, rel=1e-9)

    def test_residuals(self, rng):
        for _ in range(5):
            res = spectral.estimate(mx.random_mixture(rng))
            assert res.residual_norm <= 1e-8
            assert spectral.generalized_residual(res) <= 1e-8

    def test_eigenfunction_normalized(self, two_point):
        res = spectral.estimate(two_point)
        w = res.density / res.density.sum()
        assert abs(np.dot(w, res.eigenfunction)) < 1e-10
        assert np.dot(w, res.eigenfunction**2) == pytest.approx(1.0, rel=1e-12)

    def test_richardson_second_order(self, two_point):
        ratio, lams, ref = spectral.richardson_ratio(two_point)
        assert abs(lams[0] - ref) > 1e-9
        assert 3.5 <= ratio <= 4.5

    def test_weak_form(self, rng):
        for m in (SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 1.0), mx.random_mixture(rng)):
            res = spectral.estimate(m)
            for _ in range(5):
                h = PolyFn((float(rng.normal()), 1.0) + tuple(0.3 * rng.normal(size=3)))
                egh_prime, egh = spectral.weak_form_terms(res, h)
                assert abs(res.r_estimate * egh_prime - egh) <= 1e-3 * abs(egh)

    def test_scaling(self, rng):
        for _ in range(3):
            m = mx.random_mixture(rng)
            r = spectral.estimate(m).r_estimate
            for a in (0.5, 2.0):
                assert spectral.estimate(mx.affine(m, a)).r_estimate == pytest.approx(a * a * r, rel=5e-3)

    def test_sandwich_random(self, rng):
        for _ in range(10):
            m = mx.random_mixture(rng)
            res = spectral.solve_gap(spectral.assemble(m))
            var, fourth = bounds.lower_bounds(m)
            assert max(var, fourth, res.certified_rayleigh_lb) <= res.r_estimate * 1.005
            assert res.r_estimate <= bounds.thm13_bound(m) * 1.005
            # the tail-ratio supremum also dominates the constant
            assert res.r_estimate <= bounds.bu_ratio_scan(m).sup * 1.005
