import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from poincare import mixture as mx
from poincare.errors import AtomCapError, NumericalError, ValidationError
from poincare.mixture import DiscreteAtoms, SmoothedMixture

PHI1 = stats.norm.pdf(1.0)


def quad_expect(m, func, lo=None, hi=None):
    """Independent oracle: scipy QUADPACK over the mixture density."""
    w_lo, w_hi = m.window(14.0)
    lo = w_lo if lo is None else lo
    hi = w_hi if hi is None else hi
    pts = [a for a in m.values if lo < a < hi]
    dens = lambda y: float(np.sum(m.probs * stats.norm.pdf(y, m.values, math.sqrt(m.tau))))
    val, _ = integrate.quad(lambda y: func(y) * dens(y), lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-13, limit=500)
    return val


class TestDiscreteAtoms:
    def test_sorted_decreasing_and_merged(self):
        d = DiscreteAtoms([-1.0, 2.0, -1.0, 0.5], [0.25, 0.25, 0.25, 0.25])
        assert list(d.values) == [2.0, 0.5, -1.0]
        assert list(d.probs) == [0.25, 0.25, 0.5]

    @pytest.mark.parametrize(
        "values, probs",
        [([], []), ([1.0], [0.9]), ([1.0, 2.0], [1.2, -0.2]), ([np.nan], [1.0]), ([1.0, 2.0], [0.5, 0.0])],
    )
    def test_rejects_invalid(self, values, probs):
        with pytest.raises(ValidationError):
            DiscreteAtoms(values, probs)

    def test_arrays_are_read_only(self, two_point):
        with pytest.raises(ValueError):
            two_point.values[0] = 3.0

    def test_tau_positive(self):
        with pytest.raises(ValidationError):
            SmoothedMixture.from_atoms([0.0], [1.0], 0.0)


class TestPdfScore:
    def test_symmetric_score_zero(self, two_point):
        _, _, score = mx.pdf_score(two_point, 0.0)
        assert score == 0.0

    def test_standard_normal(self, gaussian1):
        density, deriv, score = mx.pdf_score(gaussian1, 1.0)
        assert density == pytest.approx(0.2419707245191434, rel=1e-14)
        assert score == pytest.approx(-1.0, rel=1e-14)
        assert deriv == pytest.approx(-density, rel=1e-14)

    def test_two_point_density_at_zero(self, two_point):
        density, _, _ = mx.pdf_score(two_point, 0.0)
        assert density == pytest.approx(0.5 * stats.norm.pdf(-1) + 0.5 * stats.norm.pdf(1), rel=1e-14)
        assert density == pytest.approx(PHI1, rel=1e-14)

    def test_density_against_sampled_histogram(self, two_point):
        rng = np.random.default_rng(7)
        n = 2_000_000
        y = rng.choice([1.0, -1.0], size=n) + rng.normal(size=n)
        half = 0.05
        hist = np.count_nonzero(np.abs(y) < half) / (n * 2 * half)
        assert mx.pdf_score(two_point, 0.0)[0] == pytest.approx(hist, abs=5e-3)

    def test_score_far_from_support_is_finite(self, two_point):
        x = np.array([-1e4, -200.0, 200.0, 1e4])
        density, _, score = mx.pdf_score(two_point, x)
        assert np.all(density == 0.0)
        np.testing.assert_allclose(score, -(x - np.sign(x)), rtol=1e-14)

    def test_score_matches_log_density_derivative(self, rng):
        h = 1e-5
        for _ in range(5):
            m = mx.random_mixture(rng)
            lo, hi = m.window(4.0)
            x = np.linspace(lo, hi, 100)
            _, _, score = mx.pdf_score(m, x)
            fd = (mx.logpdf(m, x + h) - mx.logpdf(m, x - h)) / (2 * h)
            assert np.max(np.abs(score - fd)) <= 1e-5

    def test_density_normalization(self, rng):
        for _ in range(10):
            m = mx.random_mixture(rng)
            assert mx.total_mass(m) == pytest.approx(1.0, abs=1e-8)


class TestMoments:
    def test_two_point_values(self, two_point):
        assert mx.moment(two_point, 2) == 2.0
        assert mx.moment(two_point, 4) == 10.0
        assert mx.cumulant4(two_point) == -2.0

    def test_against_quadrature(self, rng):
        for _ in range(3):
            m = mx.random_mixture(rng, value_range=(-1, 1))
            for k in (1, 2, 3, 4, 6):
                ref = quad_expect(m, lambda y: y**k)
                assert mx.moment(m, k) == pytest.approx(ref, rel=1e-9, abs=1e-11)

    def test_cumulant_matches_central_moments(self, rng):
        m = mx.random_mixture(rng)
        mu2, mu4 = mx.central_moment(m, 2), mx.central_moment(m, 4)
        assert mx.cumulant4(m) == pytest.approx(mu4 - 3 * mu2**2, rel=1e-10, abs=1e-12)

    def test_gaussian_moments(self):
        g = SmoothedMixture.gaussian(2.0)
        assert [mx.moment(g, k) for k in range(7)] == [1, 0, 2, 0, 12, 0, 120]

    def test_order_cap(self, two_point):
        mx.moment(two_point, 16)
        with pytest.raises(ValidationError):
            mx.moment(two_point, 17)


class TestConvolve:
    def test_binomial(self, two_point):
        s = mx.convolve(two_point, two_point)
        assert list(s.values) == [2.0, 0.0, -2.0]
        assert list(s.probs) == [0.25, 0.5, 0.25]
        assert s.tau == 2.0
        assert mx.cumulant4(s) == -4.0

    def test_gaussians(self):
        s = mx.convolve(SmoothedMixture.gaussian(0.3), SmoothedMixture.gaussian(1.2))
        assert s.n_atoms == 1 and s.tau == pytest.approx(1.5)

    def test_additivity(self, rng):
        for _ in range(20):
            a, b = mx.random_mixture(rng), mx.random_mixture(rng)
            s = mx.convolve(a, b)
            assert s.mean == pytest.approx(a.mean + b.mean, rel=1e-12, abs=1e-15)
            assert s.variance == pytest.approx(a.variance + b.variance, rel=1e-12)
            assert mx.cumulant4(s) == pytest.approx(mx.cumulant4(a) + mx.cumulant4(b), rel=1e-12, abs=1e-14)

    def test_lattice_stays_small(self, two_point):
        s = two_point
        for _ in range(6):
            s = mx.convolve(s, s)
        assert s.n_atoms == 65

    def test_merge_rule(self):
        v, p = mx.merge_atoms(np.array([1.0, 1.0 + 1e-12, 2.0]), np.array([0.25, 0.25, 0.5]))
        assert list(p) == [0.5, 0.5]
        assert v[0] == pytest.approx(1.0 + 0.5e-12, abs=1e-16)

    def test_atom_cap(self, rng):
        a = SmoothedMixture.from_atoms(rng.normal(size=30), np.full(30, 1 / 30), 1.0)
        with pytest.raises(AtomCapError) as info:
            mx.convolve(a, a, atom_cap=100)
        assert info.value.count > 100


class TestAffine:
    def test_standardize_two_point(self, two_point):
        u = mx.standardize(two_point)
        np.testing.assert_allclose(u.values, [1 / math.sqrt(2), -1 / math.sqrt(2)], rtol=1e-15)
        assert u.tau == pytest.approx(0.5, rel=1e-15)
        assert u.mean == pytest.approx(0, abs=1e-16) and u.variance == pytest.approx(1, rel=1e-15)

    def test_scale_gaussian(self, gaussian1):
        assert mx.affine(gaussian1, 2.0).tau == 4.0

    def test_negative_scale_resorts(self, two_point):
        m = mx.affine(SmoothedMixture.from_atoms([3.0, 1.0], [0.2, 0.8], 1.0), -1.0, 0.0)
        assert list(m.values) == [-1.0, -3.0] and list(m.probs) == [0.8, 0.2]

    def test_rejects_zero(self, two_point):
        with pytest.raises(ValidationError):
            mx.affine(two_point, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=6, unique=True),
        st.floats(0.05, 5),
        st.floats(0.1, 10) | st.floats(-10, -0.1),
    )
    def test_round_trip(self, values, tau, a):
        m = SmoothedMixture.from_atoms(values, np.full(len(values), 1 / len(values)), tau)
        back = mx.affine(mx.affine(m, a, 0.0), 1 / a, 0.0)
        np.testing.assert_allclose(back.values, m.values, rtol=0, atol=1e-14 * (1 + np.max(np.abs(m.values))))
        assert back.tau == pytest.approx(m.tau, rel=1e-14)


class TestTailMoment:
    def test_gaussian_closed_form(self):
        g = SmoothedMixture.gaussian(0.7)
        x = np.linspace(-5, 5, 21)
        np.testing.assert_allclose(mx.tail_first_moment(g, x), 0.7 * stats.norm.pdf(x, 0, math.sqrt(0.7)), rtol=1e-13)

    def test_full_mean_at_minus_infinity(self, two_point):
        assert abs(mx.tail_first_moment(two_point, -60.0)) < 1e-15

    def test_two_point_value(self, two_point):
        ref = PHI1 + (stats.norm.cdf(1) - stats.norm.cdf(-1)) / 2
        assert mx.tail_first_moment(two_point, 0.0) == pytest.approx(ref, rel=1e-14)
        assert ref == pytest.approx(0.5833, abs=5e-5)
        assert quad_expect(two_point, lambda y: y, lo=0.0) == pytest.approx(ref, abs=1e-10)

    def test_matches_quadrature(self, rng):
        for _ in range(20):
            m = mx.random_mixture(rng, centered=True)
            lo, hi = m.window(3.0)
            x = float(rng.uniform(lo, hi))
            ref = quad_expect(m, lambda y: y, lo=x)
            assert mx.tail_first_moment(m, x) == pytest.approx(ref, abs=1e-8)

    def test_ratio_consistent(self, rng):
        m = mx.random_mixture(rng, centered=True)
        x = np.linspace(-3, 3, 31)
        np.testing.assert_allclose(
            mx.tail_ratio(m, x) * np.exp(mx.logpdf(m, x)), mx.tail_first_moment(m, x), rtol=1e-11
        )

    def test_requires_centered(self, two_point):
        with pytest.raises(ValidationError):
            mx.tail_first_moment(mx.affine(two_point, 1.0, 0.5), 0.0)


class TestExpAbsMoment:
    def test_gaussian(self, gaussian1):
        expected = 2 * math.exp(1 / 288) * stats.norm.cdf(1 / 12)
        assert mx.exp_abs_moment(gaussian1, 1 / 12) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(1.070, abs=5e-4)

    def test_zero(self, two_point):
        assert mx.exp_abs_moment(two_point, 0.0) == 1.0

    def test_matches_quadrature(self, rng):
        for _ in range(10):
            m = mx.random_mixture(rng)
            c = float(rng.uniform(0, 1))
            mean = m.mean
            ref = quad_expect(m, lambda y: math.exp(c * abs(y - mean)), lo=m.window(30)[0], hi=m.window(30)[1])
            assert mx.exp_abs_moment(m, c) == pytest.approx(ref, rel=1e-7)

    def test_overflow_guard(self):
        with pytest.raises(NumericalError):
            mx.exp_abs_moment(SmoothedMixture.gaussian(1.0), 40.0)


class TestFisher:
    @pytest.mark.parametrize("tau", [0.25, 1.0, 4.0])
    def test_gaussian(self, tau):
        assert mx.fisher_info(SmoothedMixture.gaussian(tau)) == pytest.approx(1 / tau, abs=1e-6)

    def test_two_point_in_range(self, two_point):
        val = mx.fisher_info(two_point)
        assert 0 < val <= 1.0
        _, _, _ = mx.pdf_score(two_point, 0.0)
        ref = quad_expect(two_point, lambda y: mx.pdf_score(two_point, y)[2] ** 2)
        assert val == pytest.approx(ref, abs=1e-8)

    def test_scaling(self, rng):
        for _ in range(3):
            m = mx.random_mixture(rng)
            for a in (0.5, 3.0):
                assert mx.fisher_info(mx.affine(m, a)) == pytest.approx(mx.fisher_info(m) / a**2, rel=1e-6)

    def test_bounded_by_smoothing(self, rng):
        for _ in range(10):
            m = mx.random_mixture(rng)
            assert mx.fisher_info(m) <= 1 / m.tau + 1e-8


class TestJson:
    def test_round_trip(self, two_point):
        m = mx.mixture_from_dict(mx.mixture_to_dict(two_point))
        assert list(m.values) == list(two_point.values) and m.tau == two_point.tau

    def test_normalizes_close_sums(self):
        m = mx.mixture_from_dict({"atoms": [{"value": 0, "prob": 0.5}, {"value": 1, "prob": 0.5 + 5e-10}], "tau": 1})
        assert math.fsum(m.probs) == pytest.approx(1, abs=1e-15)

    @pytest.mark.parametrize(
        "data, field",
        [
            ({"tau": 1}, "atoms"),
            ({"atoms": [{"value": 0, "prob": 1}]}, "tau"),
            ({"atoms": [{"value": 0, "prob": 0.9}], "tau": 1}, "atoms"),
            ({"atoms": [{"value": "a", "prob": 1}], "tau": 1}, "atoms[0].value"),
            ({"atoms": [{"value": 0}], "tau": 1}, "atoms[0].prob"),
            ({"atoms": [{"value": 0, "prob": 1}], "tau": -1}, "tau"),
        ],
    )
    def test_field_diagnostics(self, data, field):
        with pytest.raises(ValidationError) as info:
            mx.mixture_from_dict(data)
        assert info.value.field == field
