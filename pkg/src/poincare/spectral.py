"""Grid estimate of the Poincaré constant as an inverse spectral gap.

The operator ``g -> (f g')' / f`` is discretized in divergence form on a
uniform grid with reflecting ends::

    (A g)_i = -(f_{i+1/2} (g_{i+1} - g_i) - f_{i-1/2} (g_i - g_{i-1})) / h^2

giving the generalized problem ``A g = lambda D g`` with ``D = diag(f_i)``.
The similarity ``B = D^{-1/2} A D^{-1/2}`` is symmetric tridiagonal and is
formed from log-densities, so nothing underflows in the tails. Constants
span the kernel; the first positive eigenvalue is the gap.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ValidationError, WindowError
from .mixture import logpdf
from .polynomial import poly_rayleigh_bound
from .tridiag import SturmCounter, bisect_eigenvalue, inverse_iteration, matrix_norm, tridiag_matvec, EPS

log = logging.getLogger(__name__)

DEFAULT_POINTS = 4001
DEFAULT_WIDTH = 10.0
MAX_POINTS = 64001
BOUNDARY_REL_DENSITY = 1e-10
KERNEL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralProblem:
    mixture: object
    x: np.ndarray
    h: float
    width: float
    logf: np.ndarray
    logf_mid: np.ndarray
    a_diag: np.ndarray
    a_off: np.ndarray
    diag: np.ndarray
    off: np.ndarray

    @property
    def n_points(self):
        return self.x.size

    @property
    def weights(self):
        return np.exp(self.logf)

    @property
    def midpoint_weights(self):
        return np.exp(self.logf_mid)

    def apply_operator(self, g):
        """``(A g)_i / f_i``, the discrete ``-D_Y g``, computed through ``B``."""
        half = np.exp(0.5 * self.logf)
        return tridiag_matvec(self.diag, self.off, half * g) / half


@dataclass(frozen=True, eq=False)
class GapResult:
    lambda1: float
    lambda0: float
    r_estimate: float
    x: np.ndarray
    eigenfunction: np.ndarray
    density: np.ndarray
    residual_norm: float
    certified_rayleigh_lb: float
    n_points: int
    width: float
    h: float
    bisection_steps: int
    inverse_iterations: int
    problem: SpectralProblem = field(repr=False)

    def metadata(self):
        return {
            "n_points": self.n_points,
            "width": self.width,
            "h": self.h,
            "window": [float(self.x[0]), float(self.x[-1])],
            "bisection_steps": self.bisection_steps,
            "inverse_iterations": self.inverse_iterations,
        }


def _resolve_points(m, n_points, width, max_points):
    lo, hi = m.window(width)
    target = math.sqrt(m.tau) / 4.0
    h = (hi - lo) / (n_points - 1)
    if h <= target:
        return n_points
    needed = int(math.ceil((hi - lo) / target)) + 1
    needed += 1 - needed % 2
    if needed > max_points:
        warnings.warn(
            f"grid spacing {(hi - lo) / (max_points - 1):.3g} exceeds sqrt(tau)/4 = {target:.3g} "
            f"even at the {max_points}-point cap; the constant may be underestimated",
            RuntimeWarning,
            stacklevel=3,
        )
        return max_points
    warnings.warn(f"grid spacing {h:.3g} exceeds sqrt(tau)/4; using {needed} points", RuntimeWarning, stacklevel=3)
    return needed


def assemble(m, n_points=DEFAULT_POINTS, width=DEFAULT_WIDTH, max_points=MAX_POINTS):
    """Discretize the diffusion operator of ``m`` on ``[min a - width sqrt(tau), max a + width sqrt(tau)]``.

    Raises:
        ValidationError: for an even or too small ``n_points`` or ``width < 6``.
        WindowError: when the density at either end exceeds ``1e-10`` of its peak.
    """
    if n_points < 101 or n_points % 2 == 0:
        raise ValidationError("must be odd and >= 101", field="n_points")
    if width < 6:
        raise ValidationError("must be at least 6", field="width")
    n_points = _resolve_points(m, n_points, width, max_points)
    lo, hi = m.window(width)
    x = np.linspace(lo, hi, n_points)
    h = (hi - lo) / (n_points - 1)
    xm = 0.5 * (x[:-1] + x[1:])
    logf = logpdf(m, x)
    lm = logpdf(m, xm)

    edge = max(logf[0], logf[-1]) - logf.max()
    if edge > math.log(BOUNDARY_REL_DENSITY):
        raise WindowError(f"boundary density is {math.exp(edge):.2e} of the peak; widen the window", field="width")

    inv_h2 = 1.0 / (h * h)
    fm = np.exp(lm) * inv_h2
    a_diag = np.zeros(n_points)
    a_diag[:-1] += fm
    a_diag[1:] += fm
    a_off = -fm

    diag = np.zeros(n_points)
    diag[:-1] += np.exp(lm - logf[:-1])
    diag[1:] += np.exp(lm - logf[1:])
    diag *= inv_h2
    off = -np.exp(lm - 0.5 * (logf[:-1] + logf[1:])) * inv_h2
    return SpectralProblem(m, x, h, float(width), logf, lm, a_diag, a_off, diag, off)


def _centered_linear(p):
    # sqrt(f) * (x - E x): D-orthogonal to constants, so its Rayleigh quotient bounds lambda1 above
    w = np.exp(p.logf - logsumexp(p.logf))
    y = np.exp(0.5 * p.logf) * (p.x - np.dot(w, p.x))
    return y / np.linalg.norm(y)


def solve_gap(p, rtol=1e-10, tol=1e-8, max_iter=50, rayleigh_degree=8):
    """Spectral gap of an assembled problem.

    Bisection on Sturm counts isolates the second-smallest eigenvalue of
    ``B``; inverse iteration (with the known kernel projected out) gives the
    eigenvector and a refined Rayleigh-quotient eigenvalue.

    Raises:
        NumericalError: on bracket failure or inverse-iteration non-convergence.
    """
    d, e = p.diag, p.off
    counter = SturmCounter(d, e)
    scale = matrix_norm(d, e)
    atol = 4 * EPS * scale

    kernel = np.exp(0.5 * (p.logf - logsumexp(p.logf)))
    lambda0 = float(np.dot(kernel, tridiag_matvec(d, e, kernel)))
    if counter(-KERNEL_TOL) != 0 or counter(KERNEL_TOL) < 1:
        log.warning("smallest eigenvalue not within %g of zero", KERNEL_TOL)

    start = _centered_linear(p)
    upper = float(np.dot(start, tridiag_matvec(d, e, start)))
    hi = upper * (1 + 1e-9) + atol
    if counter(hi) < 2:
        hi = scale
    lo = min(0.0, lambda0)
    lam = bisect_eigenvalue(counter, 1, lo, hi, rtol=rtol, atol=atol)

    y, lam_rq, residual, iters = inverse_iteration(d, e, lam, start, deflate=kernel, tol=tol, max_iter=max_iter)
    if abs(lam_rq - lam) > max(1e-6 * lam, 10 * atol):
        raise NumericalError(
            f"inverse iteration found {lam_rq!r}, bisection {lam!r}", stage="inverse_iteration"
        )
    lambda1 = lam_rq

    g = y * np.exp(-0.5 * p.logf)
    w = np.exp(p.logf - logsumexp(p.logf))
    g = g - np.dot(w, g)
    g /= math.sqrt(np.dot(w, g * g))
    if np.dot(w, g * p.x) < 0:
        g = -g

    lb = poly_rayleigh_bound(p.mixture, rayleigh_degree).best_lb if rayleigh_degree else float("nan")
    return GapResult(
        lambda1=lambda1,
        lambda0=lambda0,
        r_estimate=1.0 / lambda1,
        x=p.x,
        eigenfunction=g,
        density=np.exp(p.logf),
        residual_norm=residual,
        certified_rayleigh_lb=lb,
        n_points=p.n_points,
        width=p.width,
        h=p.h,
        bisection_steps=counter.calls,
        inverse_iterations=iters,
        problem=p,
    )


def estimate(m, n_points=DEFAULT_POINTS, width=DEFAULT_WIDTH, rayleigh_degree=0):
    """Shortcut for ``solve_gap(assemble(m, ...))``; skips the polynomial bound by default."""
    return solve_gap(assemble(m, n_points, width), rayleigh_degree=rayleigh_degree)


def generalized_residual(result):
    """``||A v - lambda D v||`` in the ``D^{-1}`` norm, relative to ``||v||_D``."""
    p = result.problem
    half = np.exp(0.5 * p.logf)
    y = half * result.eigenfunction
    r = tridiag_matvec(p.diag, p.off, y) - result.lambda1 * y
    return float(np.linalg.norm(r) / np.linalg.norm(y))


def weak_form_terms(result, hpoly):
    """Grid versions of ``E g' h'`` and ``E g h`` for the computed eigenfunction ``g``.

    At an eigenfunction ``R E g' h' = E g h`` for every test function ``h``.
    """
    p = result.problem
    g = result.eigenfunction
    xm = 0.5 * (p.x[:-1] + p.x[1:])
    dh = hpoly.deriv()(xm)
    egh_prime = float(np.sum(p.midpoint_weights * np.diff(g) / p.h * dh) * p.h)
    egh = float(np.sum(p.weights * g * hpoly(p.x)) * p.h)
    return egh_prime, egh


def richardson_ratio(m, width=DEFAULT_WIDTH, sizes=(2001, 4001, 8001)):
    """Error-reduction ratio of the gap under grid halving (about 4 for a second-order scheme).

    The reference value is the Richardson extrapolation of the two finest grids.
    """
    lams = [estimate(m, n, width).lambda1 for n in sizes]
    ref = (4.0 * lams[2] - lams[1]) / 3.0
    return (lams[0] - ref) / (lams[1] - ref), lams, ref
