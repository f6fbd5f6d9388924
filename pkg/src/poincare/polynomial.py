"""Polynomial test functions and their Rayleigh quotients.

Every polynomial expectation is taken against :func:`mixture.gauss_nodes`,
which reproduces the mixture's moments exactly up to the rule's degree, so a
Rayleigh quotient computed here is a genuine lower bound on the Poincaré
constant (up to rounding).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import eigh

from .errors import NumericalError, ValidationError
from .mixture import gauss_nodes

MAX_DEGREE = 12


@dataclass(frozen=True)
class PolyFn:
    """Polynomial given by monomial coefficients, lowest order first."""

    coef: tuple

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coef, dtype=np.float64), "b")
        if c.size == 0:
            c = np.zeros(1)
        object.__setattr__(self, "coef", tuple(float(v) for v in c))

    @classmethod
    def monomial(cls, k, scale=1.0):
        return cls((0.0,) * k + (scale,))

    @classmethod
    def from_polynomial(cls, p):
        return cls(tuple(p.convert(kind=Polynomial).coef))

    @property
    def degree(self):
        return len(self.coef) - 1

    @property
    def poly(self):
        return Polynomial(self.coef)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coef)

    def deriv(self):
        return PolyFn.from_polynomial(self.poly.deriv())

    def __add__(self, other):
        return PolyFn.from_polynomial(self.poly + other.poly)

    def __mul__(self, scalar):
        return PolyFn.from_polynomial(self.poly * float(scalar))


def _rule(m, degree):
    # exact for polynomials of degree <= 2 * degree + 3
    return gauss_nodes(m, max(16, degree + 2))


def expect(weights, values):
    return math.fsum(weights * values)


def variance_under(weights, values):
    d = values - expect(weights, values)
    return expect(weights, d * d)


def rayleigh_quotient(m, g):
    """``Var g(Y) / E g'(Y)^2`` with exact polynomial expectations."""
    if not isinstance(g, PolyFn):
        g = PolyFn(tuple(g))
    if g.degree > MAX_DEGREE:
        raise ValidationError(f"degree {g.degree} exceeds {MAX_DEGREE}", field="g")
    points, weights = _rule(m, g.degree)
    dg = g.deriv()(points)
    denom = expect(weights, dg * dg)
    if denom < 1e-14:
        raise ValidationError(f"E g'(Y)^2 = {denom:.3e} is degenerate", field="g")
    return variance_under(weights, g(points)) / denom


def orthonormal_basis(points, weights, degree):
    """Stieltjes procedure on a discrete measure.

    Returns values and derivatives of the orthonormal polynomials
    ``p_0 .. p_degree`` at ``points`` and their monomial coefficient
    representations.
    """
    n = points.size
    vals = np.zeros((degree + 1, n))
    ders = np.zeros((degree + 1, n))
    polys = [Polynomial([1.0])]
    vals[0] = 1.0
    x = Polynomial([0.0, 1.0])
    beta_prev = 0.0
    for k in range(degree):
        alpha = expect(weights, points * vals[k] ** 2)
        q = (points - alpha) * vals[k]
        dq = vals[k] + (points - alpha) * ders[k]
        qp = (x - alpha) * polys[k]
        if k > 0:
            q -= beta_prev * vals[k - 1]
            dq -= beta_prev * ders[k - 1]
            qp -= beta_prev * polys[k - 1]
        # one reorthogonalization pass against all earlier polynomials
        for j in range(k + 1):
            c = expect(weights, q * vals[j])
            q -= c * vals[j]
            dq -= c * ders[j]
            qp -= c * polys[j]
        beta = math.sqrt(expect(weights, q * q))
        if not beta > 1e-12:
            raise NumericalError(f"measure cannot support degree {k + 1} (beta={beta:.2e})", stage="stieltjes")
        vals[k + 1] = q / beta
        ders[k + 1] = dq / beta
        polys.append(qp / beta)
        beta_prev = beta
    return vals, ders, polys


class PolyBound(NamedTuple):
    best_lb: float
    best_g: PolyFn
    by_degree: tuple


def poly_rayleigh_bound(m, degree):
    """Maximize the Rayleigh quotient over polynomials of degree at most ``degree``.

    Works on the standardized variable ``(Y - mean)/sd`` in its orthonormal
    polynomial basis, where the covariance Gram matrix is the identity and
    the derivative Gram matrix is small and well conditioned; the answer is
    rescaled by ``Var Y``. Solving once at the top degree also yields every
    lower degree through the nested leading blocks.
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise ValidationError(f"degree must be in [1, {MAX_DEGREE}]", field="degree")
    mean = m.mean
    var = m.variance
    sd = math.sqrt(var)
    points, weights = _rule(m, degree)
    xi = (points - mean) / sd
    vals, ders, polys = orthonormal_basis(xi, weights, degree)

    P, dP = vals[1:], ders[1:]
    wP = P * weights
    G = wP @ P.T - np.outer(P @ weights, P @ weights)
    H = (dP * weights) @ dP.T
    G = 0.5 * (G + G.T)
    H = 0.5 * (H + H.T)

    by_degree = []
    best_vec = None
    for d in range(1, degree + 1):
        try:
            evals, evecs = eigh(G[:d, :d], H[:d, :d])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"derivative Gram matrix not positive definite at degree {d}", stage="poly_rayleigh") from exc
        by_degree.append(float(evals[-1]) * var)
        best_vec = evecs[:, -1]
    by_degree = tuple(by_degree)

    g_std = sum((c * polys[k + 1] for k, c in enumerate(best_vec)), Polynomial([0.0]))
    g = g_std(Polynomial([-mean / sd, 1.0 / sd]))
    if np.dot(weights, (points - mean) * g(points)) < 0:
        g = -g
    return PolyBound(by_degree[-1], PolyFn.from_polynomial(g), by_degree)
