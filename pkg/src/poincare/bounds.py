"""Upper and lower bounds on the Poincaré constant of a smoothed mixture.

Upper bounds:
    ``thm13``    closed form ``tau (1 + s e^s)``, ``s = sigma^2 / (tau min p)``.
    ``bu-ratio`` supremum over ``x`` of the tail ratio
                 ``int_x^inf y f(y) dy / f(x)`` (criterion diagnostic).
    ``subadditive`` a bound carried through a convolution, when supplied.

Lower bounds come from test functions: ``x`` gives the variance,
``x^2 - 1`` on the standardized variable gives the fourth-moment bound, and
the best polynomial of a given degree gives ``rayleigh``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError, WindowError
from .mixture import CENTER_TOL, center, exp_abs_moment, logpdf, moment, standardize, tail_first_moment, tail_ratio
from .polynomial import poly_rayleigh_bound

FORMAT_VERSION = "poincare-bounds/1"
# s e^s overflows past this
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class SpanStats:
    sigma2: float
    M: float
    pmin: float
    partial_means: tuple
    techn_products: tuple
    techn_ok: bool
    span_ok: bool


def span_stats(d, rtol=1e-12):
    """Squared span, minimum probability, and partial means of centered atoms.

    ``techn_ok`` checks ``u_j (a_j - a_{j+1}) <= sigma^2`` for every ``j``;
    ``span_ok`` checks ``M * pmin <= 2 sigma^2``.
    """
    mean = d.mean
    if abs(mean) > CENTER_TOL:
        raise ValidationError(f"atoms have mean {mean:.3e}; center them first", field="atoms")
    a, p = d.values, d.probs
    sigma2 = d.variance
    u = np.cumsum(p * a)
    gaps = a[:-1] - a[1:]
    M = float(max(np.max(np.abs(a[:-1] ** 2 - a[1:] ** 2)), np.max(gaps**2))) if d.n > 1 else 0.0
    products = u[:-1] * gaps
    slack = rtol * sigma2 + 1e-15
    return SpanStats(
        sigma2=sigma2,
        M=M,
        pmin=d.min_prob,
        partial_means=tuple(float(v) for v in u),
        techn_products=tuple(float(v) for v in products),
        techn_ok=bool(np.all(products <= sigma2 + slack)),
        span_ok=bool(M * d.min_prob <= 2.0 * sigma2 + 2 * slack),
    )


def thm13_bound(m):
    """``tau (1 + s e^s)`` with ``s = Var(X) / (tau min_s p_s)``; ``inf`` on overflow."""
    s = m.discrete.variance / (m.tau * m.discrete.min_prob)
    if s > _MAX_EXPONENT:
        return math.inf
    return m.tau * (1.0 + s * math.exp(s))


class BuScan(NamedTuple):
    sup: float
    argmax: float
    x: np.ndarray
    ratio: np.ndarray
    shift: float

    def curve(self, m):
        """Rows ``(x, tail_moment, density, ratio)`` in the original coordinates."""
        mc, _ = center(m)
        density = np.exp(logpdf(mc, self.x))
        return np.column_stack([self.x - self.shift, tail_first_moment(mc, self.x), density, self.ratio])


def bu_ratio_scan(m, n_points=4001, width=12.0, xtol=1e-10):
    """Scan ``T(x) = int_x^inf y f(y) dy / f(x)`` and refine its maximum.

    The mixture is centered first; ``shift`` records the translation and
    ``argmax`` is reported in the original coordinates, as is ``x``'s
    counterpart in :meth:`BuScan.curve`. ``x`` itself is on the centered scale.

    Raises:
        WindowError: if ``T`` is still increasing at either end of the grid.
    """
    mc, shift = center(m)
    lo, hi = mc.window(width)
    half = max(abs(lo), abs(hi))
    x = np.linspace(-half, half, n_points)
    ratio = tail_ratio(mc, x)
    i = int(np.argmax(ratio))
    edge_tol = 1e-12 * abs(ratio[i])
    if (i == 0 and ratio[0] > ratio[1] + edge_tol) or (i == n_points - 1 and ratio[-1] > ratio[-2] + edge_tol):
        raise WindowError(f"tail ratio still increasing at x = {x[i]:.4g}; widen the window", field="width")

    sup, xbest = float(ratio[i]), float(x[i])
    if 0 < i < n_points - 1 and ratio[i] > max(ratio[i - 1], ratio[i + 1]):
        res = minimize_scalar(
            lambda t: -float(tail_ratio(mc, t)),
            bracket=(x[i - 1], x[i], x[i + 1]),
            method="golden",
            tol=xtol,
        )
        if -res.fun >= sup:
            sup, xbest = float(-res.fun), float(res.x)
    return BuScan(sup, xbest - shift, x, ratio, shift)


def lower_bounds(m):
    """``(variance_lb, fourth_moment_lb)``.

    The fourth-moment bound ``(E U^4 - 1)/4`` is evaluated on the
    standardized ``U`` and scaled back by ``Var(Y)``.
    """
    var = m.variance
    u = standardize(m)
    return var, var * (moment(u, 4) - 1.0) / 4.0


def moment_tail_check(m, r_upper):
    """``E exp(|Y - EY| / (12 sqrt(r_upper)))`` and whether it is at most 2."""
    if not r_upper > 0:
        raise ValidationError("must be positive", field="r_upper")
    c = 0.0 if math.isinf(r_upper) else 1.0 / (12.0 * math.sqrt(r_upper))
    value = exp_abs_moment(m, c)
    return value, value <= 2.0


@dataclass(frozen=True)
class BoundReport:
    variance_lb: float
    fourth_moment_lb: float
    rayleigh_lb: Optional[float]
    thm13_ub: float
    bu_ratio_ub: float
    bu_argmax: float
    subadditive_ub: Optional[float]
    chosen_upper: float
    chosen_upper_source: str
    chosen_lower: float
    chosen_lower_source: str
    shift: float

    @property
    def consistent(self):
        return self.chosen_lower <= self.chosen_upper + 1e-9 * (1.0 + self.chosen_upper)

    def to_dict(self):
        def entry(value, kind, provenance):
            return {"value": value, "kind": kind, "provenance": provenance}

        return {
            "variance_lb": entry(self.variance_lb, "lower", "variance"),
            "fourth_moment_lb": entry(self.fourth_moment_lb, "lower", "fourth-moment"),
            "rayleigh_lb": entry(self.rayleigh_lb, "lower", "rayleigh"),
            "thm13_ub": entry(self.thm13_ub, "upper", "thm13"),
            "bu_ratio_ub": entry(self.bu_ratio_ub, "diagnostic", "bu-ratio"),
            "bu_argmax": self.bu_argmax,
            "subadditive_ub": entry(self.subadditive_ub, "upper", "subadditive"),
            "chosen_upper": self.chosen_upper,
            "chosen_upper_provenance": self.chosen_upper_source,
            "chosen_lower": self.chosen_lower,
            "chosen_lower_provenance": self.chosen_lower_source,
            "shift": self.shift,
            "consistent": self.consistent,
        }


def bound_report(m, degree=8, scan_points=4001, width=12.0, subadditive_ub=None):
    """Assemble every bound for ``m``.

    ``chosen_upper`` is the smaller of ``thm13`` and a supplied
    ``subadditive_ub``; the tail-ratio supremum is reported alongside but
    not used as the certified bound. Pass ``degree=0`` to skip the
    polynomial lower bound.
    """
    variance_lb, fourth_lb = lower_bounds(m)
    rayleigh_lb = poly_rayleigh_bound(m, degree).best_lb if degree else None
    thm13 = thm13_bound(m)
    scan = bu_ratio_scan(m, n_points=scan_points, width=width)

    uppers = [(thm13, "thm13")]
    if subadditive_ub is not None:
        uppers.append((float(subadditive_ub), "subadditive"))
    lowers = [(variance_lb, "variance"), (fourth_lb, "fourth-moment")]
    if rayleigh_lb is not None:
        lowers.append((rayleigh_lb, "rayleigh"))
    upper, upper_src = min(uppers, key=lambda t: t[0])
    lower, lower_src = max(lowers, key=lambda t: t[0])
    return BoundReport(
        variance_lb=variance_lb,
        fourth_moment_lb=fourth_lb,
        rayleigh_lb=rayleigh_lb,
        thm13_ub=thm13,
        bu_ratio_ub=scan.sup,
        bu_argmax=scan.argmax,
        subadditive_ub=subadditive_ub,
        chosen_upper=upper,
        chosen_upper_source=upper_src,
        chosen_lower=lower,
        chosen_lower_source=lower_src,
        shift=scan.shift,
    )
