"""Gaussian-smoothed discrete distributions.

A :class:`SmoothedMixture` is ``X + Z`` where ``X`` takes finitely many values
and ``Z`` is an independent centered normal with variance ``tau``.  Everything
here is closed form except :func:`fisher_info`, which integrates numerically.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import log_ndtr, logsumexp, ndtr

from .errors import AtomCapError, NumericalError, ValidationError
from .quadrature import adaptive_simpson

PROB_SUM_TOL = 1e-12
JSON_PROB_SUM_TOL = 1e-9
MAX_MOMENT_ORDER = 16
CENTER_TOL = 1e-10
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# cells of the (points x atoms) matrices built by vectorized evaluators
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class DiscreteAtoms:
    """Finitely supported distribution with values sorted strictly decreasing.

    Exact duplicate values are merged on construction.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=np.float64)).copy()
        probs = np.atleast_1d(np.asarray(self.probs, dtype=np.float64)).copy()
        if values.ndim != 1 or values.shape != probs.shape:
            raise ValidationError("values and probs must be 1-D arrays of equal length")
        if values.size == 0:
            raise ValidationError("need at least one atom", field="atoms")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite", field="atoms")
        if not np.all(probs > 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be positive and finite", field="atoms")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1", field="atoms")

        order = np.argsort(-values, kind="stable")
        values, probs = values[order], probs[order]
        if values.size > 1 and np.any(values[1:] == values[:-1]):
            starts = np.flatnonzero(np.r_[True, values[1:] != values[:-1]])
            probs = np.add.reduceat(probs, starts)
            values = values[starts]
        values.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self):
        return self.values.size

    @property
    def mean(self):
        return math.fsum(self.probs * self.values)

    @property
    def variance(self):
        c = self.values - self.mean
        return math.fsum(self.probs * c * c)

    @property
    def min_prob(self):
        return float(self.probs.min())

    def shifted(self, b):
        return DiscreteAtoms(self.values + b, self.probs)

    def __repr__(self):
        pairs = ", ".join(f"({v:.6g}, {p:.6g})" for v, p in zip(self.values, self.probs))
        return f"DiscreteAtoms[{pairs}]"


@dataclass(frozen=True, eq=False)
class SmoothedMixture:
    discrete: DiscreteAtoms
    tau: float

    def __post_init__(self):
        tau = float(self.tau)
        if not (tau > 0 and math.isfinite(tau)):
            raise ValidationError("must be positive and finite", field="tau")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_atoms(cls, values, probs, tau):
        return cls(DiscreteAtoms(values, probs), tau)

    @classmethod
    def gaussian(cls, tau, mean=0.0):
        return cls(DiscreteAtoms([mean], [1.0]), tau)

    @property
    def values(self):
        return self.discrete.values

    @property
    def probs(self):
        return self.discrete.probs

    @property
    def n_atoms(self):
        return self.discrete.n

    @property
    def mean(self):
        return self.discrete.mean

    @property
    def variance(self):
        return self.discrete.variance + self.tau

    def window(self, width):
        """Interval extending ``width`` standard deviations of the smoothing beyond the atoms."""
        s = math.sqrt(self.tau)
        return float(self.values[-1]) - width * s, float(self.values[0]) + width * s

    def __repr__(self):
        return f"SmoothedMixture({self.discrete!r}, tau={self.tau:.6g})"


def _chunks(x, n_atoms):
    step = max(1, _CHUNK_CELLS // max(n_atoms, 1))
    for start in range(0, x.size, step):
        yield slice(start, start + step)


def _log_components(m, x):
    # log p_i + log phi_tau(x - a_i), shape (len(x), n_atoms)
    d = x[:, None] - m.values[None, :]
    return np.log(m.probs)[None, :] - d * d / (2.0 * m.tau) - 0.5 * math.log(m.tau) - _LOG_SQRT_2PI


def logpdf(m, x):
    """Log-density, evaluated with a max shift so it never underflows."""
    x = np.asarray(x, dtype=np.float64)
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    for sl in _chunks(flat, m.n_atoms):
        out[sl] = logsumexp(_log_components(m, flat[sl]), axis=1)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def _logpdf_and_score(m, x):
    flat = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    logf = np.empty_like(flat)
    score = np.empty_like(flat)
    for sl in _chunks(flat, m.n_atoms):
        xs = flat[sl]
        lc = _log_components(m, xs)
        top = lc.max(axis=1, keepdims=True)
        w = np.exp(lc - top)
        s = w.sum(axis=1)
        logf[sl] = top[:, 0] + np.log(s)
        # score = -(x - E[a | x]) / tau with posterior weights w / s
        score[sl] = -(xs - (w @ m.values) / s) / m.tau
    return logf, score


def pdf_score(m, x):
    """Density, its derivative, and the score ``f'/f`` at ``x``.

    The score comes from posterior atom weights computed in the log domain,
    so it stays finite and accurate where the density itself underflows.
    """
    x = np.asarray(x, dtype=np.float64)
    logf, score = _logpdf_and_score(m, x)
    density = np.exp(logf)
    derivative = density * score
    if x.ndim == 0:
        return float(density[0]), float(derivative[0]), float(score[0])
    shape = x.shape
    return density.reshape(shape), derivative.reshape(shape), score.reshape(shape)


def _double_factorial_odd(j):
    # (j - 1)!! for even j
    out = 1
    for i in range(j - 1, 0, -2):
        out *= i
    return out


def _moment_about(m, k, shift):
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValidationError("moment order must be a non-negative integer", field="k")
    if k > MAX_MOMENT_ORDER:
        raise ValidationError(f"moment order {k} exceeds {MAX_MOMENT_ORDER}", field="k")
    a = m.values - shift
    terms = []
    for j in range(0, k + 1, 2):
        coef = math.comb(k, j) * m.tau ** (j // 2) * _double_factorial_odd(j)
        terms.append(coef * m.probs * a ** (k - j))
    return math.fsum(np.concatenate(terms))


def moment(m, k):
    """Raw moment ``E Y^k`` in closed form, ``0 <= k <= 16``."""
    return _moment_about(m, k, 0.0)


def central_moment(m, k):
    return _moment_about(m, k, m.mean)


def cumulant4(m):
    """Fourth cumulant ``E Y^4 - 3 (E Y^2)^2`` of the centered mixture.

    The Gaussian part contributes nothing, so this is evaluated on the atoms
    alone, which avoids cancelling the ``3 tau^2`` terms.
    """
    a = m.values - m.mean
    a2 = a * a
    mu2 = math.fsum(m.probs * a2)
    mu4 = math.fsum(m.probs * a2 * a2)
    return mu4 - 3.0 * mu2 * mu2


def merge_atoms(values, probs, merge_tol=1e-9):
    """Merge atoms closer than ``merge_tol * (1 + span)`` into their weighted mean."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    p = probs[order]
    span = float(v[-1] - v[0]) if v.size else 0.0
    tol = merge_tol * (1.0 + span)
    starts = np.flatnonzero(np.r_[True, np.diff(v) > tol])
    pm = np.add.reduceat(p, starts)
    vm = np.add.reduceat(p * v, starts) / pm
    return vm, pm


def convolve(a, b, merge_tol=1e-9, atom_cap=200_000):
    """Distribution of the sum of independent draws from ``a`` and ``b``."""
    n_pairs = a.n_atoms * b.n_atoms
    if n_pairs > 50 * atom_cap:
        raise AtomCapError(n_pairs, atom_cap)
    values = (a.values[:, None] + b.values[None, :]).ravel()
    probs = (a.probs[:, None] * b.probs[None, :]).ravel()
    values, probs = merge_atoms(values, probs, merge_tol)
    if values.size > atom_cap:
        raise AtomCapError(values.size, atom_cap)
    probs = probs / math.fsum(probs)
    return SmoothedMixture(DiscreteAtoms(values, probs), a.tau + b.tau)


def affine(m, a, b=0.0):
    """Distribution of ``a * Y + b``."""
    a = float(a)
    if a == 0.0 or not math.isfinite(a):
        raise ValidationError("scale must be finite and non-zero", field="a")
    return SmoothedMixture(DiscreteAtoms(a * m.values + b, m.probs), a * a * m.tau)


def standardize(m):
    scale = 1.0 / math.sqrt(m.variance)
    return affine(m, scale, -m.mean * scale)


def center(m):
    """Shift to mean zero; returns the centered mixture and the shift applied."""
    shift = -m.mean
    if shift == 0.0:
        return m, 0.0
    return SmoothedMixture(m.discrete.shifted(shift), m.tau), shift


def _require_centered(m):
    if abs(m.mean) > CENTER_TOL:
        raise ValidationError(f"mixture mean {m.mean:.3e} is not zero; center it first", field="mean")


def tail_first_moment(m, x):
    """``int_x^inf y f(y) dy`` for a centered mixture.

    Uses ``tau f(x) + sum_i p_i a_i Q((x - a_i)/sqrt(tau))``; for ``x < 0`` the
    atom term is rewritten with the lower tail (the atom mean is zero) so both
    tails keep full relative accuracy.
    """
    _require_centered(m)
    x = np.asarray(x, dtype=np.float64)
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    s = math.sqrt(m.tau)
    pa = m.probs * m.values
    density = np.exp(logpdf(m, flat))
    for sl in _chunks(flat, m.n_atoms):
        xs = flat[sl]
        z = (xs[:, None] - m.values[None, :]) / s
        upper = ndtr(-z) @ pa
        lower = -(ndtr(z) @ pa)
        out[sl] = m.tau * density[sl] + np.where(xs >= 0, upper, lower)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def tail_ratio(m, x):
    """``tail_first_moment(m, x) / f(x)`` computed without forming either factor."""
    _require_centered(m)
    x = np.asarray(x, dtype=np.float64)
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    s = math.sqrt(m.tau)
    logf = logpdf(m, flat)
    pa = m.probs * m.values
    for sl in _chunks(flat, m.n_atoms):
        xs = flat[sl]
        z = (xs[:, None] - m.values[None, :]) / s
        sign = np.where(xs >= 0, 1.0, -1.0)[:, None]
        # upper tail Q(z) for x >= 0, minus lower tail Phi(z) otherwise
        logtail = log_ndtr(-sign * z)
        out[sl] = m.tau + sign[:, 0] * (np.exp(logtail - logf[sl][:, None]) @ pa)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def exp_abs_moment(m, c):
    """Exact ``E exp(c |Y - E Y|)``.

    For ``W ~ N(mu, s^2)``:
    ``E e^{c|W|} = e^{c mu + c^2 s^2/2} Phi(mu/s + c s) + e^{-c mu + c^2 s^2/2} Phi(-mu/s + c s)``,
    summed over atoms in the log domain.
    """
    c = float(c)
    if c < 0 or not math.isfinite(c):
        raise ValidationError("c must be finite and non-negative", field="c")
    if c == 0.0:
        return 1.0
    mu = m.values - m.mean
    s = math.sqrt(m.tau)
    exponent = 0.5 * c * c * m.tau + c * float(np.max(np.abs(mu)))
    if exponent > 700.0:
        raise NumericalError(f"exponent {exponent:.1f} overflows double precision", stage="exp_abs_moment")
    logp = np.log(m.probs)
    half = 0.5 * c * c * m.tau
    terms = np.concatenate(
        [
            logp + c * mu + half + log_ndtr(mu / s + c * s),
            logp - c * mu + half + log_ndtr(-mu / s + c * s),
        ]
    )
    return float(np.exp(logsumexp(terms)))


def integrate(m, func, width=12.0, tol=1e-9):
    """Integrate ``func(x)`` over the mixture window with adaptive Simpson."""
    lo, hi = m.window(width)
    # initial panels no wider than half a smoothing standard deviation
    panels = int(min(max(64, math.ceil((hi - lo) / (0.5 * math.sqrt(m.tau)))), 1 << 16))
    return adaptive_simpson(func, lo, hi, tol=tol, initial_panels=panels)


def total_mass(m, width=12.0, tol=1e-9):
    return integrate(m, lambda x: np.exp(logpdf(m, x)), width, tol).value


def fisher_info(m, width=12.0, tol=1e-9):
    """Fisher information ``int f'^2 / f`` by adaptive quadrature.

    Raises:
        NumericalError: if the result exceeds ``1/tau`` (the Gaussian value,
            which no smoothed mixture can beat) by more than the tolerance.
    """
    def integrand(x):
        logf, score = _logpdf_and_score(m, x)
        return np.exp(logf) * score * score

    value = integrate(m, integrand, width, tol).value
    if value > 1.0 / m.tau + 10.0 * tol:
        raise NumericalError(
            f"Fisher information {value!r} exceeds 1/tau = {1.0 / m.tau!r}", stage="fisher_info"
        )
    return value


def gauss_nodes(m, n_nodes=32):
    """Discrete measure matching every polynomial moment of ``m`` up to degree ``2 n_nodes - 1``.

    Each atom is replaced by a Gauss-Hermite rule scaled to the smoothing
    variance, so polynomial expectations under the returned points and
    weights are exact up to rounding.
    """
    nodes, weights = hermegauss(n_nodes)
    weights = weights / math.sqrt(2.0 * math.pi)
    points = (m.values[:, None] + math.sqrt(m.tau) * nodes[None, :]).ravel()
    w = (m.probs[:, None] * weights[None, :]).ravel()
    return points, w


def random_mixture(rng, n_atoms=(2, 5), value_range=(-2.0, 2.0), taus=(0.1, 1.0), min_prob=0.05, centered=False):
    """Random mixture for property runs.

    Probabilities are Dirichlet draws floored at ``min_prob`` before
    renormalizing; ``tau`` is picked from ``taus``.
    """
    k = int(rng.integers(n_atoms[0], n_atoms[1] + 1))
    values = rng.uniform(value_range[0], value_range[1], size=k)
    probs = rng.dirichlet(np.ones(k)) + min_prob
    probs /= probs.sum()
    tau = float(rng.choice(taus))
    m = SmoothedMixture.from_atoms(values, probs, tau)
    if centered:
        m, _ = center(m)
    return m


def mixture_from_dict(data):
    """Parse the JSON mixture format ``{"atoms": [{"value", "prob"}...], "tau"}``.

    Probabilities within 1e-9 of summing to one are renormalized.
    """
    if not isinstance(data, dict):
        raise ValidationError("expected a JSON object", field="$")
    if "atoms" not in data:
        raise ValidationError("missing field", field="atoms")
    if "tau" not in data:
        raise ValidationError("missing field", field="tau")
    atoms = data["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise ValidationError("must be a non-empty list", field="atoms")
    values, probs = [], []
    for i, atom in enumerate(atoms):
        where = f"atoms[{i}]"
        if not isinstance(atom, dict):
            raise ValidationError("expected an object", field=where)
        for key, dest in (("value", values), ("prob", probs)):
            if key not in atom:
                raise ValidationError("missing field", field=f"{where}.{key}")
            v = atom[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"must be a finite number, got {v!r}", field=f"{where}.{key}")
            dest.append(float(v))
        if probs[-1] <= 0:
            raise ValidationError("must be positive", field=f"{where}.prob")
    tau = data["tau"]
    if isinstance(tau, bool) or not isinstance(tau, (int, float)) or not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"must be a positive finite number, got {tau!r}", field="tau")
    total = math.fsum(probs)
    if abs(total - 1.0) > JSON_PROB_SUM_TOL:
        raise ValidationError(f"probabilities sum to {total!r}", field="atoms")
    probs = [p / total for p in probs]
    return SmoothedMixture.from_atoms(values, probs, float(tau))


def mixture_to_dict(m):
    return {
        "atoms": [{"value": float(v), "prob": float(p)} for v, p in zip(m.values, m.probs)],
        "tau": m.tau,
    }
