"""Powers-of-two CLT experiment and the inequalities behind its rate.

``run_doubling`` follows ``S_{k+1} = standardize(S_k + S_k')`` with exact
convolution and records the grid estimate of the Poincaré constant at every
level. ``recursion_extremal`` iterates the scalar recursion
``u_k (1 + u_k) = u_{k-1}`` that turns the per-level inequality into an
``O(1/n)`` rate. The two ``lemma_*_check`` functions evaluate the
projection and near-linearity inequalities on polynomial test functions.

Where a true constant is unknown it is replaced by a certified upper bound,
and only in positions where a larger value makes the inequality easier to
satisfy; each such position is marked where it happens.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .bounds import thm13_bound
from .config import RunConfig
from .errors import NumericalError, ValidationError
from .mixture import SmoothedMixture, convolve, cumulant4, fisher_info, standardize
from .polynomial import PolyFn, _rule, expect, variance_under
from .spectral import estimate

MAX_LEVELS = 10


@dataclass
class CltLevel:
    k: int
    n: int
    mixture: SmoothedMixture = field(repr=False)
    r_estimate: float
    thm13_ub: float
    upper: float
    fisher: float
    kappa4: float
    atom_count: int
    rate_product: float
    dynsys_residual: Optional[float] = None
    c_level: Optional[float] = None


@dataclass
class CltTrace:
    levels: List[CltLevel]
    C_used: float
    R0_upper: float
    I0: float
    error: Optional[str] = None

    @property
    def complete(self):
        return self.error is None

    def rows(self):
        for lv in self.levels:
            yield {
                "k": lv.k,
                "n": lv.n,
                "r_estimate": lv.r_estimate,
                "thm13_ub": lv.thm13_ub,
                "fisher": lv.fisher,
                "kappa4": lv.kappa4,
                "rate_product": lv.rate_product,
                "dynsys_residual": lv.dynsys_residual,
                "atom_count": lv.atom_count,
            }


def rate_constant(r, i):
    """``18 R (I R + 1)``."""
    return 18.0 * r * (i * r + 1.0)


def run_doubling(m0, levels, config=None):
    """Run levels ``0..levels`` of the doubling experiment.

    ``C`` is fixed from level 0 as ``18 R (I R + 1)`` with ``R`` the certified
    upper bound of ``S_0`` (an overestimate of the true constant only
    enlarges ``C``) and ``I`` its Fisher information. The per-level variant
    ``18 R_{k+1}^2 (1/R_k + I_k)`` is stored as ``c_level``.

    Numerical failures stop the run; the partial trace carries the message
    in ``error``.
    """
    config = config or RunConfig()
    if not 0 <= levels <= MAX_LEVELS:
        raise ValidationError(f"must be in [0, {MAX_LEVELS}]", field="levels")

    s = standardize(m0)
    out = []
    upper_prev = None
    error = None
    for k in range(levels + 1):
        try:
            if k > 0:
                s = standardize(convolve(s, s, merge_tol=config.merge_tol, atom_cap=config.atom_cap))
            gap = estimate(s, config.n_points, config.width)
            fisher = fisher_info(s, width=config.quad_width, tol=config.quad_tol)
        except NumericalError as exc:
            error = str(exc)
            break
        thm13 = thm13_bound(s)
        # R_{S_{k+1}} <= (R_{S_k} + R_{S_k}) / 2, so an upper bound carries forward
        upper = thm13 if upper_prev is None else min(thm13, upper_prev)
        upper_prev = upper
        n = 2**k
        out.append(
            CltLevel(
                k=k,
                n=n,
                mixture=s,
                r_estimate=gap.r_estimate,
                thm13_ub=thm13,
                upper=upper,
                fisher=fisher,
                kappa4=cumulant4(s),
                atom_count=s.n_atoms,
                rate_product=n * (gap.r_estimate - 1.0),
            )
        )

    if not out:
        raise NumericalError(error or "no levels computed", stage="clt")
    R0, I0 = out[0].upper, out[0].fisher
    C = rate_constant(R0, I0)
    for prev, cur in zip(out, out[1:]):
        prev.dynsys_residual = C * (prev.r_estimate - cur.r_estimate) - (cur.r_estimate - 1.0) ** 2
        prev.c_level = 18.0 * cur.r_estimate**2 * (1.0 / prev.r_estimate + prev.fisher)
    return CltTrace(out, C, R0, I0, error)


@dataclass
class RecursionTrace:
    u: np.ndarray
    pow2_ok: bool
    filled_ok: bool
    pow2_bounds: list

    def rows(self):
        """``(k, u_k, 4/2^r or None, 16/k)`` for ``k = 1..steps``."""
        pow2 = {2**r: 4.0 / 2**r for r in range(0, 64)}
        for k, uk in enumerate(self.u, start=1):
            yield k, float(uk), pow2.get(k), 16.0 / k


def recursion_extremal(u1, steps):
    """Extremal trajectory of ``u_k (1 + u_k) <= u_{k-1}``.

    Each step takes the positive root ``(-1 + sqrt(1 + 4v)) / 2``, written
    as ``2v / (1 + sqrt(1 + 4v))`` to avoid cancellation for small ``v``.
    """
    u1 = float(u1)
    if not 0 < u1 <= 1:
        raise ValidationError("must lie in (0, 1]", field="u1")
    if steps < 1:
        raise ValidationError("must be at least 1", field="steps")
    u = [u1]
    sqrt = math.sqrt
    v = u1
    for _ in range(steps - 1):
        v = 2.0 * v / (1.0 + sqrt(1.0 + 4.0 * v))
        u.append(v)
    u = np.asarray(u)
    k = np.arange(1, steps + 1)
    filled_ok = bool(np.all(u <= 16.0 / k))
    pow2 = []
    r = 0
    while 2**r <= steps:
        pow2.append((r, float(u[2**r - 1]), 4.0 / 2**r))
        r += 1
    pow2_ok = all(val <= bound for _, val, bound in pow2)
    return RecursionTrace(u, pow2_ok, filled_ok, pow2)


@dataclass(frozen=True)
class RdecCheck:
    lhs: float
    rhs: float
    passed: bool


def lemma_rdec_check(x_tau, y, g):
    """Projection inequality for ``X ~ N(0, x_tau)`` independent of the mixture ``y``.

    Checks ``Var g(X+Y) <= (R_X + R_Y) E g'^2 - R_X / (R_X I(Y) + 1) Var g'``
    with ``R_X = x_tau`` exactly.
    """
    x_tau = float(x_tau)
    if not x_tau > 0:
        raise ValidationError("must be positive", field="x_tau")
    if not isinstance(g, PolyFn):
        g = PolyFn(tuple(g))
    if g.degree > 6:
        raise ValidationError("degree must be at most 6", field="g")
    s = SmoothedMixture(y.discrete, y.tau + x_tau)
    points, weights = _rule(s, g.degree)
    dg = g.deriv()(points)
    e_dg2 = expect(weights, dg * dg)
    if e_dg2 < 1e-14:
        raise ValidationError("E g'^2 is degenerate", field="g")
    lhs = variance_under(weights, g(points))
    r_x = x_tau
    # R_Y only multiplies E g'^2, so its upper bound only raises the right side
    r_y = thm13_bound(y)
    # I(Y) <= 1/tau_Y; a larger I shrinks the subtracted term
    i_y = 1.0 / y.tau
    rhs = (r_x + r_y) * e_dg2 - r_x / (r_x * i_y + 1.0) * variance_under(weights, dg)
    return RdecCheck(lhs, rhs, bool(lhs <= rhs + 1e-9 * abs(rhs)))


@dataclass(frozen=True)
class GbdCheck:
    lhs: float
    rhs: float
    t0: float
    delta: float
    passed: bool
    tight_rhs: float
    tight_passed: bool
    branch: str


def _stationary_max(V, c, v, A, mu):
    """Local maximizer of ``(V + 2ct + v t^2) / (A + 2 mu t + t^2)``, or None.

    The derivative has the sign of ``q(t) = (v mu - c) t^2 + (v A - V) t + (c A - V mu)``;
    a maximum is a root where ``q`` changes from positive to negative.
    """
    a2, a1, a0 = v * mu - c, v * A - V, c * A - V * mu
    scale = max(abs(a2), abs(a1), abs(a0))
    if scale == 0.0:
        return None, "constant"
    tiny = 1e-13 * max(abs(v * mu), abs(c), abs(v * A), abs(V), abs(c * A), abs(V * mu), 1e-300)
    if abs(a2) <= tiny and abs(a1) <= tiny:
        return None, "constant"
    if abs(a2) <= tiny:
        roots = [-a0 / a1]
    else:
        disc = a1 * a1 - 4 * a2 * a0
        if disc < 0:
            return None, "no-real-root"
        sq = math.sqrt(disc)
        q = -0.5 * (a1 + math.copysign(sq, a1))
        roots = [q / a2, a0 / q] if q != 0 else [0.0]
    for t in roots:
        slope = 2 * a2 * t + a1
        if slope < 0:
            return t, "finite-max"
    return None, "linear-limit"


def lemma_gbd_check(w, h, r_upper=None):
    """Near-linearity bound for ``g = h + t0 * id`` with ``t0`` the maximizer of
    ``r(t) = Var(h(W) + tW) / E(h'(W) + t)^2``.

    Checks ``Var g / E g'^2 - Var W <= 3 R_W sqrt(delta)`` with
    ``delta = Var g' / E g'^2`` and ``R_W`` replaced by ``r_upper``
    (default: the closed-form upper bound of ``w``), which can only enlarge
    the right side. Also reports the sharper ``R_W sqrt(delta / (1 - delta))``.

    When ``r`` has no finite maximum its supremum is the limit ``Var W`` at
    infinity; that branch returns ``t0 = inf`` and ``lhs = delta = 0``.
    """
    if abs(w.mean) > 1e-10:
        raise ValidationError("W must be centered", field="w")
    if not isinstance(h, PolyFn):
        h = PolyFn(tuple(h))
    if h.degree < 1:
        raise ValidationError("h must be non-constant", field="h")
    r_w = thm13_bound(w) if r_upper is None else float(r_upper)

    points, weights = _rule(w, h.degree)
    hv = h(points)
    dh = h.deriv()(points)
    V = variance_under(weights, hv)
    v = variance_under(weights, points)
    c = expect(weights, (hv - expect(weights, hv)) * (points - expect(weights, points)))
    A = expect(weights, dh * dh)
    mu = expect(weights, dh)

    t0, branch = _stationary_max(V, c, v, A, mu)
    if t0 is None and branch == "constant":
        t0 = 0.0
    if t0 is None:
        return GbdCheck(0.0, 0.0, math.inf, 0.0, True, 0.0, True, branch)

    dg = dh + t0
    e_dg2 = expect(weights, dg * dg)
    if e_dg2 < 1e-14:
        raise ValidationError("E g'^2 is degenerate", field="h")
    ratio = variance_under(weights, hv + t0 * points) / e_dg2
    delta = variance_under(weights, dg) / e_dg2
    lhs = ratio - v
    rhs = 3.0 * r_w * math.sqrt(max(delta, 0.0))
    tight = r_w * math.sqrt(delta / (1.0 - delta)) if delta < 1.0 else math.inf
    passed = lhs <= rhs + 1e-9 * (1.0 + abs(rhs))
    tight_passed = lhs <= tight + 1e-9 * (1.0 + abs(tight))
    return GbdCheck(lhs, rhs, t0, delta, bool(passed), tight, bool(tight_passed), branch)
