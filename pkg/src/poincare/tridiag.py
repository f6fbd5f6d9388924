"""Selected eigenpairs of a real symmetric tridiagonal matrix.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from shifted
inverse iteration. The matrix is given by its diagonal ``d`` (length n) and
off-diagonal ``e`` (length n - 1).
"""

import math
import sys

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import NumericalError

EPS = sys.float_info.epsilon


def gershgorin(d, e):
    r = np.zeros_like(d)
    r[:-1] += np.abs(e)
    r[1:] += np.abs(e)
    return float(np.min(d - r)), float(np.max(d + r))


def matrix_norm(d, e):
    lo, hi = gershgorin(d, e)
    return max(abs(lo), abs(hi))


class SturmCounter:
    """Counts eigenvalues strictly below a shift via the LDL^T pivots of ``T - sigma I``."""

    def __init__(self, d, e):
        self.d = [float(v) for v in d]
        self.e2 = [float(v) * float(v) for v in e]
        self.pivmin = max(EPS * EPS * max(self.e2, default=1.0), sys.float_info.min)
        self.calls = 0

    def __call__(self, sigma):
        self.calls += 1
        d, e2, pivmin = self.d, self.e2, self.pivmin
        q = d[0] - sigma
        if abs(q) < pivmin:
            q = -pivmin
        count = 1 if q < 0 else 0
        for i in range(1, len(d)):
            q = d[i] - sigma - e2[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0:
                count += 1
        return count


def bisect_eigenvalue(counter, index, lo, hi, rtol=1e-10, atol=0.0, max_steps=200):
    """The ``index``-th smallest eigenvalue (0-based) inside ``[lo, hi]``.

    Raises:
        NumericalError: if the bracket does not contain the eigenvalue.
    """
    if counter(lo) > index or counter(hi) <= index:
        raise NumericalError(
            f"bracket [{lo:.6g}, {hi:.6g}] does not isolate eigenvalue {index}", stage="bisection"
        )
    for _ in range(max_steps):
        if hi - lo <= max(rtol * max(abs(lo), abs(hi)), atol):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if counter(mid) > index:
            hi = mid
        else:
            lo = mid
    raise NumericalError(f"no convergence after {max_steps} bisection steps", stage="bisection")


def tridiag_matvec(d, e, y):
    out = d * y
    out[:-1] += e * y[1:]
    out[1:] += e * y[:-1]
    return out


def inverse_iteration(d, e, shift, x0, deflate=None, tol=1e-8, max_iter=50):
    """Eigenvector for the eigenvalue nearest ``shift``.

    Args:
        d, e: the tridiagonal matrix.
        shift: eigenvalue estimate.
        x0: starting vector.
        deflate: optional unit vector spanning a known eigenspace to project out
            at every step.
        tol: target residual ``||T y - lambda y||`` for unit ``y``.

    Returns:
        ``(y, lam, residual, iterations)`` with ``lam`` the Rayleigh quotient.

    Raises:
        NumericalError: if the residual target is not met in ``max_iter`` steps.
    """
    n = d.size
    scale = matrix_norm(d, e)
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[2, :-1] = e
    ab[1] = d - shift
    y = np.array(x0, dtype=np.float64)
    if deflate is not None:
        y -= np.dot(deflate, y) * deflate
    y /= np.linalg.norm(y)
    residual = math.inf
    lam = shift
    for it in range(1, max_iter + 1):
        try:
            z = solve_banded((1, 1), ab, y, check_finite=False)
        except LinAlgError:
            # exactly singular shift: nudge it off the eigenvalue
            ab[1] = d - (shift + 8 * EPS * scale)
            z = solve_banded((1, 1), ab, y, check_finite=False)
        if deflate is not None:
            z -= np.dot(deflate, z) * deflate
        nz = np.linalg.norm(z)
        if not np.isfinite(nz) or nz == 0:
            raise NumericalError("inverse iteration produced a degenerate vector", stage="inverse_iteration")
        y = z / nz
        ty = tridiag_matvec(d, e, y)
        lam = float(np.dot(y, ty))
        residual = float(np.linalg.norm(ty - lam * y))
        if residual <= tol:
            return y, lam, residual, it
    raise NumericalError(
        f"residual {residual:.3e} above {tol:.1e} after {max_iter} iterations", stage="inverse_iteration"
    )
