"""Reduced-size invariant suite behind ``poincare selftest``."""

import math
from typing import Callable, List, NamedTuple

import numpy as np

from . import bounds, clt, mixture, spectral
from .mixture import SmoothedMixture
from .polynomial import PolyFn


class Check(NamedTuple):
    module: str
    name: str
    passed: bool
    detail: str


def _mixture_checks(rng):
    m = SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 1.0)
    yield "density normalizes", abs(mixture.total_mass(m) - 1.0) <= 1e-8, ""
    x = np.linspace(-6, 6, 101)
    h = 1e-5
    _, _, score = mixture.pdf_score(m, x)
    fd = (mixture.logpdf(m, x + h) - mixture.logpdf(m, x - h)) / (2 * h)
    err = float(np.max(np.abs(score - fd)))
    yield "score is d log f", err <= 1e-5, f"max err {err:.2e}"
    a = mixture.random_mixture(rng)
    b = mixture.random_mixture(rng)
    s = mixture.convolve(a, b)
    ok = math.isclose(s.variance, a.variance + b.variance, rel_tol=1e-12) and math.isclose(
        mixture.cumulant4(s), mixture.cumulant4(a) + mixture.cumulant4(b), rel_tol=1e-10, abs_tol=1e-14
    )
    yield "convolution adds variance and kappa4", ok, ""
    g = SmoothedMixture.gaussian(0.5)
    yield "gaussian fisher = 1/tau", abs(mixture.fisher_info(g) - 2.0) <= 1e-6, ""


def _bounds_checks(rng):
    fails = 0
    for _ in range(200):
        d = mixture.random_mixture(rng, n_atoms=(2, 6), centered=True).discrete
        st = bounds.span_stats(d)
        fails += not (st.techn_ok and st.span_ok)
    yield "span inequalities", fails == 0, f"{fails} violations"
    m = SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 1.0)
    yield "thm13 two-point value", math.isclose(bounds.thm13_bound(m), 1 + 2 * math.e**2, rel_tol=1e-14), ""
    scan = bounds.bu_ratio_scan(SmoothedMixture.gaussian(2.0))
    yield "tail ratio constant for gaussian", float(np.max(np.abs(scan.ratio - 2.0))) < 1e-9, ""
    fails = 0
    for _ in range(20):
        m = mixture.random_mixture(rng)
        _, ok = bounds.moment_tail_check(m, bounds.thm13_bound(m))
        fails += not ok
    yield "exponential moment at most 2", fails == 0, f"{fails} violations"


def _spectral_checks(rng):
    r = spectral.estimate(SmoothedMixture.gaussian(1.0))
    yield "OU gap", abs(r.lambda1 - 1.0) <= 1e-3, f"lambda1={r.lambda1:.8f}"
    m = SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 1.0)
    r = spectral.solve_gap(spectral.assemble(m))
    ok = 2.0 <= r.r_estimate <= bounds.thm13_bound(m) and r.certified_rayleigh_lb <= r.r_estimate * 1.005
    yield "two-point sandwich", ok, f"R={r.r_estimate:.6f}"
    fails = 0
    for _ in range(5):
        a = mixture.random_mixture(rng)
        b = mixture.random_mixture(rng)
        ra, rb = spectral.estimate(a).r_estimate, spectral.estimate(b).r_estimate
        rs = spectral.estimate(mixture.convolve(a, b)).r_estimate
        fails += rs > (ra + rb) * 1.01
    yield "subadditivity", fails == 0, f"{fails} violations"


def _clt_checks(rng):
    rt = clt.recursion_extremal(1.0, 2**14)
    yield "recursion bounds", rt.pow2_ok and rt.filled_ok, ""
    tr = clt.run_doubling(SmoothedMixture.from_atoms([1.0, -1.0], [0.5, 0.5], 0.5), 3)
    ok = tr.complete and all(
        math.isclose(b.kappa4, a.kappa4 / 2, rel_tol=1e-12) for a, b in zip(tr.levels, tr.levels[1:])
    )
    yield "kappa4 halves", ok, ""
    ok = all(lv.dynsys_residual >= -1e-6 * (1 + tr.C_used) for lv in tr.levels[:-1])
    yield "level inequality", ok, f"C={tr.C_used:.4g}"
    fails = 0
    for _ in range(10):
        y = mixture.random_mixture(rng)
        g = PolyFn(tuple(rng.normal(size=int(rng.integers(2, 5)))))
        fails += not clt.lemma_rdec_check(float(rng.uniform(0.1, 2.0)), y, g).passed
        w = mixture.random_mixture(rng, centered=True)
        fails += not clt.lemma_gbd_check(w, g).passed
    yield "projection and near-linearity inequalities", fails == 0, f"{fails} violations"


SUITES: List[tuple] = [
    ("mixture", _mixture_checks),
    ("bounds", _bounds_checks),
    ("spectral", _spectral_checks),
    ("clt", _clt_checks),
]


def run(seed=0, report: Callable[[Check], None] = None):
    rng = np.random.default_rng(seed)
    results = []
    for module, suite in SUITES:
        try:
            for name, passed, detail in suite(rng):
                chk = Check(module, name, bool(passed), detail)
                results.append(chk)
                if report:
                    report(chk)
        except Exception as exc:  # a crashing suite counts as one failure
            chk = Check(module, "suite", False, f"{type(exc).__name__}: {exc}")
            results.append(chk)
            if report:
                report(chk)
    return results
