"""Poincaré constants of Gaussian-smoothed discrete distributions."""

from .bounds import BoundReport, bound_report, bu_ratio_scan, lower_bounds, moment_tail_check, span_stats, thm13_bound
from .clt import lemma_gbd_check, lemma_rdec_check, recursion_extremal, run_doubling
from .config import RunConfig
from .errors import AtomCapError, NumericalError, PoincareError, ValidationError, WindowError
from .mixture import (
    DiscreteAtoms,
    SmoothedMixture,
    affine,
    convolve,
    cumulant4,
    exp_abs_moment,
    fisher_info,
    moment,
    pdf_score,
    standardize,
    tail_first_moment,
)
from .polynomial import PolyFn, poly_rayleigh_bound, rayleigh_quotient
from .spectral import GapResult, assemble, estimate, solve_gap

__version__ = "0.1.0"

__all__ = [
    "affine",
    "assemble",
    "AtomCapError",
    "bound_report",
    "BoundReport",
    "bu_ratio_scan",
    "convolve",
    "cumulant4",
    "DiscreteAtoms",
    "estimate",
    "exp_abs_moment",
    "fisher_info",
    "GapResult",
    "lemma_gbd_check",
    "lemma_rdec_check",
    "lower_bounds",
    "moment",
    "moment_tail_check",
    "NumericalError",
    "pdf_score",
    "PoincareError",
    "poly_rayleigh_bound",
    "PolyFn",
    "rayleigh_quotient",
    "recursion_extremal",
    "run_doubling",
    "RunConfig",
    "SmoothedMixture",
    "solve_gap",
    "span_stats",
    "standardize",
    "tail_first_moment",
    "thm13_bound",
    "ValidationError",
    "WindowError",
]
