"""Exact consistency checks and certified bounds for probabilistic systems of polynomials."""

from .bounds import (
    BoundsReport,
    IterationLimitExceeded,
    NotPerfectlySuperlinear,
    calc_bounds,
    compute_strict_prefix,
    mark_consistent,
    newton_step,
    verify_certificate,
)
from .consistency import CheckResult, Verdict, check_consistency, consistent, scpsp_consistent
from .core import Monomial, Polynomial, Psp, evaluate, jacobian, restrict, validate
from .floating import FloatingAssignment, PrecisionCapExceeded, PrecisionSchedule, to_rational
from .graph import SccKind, remove_zero_components, scc_decompose
from .linalg import spectral_radius_le_one
from .models import critical_radius, gen_hn, gen_neutron
from .normalform import is_perfectly_superlinear, make_perfectly_superlinear
from .pipeline import run_bounds
from .textformat import format_psp, parse_psp

__all__ = [
    "BoundsReport",
    "CheckResult",
    "FloatingAssignment",
    "IterationLimitExceeded",
    "Monomial",
    "NotPerfectlySuperlinear",
    "Polynomial",
    "PrecisionCapExceeded",
    "PrecisionSchedule",
    "Psp",
    "SccKind",
    "Verdict",
    "calc_bounds",
    "check_consistency",
    "compute_strict_prefix",
    "consistent",
    "critical_radius",
    "evaluate",
    "format_psp",
    "gen_hn",
    "gen_neutron",
    "is_perfectly_superlinear",
    "jacobian",
    "make_perfectly_superlinear",
    "mark_consistent",
    "newton_step",
    "parse_psp",
    "remove_zero_components",
    "restrict",
    "run_bounds",
    "scc_decompose",
    "scpsp_consistent",
    "spectral_radius_le_one",
    "to_rational",
    "validate",
    "verify_certificate",
]
