"""Deciding whether the least fixed point of a PSP is the all-ones vector."""

from __future__ import annotations

from dataclasses import dataclass

from .core import Psp, constant_vector, evaluate, jacobian, restrict, validate
from .graph import (
    DegenerateSystemError,
    SccKind,
    has_zero_components,
    is_scpsp,
    remove_zero_components,
    scc_decompose,
)
from .linalg import OpCounter, spectral_radius_le_one


class NotScPspError(ValueError):
    pass


class InvalidPspError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    witness_scc: tuple[str, ...] | None = None
    op_count: int = 0

    def __bool__(self):
        return self.consistent


def scpsp_consistent(psp: Psp, counter: OpCounter | None = None) -> bool:
    """Consistency of a strongly connected PSP.

    The system must satisfy ``f(1) = 1`` (otherwise some component, and with
    it the whole SCC, stays below one) and ``rho(f'(1)) <= 1``.
    """
    if not is_scpsp(psp):
        raise NotScPspError("system is not a strongly connected non-constant PSP")
    ones = constant_vector(psp.n)
    if any(v != 1 for v in evaluate(psp, ones)):
        return False
    return spectral_radius_le_one(jacobian(psp, ones), counter=counter, check=False)


def consistent(psp: Psp, counter: OpCounter | None = None) -> Verdict:
    """SCC-wise consistency check, bottom SCCs first.

    Each SCC is restricted with the variables of lower (already consistent)
    SCCs set to 1; a constant SCC is consistent iff its value is exactly 1,
    any other SCC is an scPSP handled by :func:`scpsp_consistent`.  The first
    inconsistent SCC is reported as the witness.
    """
    violations = validate(psp)
    if violations:
        raise InvalidPspError(violations)
    if has_zero_components(psp):
        raise ValueError("system has components with least fixed point 0; remove them first")
    counter = counter if counter is not None else OpCounter()
    dec = scc_decompose(psp)
    for scc, kind in dec:
        members = set(scc)
        fixed = {i: 1 for i in range(psp.n) if i not in members}
        sub = restrict(psp, scc, fixed)
        if kind is SccKind.CONSTANT:
            ok = sub.polys[0].constant_term == 1
        else:
            ok = scpsp_consistent(sub, counter)
        if not ok:
            return Verdict(False, tuple(psp.variables[i] for i in scc), counter.ops)
    return Verdict(True, None, counter.ops)


@dataclass(frozen=True)
class CheckResult:
    verdict: Verdict
    removed_zero_vars: tuple[str, ...]

    @property
    def consistent(self) -> bool:
        return self.verdict.consistent


def check_consistency(psp: Psp) -> CheckResult:
    """Full pipeline: validate, drop zero components, then decide consistency.

    Components with least fixed point 0 make the system inconsistent; they
    are reported in ``removed_zero_vars`` and the first one is the witness.
    """
    violations = validate(psp)
    if violations:
        raise InvalidPspError(violations)
    try:
        reduced, removed = remove_zero_components(psp)
    except DegenerateSystemError as exc:
        names = tuple(psp.variables[i] for i in exc.removed)
        return CheckResult(Verdict(False, names[:1], 0), names)
    names = tuple(psp.variables[i] for i in removed)
    if removed:
        return CheckResult(Verdict(False, names[:1], 0), names)
    return CheckResult(consistent(reduced), names)
