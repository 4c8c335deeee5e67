"""End-to-end bounds computation on arbitrary PSPs.

The bounds loop needs a perfectly superlinear system without zero
components.  This module removes zero components, rewrites the rest into
normal form, runs the loop and maps the results back to the original
variables.  The certificate refers to the rewritten system, which is
shipped with the report so the bounds can be re-checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .bounds import BoundsReport, calc_bounds, ceil_decimal, exact_string, floor_decimal
from .consistency import InvalidPspError
from .core import Psp, as_rational, validate
from .floating import PrecisionSchedule
from .graph import DegenerateSystemError, remove_zero_components
from .normalform import make_perfectly_superlinear
from .textformat import format_psp


@dataclass(frozen=True)
class PipelineBounds:
    variables: tuple[str, ...]
    lb: tuple[mpq, ...]
    ub: tuple[mpq, ...]
    epsilon: mpq
    removed_zero_vars: tuple[str, ...]
    consistent_vars: tuple[str, ...]
    certificate_system: Psp | None
    report: BoundsReport | None
    kept: tuple[int, ...]  # original indices of the variables that went through the loop

    @property
    def inconsistent_vars(self) -> tuple[str, ...]:
        return tuple(name for name, u in zip(self.variables, self.ub) if u < 1)

    def trace_original(self):
        """Per-iteration ``(lb, ub)`` on the original variables (removed ones at 0)."""
        if self.report is None or self.report.trace is None:
            return []
        out = []
        for lb, ub in self.report.trace:
            out.append((self._expand(lb), self._expand(ub)))
        return out

    def _expand(self, vec):
        full = [mpq(0)] * len(self.variables)
        for pos, i in enumerate(self.kept):
            full[i] = mpq(vec[pos])
        return tuple(full)

    def to_json(self, digits: int = 12) -> dict:
        out = {
            "variables": list(self.variables),
            "epsilon": exact_string(self.epsilon),
            "iterations": self.report.iterations if self.report else 0,
            "max_precision": self.report.max_precision if self.report else 0,
            "bounds": {
                name: {
                    "lb": floor_decimal(l, digits),
                    "ub": ceil_decimal(u, digits),
                    "lb_exact": exact_string(l),
                    "ub_exact": exact_string(u),
                }
                for name, l, u in zip(self.variables, self.lb, self.ub)
            },
            "removed_zero_vars": list(self.removed_zero_vars),
            "consistent_vars": list(self.consistent_vars),
            "inconsistent_vars": list(self.inconsistent_vars),
            "certificate": None,
        }
        if self.certificate_system is not None:
            out["certificate"] = {
                "system": format_psp(self.certificate_system),
                "lb": [exact_string(v) for v in self.report.lb_exact],
                "ub": [exact_string(v) for v in self.report.ub_exact],
            }
        if self.report is not None and self.report.trace is not None:
            out["trace"] = [
                {
                    "lb": [floor_decimal(v, digits) for v in lb],
                    "ub": [ceil_decimal(v, digits) for v in ub],
                }
                for lb, ub in self.trace_original()
            ]
        return out


def run_bounds(
    psp: Psp,
    epsilon,
    schedule: PrecisionSchedule | None = None,
    max_iters: int = 10**6,
    trace: bool = False,
) -> PipelineBounds:
    """Validate, drop zero components, normalize, bound, and map back."""
    violations = validate(psp)
    if violations:
        raise InvalidPspError(violations)
    n = psp.n
    epsilon = as_rational(epsilon)
    try:
        reduced, removed = remove_zero_components(psp)
    except DegenerateSystemError:
        zeros = (mpq(0),) * n
        return PipelineBounds(psp.variables, zeros, zeros, epsilon, psp.variables, (), None, None, ())
    kept = tuple(i for i in range(n) if i not in set(removed))
    normal, mapping = make_perfectly_superlinear(reduced)
    report = calc_bounds(normal, epsilon, schedule=schedule, max_iters=max_iters, trace=trace)
    lb = [mpq(0)] * n
    ub = [mpq(0)] * n
    for pos, i in enumerate(kept):
        lb[i] = report.lb_exact[pos]
        ub[i] = report.ub_exact[pos]
    if trace:
        report.trace = [(mapping.strip(l), mapping.strip(u)) for l, u in report.trace]
    original = set(reduced.variables)
    consistent = tuple(v for v in psp.variables if v in report.consistent_vars and v in original)
    return PipelineBounds(
        psp.variables,
        tuple(lb),
        tuple(ub),
        epsilon,
        tuple(psp.variables[i] for i in removed),
        consistent,
        normal,
        report,
        kept,
    )

