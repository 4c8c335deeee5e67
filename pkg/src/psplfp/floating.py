"""Floating assignments: inexact candidates accepted only by exact checks.

A floating assignment computes a candidate at some working precision,
converts it exactly to rationals and tests a strict predicate.  On failure
the precision doubles until the predicate holds or a hard cap is reached.
Exact results are only ever used inside the predicate, never fed back.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .core import as_rational, working_context

DEFAULT_START = 53
DEFAULT_CAP = 2**16


class PrecisionCapExceeded(ArithmeticError):
    def __init__(self, name: str, cap: int, last_error: str | None = None):
        self.name = name
        self.cap = cap
        self.last_error = last_error
        msg = f"floating assignment {name!r} not satisfied at any precision up to {cap} bits"
        if last_error:
            msg += f" (last failure: {last_error})"
        super().__init__(msg)


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PrecisionSchedule:
    """Precisions ``start, 2*start, 4*start, ...`` with ``cap`` tried last."""

    start: int = DEFAULT_START
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.start < 2:
            raise ValueError("start precision must be at least 2 bits")
        if self.cap < self.start:
            raise ValueError("precision cap must not be below the start precision")

    @classmethod
    def from_env(cls, environ=None) -> "PrecisionSchedule":
        env = os.environ if environ is None else environ
        start = int(env.get("PSPLFP_PRECISION_START", DEFAULT_START))
        cap = int(env.get("PSPLFP_PRECISION_CAP", max(DEFAULT_CAP, start)))
        return cls(start, cap)

    def precisions(self, start: int | None = None, margin: int = 0):
        """``start, 2*start + margin, ...`` below the cap, then the cap itself."""
        p = max(self.start, start or self.start)
        p = min(p, self.cap)
        while p < self.cap:
            yield p
            p = 2 * p + margin
        yield self.cap


def to_rational(vec: Sequence) -> tuple[mpq, ...]:
    """Exact rational image of a vector of finite binary floats."""
    return tuple(as_rational(v) for v in vec)


def _finite(vec) -> bool:
    return all(not isinstance(v, mpfr) or gmpy2.is_finite(v) for v in vec)


@dataclass
class FloatingAssignment:
    """``compute(prec)`` yields a candidate; ``accept(exact_candidate)`` is the strict predicate."""

    compute: Callable[[int], Sequence]
    accept: Callable[[tuple[mpq, ...]], bool]
    schedule: PrecisionSchedule = PrecisionSchedule()
    name: str = "assignment"

    def execute(self, start: int | None = None, margin: int = 0):
        """Return ``(candidate, precision)`` for the first accepted candidate.

        ``start`` lets callers resume from a precision that worked before.
        """
        last_error = None
        for prec in self.schedule.precisions(start, margin):
            try:
                candidate = tuple(self.compute(prec))
            except (ArithmeticError, ValueError) as exc:
                last_error = f"{type(exc).__name__} at {prec} bits: {exc}"
                continue
            if not _finite(candidate):
                last_error = f"non-finite candidate at {prec} bits"
                continue
            exact = to_rational(candidate)
            if self.accept(exact):
                return candidate, prec
            last_error = f"predicate false at {prec} bits"
        raise PrecisionCapExceeded(self.name, self.schedule.cap, last_error)


def lu_solve(a, b, prec: int) -> list[mpfr]:
    """Solve ``a x = b`` by LU decomposition with partial pivoting at ``prec`` bits."""
    n = len(a)
    with working_context(prec):
        m = [[mpfr(v) for v in row] for row in a]
        rhs = [mpfr(v) for v in b]
        for c in range(n):
            pivot = max(range(c, n), key=lambda r: abs(m[r][c]))
            if m[pivot][c] == 0:
                raise SingularSystemError(f"zero pivot in column {c} at {prec} bits")
            if pivot != c:
                m[c], m[pivot] = m[pivot], m[c]
                rhs[c], rhs[pivot] = rhs[pivot], rhs[c]
            pc = m[c][c]
            for r in range(c + 1, n):
                factor = m[r][c] / pc
                if factor == 0:
                    continue
                row, prow = m[r], m[c]
                for k in range(c + 1, n):
                    row[k] = row[k] - factor * prow[k]
                rhs[r] = rhs[r] - factor * rhs[c]
        x = [mpfr(0)] * n
        for r in range(n - 1, -1, -1):
            s = rhs[r]
            for k in range(r + 1, n):
                s = s - m[r][k] * x[k]
            x[r] = s / m[r][r]
    return x
