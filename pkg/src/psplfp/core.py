"""Probabilistic systems of polynomials (PSPs): data model and evaluation.

A PSP is a list of polynomials ``f_1, ..., f_n`` over variables
``X_1, ..., X_n`` whose coefficients are positive rationals adding up to at
most one per polynomial.  All exact arithmetic is done with ``gmpy2.mpq``;
inexact evaluation uses ``gmpy2.mpfr`` at a caller-chosen precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

Exponents = tuple[tuple[int, int], ...]

ZERO = mpq(0)
ONE = mpq(1)


def as_rational(value) -> mpq:
    """Convert ints, Fractions, floats, mpfr values or strings to ``mpq`` exactly.

    Strings may be decimal literals (``"0.830"``, ``"1e-6"``) or fractions
    (``"3/4"``); decimals are never rounded through binary floating point.
    """
    if isinstance(value, str):
        return mpq(Fraction(value.strip()))
    if isinstance(value, mpfr):
        if not gmpy2.is_finite(value):
            raise ValueError(f"non-finite value {value!r} has no rational image")
    return mpq(value)


def working_context(prec: int):
    """Context manager for round-to-nearest arithmetic at ``prec`` bits."""
    if prec < 2:
        raise ValueError(f"precision must be at least 2 bits, got {prec}")
    return gmpy2.context(gmpy2.get_context(), precision=prec, round=gmpy2.RoundToNearest)


def _normalize_exponents(exponents) -> Exponents:
    if isinstance(exponents, Mapping):
        items = exponents.items()
    else:
        items = exponents
    merged: dict[int, int] = {}
    for var, exp in items:
        var, exp = int(var), int(exp)
        if var < 0:
            raise ValueError(f"negative variable index {var}")
        if exp < 0:
            raise ValueError(f"negative exponent {exp} for variable {var}")
        if exp:
            merged[var] = merged.get(var, 0) + exp
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class Monomial:
    """``coefficient * prod(X_v ** e for v, e in exponents)``.

    ``exponents`` is sorted by variable index; an empty tuple is the constant
    monomial.
    """

    coefficient: mpq
    exponents: Exponents = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficient", as_rational(self.coefficient))
        object.__setattr__(self, "exponents", _normalize_exponents(self.exponents))
        if self.coefficient <= 0:
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exponents)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.exponents)

    def exponent(self, var: int) -> int:
        for v, e in self.exponents:
            if v == var:
                return e
        return 0

    def degree_in(self, subset) -> int:
        return sum(e for v, e in self.exponents if v in subset)


@dataclass(frozen=True)
class Polynomial:
    monomials: tuple[Monomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "monomials", tuple(self.monomials))
        seen = set()
        for m in self.monomials:
            if m.exponents in seen:
                raise ValueError("duplicate monomial; build with Polynomial.from_terms to merge")
            seen.add(m.exponents)

    @classmethod
    def from_terms(cls, terms: Iterable) -> "Polynomial":
        """Build from ``(coefficient, exponents)`` pairs or Monomials, merging duplicates.

        The merged monomial keeps the position of its first occurrence.
        """
        merged: dict[Exponents, mpq] = {}
        for term in terms:
            if isinstance(term, Monomial):
                coef, exps = term.coefficient, term.exponents
            else:
                coef, exps = term
                exps = _normalize_exponents(exps)
            merged[exps] = merged.get(exps, ZERO) + as_rational(coef)
        return cls(tuple(Monomial(c, e) for e, c in merged.items()))

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.monomials), default=0)

    @property
    def coefficient_sum(self) -> mpq:
        return sum((m.coefficient for m in self.monomials), ZERO)

    @property
    def constant_term(self) -> mpq:
        for m in self.monomials:
            if not m.exponents:
                return m.coefficient
        return ZERO

    @property
    def variables(self) -> frozenset[int]:
        return frozenset(v for m in self.monomials for v in m.variables)

    def degree_in(self, subset) -> int:
        return max((m.degree_in(subset) for m in self.monomials), default=0)

    def __len__(self):
        return len(self.monomials)


@dataclass(frozen=True)
class Psp:
    """The system ``X_i = f_i(X)``; ``polys[i]`` is ``f_i``."""

    variables: tuple[str, ...]
    polys: tuple[Polynomial, ...]
    _approx_coeffs: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "polys", tuple(self.polys))
        if len(self.variables) != len(self.polys):
            raise ValueError(
                f"{len(self.variables)} variables but {len(self.polys)} polynomials"
            )
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        n = len(self.variables)
        for i, p in enumerate(self.polys):
            for v in p.variables:
                if v >= n:
                    raise ValueError(f"polynomial {i} uses variable index {v} >= {n}")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def size(self) -> int:
        """Number of monomials plus the number of variable occurrences."""
        return sum(1 + len(m.exponents) for p in self.polys for m in p.monomials)

    def index(self, name: str) -> int:
        return self.variables.index(name)

    def __call__(self, x):
        return evaluate(self, x)

    def approx_coefficients(self, prec: int) -> tuple[tuple[mpfr, ...], ...]:
        """Coefficients rounded to nearest at ``prec`` bits (cached per precision)."""
        cached = self._approx_coeffs.get(prec)
        if cached is None:
            with working_context(prec):
                cached = tuple(
                    tuple(mpfr(m.coefficient) for m in p.monomials) for p in self.polys
                )
            self._approx_coeffs[prec] = cached
        return cached


@dataclass(frozen=True)
class Violation:
    index: int
    variable: str
    coefficient_sum: mpq

    def __str__(self):
        return (
            f"polynomial for {self.variable} has coefficient sum "
            f"{self.coefficient_sum} > 1"
        )


def validate(psp: Psp) -> list[Violation]:
    """Return the polynomials whose coefficients sum to more than one (empty if valid).

    Positivity of coefficients is enforced when monomials are constructed.
    """
    out = []
    for i, p in enumerate(psp.polys):
        total = p.coefficient_sum
        if total > 1:
            out.append(Violation(i, psp.variables[i], total))
    return out


def _check_dim(psp: Psp, x) -> list[mpq]:
    if len(x) != psp.n:
        raise ValueError(f"expected a vector of length {psp.n}, got {len(x)}")
    return [as_rational(v) for v in x]


def _monomial_value(m: Monomial, x) -> mpq:
    val = m.coefficient
    for v, e in m.exponents:
        val *= x[v] ** e
    return val


def evaluate(psp: Psp, x: Sequence) -> tuple[mpq, ...]:
    """Exact value of ``f(x)``."""
    xs = _check_dim(psp, x)
    return tuple(
        sum((_monomial_value(m, xs) for m in p.monomials), ZERO) for p in psp.polys
    )


def jacobian(psp: Psp, x: Sequence) -> list[list[mpq]]:
    """Exact Jacobian ``f'(x)``; entry ``[i][j]`` is ``d f_i / d X_j`` at ``x``."""
    xs = _check_dim(psp, x)
    n = psp.n
    jac = [[ZERO] * n for _ in range(n)]
    for i, p in enumerate(psp.polys):
        row = jac[i]
        for m in p.monomials:
            for k, (v, e) in enumerate(m.exponents):
                term = m.coefficient * e * xs[v] ** (e - 1)
                for k2, (w, e2) in enumerate(m.exponents):
                    if k2 != k:
                        term *= xs[w] ** e2
                row[v] += term
    return jac


def restrict(psp: Psp, keep: Sequence[int], fixed: Mapping[int, object] | None = None) -> Psp:
    """Restrict ``psp`` to the variables ``keep`` and substitute constants for the rest.

    Polynomials of variables outside ``keep`` are deleted.  Every foreign
    variable occurring in a kept polynomial must have a value in ``fixed``.
    Monomials that become zero (a substituted value of 0) are dropped and
    constant monomials produced by the substitution are merged.
    """
    keep = list(keep)
    if not keep:
        raise ValueError("cannot restrict to an empty variable set")
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate variables in restriction")
    fixed = {int(k): as_rational(v) for k, v in (fixed or {}).items()}
    new_index = {old: new for new, old in enumerate(keep)}
    polys = []
    for old in keep:
        terms = []
        for m in psp.polys[old].monomials:
            coef = m.coefficient
            exps = []
            for v, e in m.exponents:
                if v in new_index:
                    exps.append((new_index[v], e))
                elif v in fixed:
                    coef *= fixed[v] ** e
                else:
                    raise ValueError(
                        f"variable {psp.variables[v]} occurs in the polynomial of "
                        f"{psp.variables[old]} but is neither kept nor fixed"
                    )
            if coef != 0:
                terms.append((coef, exps))
        polys.append(Polynomial.from_terms(terms))
    return Psp(tuple(psp.variables[i] for i in keep), tuple(polys))


def _approx_vector(x, prec: int) -> list[mpfr]:
    out = []
    for v in x:
        if isinstance(v, mpfr):
            out.append(v)
        else:
            out.append(mpfr(as_rational(v)))
    return out


def evaluate_approx(psp: Psp, x: Sequence, prec: int) -> tuple[mpfr, ...]:
    """``f(x)`` with every elementary operation rounded to nearest at ``prec`` bits."""
    if len(x) != psp.n:
        raise ValueError(f"expected a vector of length {psp.n}, got {len(x)}")
    coeffs = psp.approx_coefficients(prec)
    with working_context(prec):
        xs = _approx_vector(x, prec)
        out = []
        for p, cs in zip(psp.polys, coeffs):
            total = mpfr(0)
            for m, c in zip(p.monomials, cs):
                val = c
                for v, e in m.exponents:
                    val = val * xs[v] ** e
                total = total + val
            out.append(total)
    return tuple(out)


def jacobian_approx(psp: Psp, x: Sequence, prec: int) -> list[list[mpfr]]:
    """Inexact counterpart of :func:`jacobian` at ``prec`` bits."""
    if len(x) != psp.n:
        raise ValueError(f"expected a vector of length {psp.n}, got {len(x)}")
    n = psp.n
    coeffs = psp.approx_coefficients(prec)
    with working_context(prec):
        xs = _approx_vector(x, prec)
        jac = [[mpfr(0)] * n for _ in range(n)]
        for i, (p, cs) in enumerate(zip(psp.polys, coeffs)):
            row = jac[i]
            for m, c in zip(p.monomials, cs):
                for k, (v, e) in enumerate(m.exponents):
                    term = c * e * xs[v] ** (e - 1)
                    for k2, (w, e2) in enumerate(m.exponents):
                        if k2 != k:
                            term = term * xs[w] ** e2
                    row[v] = row[v] + term
    return jac


def constant_vector(n: int, value=1) -> tuple[mpq, ...]:
    return (as_rational(value),) * n
