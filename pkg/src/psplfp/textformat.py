"""Reading and writing PSPs in the line-oriented text format.

One equation per line::

    # comment
    X1 = 1/2*X1*X2 + 0.5
    X2 = 0.25*X2^2 + 0.25*X1 + 0.5

Coefficients are decimals or ``p/q`` fractions and are converted exactly.
A right-hand side of ``0`` denotes the empty polynomial.
"""

from __future__ import annotations

import re
from fractions import Fraction

from gmpy2 import mpq

from .core import Polynomial, Psp

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_FACTOR_RE = re.compile(rf"\s*(?:(?P<num>{_NUMBER})|(?P<var>{_NAME})\s*(?:\^\s*(?P<exp>\d+))?)\s*$")
_NAME_RE = re.compile(rf"^{_NAME}$")


class PspParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_number(text: str) -> mpq:
    if "/" in text:
        p, q = text.split("/")
        return mpq(Fraction(p)) / mpq(Fraction(q))
    return mpq(Fraction(text))


def parse_psp(text: str) -> Psp:
    """Parse the text format; raises :class:`PspParseError` with a line number."""
    equations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("=") != 1:
            raise PspParseError("expected exactly one '=' per equation", lineno)
        lhs, rhs = (s.strip() for s in line.split("="))
        if not _NAME_RE.match(lhs):
            raise PspParseError(f"invalid variable name {lhs!r}", lineno)
        equations.append((lineno, lhs, rhs))

    if not equations:
        raise PspParseError("no equations found")
    names = [lhs for _, lhs, _ in equations]
    index = {}
    for lineno, lhs, _ in equations:
        if lhs in index:
            raise PspParseError(f"variable {lhs} defined twice", lineno)
        index[lhs] = len(index)

    polys = []
    for lineno, lhs, rhs in equations:
        if not rhs:
            raise PspParseError(f"empty right-hand side for {lhs}", lineno)
        if re.search(r"(?<![0-9.][eE])-", rhs):
            raise PspParseError("negative coefficients are not allowed in a PSP", lineno)
        if rhs == "0":
            polys.append(Polynomial())
            continue
        terms = []
        for term in re.split(r"(?<![0-9.][eE])\+", rhs):
            if not term.strip():
                raise PspParseError("empty term", lineno)
            coef = mpq(1)
            exps: dict[int, int] = {}
            for factor in term.split("*"):
                m = _FACTOR_RE.match(factor)
                if m is None:
                    raise PspParseError(f"cannot parse factor {factor.strip()!r}", lineno)
                if m.group("num") is not None:
                    try:
                        coef *= _parse_number(m.group("num"))
                    except (ValueError, ZeroDivisionError) as exc:
                        raise PspParseError(f"bad number {m.group('num')!r}: {exc}", lineno) from None
                else:
                    var = m.group("var")
                    if var not in index:
                        raise PspParseError(f"undefined variable {var}", lineno)
                    exp = int(m.group("exp") or 1)
                    if exp < 1:
                        raise PspParseError("exponents must be at least 1", lineno)
                    exps[index[var]] = exps.get(index[var], 0) + exp
            if coef <= 0:
                raise PspParseError("coefficients must be positive", lineno)
            terms.append((coef, exps))
        polys.append(Polynomial.from_terms(terms))
    return Psp(tuple(names), tuple(polys))


def format_rational(q) -> str:
    """Exact decimal if the expansion terminates, otherwise ``p/q``."""
    q = mpq(q)
    num, den = int(q.numerator), int(q.denominator)
    if den == 1:
        return str(num)
    twos = (den & -den).bit_length() - 1
    rest = den >> twos
    fives = 0
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        return f"{num}/{den}"
    scale = max(twos, fives)
    digits = str(abs(num) * 10**scale // den).rjust(scale + 1, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{digits[:-scale]}.{digits[-scale:]}"


def format_psp(psp: Psp) -> str:
    lines = []
    for name, poly in zip(psp.variables, psp.polys):
        terms = []
        for m in poly.monomials:
            factors = [] if m.coefficient == 1 and m.exponents else [format_rational(m.coefficient)]
            for v, e in m.exponents:
                factors.append(psp.variables[v] if e == 1 else f"{psp.variables[v]}^{e}")
            terms.append("*".join(factors))
        lines.append(f"{name} = {' + '.join(terms) if terms else '0'}")
    return "\n".join(lines) + "\n"
