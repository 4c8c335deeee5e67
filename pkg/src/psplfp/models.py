"""Generators for benchmark PSP families and the critical-radius search."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpq

from .consistency import check_consistency
from .core import Polynomial, Psp, as_rational

# Offspring distribution of a fission event: probability of 0..4 neutrons.
FISSION_PGF = (mpq("0.025"), mpq("0.830"), mpq("0.07"), mpq("0.05"), mpq("0.025"))


def gen_hn(n: int) -> Psp:
    """The strongly connected family

    ``X1 = 0.5 X1^2 + 0.1 Xn^2 + 0.4`` and
    ``Xi = 0.01 X(i-1)^2 + 0.5 Xi + 0.49`` for ``i = 2..n``.

    Every member is inconsistent, with least fixed point extremely close to 1.
    """
    if n < 2:
        raise ValueError("h_n needs n >= 2")
    names = tuple(f"X{i}" for i in range(1, n + 1))
    polys = [Polynomial.from_terms([("0.5", {0: 2}), ("0.1", {n - 1: 2}), ("0.4", {})])]
    for i in range(1, n):
        polys.append(Polynomial.from_terms([("0.01", {i - 1: 2}), ("0.5", {i: 1}), ("0.49", {})]))
    return Psp(names, tuple(polys))


def hn_witness(n: int) -> tuple[mpq, ...]:
    """``p_i = 1 - 0.02^(n+i-1)``, a point with ``h_n(p) < p``."""
    base = mpq(1, 50)
    return tuple(1 - base ** (n + i - 1) for i in range(1, n + 1))


def gen_toy(D) -> Psp:
    """``X = (1 - D/4) + (D/4) X^2`` for ``0 < D <= 4``; consistent iff ``D <= 2``."""
    D = as_rational(D)
    if not 0 < D <= 4:
        raise ValueError("toy family needs 0 < D <= 4")
    q = D / 4
    terms = [(q, {0: 2})]
    if q < 1:
        terms.append((1 - q, {}))
    return Psp(("X",), (Polynomial.from_terms(terms),))


# Neutron branching model --------------------------------------------------


class KernelError(ValueError):
    pass


class NeutronKernel:
    """Escape probability ``l`` and collision density ``R`` on a grid.

    ``tables(grid, weights)`` returns ``(l, R)`` as exact rationals with
    ``l[j] = l(xi_j)`` and ``R[j][k] = R(xi_j, xi_k)``.
    """

    name = "kernel"

    def tables(self, grid: Sequence[mpq], weights: Sequence[mpq]):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantKernel(NeutronKernel):
    escape: mpq = mpq(1)
    density: mpq = mpq(0)
    name: str = "constant"

    def tables(self, grid, weights):
        n = len(grid)
        return [as_rational(self.escape)] * n, [[as_rational(self.density)] * n for _ in range(n)]


@dataclass(frozen=True)
class SurrogateKernel(NeutronKernel):
    """Built-in stand-in kernel, not a physical model of any particular material.

    Collision density ``R(xi, eta) = (exp(-|xi - eta|) + exp(-(xi + eta))) / 2``
    (exponential attenuation with a mirror term), rounded to ``digits``
    decimals so the tables are exact rationals.  The escape probability is
    whatever the discretized collision mass leaves over,
    ``l_j = max(0, 1 - sum_k w_k R_jk)``.
    """

    digits: int = 12
    name: str = "surrogate"

    def density(self, xi: mpq, eta: mpq) -> mpq:
        with gmpy2.context(gmpy2.get_context(), precision=128):
            val = (gmpy2.exp(-abs(gmpy2.mpfr(xi - eta))) + gmpy2.exp(-gmpy2.mpfr(xi + eta))) / 2
            scaled = gmpy2.rint(val * 10**self.digits)
        return mpq(int(scaled), 10**self.digits)

    def tables(self, grid, weights):
        r = [[self.density(a, b) for b in grid] for a in grid]
        l = [max(mpq(0), 1 - sum((w * v for w, v in zip(weights, row)), mpq(0))) for row in r]
        return l, r


@dataclass(frozen=True)
class TabulatedKernel(NeutronKernel):
    """Kernel read from a file with an ``xi,l`` section and an ``xi,eta,R`` section.

    Values are parsed as exact decimals; every grid point must be tabulated.
    """

    escape: dict = field(default_factory=dict)
    density: dict = field(default_factory=dict)
    name: str = "file"

    @classmethod
    def from_text(cls, text: str, name: str = "file") -> "TabulatedKernel":
        escape: dict = {}
        density: dict = {}
        section = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            header = [c.strip() for c in line.split(",")]
            if header in (["xi", "l"], ["xi", "eta", "R"]):
                section = len(header)
                continue
            if section is None:
                raise KernelError(f"line {lineno}: data before a section header")
            if len(header) != section:
                raise KernelError(f"line {lineno}: expected {section} fields")
            try:
                vals = [as_rational(c) for c in header]
            except (ValueError, ZeroDivisionError) as exc:
                raise KernelError(f"line {lineno}: {exc}") from None
            if section == 2:
                escape[vals[0]] = vals[1]
            else:
                density[(vals[0], vals[1])] = vals[2]
        return cls(escape, density, name)

    @classmethod
    def from_file(cls, path) -> "TabulatedKernel":
        path = Path(path)
        return cls.from_text(path.read_text(), name=f"file:{path}")

    def tables(self, grid, weights):
        try:
            l = [self.escape[a] for a in grid]
            r = [[self.density[(a, b)] for b in grid] for a in grid]
        except KeyError as exc:
            raise KernelError(f"kernel table has no entry for grid point {exc.args[0]}") from None
        return l, r


def kernel_from_spec(spec: str) -> NeutronKernel:
    if spec in ("builtin", "surrogate"):
        return SurrogateKernel()
    if spec.startswith("file:"):
        return TabulatedKernel.from_file(spec[5:])
    raise KernelError(f"unknown kernel {spec!r}; use builtin, surrogate or file:PATH")


def trapezoid_weights(D: mpq, n: int) -> list[mpq]:
    h = D / n
    return [h / 2 if k in (0, n) else h for k in range(n + 1)]


@dataclass(frozen=True)
class NeutronModel:
    psp: Psp
    D: mpq
    grid: tuple[mpq, ...]
    weights: tuple[mpq, ...]
    clamp_factors: dict  # row index -> factor applied to its non-constant coefficients

    @property
    def clamped(self) -> bool:
        return bool(self.clamp_factors)


def gen_neutron(D, n: int, kernel: NeutronKernel | None = None) -> NeutronModel:
    """Discretized neutron branching process on ``[0, D]`` with ``n`` segments.

    Variable ``Qj`` approximates the probability that a neutron started at
    ``xi_j = j D / n`` has a finite line of descendants:
    ``Qj = l_j + sum_k w_k R_jk f(Qk)`` with trapezoid weights ``w_k`` and the
    fission generating function ``f``.  Rows whose coefficients would sum
    above 1 have their non-constant coefficients scaled down exactly.
    """
    D = as_rational(D)
    if D <= 0:
        raise ValueError("D must be positive")
    if n < 1:
        raise ValueError("need at least one segment")
    kernel = kernel or SurrogateKernel()
    grid = [D * k / n for k in range(n + 1)]
    weights = trapezoid_weights(D, n)
    escape, density = kernel.tables(grid, weights)
    if any(v < 0 for v in escape) or any(v < 0 for row in density for v in row):
        raise KernelError("kernel produced negative values")

    names = tuple(f"Q{j}" for j in range(n + 1))
    polys = []
    clamps = {}
    for j in range(n + 1):
        mass = [w * r for w, r in zip(weights, density[j])]
        total_mass = sum(mass, mpq(0))
        constant = escape[j] + FISSION_PGF[0] * total_mass
        scale = mpq(1)
        if escape[j] + total_mass > 1:
            scale = (1 - constant) / ((1 - FISSION_PGF[0]) * total_mass)
            if scale <= 0:
                raise KernelError(f"row {j}: constant part alone exceeds 1")
            clamps[j] = scale
        terms = []
        if constant > 0:
            terms.append((constant, {}))
        for k in range(n + 1):
            if mass[k] == 0:
                continue
            for e in range(1, len(FISSION_PGF)):
                terms.append((scale * mass[k] * FISSION_PGF[e], {k: e}))
        polys.append(Polynomial.from_terms(terms))
    return NeutronModel(Psp(names, tuple(polys)), D, tuple(grid), tuple(weights), clamps)


# Critical radius -----------------------------------------------------------


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class BisectionStep:
    D: mpq
    consistent: bool
    seconds: float


@dataclass(frozen=True)
class CriticalInterval:
    lo: mpq
    hi: mpq
    steps: tuple[BisectionStep, ...]

    @property
    def width(self) -> mpq:
        return self.hi - self.lo


def bisect_consistency(family: Callable[[mpq], Psp], lo, hi, tol) -> CriticalInterval:
    """Shrink ``[lo, hi]`` with ``family(lo)`` consistent and ``family(hi)`` not to width ``<= tol``."""
    lo, hi, tol = as_rational(lo), as_rational(hi), as_rational(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not lo < hi:
        raise BracketError("need lo < hi")
    steps = []

    def probe(D):
        start = time.perf_counter()
        ok = check_consistency(family(D)).consistent
        steps.append(BisectionStep(D, ok, time.perf_counter() - start))
        return ok

    if not probe(lo):
        raise BracketError(f"system at lo = {lo} is not consistent")
    if probe(hi):
        raise BracketError(f"system at hi = {hi} is consistent")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return CriticalInterval(lo, hi, tuple(steps))


def critical_radius(n_segments: int, kernel: NeutronKernel | None, lo, hi, tol) -> CriticalInterval:
    return bisect_consistency(lambda D: gen_neutron(D, n_segments, kernel).psp, lo, hi, tol)
