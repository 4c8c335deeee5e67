"""Rewriting a PSP into a perfectly superlinear one with the same least fixed point.

A PSP is perfectly superlinear if every polynomial has degree at least 2,
every variable depends directly on itself, and every superlinear SCC is
purely superlinear.  The rewrite adds one auxiliary variable ``aux`` with
equation ``aux = 1/3 aux^2 + 2/3`` (least solution 1).
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .core import Exponents, Polynomial, Psp
from .graph import SccKind, direct_deps, scc_decompose

HALF = mpq(1, 2)

_Poly = dict  # exponents -> coefficient, insertion ordered


@dataclass(frozen=True)
class NormalFormMap:
    """Where the original variables and the auxiliary variable live in the output."""

    original_count: int
    aux_index: int
    substitutions: int

    def strip(self, vec):
        return tuple(vec[: self.original_count])


def _degree(exps: Exponents, members=None) -> int:
    return sum(e for v, e in exps if members is None or v in members)


def _mul_exps(a: Exponents, b: Exponents) -> Exponents:
    merged = dict(a)
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


def _add(poly: _Poly, exps: Exponents, coef):
    poly[exps] = poly.get(exps, 0) + coef


def _aux_name(names) -> str:
    taken = set(names)
    name = "aux"
    k = 1
    while name in taken:
        name = f"aux{k}"
        k += 1
    return name


def _to_psp(names, polys) -> Psp:
    return Psp(tuple(names), tuple(Polynomial.from_terms((c, e) for e, c in p.items()) for p in polys))


def make_perfectly_superlinear(psp: Psp) -> tuple[Psp, NormalFormMap]:
    """Return ``(g, mapping)`` with ``mu_g`` restricted to the original variables equal to ``mu_f``.

    Input must be valid and free of zero components.
    """
    n = psp.n
    aux = n
    names = list(psp.variables) + [_aux_name(psp.variables)]
    polys: list[_Poly] = [{m.exponents: m.coefficient for m in p.monomials} for p in psp.polys]
    if any(not p for p in polys):
        raise ValueError("empty polynomial: remove zero components first")
    polys.append({((aux, 2),): mpq(1, 3), (): mpq(2, 3)})

    # Lift every polynomial to degree >= 2 by multiplying one monomial of
    # maximal degree with a power of aux.
    for i in range(n):
        p = polys[i]
        deg = max(_degree(e) for e in p)
        if deg >= 2:
            continue
        target = next(e for e in p if _degree(e) == deg)
        lifted = _mul_exps(target, ((aux, 2 - deg),))
        polys[i] = {(lifted if e == target else e): c for e, c in p.items()}

    # Substitution steps inside superlinear SCCs that are not purely superlinear.
    dec = scc_decompose(_to_psp(names, polys))
    substitutions = 0
    for scc, kind in dec:
        if kind is not SccKind.SUPERLINEAR:
            continue
        members = set(scc)
        degree = {i: max(_degree(e, members) for e in polys[i]) for i in scc}
        while any(d <= 1 for d in degree.values()):
            i, j = next(
                (i, j)
                for i in scc
                if degree[i] <= 1
                for j in scc
                if degree[j] >= 2 and any(v == j for e in polys[i] for v, _ in e)
            )
            target = next(e for e in polys[i] if any(v == j for v, _ in e))
            coef = polys[i][target]
            rest = tuple((v, e - 1 if v == j else e) for v, e in target if not (v == j and e == 1))
            new: _Poly = {}
            for e, c in polys[i].items():
                if e == target:
                    _add(new, e, HALF * c)
                    for fe, fc in polys[j].items():
                        _add(new, _mul_exps(fe, rest), HALF * coef * fc)
                else:
                    _add(new, e, c)
            polys[i] = new
            degree[i] = max(_degree(e, members) for e in new)
            substitutions += 1

    # Make every variable depend directly on itself.
    for i, p in enumerate(polys):
        mixed = {e: HALF * c for e, c in p.items()}
        _add(mixed, ((i, 1),), HALF)
        polys[i] = mixed

    out = _to_psp(names, polys)
    return out, NormalFormMap(original_count=n, aux_index=aux, substitutions=substitutions)


def is_perfectly_superlinear(psp: Psp) -> bool:
    if any(p.degree < 2 for p in psp.polys):
        return False
    deps = direct_deps(psp)
    if any(i not in deps[i] for i in range(psp.n)):
        return False
    return all(kind is not SccKind.SUPERLINEAR for _, kind in scc_decompose(psp))
