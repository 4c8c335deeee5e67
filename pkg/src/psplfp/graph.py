"""Dependence relation of a PSP and its strongly connected components."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import Psp, restrict


class SccKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    SUPERLINEAR = "superlinear"  # superlinear but not purely superlinear
    PURELY_SUPERLINEAR = "purely-superlinear"

    @property
    def is_superlinear(self) -> bool:
        return self in (SccKind.SUPERLINEAR, SccKind.PURELY_SUPERLINEAR)


class DegenerateSystemError(ValueError):
    """Every component of the system has least fixed point 0."""

    def __init__(self, removed):
        self.removed = tuple(removed)
        super().__init__("all components have least fixed point 0")


def direct_deps(psp: Psp) -> tuple[frozenset[int], ...]:
    """``deps[i]`` holds every ``j`` such that ``X_j`` occurs in ``f_i``."""
    return tuple(p.variables for p in psp.polys)


def tarjan_sccs(n: int, succ) -> list[list[int]]:
    """Strongly connected components of the graph on ``range(n)``.

    Components come out in reverse topological order: if there is an edge
    from component A to component B, B is listed before A.  Iterative, so deep
    chains do not hit the recursion limit.
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


@dataclass(frozen=True)
class SccDecomposition:
    """SCCs listed bottom first; ``component[i]`` is the position of ``X_i``'s SCC."""

    sccs: tuple[tuple[int, ...], ...]
    kinds: tuple[SccKind, ...]
    component: tuple[int, ...]

    def __iter__(self):
        return iter(zip(self.sccs, self.kinds))

    def __len__(self):
        return len(self.sccs)


def classify(psp: Psp, scc) -> SccKind:
    """Kind of the PSP obtained by restricting to ``scc`` with the other variables set to 1."""
    members = set(scc)
    degrees = [psp.polys[i].degree_in(members) for i in scc]
    top = max(degrees)
    if top == 0:
        return SccKind.CONSTANT
    if top == 1:
        return SccKind.LINEAR
    if min(degrees) >= 2:
        return SccKind.PURELY_SUPERLINEAR
    return SccKind.SUPERLINEAR


def scc_decompose(psp: Psp) -> SccDecomposition:
    deps = direct_deps(psp)
    sccs = tarjan_sccs(psp.n, deps)
    component = [0] * psp.n
    for k, scc in enumerate(sccs):
        for i in scc:
            component[i] = k
    return SccDecomposition(
        sccs=tuple(tuple(s) for s in sccs),
        kinds=tuple(classify(psp, s) for s in sccs),
        component=tuple(component),
    )


def is_scpsp(psp: Psp) -> bool:
    dec = scc_decompose(psp)
    return len(dec) == 1 and dec.kinds[0] is not SccKind.CONSTANT


def is_irreducible_pattern(matrix) -> bool:
    """Strong connectivity of the nonzero pattern of a square matrix."""
    n = len(matrix)
    if n <= 1:
        return True
    succ = [[j for j in range(n) if matrix[i][j] != 0] for i in range(n)]
    return len(tarjan_sccs(n, succ)) == 1


def remove_zero_components(psp: Psp) -> tuple[Psp, tuple[int, ...]]:
    """Drop every component ``i`` with ``(mu_f)_i = 0``.

    A component is alive if its polynomial has a monomial all of whose
    variables are alive (a constant monomial qualifies); the alive set is the
    least fixed point of this marking.  Dead variables are substituted by 0.
    Returns the reduced system and the sorted indices of removed components.
    """
    alive = [False] * psp.n
    changed = True
    while changed:
        changed = False
        for i, p in enumerate(psp.polys):
            if alive[i]:
                continue
            if any(all(alive[v] for v in m.variables) for m in p.monomials):
                alive[i] = True
                changed = True
    removed = tuple(i for i in range(psp.n) if not alive[i])
    if not removed:
        return psp, ()
    if len(removed) == psp.n:
        raise DegenerateSystemError(removed)
    keep = [i for i in range(psp.n) if alive[i]]
    return restrict(psp, keep, {i: 0 for i in removed}), removed


def has_zero_components(psp: Psp) -> bool:
    try:
        return bool(remove_zero_components(psp)[1])
    except DegenerateSystemError:
        return True
