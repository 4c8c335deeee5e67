"""Exact rational Gaussian elimination and the spectral radius test ``rho(A) <= 1``."""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .core import as_rational
from .graph import is_irreducible_pattern


class SingularMatrixError(ArithmeticError):
    pass


class OpCounter:
    """Counts rational field operations performed during elimination."""

    def __init__(self):
        self.ops = 0

    def add(self, k: int = 1):
        self.ops += k

    def __repr__(self):
        return f"OpCounter(ops={self.ops})"


def _as_matrix(rows) -> list[list[mpq]]:
    return [[as_rational(v) for v in row] for row in rows]


def identity(n: int) -> list[list[mpq]]:
    return [[mpq(1) if i == j else mpq(0) for j in range(n)] for i in range(n)]


def mat_vec(a, x) -> list[mpq]:
    return [sum((aij * xj for aij, xj in zip(row, x) if aij), mpq(0)) for row in a]


def rref(rows, n_cols: int | None = None, counter: OpCounter | None = None):
    """Reduced row echelon form by Gauss-Jordan elimination.

    Pivots are chosen as the first nonzero entry at or below the current row;
    only the first ``n_cols`` columns are used as pivot columns (the rest are
    carried along, e.g. a right-hand side).  Returns ``(matrix, pivot_columns)``.
    Zero multipliers are skipped, so sparse systems stay cheap, and the
    operation count never exceeds ``2 * rows * width * n_cols``.
    """
    m = _as_matrix(rows)
    if not m:
        return m, []
    width = len(m[0])
    n_cols = width if n_cols is None else n_cols
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        prow = m[r]
        inv = 1 / prow[c]
        nz = [k for k in range(c, width) if prow[k] != 0]
        for k in nz:
            prow[k] *= inv
        if counter:
            counter.add(len(nz))
        for i in range(len(m)):
            if i == r:
                continue
            factor = m[i][c]
            if factor == 0:
                continue
            row = m[i]
            for k in nz:
                row[k] -= factor * prow[k]
            if counter:
                counter.add(2 * len(nz))
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def solve(a, b, counter: OpCounter | None = None) -> list[mpq]:
    """Exact solution of ``a x = b``; raises :class:`SingularMatrixError` if ``a`` is singular."""
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    if len(b) != n:
        raise ValueError(f"right-hand side has length {len(b)}, expected {n}")
    aug = [list(row) + [b[i]] for i, row in enumerate(a)]
    m, pivots = rref(aug, n_cols=n, counter=counter)
    if len(pivots) < n:
        raise SingularMatrixError("matrix is singular")
    return [m[i][n] for i in range(n)]


def kernel_vector(m, counter: OpCounter | None = None) -> list[mpq] | None:
    """A nonzero ``v`` with ``m v = 0``, or ``None`` if the kernel is trivial.

    The vector is the basis vector of the first free column of the reduced
    row echelon form.
    """
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("matrix must be square")
    red, pivots = rref(m, counter=counter)
    free = [c for c in range(n) if c not in pivots]
    if not free:
        return None
    f = free[0]
    v = [mpq(0)] * n
    v[f] = mpq(1)
    for r, c in enumerate(pivots):
        v[c] = -red[r][f]
    return v


def spectral_radius_le_one(a: Sequence[Sequence], counter: OpCounter | None = None, check: bool = True) -> bool:
    """Decide ``rho(a) <= 1`` for a nonnegative irreducible matrix, exactly.

    If ``Id - a`` has a nonzero kernel vector ``v``, the answer is whether
    ``v`` is strictly positive or strictly negative.  Otherwise the unique
    ``x`` with ``(Id - a) x = 1`` decides: ``rho(a) <= 1`` iff ``x >= 1`` and
    ``a x < x`` (``<=`` everywhere, ``!=`` somewhere).
    """
    a = _as_matrix(a)
    n = len(a)
    if check:
        if any(len(row) != n for row in a):
            raise ValueError("matrix must be square")
        if any(v < 0 for row in a for v in row):
            raise ValueError("matrix must be nonnegative")
        if not is_irreducible_pattern(a):
            raise ValueError("matrix must be irreducible")
    eye = identity(n)
    m = [[eye[i][j] - a[i][j] for j in range(n)] for i in range(n)]
    v = kernel_vector(m, counter)
    if v is not None:
        return all(x > 0 for x in v) or all(x < 0 for x in v)
    x = solve(m, [mpq(1)] * n, counter)
    if not all(xi >= 1 for xi in x):
        return False
    ax = mat_vec(a, x)
    return all(p <= q for p, q in zip(ax, x)) and any(p != q for p, q in zip(ax, x))
