import random

import mpmath
import pytest
from gmpy2 import mpq

from psplfp.graph import is_irreducible_pattern
from psplfp.linalg import (
    OpCounter,
    SingularMatrixError,
    identity,
    kernel_vector,
    mat_vec,
    solve,
    spectral_radius_le_one,
)


def test_solve_identity():
    assert solve(identity(3), [1, 1, 1]) == [1, 1, 1]


def test_solve_one_by_one():
    assert solve([[mpq(1, 2)]], [1]) == [2]


def test_solve_two_by_two():
    assert solve([[1, -2], [-2, 1]], [1, 1]) == [-1, -1]


def test_solve_singular():
    with pytest.raises(SingularMatrixError):
        solve([[1, 1], [2, 2]], [1, 1])


def test_kernel_examples():
    assert kernel_vector([[0]]) == [1]
    assert kernel_vector(identity(3)) is None
    v = kernel_vector([[1, -1], [-1, 1]])
    assert v[0] == v[1] != 0


def test_spectral_examples():
    assert spectral_radius_le_one([[1]])
    assert not spectral_radius_le_one([[mpq(3, 2)]])
    assert spectral_radius_le_one([[mpq(1, 2), mpq(1, 2)], [mpq(1, 4), mpq(1, 2)]])


def test_spectral_checks_preconditions():
    with pytest.raises(ValueError):
        spectral_radius_le_one([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        spectral_radius_le_one([[-1]])


def random_matrix(rng, n, density=1.0):
    return [[mpq(rng.randint(-9, 9), rng.randint(1, 9)) if rng.random() < density else mpq(0) for _ in range(n)] for _ in range(n)]


def test_solve_multiplies_back():
    rng = random.Random(5)
    done = 0
    while done < 40:
        n = rng.randint(1, 8)
        a = random_matrix(rng, n)
        b = [mpq(rng.randint(-5, 5), rng.randint(1, 5)) for _ in range(n)]
        try:
            x = solve(a, b)
        except SingularMatrixError:
            continue
        assert mat_vec(a, x) == b
        done += 1


def test_kernel_vector_is_in_kernel():
    rng = random.Random(6)
    for _ in range(40):
        n = rng.randint(1, 6)
        a = random_matrix(rng, n, density=0.5)
        # force rank deficiency: copy a row combination
        if n > 1:
            a[-1] = [x + 2 * y for x, y in zip(a[0], a[1 % n])]
        v = kernel_vector(a)
        if v is not None:
            assert any(v)
            assert all(x == 0 for x in mat_vec(a, v))


def random_irreducible(rng, n):
    while True:
        a = [[mpq(rng.randint(0, 6), rng.randint(1, 8)) if rng.random() < 0.6 else mpq(0) for _ in range(n)] for _ in range(n)]
        if is_irreducible_pattern(a):
            return a


def power_estimate(a, steps=3000):
    n = len(a)
    with mpmath.workdps(30):
        m = mpmath.matrix([[mpmath.mpf(int(v.numerator)) / int(v.denominator) for v in row] for row in a])
        # (A + I) is primitive for irreducible A, so power iteration converges
        m = m + mpmath.eye(n)
        v = mpmath.matrix([1] * n)
        lam = mpmath.mpf(0)
        for _ in range(steps):
            w = m * v
            lam = max(abs(x) for x in w)
            v = w / lam
        return lam - 1


def test_spectral_matches_power_iteration():
    rng = random.Random(8)
    checked = 0
    while checked < 60:
        a = random_irreducible(rng, rng.randint(1, 5))
        rho = power_estimate(a)
        if abs(rho - 1) < 1e-3:
            continue
        assert spectral_radius_le_one(a) == (rho <= 1)
        checked += 1


def test_op_count_cubic():
    rng = random.Random(9)
    for n in (5, 10, 20, 40):
        a = random_matrix(rng, n)
        counter = OpCounter()
        try:
            solve(a, [1] * n, counter)
        except SingularMatrixError:
            pass
        assert counter.ops <= 3 * n**3 + 3 * n**2
