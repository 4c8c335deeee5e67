"""Certified lower and upper bounds on the least fixed point of a PSP.

Lower bounds are strict pre-fixed points (``lb < f(lb)``), upper bounds are
post-fixed points (``f(ub) <= ub``); both are checked in exact arithmetic
every iteration and can be re-checked by anyone holding the system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpfr, mpq

from .core import (
    ONE,
    ZERO,
    Psp,
    as_rational,
    constant_vector,
    evaluate,
    evaluate_approx,
    jacobian,
    jacobian_approx,
    working_context,
)
from .floating import FloatingAssignment, PrecisionSchedule, lu_solve, to_rational
from .graph import direct_deps, has_zero_components, scc_decompose
from .linalg import identity, mat_vec, solve
from .normalform import is_perfectly_superlinear


# Extra bits on each precision doubling of the lower bound: accurate bits of
# Newton iterates roughly double, so plain doubling would overshoot by 2x.
LOWER_MARGIN = 64
LOWER_SLACK = 8


class NotPerfectlySuperlinear(ValueError):
    pass


class CertificateError(AssertionError):
    """An emitted bound failed its exact certificate check (a bug, never expected)."""


class IterationLimitExceeded(RuntimeError):
    def __init__(self, report: "BoundsReport"):
        self.report = report
        super().__init__(f"no convergence within {report.iterations} iterations")


@dataclass
class BoundsReport:
    variables: tuple[str, ...]
    lb: tuple
    ub: tuple
    epsilon: mpq
    iterations: int = 0
    trace: list | None = None
    max_precision: int = 0
    newton_steps: int = 0
    consistent_vars: frozenset[str] = field(default_factory=frozenset)

    @property
    def lb_exact(self) -> tuple[mpq, ...]:
        return to_rational(self.lb)

    @property
    def ub_exact(self) -> tuple[mpq, ...]:
        return to_rational(self.ub)


def _lt(a, b) -> bool:
    return all(x < y for x, y in zip(a, b))


def _le(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def verify_certificate(psp: Psp, lb: Sequence, ub: Sequence) -> bool:
    """``lb < f(lb)`` and ``f(ub) <= ub`` componentwise, in exact arithmetic."""
    lb, ub = to_rational(lb), to_rational(ub)
    return _lt(lb, evaluate(psp, lb)) and _le(evaluate(psp, ub), ub)


def newton_step(psp: Psp, x: Sequence, prec: int) -> list[mpfr]:
    """``x + (Id - f'(x))^-1 (f(x) - x)`` at ``prec`` bits."""
    n = psp.n
    fx = evaluate_approx(psp, x, prec)
    jac = jacobian_approx(psp, x, prec)
    with working_context(prec):
        xs = [mpfr(as_rational(v)) if not isinstance(v, mpfr) else v for v in x]
        m = [[(1 if i == j else 0) - jac[i][j] for j in range(n)] for i in range(n)]
        rhs = [fx[i] - xs[i] for i in range(n)]
    delta = lu_solve(m, rhs, prec)
    with working_context(prec):
        return [xs[i] + delta[i] for i in range(n)]


def newton_exact(psp: Psp, x: Sequence) -> list[mpq]:
    """Newton step in exact rational arithmetic (reference for tests)."""
    x = to_rational(x)
    n = psp.n
    jac = jacobian(psp, x)
    eye = identity(n)
    m = [[eye[i][j] - jac[i][j] for j in range(n)] for i in range(n)]
    fx = evaluate(psp, x)
    delta = solve(m, [fx[i] - x[i] for i in range(n)])
    return [x[i] + delta[i] for i in range(n)]


def _require_normal(psp: Psp):
    if not is_perfectly_superlinear(psp):
        raise NotPerfectlySuperlinear("system is not perfectly superlinear; apply the normal form first")
    if has_zero_components(psp):
        raise ValueError("system has components with least fixed point 0")


def compute_strict_prefix(psp: Psp, schedule: PrecisionSchedule | None = None) -> tuple[tuple[mpfr, ...], int]:
    """A vector ``x`` with ``0 < x < f(x) < 1``; returns ``(x, rounds)``.

    Each round keeps the components whose polynomial vanishes at ``x`` at
    zero and moves the others to (an approximation of) ``f(x)``.
    """
    _require_normal(psp)
    schedule = schedule or PrecisionSchedule.from_env()
    n = psp.n
    x: tuple = tuple(mpfr(0) for _ in range(n))
    rounds = 0
    while True:
        rounds += 1
        if rounds > n:
            raise CertificateError("strict prefix not found within n rounds")
        fx = evaluate(psp, to_rational(x))
        positive = [i for i in range(n) if fx[i] > 0]
        pos_set = set(positive)

        def compute(prec, x=x, positive=pos_set):
            approx = evaluate_approx(psp, x, prec)
            return [approx[i] if i in positive else mpfr(0) for i in range(n)]

        def accept(y, positive=positive):
            fy = evaluate(psp, y)
            return all(0 < y[i] < fy[i] < 1 for i in positive)

        x, _ = FloatingAssignment(compute, accept, schedule, "strict-prefix").execute()
        if all(v > 0 for v in x):
            return x, rounds


def calc_bounds(
    psp: Psp,
    epsilon,
    schedule: PrecisionSchedule | None = None,
    max_iters: int = 10**6,
    trace: bool = False,
    lazy_lower: bool = True,
) -> BoundsReport:
    """Bounds ``lb <= mu_f <= ub`` with ``ub - lb <= epsilon`` in every component.

    The system must be perfectly superlinear without zero components.  Each
    iteration moves ``lb`` to about two Newton steps ahead and shrinks ``ub``
    by applying ``f`` twice; superlinear SCCs stuck at 1 are pushed below 1
    when the lower bound proves their fixed point is smaller.  Raises
    :class:`IterationLimitExceeded` (carrying the partial report) after
    ``max_iters`` iterations.

    With ``lazy_lower`` the Newton step only runs while it can help: some
    component whose gap still exceeds ``epsilon`` either gained at least
    ``epsilon / 8`` in the last Newton step or has its upper bound stuck at
    1.  Every Newton step needs about twice the bits of the previous one,
    so a converged lower bound would otherwise blow up the precision while
    the upper bound catches up.  As a fallback against a lower bound that
    stalled too early, a Newton step also runs when the upper bound seems
    to settle above the lower one, with the wait between such steps
    doubling.  Without ``lazy_lower`` every iteration runs the Newton step.
    """
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _require_normal(psp)
    schedule = schedule or PrecisionSchedule.from_env()
    n = psp.n
    ones = constant_vector(n)
    twos = constant_vector(n, 2)
    jac_one = jacobian(psp, ones)
    f_two = evaluate(psp, twos)
    superlinear = [list(scc) for scc, kind in scc_decompose(psp) if kind.is_superlinear]

    lb, _ = compute_strict_prefix(psp, schedule)
    ub: tuple = tuple(mpfr(1) for _ in range(n))
    lb_q, ub_q = to_rational(lb), ones
    report = BoundsReport(psp.variables, lb, ub, epsilon, trace=[] if trace else None)
    if trace:
        report.trace.append((lb, ub))
    hint = {"lower": None, "upper": None, "descent": None}
    max_prec = 0
    stall = epsilon / 8
    lb_gain = [mpq(1)] * n  # per component, from the last executed Newton step
    ub_gain = [mpq(0)] * n
    prev_ub_max = mpq(0)
    fallback_wait, since_newton = 2, 0

    while not all(u - l <= epsilon for l, u in zip(lb_q, ub_q)):
        if report.iterations >= max_iters:
            raise IterationLimitExceeded(report)
        report.iterations += 1

        # Lower bound: about two Newton steps from lb.
        gapped = [i for i in range(n) if ub_q[i] - lb_q[i] > epsilon]
        run_newton = not lazy_lower or any(lb_gain[i] >= stall or ub_gain[i] == 0 for i in gapped)
        if not run_newton and since_newton >= fallback_wait:
            if _upper_settling(max(ub_gain), prev_ub_max, lb_q, ub_q, epsilon):
                run_newton = True
                fallback_wait *= 2
        if not run_newton:
            new_lb = lb
            since_newton += 1
        else:
            f_lb = evaluate(psp, lb_q)
            jac_lb = jacobian(psp, lb_q)

            def compute_lower(prec, lb=lb):
                twice = newton_step(psp, newton_step(psp, lb, prec), prec)
                # Shift down by a few ulps so rounding noise cannot push the
                # candidate onto or past the fixed point.
                with working_context(prec):
                    shift = mpfr(2) ** (LOWER_SLACK - prec)
                    return [v - shift for v in twice]

            def accept_lower(x, lb_q=lb_q, f_lb=f_lb, jac_lb=jac_lb):
                if not all(v < 1 for v in x):
                    return False
                step = mat_vec(jac_lb, [a - b for a, b in zip(x, lb_q)])
                tangent = [a + b for a, b in zip(f_lb, step)]
                if not _lt(tangent, x):
                    return False
                fx = evaluate(psp, x)
                return _lt(x, fx) and all(v < 1 for v in fx)

            new_lb, prec = FloatingAssignment(compute_lower, accept_lower, schedule, "lower-bound").execute(
                hint["lower"], margin=LOWER_MARGIN
            )
            hint["lower"] = prec
            max_prec = max(max_prec, prec)
            report.newton_steps += 1
            since_newton = 0

        # Upper bound: apply f twice to the components not already fixed at 1.
        f_ub = evaluate(psp, ub_q)
        below = [i for i in range(n) if f_ub[i] < 1]
        y: tuple = tuple(mpfr(1) for _ in range(n))
        if below:
            below_set = set(below)

            def compute_upper(prec, ub=ub):
                ffu = evaluate_approx(psp, evaluate_approx(psp, ub, prec), prec)
                return [ffu[i] if i in below_set else mpfr(1) for i in range(n)]

            def accept_upper(cand, f_ub=f_ub):
                fy = evaluate(psp, cand)
                return all(fy[i] < cand[i] < f_ub[i] for i in below)

            y, prec = FloatingAssignment(compute_upper, accept_upper, schedule, "upper-bound").execute(hint["upper"])
            hint["upper"] = prec
            max_prec = max(max_prec, prec)

        # Superlinear SCCs still at 1 whose lower bound shows f'(1) t > t.
        new_lb_q = to_rational(new_lb)
        for scc in superlinear:
            if any(y[i] != 1 for i in scc):
                continue
            t = [ONE - new_lb_q[i] for i in scc]
            sub = [[jac_one[i][j] for j in scc] for i in scc]
            grown = mat_vec(sub, t)
            if not _lt(t, grown):
                continue

            def compute_descent(prec, scc=scc, y=y, lb=new_lb):
                with working_context(prec):
                    tf = [1 - mpfr(lb[i]) for i in scc]
                    af = [[mpfr(v) for v in row] for row in sub]
                    gap = min(sum(a * b for a, b in zip(row, tf)) - tk for row, tk in zip(af, tf))
                    scale = max(mpfr(f_two[i]) for i in scc)
                    factor = min(mpfr(1), gap / (2 * scale))
                    out = list(y)
                    for k, i in enumerate(scc):
                        out[i] = 1 - factor * tf[k]
                    return out

            def accept_descent(cand, scc=scc):
                fy = evaluate(psp, cand)
                return all(fy[i] < cand[i] < 1 for i in scc)

            y, prec = FloatingAssignment(compute_descent, accept_descent, schedule, "scc-descent").execute(hint["descent"])
            hint["descent"] = prec
            max_prec = max(max_prec, prec)

        new_ub_q = to_rational(y)
        if not (_le(lb_q, new_lb_q) and _le(new_ub_q, ub_q) and _lt(new_lb_q, new_ub_q)):
            raise CertificateError("bounds lost monotonicity")
        if not verify_certificate(psp, new_lb_q, new_ub_q):
            raise CertificateError("bounds failed their exact certificate")
        if since_newton == 0:
            lb_gain = [a - b for a, b in zip(new_lb_q, lb_q)]
        prev_ub_max = max(ub_gain)
        ub_gain = [a - b for a, b in zip(ub_q, new_ub_q)]
        lb, ub, lb_q, ub_q = tuple(new_lb), tuple(y), new_lb_q, new_ub_q
        report.lb, report.ub, report.max_precision = lb, ub, max_prec
        if trace:
            report.trace.append((lb, ub))

    report.lb, report.ub, report.max_precision = lb, ub, max_prec
    report.consistent_vars = mark_consistent(psp, report)
    return report


def _upper_settling(gain, prev_gain, lb, ub, epsilon) -> bool:
    """Whether the upper bound has stopped making enough progress to close the gap.

    True if it did not move, or if its gains shrink geometrically and the
    projected remaining movement ``gain * r / (1 - r)`` (``r`` the ratio of
    the last two gains) is smaller than the excess gap.
    """
    if gain == 0:
        return True
    if prev_gain == 0 or gain >= prev_gain:
        return False
    r = gain / prev_gain
    remaining = gain * r / (1 - r)
    excess = max(u - l for l, u in zip(lb, ub)) - epsilon
    return remaining < excess


def mark_consistent(psp: Psp, report: BoundsReport) -> frozenset[str]:
    """Variables proven to have least fixed point exactly 1.

    SCCs are visited bottom-up.  An SCC whose dependencies are all marked is
    marked when ``f_S(1) = 1`` and ``f'_SS(1) t <= t`` for ``t = 1 - lb_S``;
    otherwise it is dropped, and so is everything depending on it.  The
    result is sound but need not be complete.
    """
    lb = report.lb_exact
    deps = direct_deps(psp)
    ones = constant_vector(psp.n)
    f_one = evaluate(psp, ones)
    jac_one = jacobian(psp, ones)
    marked: set[int] = set()
    for scc, _kind in scc_decompose(psp):
        members = set(scc)
        if any(j not in members and j not in marked for i in scc for j in deps[i]):
            continue
        if any(f_one[i] != 1 for i in scc):
            continue
        t = [ONE - lb[i] for i in scc]
        if any(v <= 0 for v in t):
            continue
        grown = mat_vec([[jac_one[i][j] for j in scc] for i in scc], t)
        if _le(grown, t):
            marked.update(scc)
    return frozenset(psp.variables[i] for i in sorted(marked))


def accurate_bits(x: Sequence, mu: Sequence) -> float:
    """Largest ``k`` with ``|mu_j - x_j| / |mu_j| <= 2^-k`` for every ``j`` (inf if exact)."""
    worst = ZERO
    for xi, mi in zip(to_rational(x), to_rational(mu)):
        err = abs(mi - xi) / abs(mi)
        worst = max(worst, err)
    if worst == 0:
        return math.inf
    num, den = int(worst.numerator), int(worst.denominator)

    def within(k):  # worst <= 2^-k
        return num << k <= den if k >= 0 else num <= den << -k

    k = den.bit_length() - num.bit_length()
    while within(k + 1):
        k += 1
    while not within(k):
        k -= 1
    return float(k)


def floor_decimal(q, digits: int) -> str:
    """``q`` rounded toward minus infinity to ``digits`` decimal places."""
    return _round_decimal(as_rational(q), digits, up=False)


def ceil_decimal(q, digits: int) -> str:
    """``q`` rounded toward plus infinity to ``digits`` decimal places."""
    return _round_decimal(as_rational(q), digits, up=True)


def _round_decimal(q: mpq, digits: int, up: bool) -> str:
    scaled = q * mpq(10) ** digits
    num, den = int(scaled.numerator), int(scaled.denominator)
    k = -((-num) // den) if up else num // den
    sign = "-" if k < 0 else ""
    s = str(abs(k)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}" if digits else f"{sign}{s}"


def exact_string(q) -> str:
    q = as_rational(q)
    return str(int(q.numerator)) if q.denominator == 1 else f"{int(q.numerator)}/{int(q.denominator)}"
