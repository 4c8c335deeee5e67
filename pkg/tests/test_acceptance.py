"""Acceptance criteria, one ``criterion`` marker per numbered criterion.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import io
import json
import random
import time

import mpmath
import pytest
from gmpy2 import mpq

from oracles import (
    kleene_float,
    kleene_mpfr_down,
    least_fixed_point,
    newton_float,
    oracle_verdict,
    random_psp,
    sympy_certificate,
)
from psplfp.bounds import IterationLimitExceeded, accurate_bits, calc_bounds, mark_consistent
from psplfp.cli import main
from psplfp.consistency import check_consistency
from psplfp.core import evaluate
from psplfp.floating import PrecisionSchedule
from psplfp.graph import DegenerateSystemError, remove_zero_components
from psplfp.models import bisect_consistency, gen_hn, gen_neutron, gen_toy, hn_witness
from psplfp.normalform import is_perfectly_superlinear, make_perfectly_superlinear
from psplfp.pipeline import run_bounds
from psplfp.textformat import format_psp, parse_psp

THREE_QUARTER_SQ = "X = 0.75*X^2 + 0.25\n"
ESCAPE_PAIR = "X1 = 0.8*X1*X2 + 0.2\nX2 = 0.4*X1^2 + 0.1*X2 + 0.5\n"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue()


def ratio(q):
    q = mpq(q)
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


# 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n", [2, 5, 10, 25, 100, 200])
def test_c1_hn_inconsistent(tmp_path, n):
    path = tmp_path / f"h{n}.psp"
    path.write_text(format_psp(gen_hn(n)))
    start = time.perf_counter()
    code, out = cli("check", str(path))
    elapsed = time.perf_counter() - start
    obj = json.loads(out)
    assert code == 1 and obj["verdict"] == "inconsistent"
    p = hn_witness(n)
    assert all(a < b for a, b in zip(evaluate(gen_hn(n), p), p))
    # O(n^3) with a fixed constant; Gauss-Jordan with one right-hand side
    assert obj["op_count"] <= 2 * n**3
    assert elapsed < 60
    print(f"h_{n}: inconsistent, {obj['op_count']} rational ops, {elapsed:.2f} s")


# 2 -------------------------------------------------------------------------


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n", [7, 10])
def test_c2_float_kleene_reaches_one(tmp_path, n):
    x = kleene_float(gen_hn(n), 10**4)
    closest = max(x)
    print(f"h_{n}: 53-bit Kleene max component 1 - {1 - closest:.3g}")
    path = tmp_path / "h.psp"
    path.write_text(format_psp(gen_hn(n)))
    assert cli("check", str(path))[0] == 1
    assert closest >= 1 - 2**-52


@pytest.mark.parametrize("n", [7, 10])
def test_c2_supplementary_float_newton_reaches_one(n):
    # not a criterion: the same failure mode with double-precision Newton
    x = newton_float(gen_hn(n), 200)
    assert max(x) >= 1 - 2**-52
    assert not check_consistency(gen_hn(n)).consistent


# 3 -------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_c3_one_third(tmp_path):
    path = tmp_path / "q.psp"
    path.write_text(THREE_QUARTER_SQ)
    start = time.perf_counter()
    code, out = cli("bounds", str(path), "--epsilon", "1e-6")
    elapsed = time.perf_counter() - start
    b = json.loads(out)["bounds"]["X"]
    lb, ub = mpq(b["lb_exact"]), mpq(b["ub_exact"])
    print(f"lb = {float(lb)!r}, ub = {float(ub)!r}, width {float(ub - lb):.3g}, {elapsed:.3f} s")
    assert code == 0
    assert lb <= mpq(1, 3) <= ub
    assert ub - lb <= mpq(1, 10**6)
    assert elapsed < 5


# 4 -------------------------------------------------------------------------


def certificate_suite():
    rng = random.Random(404)
    return [random_psp(rng, n_max=4, degree_max=3) for _ in range(20)]


@pytest.mark.criterion(4)
@pytest.mark.parametrize("index", range(20))
def test_c4_certificates(tmp_path, index):
    psp = certificate_suite()[index]
    path = tmp_path / "r.psp"
    path.write_text(format_psp(psp))
    code, out = cli("bounds", str(path), "--epsilon", "1e-3")
    assert code == 0
    obj = json.loads(out)
    cert = obj["certificate"]
    if cert is None:
        # every component is a zero component: bounds are exactly 0
        assert all(v["ub_exact"] == "0" for v in obj["bounds"].values())
        assert len(obj["removed_zero_vars"]) == psp.n
        return
    assert sympy_certificate(cert["system"], cert["lb"], cert["ub"])
    kept = [name for name in obj["variables"] if name not in obj["removed_zero_vars"]]
    for pos, name in enumerate(kept):
        assert obj["bounds"][name]["lb_exact"] == cert["lb"][pos]
        assert obj["bounds"][name]["ub_exact"] == cert["ub"][pos]


# 5 -------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_c5_linear_convergence_beats_kleene():
    g, _ = make_perfectly_superlinear(parse_psp(THREE_QUARTER_SQ))
    with pytest.raises(IterationLimitExceeded) as exc:
        calc_bounds(
            g,
            mpq(1, 10**30),
            schedule=PrecisionSchedule(53, 2**28),
            max_iters=20,
            trace=True,
            lazy_lower=False,
        )
    trace = exc.value.report.trace
    third = [mpq(1, 3)]
    bits = [accurate_bits(lb[:1], third) for lb, _ in trace[1:]]
    assert len(bits) == 20
    iters = list(range(1, 21))
    mean_i = sum(iters) / 20
    mean_b = sum(bits) / 20
    alpha = sum((i - mean_i) * (b - mean_b) for i, b in zip(iters, bits)) / sum((i - mean_i) ** 2 for i in iters)
    beta = max(alpha * i - b for i, b in zip(iters, bits))
    kleene = mpq(0)
    f = lambda x: mpq(3, 4) * x * x + mpq(1, 4)
    for _ in range(20):
        kleene = f(kleene)
    kleene_bits = accurate_bits([kleene], third)
    print(f"fitted alpha = {alpha:.1f}, beta = {beta:.1f}, lb bits at i=20: {bits[-1]:.0f}, Kleene bits: {kleene_bits:.0f}")
    assert alpha > 0
    assert all(b >= alpha * i - beta for i, b in zip(iters, bits))
    assert bits[-1] > kleene_bits


@pytest.mark.criterion(5)
def test_c5_kleene_below_one_minus_one_over_i():
    # k(1) = 0 and k(i+1) = f(k(i)); upper dyadic enclosures rounded up each
    # step bound the exact iterates from above since f is monotone
    scale = 2**256
    upper = mpq(0)
    for i in range(1, 101):
        assert upper <= 1 - mpq(1, i), i
        nxt = mpq(1, 2) * upper * upper + mpq(1, 2)
        upper = mpq(-((-nxt.numerator * scale) // nxt.denominator), scale)


# 6 -------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_c6_upper_bound_escapes_one():
    f = parse_psp(ESCAPE_PAIR)
    g, mapping = make_perfectly_superlinear(f)
    report = calc_bounds(g, mpq(1, 10**4))
    ub = mapping.strip(report.ub_exact)
    assert all(v < 1 for v in ub)
    marked = mark_consistent(g, report) & set(f.variables)
    assert marked == set()
    assert not check_consistency(f).consistent


# 7 -------------------------------------------------------------------------


def oracle_suite():
    rng = random.Random(707)
    accepted = []
    while len(accepted) < 200:
        psp = random_psp(rng, n_max=4, full_prob=0.97)
        ok, closest, kernel_hit = oracle_verdict(psp, prec=4096)
        if closest > 1e-3 or kernel_hit:
            accepted.append((psp, ok))
    return accepted


@pytest.fixture(scope="module")
def c7_suite():
    return oracle_suite()


@pytest.mark.criterion(7)
def test_c7_verdicts_match_spectral_oracle(c7_suite):
    mismatches = [format_psp(p) for p, ok in c7_suite if check_consistency(p).consistent != ok]
    print(f"{len(c7_suite)} instances, {sum(ok for _, ok in c7_suite)} consistent, {len(mismatches)} disagreements")
    assert mismatches == []


@pytest.mark.criterion(7)
def test_c7_bounds_bracket_kleene(c7_suite):
    failures = []
    tiny = mpmath.mpf(10) ** -40
    for psp, _ in c7_suite:
        result = run_bounds(psp, mpq(1, 1000))
        kleene = kleene_mpfr_down(psp, 10**5, prec=256)
        if not all(k <= u for k, u in zip(kleene, result.ub)):
            failures.append(("ub below Kleene", format_psp(psp)))
        with mpmath.workdps(60):
            mu = least_fixed_point(psp, dps=60)
            if not all(ratio(l) <= m + tiny for l, m in zip(result.lb, mu)):
                failures.append(("lb above mu", format_psp(psp)))
    assert failures == []


# 8 -------------------------------------------------------------------------


def normal_form_suite():
    rng = random.Random(808)
    out = []
    while len(out) < 50:
        psp = random_psp(rng, n_max=4, degree_max=3)
        try:
            reduced, _ = remove_zero_components(psp)
        except DegenerateSystemError:
            continue
        out.append(reduced)
    return out


@pytest.mark.criterion(8)
def test_c8_normal_form_preserves_mu():
    worst = mpmath.mpf(0)
    for f in normal_form_suite():
        g, mapping = make_perfectly_superlinear(f)
        assert is_perfectly_superlinear(g)
        mu_f = least_fixed_point(f, dps=60)
        mu_g = mapping.strip(least_fixed_point(g, dps=60))
        for a, b in zip(mu_f, mu_g):
            worst = max(worst, abs(a - b))
    print(f"largest difference on original components: {mpmath.nstr(worst, 5)}")
    assert worst < 1e-8


# 9 -------------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_c9_surrogate_antitone():
    radii = ["1", "2", "2.5", "3", "4"]
    verdicts = [check_consistency(gen_neutron(D, 20).psp).consistent for D in radii]
    print("surrogate kernel, n = 20: " + ", ".join(f"D={D}: {'consistent' if v else 'inconsistent'}" for D, v in zip(radii, verdicts)))
    assert verdicts == sorted(verdicts, reverse=True)


@pytest.mark.criterion(9)
def test_c9_toy_flip_localized():
    tol = mpq(1, 100)
    result = bisect_consistency(gen_toy, 1, 4, tol)
    print(f"toy family flip bracket [{float(result.lo)}, {float(result.hi)}], analytic flip 2")
    assert result.width <= tol
    assert result.lo <= 2 < result.hi
    assert abs(result.lo - 2) <= tol
