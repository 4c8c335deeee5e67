import pytest
from gmpy2 import mpq

from psplfp.consistency import check_consistency
from psplfp.core import constant_vector, evaluate, validate
from psplfp.graph import is_scpsp
from psplfp.models import (
    BracketError,
    ConstantKernel,
    KernelError,
    SurrogateKernel,
    TabulatedKernel,
    bisect_consistency,
    critical_radius,
    gen_hn,
    gen_neutron,
    gen_toy,
    hn_witness,
    kernel_from_spec,
    trapezoid_weights,
)
from psplfp.textformat import format_psp


def test_h2_text():
    assert format_psp(gen_hn(2)) == "X1 = 0.5*X1^2 + 0.1*X2^2 + 0.4\nX2 = 0.01*X1^2 + 0.5*X2 + 0.49\n"


def test_h5_pattern():
    psp = gen_hn(5)
    assert psp.n == 5
    for i in range(1, 5):
        m = {mo.exponents: mo.coefficient for mo in psp.polys[i].monomials}
        assert m == {((i - 1, 2),): mpq(1, 100), ((i, 1),): mpq(1, 2), (): mpq(49, 100)}


@pytest.mark.parametrize("n", [2, 3, 10, 40])
def test_hn_sums_one_and_scpsp(n):
    psp = gen_hn(n)
    assert evaluate(psp, constant_vector(n)) == constant_vector(n)
    assert is_scpsp(psp)


def test_hn_needs_two():
    with pytest.raises(ValueError):
        gen_hn(1)


def test_hn_witness_all_n():
    for n in range(2, 101):
        p = hn_witness(n)
        assert all(a < b for a, b in zip(evaluate(gen_hn(n), p), p))


def test_toy_family():
    assert check_consistency(gen_toy(2)).consistent
    assert not check_consistency(gen_toy(mpq(201, 100))).consistent
    assert gen_toy(4).polys[0].constant_term == 0
    with pytest.raises(ValueError):
        gen_toy(5)


def test_trapezoid_weights_sum():
    w = trapezoid_weights(mpq(3), 6)
    assert sum(w) == 3 and w[0] == w[-1] == mpq(1, 4)


def test_absorbing_kernel_is_trivially_consistent():
    model = gen_neutron(1, 1, ConstantKernel(mpq(1), mpq(0)))
    assert format_psp(model.psp) == "Q0 = 1\nQ1 = 1\n"
    assert check_consistency(model.psp).consistent


@pytest.mark.parametrize("D", ["0.5", "2", "3", "6"])
def test_neutron_rows_are_valid(D):
    model = gen_neutron(D, 8)
    assert validate(model.psp) == []
    assert model.psp.n == 9


def test_clamping_recorded():
    model = gen_neutron(1, 2, ConstantKernel(mpq(1, 2), mpq(1)))
    assert model.clamped
    assert validate(model.psp) == []
    assert all(v == 1 for v in evaluate(model.psp, constant_vector(3)))


def test_negative_kernel_rejected():
    with pytest.raises(KernelError):
        gen_neutron(1, 2, ConstantKernel(mpq(-1), mpq(0)))


def test_surrogate_deterministic():
    assert format_psp(gen_neutron(2, 4).psp) == format_psp(gen_neutron(2, 4, SurrogateKernel()).psp)


def test_surrogate_verdicts_n20():
    assert check_consistency(gen_neutron(2, 20).psp).consistent
    assert not check_consistency(gen_neutron(3, 20).psp).consistent


def test_tabulated_kernel(tmp_path):
    text = "xi,l\n0,0.5\n1,0.5\nxi,eta,R\n0,0,0.25\n0,1,0.25\n1,0,0.25\n1,1,0.25\n"
    path = tmp_path / "k.csv"
    path.write_text(text)
    k = kernel_from_spec(f"file:{path}")
    model = gen_neutron(1, 1, k)
    assert validate(model.psp) == []
    assert TabulatedKernel.from_text(text).escape[mpq(0)] == mpq(1, 2)


def test_tabulated_kernel_missing_point():
    k = TabulatedKernel.from_text("xi,l\n0,1\nxi,eta,R\n0,0,0\n")
    with pytest.raises(KernelError):
        gen_neutron(1, 1, k)


@pytest.mark.parametrize("text", ["0,1\n", "xi,l\n0\n", "xi,l\n0,abc\n"])
def test_tabulated_kernel_errors(text):
    with pytest.raises(KernelError):
        TabulatedKernel.from_text(text)


def test_unknown_kernel():
    with pytest.raises(KernelError):
        kernel_from_spec("harris")


def test_bisection_on_toy():
    result = bisect_consistency(gen_toy, 1, 3, mpq(1, 100))
    assert result.width <= mpq(1, 100)
    assert result.lo <= 2 < result.hi
    assert all(step.consistent == (step.D <= 2) for step in result.steps)


def test_bisection_zero_iterations():
    result = bisect_consistency(gen_toy, 1, 3, 2)
    assert (result.lo, result.hi) == (1, 3) and len(result.steps) == 2


def test_bisection_bad_bracket():
    with pytest.raises(BracketError):
        bisect_consistency(gen_toy, 3, 4, mpq(1, 10))
    with pytest.raises(BracketError):
        bisect_consistency(gen_toy, 1, mpq(3, 2), mpq(1, 10))


def test_surrogate_antitone_and_critical_radius():
    verdicts = [check_consistency(gen_neutron(D, 10).psp).consistent for D in ("1", "1.5", "2", "2.5", "3")]
    assert verdicts == sorted(verdicts, reverse=True)
    result = critical_radius(10, None, 1, 4, mpq(1, 10))
    assert result.width <= mpq(1, 10)
    assert check_consistency(gen_neutron(result.lo, 10).psp).consistent
    assert not check_consistency(gen_neutron(result.hi, 10).psp).consistent
