from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisodiff.params import Anisotropy, ParameterError, check_sum_identities, derive, perturbed


def exact_exponents(N, alpha, p):
    """Rational-arithmetic oracle for the exponents (independent of derive)."""
    a = Fraction(alpha)
    ps = [Fraction(q) for q in sorted(p)]
    pb = N / sum(1 / q for q in ps)
    lam1 = N * (pb - a - 1) + pb
    supp = [(N * (pb - q) + pb) / (lam1 * q) for q in ps]
    return pb, lam1, supp


@st.composite
def anisotropies(draw, max_dim=5):
    N = draw(st.integers(1, max_dim))
    alpha = draw(st.floats(0.05, 1.0))
    p = draw(st.lists(st.floats(1.05, 8.0), min_size=N, max_size=N))
    return Anisotropy.from_user(N, alpha, p)


def test_trivial_heat_case():
    d = derive(Anisotropy.from_user(2, 1.0, (2.0, 2.0)))
    assert d.p_bar == 2.0 and d.lambda_1 == 2.0
    assert d.mass_decay_exponent == 1.0
    assert d.support_exponent == (0.5, 0.5)
    assert check_sum_identities(d)


@pytest.mark.parametrize(
    "N, alpha, p, pb, lam1, decay",
    [
        (3, 0.5, (2.2, 2.4, 2.6), 2.38885, 5.05541, 0.59342),
        (2, 0.5, (1.7, 1.9), 1.79444, 2.38333, 0.83916),
    ],
)
def test_documented_examples(N, alpha, p, pb, lam1, decay):
    d = derive(Anisotropy.from_user(N, alpha, p))
    assert d.p_bar == pytest.approx(pb, rel=1e-5)
    assert d.lambda_1 == pytest.approx(lam1, rel=1e-5)
    assert d.mass_decay_exponent == pytest.approx(decay, rel=1e-4)


def test_reference_frozen_against_rational_oracle():
    d = derive(Anisotropy.from_user(3, 0.5, (2.2, 2.4, 2.6)))
    pb, lam1, supp = exact_exponents(3, 0.5, (2.2, 2.4, 2.6))
    assert d.p_bar == pytest.approx(float(pb), rel=1e-14)
    assert d.lambda_1 == pytest.approx(float(lam1), rel=1e-14)
    assert np.allclose(d.support_exponent, [float(s) for s in supp], rtol=1e-13)
    # frozen values
    assert d.p_bar == pytest.approx(2.388863109048724, rel=1e-12)
    assert d.lambda_1 == pytest.approx(5.055452436194895, rel=1e-12)
    assert np.allclose(d.support_exponent, (0.2657304144, 0.1941346551, 0.1335536280), rtol=1e-9)
    assert d.slow_diffusion and d.rough_support and d.ultracontractive and d.supercritical


def test_two_d_flags():
    d = derive(Anisotropy.from_user(2, 0.5, (1.7, 1.9)))
    assert d.supercritical and d.slow_diffusion
    assert d.mass_gain_exponent == pytest.approx(0.75291, rel=1e-4)


def test_perturbed_lambda_breaks_identities():
    d = derive(Anisotropy.from_user(3, 0.5, (2.2, 2.4, 2.6)))
    assert check_sum_identities(d)
    assert not check_sum_identities(perturbed(d, lambda_1=d.lambda_1 + 1e-3))


def test_sorting_and_user_order():
    a = Anisotropy.from_user(3, 0.5, (2.6, 2.2, 2.4))
    assert a.p == (2.2, 2.4, 2.6)
    assert a.p_user == (2.6, 2.2, 2.4)
    assert a.to_user_order(["s1", "s2", "s3"]) == ["s3", "s1", "s2"]


@pytest.mark.parametrize(
    "kw",
    [
        dict(dim=2, alpha=0.0, p=(2, 2)),
        dict(dim=2, alpha=1.2, p=(2, 2)),
        dict(dim=2, alpha=0.5, p=(2,)),
        dict(dim=2, alpha=0.5, p=(1.0, 2.0)),
        dict(dim=2, alpha=0.5, p=(2.0, 2.0), lambda_struct=0.5),
        dict(dim=0, alpha=0.5, p=()),
    ],
)
def test_invalid_tuples_rejected(kw):
    with pytest.raises(ParameterError):
        Anisotropy.from_user(kw["dim"], kw["alpha"], kw["p"], kw.get("lambda_struct", 1.0))


def test_p_bar_star_absent_when_p_bar_at_least_N():
    assert derive(Anisotropy.from_user(2, 0.5, (2.0, 3.0))).p_bar_star is None
    assert derive(Anisotropy.from_user(3, 0.5, (2.0, 2.0, 2.0))).p_bar_star == pytest.approx(6.0)


@given(anisotropies())
def test_harmonic_mean_between_extremes(a):
    d = derive(a)
    assert a.p[0] * (1 - 1e-12) <= d.p_bar <= a.p[-1] * (1 + 1e-12)


@given(anisotropies(), st.floats(0.0, 5.0), st.floats(1e-3, 5.0))
def test_lambda_q_increasing(a, q, dq):
    d = derive(a)
    assert d.lambda_q(q + dq) > d.lambda_q(q)


@given(anisotropies())
def test_sum_identities(a):
    d = derive(a)
    if d.lambda_1 > 0:
        assert check_sum_identities(d, rtol=1e-10)
    else:
        with pytest.raises(ParameterError):
            check_sum_identities(d)


@given(anisotropies())
def test_flag_chain(a):
    d = derive(a)
    assert (not d.slow_diffusion) or d.rough_support
    assert (not d.rough_support) or d.ultracontractive
    assert d.supercritical != d.subcritical


@given(st.integers(1, 5), st.floats(2.05, 6.0))
def test_equal_exponents_heat_like(N, p):
    d = derive(Anisotropy.from_user(N, 1.0, (p,) * N))
    expected = 1.0 / (N * (p - 2.0) + p)
    assert np.allclose(d.support_exponent, expected, rtol=1e-13)


@given(anisotropies())
def test_matches_rational_oracle(a):
    d = derive(a)
    pb, lam1, supp = exact_exponents(a.dim, a.alpha, a.p)
    assert d.p_bar == pytest.approx(float(pb), rel=1e-12)
    assert d.lambda_1 == pytest.approx(float(lam1), rel=1e-9, abs=1e-12)
    if abs(float(lam1)) > 1e-6:
        assert np.allclose(d.support_exponent, [float(s) for s in supp], rtol=1e-8, atol=1e-12)
