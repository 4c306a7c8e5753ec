import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisodiff.analysis_checks import (
    RecursionSpec,
    TimeSignal,
    b_alpha_sandwich,
    check_mollifier_properties,
    check_troisi,
    elementary_inequality,
    mollify_backward,
    mollify_forward,
    multi_recursion_suite,
    random_smooth_signal,
    recursion_grid_suite,
    run_all_suites,
    run_recursion,
    run_recursion_multi,
    signed_power_monotone,
    troisi_suite,
)
from anisodiff.grid import GridFunction, GridSpec


def test_time_signal_validation():
    with pytest.raises(ValueError):
        TimeSignal(np.zeros(1), 0.1)
    with pytest.raises(ValueError):
        TimeSignal(np.zeros(5), 0.0)
    with pytest.raises(ValueError):
        TimeSignal.sample(np.sin, 1.0, 0.3)
    with pytest.raises(ValueError):
        mollify_forward(TimeSignal(np.zeros(5), 0.1), 0.0)


def test_mollifier_closed_forms():
    dt, h = 1e-4, 0.1
    one = TimeSignal.sample(np.ones_like, 1.0, dt)
    t = one.t
    assert np.max(np.abs(mollify_forward(one, h).values - (1 - np.exp(-t / h)))) < 1e-6
    zero = TimeSignal(np.zeros(101), 0.01)
    assert np.all(mollify_forward(zero, h).values == 0.0)
    assert np.all(mollify_backward(zero, h).values == 0.0)
    lin = TimeSignal.sample(lambda s: s, 1.0, dt)
    exact = t - h * (1 - np.exp(-t / h))
    assert np.max(np.abs(mollify_forward(lin, h).values - exact)) < 1e-6
    # backward mollifier is the mirror image
    rev = TimeSignal.sample(lambda s: 1.0 - s, 1.0, dt)
    assert np.allclose(mollify_backward(rev, h).values, exact[::-1], atol=1e-6)


def test_constant_signal_residual_calibration():
    rep = check_mollifier_properties(TimeSignal.sample(np.ones_like, 1.0, 1e-4), 0.05)
    # only the centred difference of the e^(-t/h) start-up contributes
    assert rep["residual_forward"] < 1e-4
    assert rep["passed"]


def test_random_signals_and_h_sweep():
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = random_smooth_signal(rng)
        rep = check_mollifier_properties(v, 0.05)
        assert rep["passed"], rep
    v = random_smooth_signal(np.random.default_rng(4))
    errs = [np.sqrt(np.trapezoid((mollify_forward(v, h).values - v.values) ** 2, dx=v.dt)) for h in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_recursion_examples():
    at = run_recursion(RecursionSpec(1.0, 2.0, 1.0, 1.0, 0.5, 50))
    assert at.bound_holds()
    assert RecursionSpec(1.0, 2.0, 1.0, 1.0, 0.5, 50).threshold == 0.5
    zero = run_recursion(RecursionSpec(1.0, 2.0, 1.0, 1.0, 0.0, 50))
    assert np.all(zero.z == 0.0)
    above = run_recursion(RecursionSpec(1.0, 2.0, 1.0, 1.0, 0.9, 60))
    assert above.diverged and above.diverged_at <= 60
    with pytest.raises(ValueError):
        RecursionSpec(1.0, 1.0, 1.0, 1.0, 0.5, 5)
    with pytest.raises(ValueError):
        RecursionSpec(1.0, 2.0, 2.0, 1.0, 0.5, 5)


def test_multi_recursion_examples():
    same = run_recursion_multi((1.0, 1.0), 1.0, 2.0, 0.5, 50)
    single = run_recursion(RecursionSpec(1.0, 2.0, 1.0, 1.0, 0.5, 50))
    assert np.array_equal(same.z, single.z)
    assert run_recursion_multi((0.5, 2.0), 1.0, 2.0, 10.0, 50).diverged
    assert multi_recursion_suite()["passed"]


def test_recursion_grid():
    rep = recursion_grid_suite()
    assert len(rep["cases"]) == 18
    assert rep["passed"]


# at the threshold itself every step is an equality, which rounding can tip;
# the exact comparison is only meaningful there for dyadic data (next test)
@given(st.floats(0.1, 4.0), st.floats(1.1, 8.0), st.floats(0.1, 2.0), st.floats(0.0, 0.999))
@settings(max_examples=100)
def test_recursion_below_threshold_decays(C, b, mu, frac):
    probe = RecursionSpec(C, b, mu, mu, 0.0, 40)
    res = run_recursion(RecursionSpec(C, b, mu, mu, frac * probe.threshold, 40))
    assert res.bound_holds()


@pytest.mark.parametrize("C, b, mu", [(1.0, 4.0, 1.0), (2.0, 2.0, 1.0), (0.5, 16.0, 0.5), (2.0, 16.0, 0.5)])
def test_recursion_at_dyadic_threshold_is_exact(C, b, mu):
    spec = RecursionSpec(C, b, mu, mu, 0.0, 30)
    res = run_recursion(RecursionSpec(C, b, mu, mu, spec.threshold, 30))
    assert res.bound_holds()
    assert np.array_equal(res.z, res.bound())


def test_troisi_examples():
    spec = GridSpec((1.0, 1.0, 1.0), (32, 32, 32))
    g = GridFunction.sample(spec, lambda x, y, z: np.maximum(0.5 - x * x - y * y - z * z, 0.0) ** 2)
    p = (2.2, 2.4, 2.6)
    r = check_troisi(g, p)
    assert r.defined and 0 < r.ratio < math.inf
    assert check_troisi(g * 7.0, p).ratio == pytest.approx(r.ratio, rel=1e-12)
    assert not check_troisi(GridFunction.zeros(spec), p).defined
    with pytest.raises(ValueError):
        check_troisi(GridFunction(spec, np.ones(spec.shape)), p)  # no collar
    with pytest.raises(ValueError):
        check_troisi(g, (3.0, 3.0, 3.0))  # p_bar >= N


def test_troisi_suite():
    rep = troisi_suite(resolutions=(32, 48, 64))
    assert rep["passed"], rep


def test_scalar_suites_pass_and_detect_corruption():
    rng = np.random.default_rng(0)
    assert b_alpha_sandwich(rng, 0.5, 20_000)["passed"]
    assert elementary_inequality(rng, 20_000)["passed"]
    assert signed_power_monotone(rng, 20_000)["passed"]
    assert not elementary_inequality(rng, 20_000, constant_scale=0.25)["passed"]


def test_elementary_inequality_equality_case():
    # b = -a is the equality case |2a|^g = 2^(g-1) * 2|a|^g
    rng = np.random.default_rng(1)
    rep = elementary_inequality(rng, 10)
    assert rep["max_lhs_over_rhs"] <= 1.0 + 1e-12


def test_run_all_suites_small():
    rep = run_all_suites(seed=0, trials=2_000)
    assert rep["passed"]
    names = {s["suite"] for s in rep["suites"]}
    assert {"b_alpha_sandwich", "elementary_inequality", "signed_power_monotone", "mollifier", "fast_convergence", "fast_convergence_multi", "troisi"} <= names
    assert not run_all_suites(seed=0, trials=2_000, corrupt=True)["passed"]


def test_zero_trials_vacuous_pass():
    with pytest.warns(UserWarning):
        rep = run_all_suites(trials=0)
    assert rep["passed"] and "warning" in rep


def test_reports_reproducible():
    a = run_all_suites(seed=5, trials=500)
    b = run_all_suites(seed=5, trials=500)
    assert a == b
