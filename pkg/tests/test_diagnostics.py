import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisodiff.diagnostics import (
    CsvWriter,
    DiagnosticError,
    Series,
    check_rectangle_optimality,
    check_support_law,
    check_ultracontractivity,
    fit_power_law,
    last_decade,
    report_boundedness_bound,
)
from anisodiff.grid import GridFunction, GridSpec
from anisodiff.params import Anisotropy, derive
from anisodiff.solver import TimeSeriesRecord

REF = derive(Anisotropy.from_user(3, 0.5, (2.2, 2.4, 2.6)))


def synthetic(d, R0=1.0, n=200, t_end=100.0, linf_slope=None):
    """Series obeying the predicted power laws exactly."""
    t = np.geomspace(0.1, t_end, n)
    s = -d.mass_decay_exponent if linf_slope is None else linf_slope
    supp_exp = np.array(d.anis.to_user_order(list(d.support_exponent)))
    supp = 2 * R0 + 5.0 * R0 * t[:, None] ** supp_exp[None, :]
    linf = 3.0 * t**s
    l1 = np.full(n, 2.0)
    return Series(
        step=np.arange(n),
        t=t,
        dt=np.full(n, 0.1),
        mass_v=np.full(n, 1.0),
        l1_u=l1,
        lalpha1_u=l1,
        linf_u=linf,
        supp=supp,
    )


@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
def test_fit_recovers_exact_power_law(slope, c):
    t = np.geomspace(1.0, 100.0, 30)
    fit = fit_power_law(t, c * t**slope)
    assert fit.slope == pytest.approx(slope, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_refusals():
    t = np.geomspace(1, 10, 10)
    with pytest.raises(DiagnosticError):
        fit_power_law(t, t, (1, 1.5))
    with pytest.raises(DiagnosticError):
        fit_power_law(t, -t)


def test_last_decade():
    assert last_decade(synthetic(REF)) == (10.0, 100.0)


def test_ultracontractivity_pass_and_fail():
    s = synthetic(REF)
    rep = check_ultracontractivity(s, REF)
    assert rep["passed"] and rep["relative_deviation"] < 1e-10
    bad = check_ultracontractivity(synthetic(REF, linf_slope=-0.8), REF)
    assert not bad["passed"]
    assert bad["selfsimilar_relative_deviation"] < 0.03


def test_ultracontractivity_refused_outside_regime():
    d = derive(Anisotropy.from_user(3, 1.0, (1.2, 1.2, 1.2)))
    assert not d.ultracontractive
    with pytest.raises(DiagnosticError):
        check_ultracontractivity(synthetic(REF), d)


def test_support_law():
    s = synthetic(REF)
    rep = check_support_law(s, REF, 1.0)
    assert rep["passed"] and rep["measured_strictly_decreasing"]
    assert all(a["relative_deviation"] < 1e-10 for a in rep["axes"])
    with pytest.raises(DiagnosticError):
        check_support_law(s, REF, 1.0, aborted=True)
    with pytest.raises(DiagnosticError):
        check_support_law(s, REF, 10.0)  # support below 4 R0


def test_support_law_ranking_detects_swap():
    s = synthetic(REF)
    s.supp = s.supp[:, ::-1].copy()
    rep = check_support_law(s, REF, 1.0)
    assert not rep["passed"] and not rep["measured_strictly_decreasing"]


def test_rectangle_optimality():
    s = synthetic(REF)
    rep = check_rectangle_optimality(s, REF)
    assert rep["lower_chain_holds"]
    s.l1_u = s.l1_u * 1e9
    assert not check_rectangle_optimality(s, REF)["lower_chain_holds"]


def test_csv_round_trip(tmp_path):
    recs = [TimeSeriesRecord(k, 0.1 * k, 0.1, 1.0, 2.0, 3.0, 4.0 + k, (1.0, 2.5)) for k in range(6)]
    w = CsvWriter(tmp_path / "a.csv", 2)
    for r in recs:
        w.write(r)
    w.close()
    s = Series.read_csv(tmp_path / "a.csv")
    ref = Series.from_records(recs)
    for name in ("step", "t", "dt", "mass_v", "l1_u", "lalpha1_u", "linf_u", "supp"):
        assert np.array_equal(getattr(s, name), getattr(ref, name))
    (tmp_path / "b.csv").write_text("x,y\n1,2\n")
    with pytest.raises(DiagnosticError):
        Series.read_csv(tmp_path / "b.csv")


def test_boundedness_report():
    spec = GridSpec((2.0, 2.0), (16, 16))
    g = GridFunction.sample(spec, lambda x, y: np.exp(-(x * x + y * y)))
    snaps = [(t, g * (1.0 + t)) for t in np.linspace(0.0, 1.0, 6)]
    d = derive(Anisotropy.from_user(2, 0.5, (2.2, 2.6)))
    rep = report_boundedness_bound(snaps, d, (0.0, 0.0), 0.8)
    assert not rep["refused"] and rep["empirical_c"] > 0
    sub = derive(Anisotropy.from_user(3, 1.0, (1.2, 1.2, 1.2)))
    assert report_boundedness_bound(snaps, sub, (0.0, 0.0), 0.8)["refused"]
