import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonsplit.errors import DegenerateDesignMatrix, DomainError, InsufficientSamples
from henonsplit.sweep import (
    FIT,
    STORE,
    SplittingSample,
    error_term_diagnostic,
    fit_exponential,
    fit_log_data,
    from_raw,
    run_sweep,
    sweep_trend_checks,
    to_raw,
)

HS = [0.2, 0.17, 0.15, 0.13, 0.11, 0.095, 0.08, 0.07, 0.06]
PI2 = FIT.pi ** 2


def _synthetic(log_a, nu, slope, second=None):
    out = []
    for h in HS:
        h = FIT.mpf(h)
        y = log_a + nu * FIT.log(h) + slope / h
        if second:
            c, mu = second
            y += FIT.log(1 + c * FIT.exp(-mu / h))
        out.append(y)
    return out


def test_free_slope_recovers_exact_law():
    f = fit_log_data(HS, _synthetic(2.5, 0, -PI2), "free-slope")
    assert f.slope == pytest.approx(-PI2, rel=1e-12)
    assert f.log_prefactor == pytest.approx(2.5, abs=1e-10)
    assert f.slope_spread < 1e-10


def test_h_power_model_recovers_nu():
    f = fit_log_data(HS, _synthetic(9.3, -2, -PI2), "free-slope-with-h-power")
    assert f.h_power == pytest.approx(-2, abs=1e-10)
    assert f.slope == pytest.approx(-PI2, rel=1e-12)


def test_free_slope_biased_by_h_power():
    f = fit_log_data(HS, _synthetic(9.3, -2, -PI2), "free-slope")
    assert abs(f.slope / -PI2 - 1) > 0.01


def test_fixed_slope_residuals():
    f = fit_log_data(HS, _synthetic(1.0, 0, -PI2), "fixed-slope")
    assert f.slope == pytest.approx(-PI2)
    assert f.rms_residual < 1e-20


def test_fit_errors():
    with pytest.raises(InsufficientSamples):
        fit_log_data(HS[:4], [0, 0, 0, 0])
    with pytest.raises(DegenerateDesignMatrix):
        fit_log_data([0.1] * 6, [1.0] * 6, "free-slope")
    with pytest.raises(DomainError):
        fit_log_data(HS, _synthetic(0, 0, -PI2), "cubic")


@pytest.mark.parametrize("c", [0.7, -0.4])
def test_error_term_exponent(c):
    d = error_term_diagnostic(None, hs=HS, log_abs=_synthetic(3.0, 0, -PI2, (c, PI2)))
    assert d["exponent"] == pytest.approx(-PI2, rel=1e-6)
    assert d["monotone"]
    assert d["log_prefactor"] == pytest.approx(3.0, abs=1e-8)


def test_error_term_pure_law():
    d = error_term_diagnostic(None, hs=HS, log_abs=_synthetic(3.0, 0, -PI2))
    assert d["note"] == "no measurable second order"


@given(st.floats(min_value=-1e300, max_value=1e300, allow_nan=False, allow_infinity=False))
@settings(max_examples=100)
def test_raw_round_trip(x):
    ctx = mpmath.MPContext()
    ctx.prec = 300
    v = ctx.mpf(x) / 3
    assert from_raw(to_raw(v)) == STORE.make_mpf(v._mpf_)
    assert from_raw(to_raw(v))._mpf_ == v._mpf_


def test_trend_checks():
    mk = lambda h, t: SplittingSample(STORE.mpf(0), STORE.mpf(h), STORE.mpf(t), STORE.mpf(t), 128)
    good = [mk(0.1, 1e-40), mk(0.2, 1e-20), mk(0.3, -1e-10)]
    r = sweep_trend_checks(good)
    assert r["strictly_monotone"] and not r["constant_sign"]


def test_grid_domain():
    with pytest.raises(DomainError):
        run_sweep(["0.5"])


def test_small_parallel_sweep_is_sorted():
    res = run_sweep(["0.33", "0.3", "0.31", "0.32", "0.34"], jobs=2)
    hs = [float(s.h) for s in res.samples]
    assert hs == sorted(hs) and len(hs) == 5
    assert sweep_trend_checks(res.samples) == {"strictly_monotone": True, "constant_sign": True}
    f = fit_exponential(res.samples, "free-slope-with-h-power", quantity="theta_tau")
    assert f.rms_residual < 1e-3
