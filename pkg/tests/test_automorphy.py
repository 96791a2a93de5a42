import math

import numpy as np
import pytest

from aareduce.automorphy import (
    SampledSignal,
    Verdict,
    almost_period_scan,
    bochner_test,
    classify,
    compactness_proxy,
    derivative_aa_check,
    integral_aa_check,
    range_bounded,
    read_signal_csv,
    weakest,
    write_signal_csv,
)
from aareduce.errors import DomainError, WindowError
from oracles import brute_almost_periods

SQRT2 = math.sqrt(2.0)


def sampled(f, t1, dt=0.01, t0=0.0):
    return SampledSignal.from_function(f, t0, t1, dt)


def test_signal_validation():
    with pytest.raises(DomainError):
        SampledSignal(0.0, 0.1, np.zeros(4))
    with pytest.raises(DomainError):
        SampledSignal(0.0, -0.1, np.zeros(32))
    sig = sampled(np.sin, 1.0)
    assert sig.count == 101 and sig.length == pytest.approx(1.0)


def test_range_bounded_examples():
    sin = range_bounded(sampled(np.sin, 100), 10)
    assert sin.flag and sin.sup_estimate == pytest.approx(1.0, abs=1e-4)
    assert not range_bounded(sampled(lambda t: t, 100), 10).flag
    dec = range_bounded(sampled(lambda t: np.exp(-t), 50), 10)
    assert dec.flag and dec.sup_estimate == 1.0


def test_sine_almost_periods_near_two_pi():
    scan = almost_period_scan(sampled(np.sin, 200), 1e-2)
    assert scan.max_gap == pytest.approx(2 * math.pi, abs=0.01 + 1e-9)
    assert scan.first_recurrence == pytest.approx(2 * math.pi, abs=0.02)
    returns = scan.periods[scan.periods > 1]
    k = np.round(returns / (2 * math.pi))
    assert np.all(np.abs(returns - 2 * math.pi * k) <= 0.02)


def test_scan_matches_brute_force():
    sig = sampled(lambda t: np.sin(t) + np.sin(SQRT2 * t), 100, dt=0.02)
    for eps in (0.1, 0.4):
        scan = almost_period_scan(sig, eps)
        hits = brute_almost_periods(sig.values, eps, (sig.count - 1) // 2)
        np.testing.assert_allclose(scan.periods, sig.dt * np.array(hits))


def test_brute_force_at_finer_spacing_agrees_on_sine_period():
    coarse = almost_period_scan(sampled(np.sin, 40, dt=0.01), 1e-2)
    fine = sampled(np.sin, 40, dt=0.002)
    hits = brute_almost_periods(fine.values, 1e-2, (fine.count - 1) // 2)
    fine_returns = [h * fine.dt for h in hits if h * fine.dt > 1]
    assert abs(min(fine_returns) - coarse.first_recurrence) <= 0.01 + 0.002


def test_increasing_signal_has_no_almost_periods():
    # eps below one grid step, so no shift qualifies by continuity alone
    scan = almost_period_scan(sampled(lambda t: t, 50), 1e-3)
    assert scan.max_gap is None and len(scan.periods) == 0


def test_quasi_periodic_gap_regression():
    scan = almost_period_scan(sampled(lambda t: np.sin(t) + np.sin(SQRT2 * t), 200), 0.1)
    assert len(scan.periods) > 0
    # frozen from the brute-force scan: only shifts up to 0.04 qualify
    assert scan.max_gap == pytest.approx(0.01)
    np.testing.assert_allclose(scan.periods, [0.01, 0.02, 0.03, 0.04])
    assert scan.first_recurrence is None


def test_constant_signal_scan():
    sig = SampledSignal(0.0, 0.1, np.full(100, 3.0))
    scan = almost_period_scan(sig, 0.1)
    assert scan.max_gap == pytest.approx(0.1)
    assert scan.first_recurrence == pytest.approx(0.1)


def test_bochner_constant():
    sig = SampledSignal(0.0, 0.1, np.full(200, 2.5))
    res = bochner_test(sig, [1.0, 3.0, 5.5], 0.01)
    assert res.passed and res.back_residual == 0.0
    np.testing.assert_array_equal(res.limit_signal.values, 2.5)


def test_bochner_sine_period_multiples():
    sig = sampled(np.sin, 100, dt=0.01)
    res = bochner_test(sig, [2 * math.pi * k for k in range(1, 6)], 0.05, interpolate=True)
    assert res.passed and res.cauchy_found
    assert res.back_residual <= 2 * 0.01
    np.testing.assert_allclose(res.limit_signal.values[:, 0], np.sin(sig.times[: res.limit_signal.count]), atol=1e-4)


def test_bochner_decay_fails_back_half():
    sig = sampled(lambda t: np.exp(-t), 80)
    res = bochner_test(sig, [10, 20, 30, 40], 0.1)
    assert res.cauchy_found and not res.passed
    assert res.back_residual >= 0.5
    assert np.max(np.abs(res.limit_signal.values)) < 1e-4


def test_bochner_argument_errors():
    sig = sampled(np.sin, 10)
    with pytest.raises(WindowError):
        bochner_test(sig, [9.0], 0.1)
    with pytest.raises(DomainError):
        bochner_test(sig, [-1.0], 0.1)
    with pytest.raises(DomainError):
        bochner_test(sig, [], 0.1)


def test_classify_verdicts():
    quasi = classify(sampled(lambda t: np.sin(t) + np.sin(SQRT2 * t), 200), eps=0.1)
    assert quasi.verdict is Verdict.AP_LIKE
    assert quasi.almost_period_gap is not None
    assert classify(sampled(lambda t: t, 200)).verdict is Verdict.FAIL
    decay = classify(sampled(lambda t: np.exp(-t), 80))
    assert decay.verdict is Verdict.FAIL and decay.back_residual >= 0.5
    assert classify(sampled(np.sin, 100)).verdict is Verdict.AP_LIKE


def test_unbounded_range_is_fail():
    v = classify(sampled(np.sin, 50), bound_cap=0.5)
    assert v.verdict is Verdict.FAIL and not v.range_bounded


def test_weakest_order():
    assert weakest([Verdict.AP_LIKE, Verdict.AA_PLAUSIBLE]) is Verdict.AA_PLAUSIBLE
    assert weakest([Verdict.AP_LIKE, Verdict.FAIL, Verdict.AA_PLAUSIBLE]) is Verdict.FAIL


def test_compactness_proxy_separates_drift():
    assert compactness_proxy(sampled(np.sin, 100), 0.1) > 0.9
    assert compactness_proxy(sampled(lambda t: t, 100), 0.1) < 0.6


def test_derivative_of_sine():
    check = derivative_aa_check(sampled(np.sin, 200), eps=0.01)
    np.testing.assert_allclose(check.derivative.values[:, 0], np.cos(check.derivative.times), atol=1e-4)
    assert check.uniformly_continuous
    assert almost_period_scan(check.derivative, 0.01).first_recurrence == pytest.approx(2 * math.pi, abs=0.011)


def test_derivative_of_constant():
    check = derivative_aa_check(SampledSignal(0.0, 0.1, np.full(64, 1.5)))
    np.testing.assert_allclose(check.derivative.values, 0, atol=1e-12)
    assert check.verdict.verdict is Verdict.AP_LIKE


def test_derivative_kinks_of_rectified_sine():
    check = derivative_aa_check(sampled(lambda t: np.abs(np.sin(t)), 20), classify_derivative=False)
    assert not check.uniformly_continuous
    kinks = np.asarray(check.kinks)
    assert kinks.size >= 5
    near = np.abs(kinks - math.pi * np.round(kinks / math.pi))
    assert np.all(near <= 0.02)
    # central differences spread the slope jump of 2 over two steps
    assert check.modulus == pytest.approx(1.0, abs=0.05)


def test_integral_cases():
    cos = integral_aa_check(sampled(np.cos, 100), bound_cap=10)
    assert cos.range_bounded
    np.testing.assert_allclose(cos.primitive.values[:, 0], np.sin(cos.primitive.times), atol=1e-4)
    one = integral_aa_check(SampledSignal(0.0, 0.01, np.ones(10001)), bound_cap=10)
    assert not one.range_bounded
    quasi = integral_aa_check(sampled(lambda t: np.cos(t) + np.cos(SQRT2 * t), 200), bound_cap=10)
    assert quasi.range_bounded
    t = quasi.primitive.times
    np.testing.assert_allclose(quasi.primitive.values[:, 0], np.sin(t) + np.sin(SQRT2 * t) / SQRT2, atol=1e-3)


def test_integral_without_cap_uses_growth():
    assert not integral_aa_check(SampledSignal(0.0, 0.01, np.ones(10001)), bound_cap=math.inf).range_bounded
    assert integral_aa_check(sampled(np.cos, 100), bound_cap=math.inf).range_bounded


def test_csv_round_trip(tmp_path):
    t = np.arange(40) * 0.25
    values = np.stack([np.sin(t), np.cos(t) + 1j * t], axis=1)
    sig = SampledSignal(0.0, 0.25, values)
    path = tmp_path / "s.signal.csv"
    write_signal_csv(sig, path)
    assert path.read_text().splitlines()[0] == "t,v1_re,v1_im,v2_re,v2_im"
    back = read_signal_csv(path)
    assert back.dt == pytest.approx(0.25)
    np.testing.assert_allclose(back.values, values, rtol=1e-11, atol=1e-12)


def test_csv_rejects_irregular_grid(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["t,v1"] + [f"{t},{t}" for t in [0, 1, 2, 3.5] + list(range(4, 20))]
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DomainError):
        read_signal_csv(path)
