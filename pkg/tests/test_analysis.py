import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from sdapd.analysis import (
    GridMismatchError,
    NormalizationError,
    TheoryCurve,
    compare,
    estimate_g2,
    estimate_proportion,
    flatness_test,
    solve_flux_for_click_probability,
    theory_click_probability,
    theory_g2_multimode,
    theory_rate,
)
from sdapd.detector import DetectorSpec
from sdapd.experiments import run_dead_time
from helpers import negbin_pmf

PD = 1.67e-5


def poisson_sum(mu, eta, pd, nmax=200):
    ks = np.arange(nmax + 1)
    return float(np.sum(stats.poisson.pmf(ks, mu) * (1 - (1 - pd) * (1 - eta) ** ks)))


def test_click_probability_examples():
    assert theory_click_probability(0.0, 0.14, PD) == pytest.approx(PD, rel=1e-12)
    assert theory_click_probability(1e4, 0.14, PD) == pytest.approx(1.0)
    assert theory_click_probability(1.0, 0.10, 0.0) == pytest.approx(0.0951625819640, abs=1e-12)
    assert theory_click_probability(1.0, 0.10, 0.0) == pytest.approx(poisson_sum(1.0, 0.1, 0.0),
                                                                      abs=1e-12)


def test_rate_examples():
    assert theory_rate(10.0, 0.14, PD, 518e6) == pytest.approx(390.2e6, rel=5e-4)
    assert theory_rate(0.0, 0.14, PD, 518e6) == pytest.approx(8.65e3, rel=1e-3)
    assert theory_rate(5.0, 0.0, 0.0, 518e6) == 0.0


@given(mu=st.floats(0, 1.0), eta=st.floats(1e-3, 1))
def test_rate_linear_at_low_flux(mu, eta):
    if eta * mu >= 0.02:
        return
    f = 518e6
    r = theory_rate(mu, eta, PD, f)
    assert abs(r - f * (PD + eta * mu)) / r < 0.01


@given(mu=st.floats(0, 50), dmu=st.floats(0, 10), eta=st.floats(0, 1), pd=st.floats(0, 1))
def test_click_probability_monotone_in_range(mu, dmu, eta, pd):
    a = theory_click_probability(mu, eta, pd)
    b = theory_click_probability(mu + dmu, eta, pd)
    assert 0.0 <= a <= b + 1e-15 <= 1.0 + 1e-15


def test_g2_multimode():
    assert theory_g2_multimode(1) == 2.0
    assert theory_g2_multimode(math.inf) == 1.0
    assert theory_g2_multimode(2.5) == pytest.approx(1.4)
    # moment oracle on the exact negative-binomial pmf
    ks = np.arange(600)
    for m in (1.0, 2.5):
        pmf = np.array([negbin_pmf(k, 0.8, m) for k in ks])
        g2 = np.sum(pmf * ks * (ks - 1)) / np.sum(pmf * ks) ** 2
        assert g2 == pytest.approx(theory_g2_multimode(m), abs=1e-9)


def test_solve_flux():
    mu = solve_flux_for_click_probability(0.36, 0.1, PD)
    assert theory_click_probability(mu, 0.1, PD) == pytest.approx(0.36, abs=1e-12)
    with pytest.raises(ValueError):
        solve_flux_for_click_probability(1.0, 0.1, PD)


def test_wilson_edges():
    n = 1000
    p, (lo, hi) = estimate_proportion(0, n)
    assert p == 0 and lo == 0
    assert hi == pytest.approx(3.84 / (n + 3.84), rel=1e-3)
    p, (lo, hi) = estimate_proportion(n, n)
    assert p == 1 and hi == pytest.approx(1.0)
    with pytest.raises(ValueError):
        estimate_proportion(5, 0)


def test_wilson_against_clopper_pearson():
    k, n = 500, 5000
    p, (lo, hi) = estimate_proportion(k, n)
    cp_lo = stats.beta.ppf(0.025, k, n - k + 1)
    cp_hi = stats.beta.ppf(0.975, k + 1, n - k)
    width = cp_hi - cp_lo
    assert p == 0.1
    assert abs(lo - cp_lo) < 0.1 * width and abs(hi - cp_hi) < 0.1 * width
    assert abs((hi - lo) - width) / width < 0.1


@pytest.mark.parametrize("p", [0.01, 0.1, 0.5])
def test_wilson_width_scales_with_root_n(p):
    n = 20_000
    w1 = np.subtract(*estimate_proportion(p * n, n)[1][::-1])
    w2 = np.subtract(*estimate_proportion(2 * p * n, 2 * n)[1][::-1])
    assert w1 / w2 == pytest.approx(math.sqrt(2), rel=0.05)


def test_compare_self_is_perfect():
    curve = TheoryCurve.click_probability([0.1, 1, 10], 0.1, PD)
    rep = compare(curve.mu, curve.value, np.zeros(3), curve)
    assert rep.passed and np.all(rep.z == 0) and rep.max_abs_z == 0


def test_compare_grid_mismatch():
    curve = TheoryCurve.click_probability([0.1, 1, 10], 0.1, PD)
    with pytest.raises(GridMismatchError):
        compare([0.1, 1, 11], curve.value, np.ones(3), curve)
    with pytest.raises(GridMismatchError):
        compare([0.1, 1], curve.value[:2], np.ones(2), curve)


@pytest.fixture(scope="module")
def sweep():
    spec = DetectorSpec(efficiency=0.10, dark_prob=PD, afterpulse_total=0.0)
    mus = [0.1, 0.3, 1.0, 3.0, 10.0]
    res = run_dead_time(spec, mus, separation=2, frames=400_000, seed=2024)
    return mus, res


def test_compare_simulated_sweep_passes(sweep):
    mus, res = sweep
    curve = TheoryCurve.click_probability(mus, 0.10, PD)
    for name in ("P1", "P2"):
        rep = compare(mus, [getattr(r, name) for r in res], [r.stderr(name) for r in res], curve)
        assert rep.passed, rep.summary()


def test_compare_detects_perturbed_efficiency(sweep):
    mus, res = sweep
    curve = TheoryCurve.click_probability(mus, 0.12, PD)
    rep = compare(mus, [r.P1 for r in res], [r.stderr("P1") for r in res], curve)
    assert not rep.passed
    assert rep.signed_bias < 0


def test_flatness_on_constant_points():
    mean, chi2, dof, p = flatness_test([1.0, 1.0, 1.0], [0.1, 0.1, 0.1])
    assert mean == 1.0 and chi2 == 0.0 and dof == 2 and p == pytest.approx(1.0)


def _dense_g2(a, b, pulses, lag):
    A = np.zeros(pulses)
    B = np.zeros(pulses)
    A[a] = 1
    B[b] = 1
    if lag >= 0:
        prod = A[:pulses - lag] * B[lag:]
    else:
        prod = A[-lag:] * B[:pulses + lag]
    return prod.mean() / (A.mean() * B.mean()), int(prod.sum())


def test_g2_counts_match_dense_oracle(rng):
    pulses = 5000
    a = np.flatnonzero(rng.random(pulses) < 0.2)
    b = np.flatnonzero(rng.random(pulses) < 0.3)
    est = estimate_g2(a, b, pulses, max_lag=6)
    for lag, g, c in zip(est.lags, est.g2, est.coincidences):
        g_ref, c_ref = _dense_g2(a, b, pulses, lag)
        assert c == c_ref
        assert g == pytest.approx(g_ref, rel=1e-12)


def test_g2_perfect_correlation():
    pulses = 1000
    idx = np.arange(0, pulses, 10)
    est = estimate_g2(idx, idx, pulses, max_lag=3)
    assert est.g2[est.lags == 0][0] == pytest.approx(10.0)
    assert est.g2[est.lags == 1][0] == 0.0


def test_g2_long_lag_normalization_agrees(rng):
    pulses = 400_000
    a = np.flatnonzero(rng.random(pulses) < 0.05)
    b = np.flatnonzero(rng.random(pulses) < 0.05)
    s = estimate_g2(a, b, pulses, 5, "singles")
    ll = estimate_g2(a, b, pulses, 5, "long_lag")
    assert np.all(np.abs(s.g2 - 1) < 5 * s.stderr)
    assert np.all(np.abs(ll.g2 - 1) < 5 * ll.stderr)


def test_g2_degenerate_channel():
    with pytest.raises(NormalizationError):
        estimate_g2(np.array([], dtype=np.int64), np.array([1, 2]), 10, 2)
