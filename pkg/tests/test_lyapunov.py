import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import zeta

from stochgl.dynamics import nonlinearity
from stochgl.lyapunov import (
    certify_drift, choose_M, deterministic_generator, drift_arrays, eq_I5_lhs, generator_mc_check,
    generator_terms, median_of_means, psi, sample_on_V_sphere,
)
from stochgl.noise import NoiseSpectrum
from stochgl.spectral import GAMMA_1, DomainError, SpectralField, inner_H, norm_H, norm_V

from conftest import fields, random_coeffs


def exact_sums(spec):
    return (2 * GAMMA_1 ** (-2 * spec.beta) * zeta(4 * spec.beta) * spec.amplitude**2,
            2 * GAMMA_1 ** (-spec.beta) * zeta(2 * spec.beta) * spec.amplitude)


def test_psi_examples():
    assert psi(SpectralField.zeros(4), 4.0) == 2.0
    assert psi(SpectralField.from_modes(4, {1: 1.0}), 1.0) == pytest.approx(np.sqrt(1.5), rel=1e-14)
    with pytest.raises(DomainError):
        psi(SpectralField.zeros(4), 0.0)


@given(fields(), st.floats(1e-3, 100.0))
def test_psi_lower_bound(x, M):
    assert psi(x, M) >= np.sqrt(M)


@given(fields(), fields(), st.floats(1e-3, 100.0))
def test_psi_lipschitz(x, y, M):
    m = min(x.m, y.m)
    x, y = SpectralField(x.coeffs[:m]), SpectralField(y.coeffs[:m])
    assert abs(psi(x, M) - psi(y, M)) <= norm_H(x - y) * (1 + 1e-12) + 1e-12


def test_report_at_zero(spec):
    M = 4.0
    r = generator_terms(SpectralField.zeros(64), spec, M)
    s2, s1 = exact_sums(spec)
    c, a = spec.c_alpha, spec.alpha
    expected = -(1 / (4 * M) + 2 * c * s2 / ((2 - a) * M) + 2 * c * s1 / ((a - 1) * np.sqrt(M)))
    assert r.drift_ratio_lower == pytest.approx(expected, rel=1e-8)
    assert r.J1_exact == 0.0 and r.psi == 2.0 and r.in_K


def test_single_mode_ratio_increasing(spec):
    cs = np.linspace(0.1, 5, 30)
    M = choose_M(spec)
    r = [generator_terms(SpectralField.from_modes(64, {1: c}), spec, M).drift_ratio_lower for c in cs]
    assert np.all(np.diff(r) > 0)
    closed = [(4 * np.pi**2 * c**2 / 2) / (M + c**2 / 2) for c in cs]
    t = [generator_terms(SpectralField.from_modes(64, {1: c}), spec, M) for c in cs]
    np.testing.assert_allclose([x.norm_V**2 / x.psi**2 for x in t], closed, rtol=1e-12)


def test_J2_bound_dominates_exact_term(spec, rng):
    M = choose_M(spec)
    c = random_coeffs(rng, 1000, 64, decay=1.0, scale=rng.uniform(0, 3))
    for row in c:
        x = SpectralField(row)
        r = generator_terms(x, spec, M)
        assert inner_H(nonlinearity(x), x) / r.psi <= r.J2_bound + 1e-12


@given(fields(m=64, max_amp=5.0), st.floats(0.5, 64.0))
def test_report_recomputable(x, M):
    spec = NoiseSpectrum(1.8, 0.8, 64)
    r = generator_terms(x, spec, M)
    assert r.recompute_ratio() == pytest.approx(r.drift_ratio_lower, rel=1e-12, abs=1e-14)
    assert np.isfinite(r.J3_bound) and np.isfinite(r.J4_bound)
    assert r.in_K == (r.norm_V**2 <= M)


def test_choose_M_minimal_and_monotone():
    for b in (0.8, 0.9, 1.0, 1.2):
        s = NoiseSpectrum(1.8, b, 64)
        M = choose_M(s)
        assert eq_I5_lhs(s, M) <= 0.25
        if M > 1:
            assert eq_I5_lhs(s, M / 2) > 0.25
    Ms = [choose_M(NoiseSpectrum(1.8, 0.8, 64, amp)) for amp in (0.5, 1, 2, 4, 8)]
    assert Ms == sorted(Ms) and Ms[-1] > Ms[0]
    # regression anchor, from a direct evaluation of the selection inequality
    assert choose_M(NoiseSpectrum(1.8, 1.0, 64)) == 2.0
    assert choose_M(NoiseSpectrum(1.8, 0.8, 64)) == 2.0


def test_certify_outside_and_inside_K(spec, rng):
    M = choose_M(spec)
    out = sample_on_V_sphere(1000, 64, 2 * M, rng)
    np.testing.assert_allclose(np.sum(2 * np.abs(out) ** 2 * GAMMA_1 * np.arange(1, 65) ** 2, axis=1), 2 * M)
    rep = certify_drift(out, spec, M)
    assert rep["n_Kc"] == 1000 and rep["n_violations_Kc"] == 0 and rep["min_ratio_Kc"] >= 0.25
    inside = sample_on_V_sphere(1000, 64, 1.0, rng) * np.sqrt(M * rng.uniform(0, 1, (1000, 1)))
    rep = certify_drift(inside, spec, M)
    assert rep["n_K"] == 1000 and rep["n_violations_K"] == 0 and rep["min_ratio_K"] >= -0.25
    empty = certify_drift([], spec, M)
    assert empty["n_states"] == 0 and empty["violations"] == []


def test_certify_reports_violations():
    # an admissible but huge-amplitude spectrum with an undersized M must produce violations
    s = NoiseSpectrum(1.8, 0.8, 16, amplitude=50.0)
    states = sample_on_V_sphere(20, 16, 2.0, np.random.default_rng(0))
    rep = certify_drift(states, s, 1.0)
    assert rep["n_violations_Kc"] == 20 and len(rep["violations"]) == 20


@given(st.floats(1.0, 1e4))
def test_spectral_gap_implies_quarter(scale):
    spec = NoiseSpectrum(1.8, 0.8, 64)
    M = choose_M(spec)
    c = sample_on_V_sphere(50, 64, M * (1 + scale), np.random.default_rng(int(scale)))
    t = drift_arrays(c, spec, M)
    v2, h2 = t["norm_V"] ** 2, t["norm_H"] ** 2
    assert np.all(v2 / (M + h2) >= v2 / (M + v2 / GAMMA_1) * (1 - 1e-12))
    assert np.all(v2 / (M + v2 / GAMMA_1) > 0.5)
    assert np.all(t["drift_ratio_lower"] >= 0.25)


def test_median_of_means():
    v = np.r_[np.ones(99), 1e9]
    est, se = median_of_means(v, 10)
    assert est == 1.0
    assert median_of_means(np.arange(100.0), 10)[1] > 0


def test_mc_check_noise_off():
    M = 2.0
    zero = generator_mc_check(SpectralField.zeros(16), None, M, n_paths=10)
    assert zero["mc_estimate"] == 0.0
    x = SpectralField.from_modes(16, {1: 0.5})
    fine = generator_mc_check(x, None, M, h=1e-6, n_paths=1)
    assert fine["mc_estimate"] == pytest.approx(deterministic_generator(x, M), rel=1e-3)


@pytest.mark.slow
def test_mc_check_full_noise_at_zero(spec):
    M = choose_M(spec)
    res = generator_mc_check(SpectralField.zeros(64), spec, M, h=1e-3, n_paths=10_000, seed=3)
    r = generator_terms(SpectralField.zeros(64), spec, M)
    assert res["mc_estimate"] <= r.J3_bound + r.J4_bound + 3 * res["stderr"]
    assert res["ok"]
