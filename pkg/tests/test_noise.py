import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats
from scipy.special import zeta

from stochgl.noise import (
    EnsembleNoise, NoiseSpectrum, OUStepper, levy_density, levy_norm, maximal_scaling, maximal_statistic,
    ou_increment_scale, ou_running_sup, sample_standard_stable, simulate_ou, step_ou, trajectory_rng,
    tube_probability, tube_statistic,
)
from stochgl.spectral import GAMMA_1, DomainError, SpectralField, apply_semigroup, eigenvalues


def ecf(x, theta):
    return np.mean(np.cos(theta * x))


def test_gaussian_case_variance_and_median():
    x = sample_standard_stable(2.0, np.random.default_rng(0), 10**6)
    assert np.var(x) == pytest.approx(2.0, abs=0.02)
    for a in (1.3, 1.8, 2.0):
        y = sample_standard_stable(a, np.random.default_rng(1), 10**6)
        assert abs(np.median(y)) < 0.01


def test_characteristic_function_at_one():
    x = sample_standard_stable(1.8, np.random.default_rng(2), 10**6)
    assert ecf(x, 1.0) == pytest.approx(np.exp(-1.0), abs=0.005)


def test_sampler_domain():
    g = np.random.default_rng(0)
    for a in (1.0, 0.5, 2.1):
        with pytest.raises(DomainError):
            sample_standard_stable(a, g)
    assert isinstance(sample_standard_stable(1.5, g), float)


def test_gaussian_case_normality():
    x = sample_standard_stable(2.0, np.random.default_rng(3), 10**5) / np.sqrt(2.0)
    assert stats.jarque_bera(x).pvalue > 0.01


def test_tail_exponent():
    a = 1.6
    x = np.abs(sample_standard_stable(a, np.random.default_rng(4), 10**7))
    r = np.geomspace(10, 100, 8)
    tail = np.array([np.mean(x > ri) for ri in r])
    slope = np.polyfit(np.log(r), np.log(tail), 1)[0]
    assert -a - 0.1 <= slope <= -a + 0.1


def test_levy_constant_by_quadrature():
    # independent oracle: int (1 - cos(theta y)) nu(dy) = |theta|^alpha, evaluated with mpmath
    for a in (1.3, 1.8):
        c = levy_norm(a)
        for th in (0.5, 1.0, 2.0):
            # int_0^1 (1 - cos(theta y)) y^{-1-alpha} dy by its power series
            head = mpmath.nsum(lambda n: (-1) ** (n + 1) * th ** (2 * n) / (mpmath.factorial(2 * n) * (2 * n - a)),
                               [1, mpmath.inf])
            tail = mpmath.quad(lambda y: y ** (-1 - a), [1, mpmath.inf]) - mpmath.quadosc(
                lambda y: mpmath.cos(th * y) * y ** (-1 - a), [1, mpmath.inf], omega=th)
            assert 2 * c * float(head + tail) == pytest.approx(th**a, rel=1e-4)
    assert levy_norm(1.8) == pytest.approx(0.1649049388, rel=1e-9)


def test_levy_density(spec):
    y = np.random.default_rng(0).uniform(0.01, 10, 50)
    np.testing.assert_array_equal(levy_density(y, spec), levy_density(-y, spec))
    small = 2 * integrate.quad(lambda s: s**2 * levy_density(s, spec), 0, 1)[0]
    assert small == pytest.approx(2 * spec.c_alpha / (2 - spec.alpha), rel=1e-8)
    with pytest.raises(DomainError):
        levy_density(0.0, spec)


def test_ou_increment_scale():
    a = 1.8
    assert ou_increment_scale(1.0, 1e-6, a) == pytest.approx(1e-6 ** (1 / a), rel=1e-3)
    q = integrate.quad(lambda s: np.exp(-a * GAMMA_1 * (0.01 - s)), 0, 0.01, epsabs=0, epsrel=1e-13)[0]
    assert ou_increment_scale(GAMMA_1, 0.01, a) == pytest.approx(q ** (1 / a), rel=1e-10)
    assert ou_increment_scale(GAMMA_1, 1e3, a) == pytest.approx((a * GAMMA_1) ** (-1 / a), rel=1e-12)


def test_spectrum_admissibility_and_amplitudes():
    with pytest.raises(DomainError):
        NoiseSpectrum(1.8, 0.5, 8)
    with pytest.raises(DomainError):
        NoiseSpectrum(2.0, 1.0, 8)
    with pytest.raises(DomainError):
        NoiseSpectrum(1.8, 1.0, 0)
    s = NoiseSpectrum(1.8, 0.8, 16)
    assert np.all(np.diff(s.amplitudes) < 0)
    np.testing.assert_allclose(s.amplitudes, eigenvalues(16) ** -0.8)
    assert s.with_cutoff(4).m == 4 and s.with_amplitude(2.0).amplitudes[0] == 2 * s.amplitudes[0]


@pytest.mark.parametrize("alpha,beta,m", [(1.8, 0.8, 64), (1.8, 1.0, 64), (1.5, 0.9, 8), (1.9, 0.77, 1)])
def test_series_against_zeta(alpha, beta, m):
    s = NoiseSpectrum(alpha, beta, m)
    s2, s1 = s.series()
    ref2 = 2 * GAMMA_1 ** (-2 * beta) * zeta(4 * beta)
    ref1 = 2 * GAMMA_1 ** (-beta) * zeta(2 * beta)
    assert abs(s2 - ref2) < 1e-8 * ref2 and abs(s1 - ref1) < 1e-8 * ref1
    big2, big1 = s.series(factor=100, min_terms=40960)
    assert abs(s2 - big2) < 1e-8 * big2 and abs(s1 - big1) < 1e-8 * big1


def test_zero_amplitude_step_is_semigroup(rng):
    s = NoiseSpectrum(1.8, 0.8, 8, amplitude=0.0)
    z = SpectralField(rng.standard_normal(8) + 1j * rng.standard_normal(8))
    out = step_ou(z, 0.01, s, np.random.default_rng(0))
    np.testing.assert_array_equal(out.coeffs, apply_semigroup(z, 0.01).coeffs)


def test_mode_marginal_characteristic_function():
    # real coordinate sqrt(2) Re z_1 carries beta_1 * scale * l
    s = NoiseSpectrum(1.8, 0.8, 2)
    h = 0.01
    z = step_ou(np.zeros((200_000, 2), complex), h, s, np.random.default_rng(5))
    sc = s.amplitudes[0] * ou_increment_scale(GAMMA_1, h, 1.8)
    x = np.sqrt(2) * z[:, 0].real / sc
    y = np.sqrt(2) * z[:, 0].imag / sc
    for th in (0.5, 1.0, 2.0):
        assert ecf(x, th) == pytest.approx(np.exp(-th**1.8), abs=0.01)
        assert ecf(y, th) == pytest.approx(np.exp(-th**1.8), abs=0.01)
    assert abs(np.corrcoef(np.sign(x), np.sign(y))[0, 1]) < 0.01


def test_streams_reproducible_and_distinct():
    a = trajectory_rng(7, 3).random(5)
    np.testing.assert_array_equal(a, trajectory_rng(7, 3).random(5))
    assert not np.allclose(a, trajectory_rng(7, 4).random(5))
    assert not np.allclose(a, trajectory_rng(8, 3).random(5))


def test_ensemble_noise_independent_of_block_and_batch():
    e1 = EnsembleNoise(3, [0, 1, 2], 4, 1.7, block=5)
    e2 = EnsembleNoise(3, [1], 4, 1.7, block=32)
    x1 = np.stack([e1.next() for _ in range(12)])
    x2 = np.stack([e2.next() for _ in range(12)])
    np.testing.assert_array_equal(x1[:, 1], x2[:, 0])
    p1 = simulate_ou(NoiseSpectrum(1.7, 0.9, 4), 1e-3, 20, 3, 3)
    p2 = simulate_ou(NoiseSpectrum(1.7, 0.9, 4), 1e-3, 20, 3, 1, path_offset=2)
    np.testing.assert_array_equal(p1[2], p2[0])


def test_ou_two_half_steps_match_full_step_exactly_in_scale():
    s = NoiseSpectrum(1.8, 0.8, 8)
    full = OUStepper(s, 0.02)
    half = OUStepper(s, 0.01)
    # composed scale^alpha of two half steps equals the full-step scale^alpha
    comp = (half.scale**1.8 * (1 + half.decay**1.8)) ** (1 / 1.8)
    np.testing.assert_allclose(comp, full.scale, rtol=1e-12)
    np.testing.assert_allclose(half.decay**2, full.decay, rtol=1e-14)


def test_maximal_statistic_domain_and_positivity():
    s = NoiseSpectrum(1.8, 0.8, 32)
    paths = simulate_ou(s, 1e-2, 100, 0, 50)
    v = maximal_statistic(paths, 0.0, 0.1, s)
    assert 0 < v < np.inf
    with pytest.raises(DomainError):
        maximal_statistic(paths, s.beta, 1.0, s)
    with pytest.raises(DomainError):
        maximal_statistic(paths, 0.0, 1.8, s)


def test_running_sup_matches_stored_paths():
    s = NoiseSpectrum(1.8, 0.8, 8)
    paths = simulate_ou(s, 1e-2, 40, 9, 6)
    sups = ou_running_sup(s, 1e-2, [0.2, 0.4], [0.0, 0.2], 9, 6, chunk=4)
    for j, th in enumerate((0.0, 0.2)):
        for i, T in enumerate((0.2, 0.4)):
            n = int(round(T / 1e-2))
            ref = maximal_statistic(paths[:, : n + 1], th, 1.0, s, blocks=1)
            assert np.mean(sups[:, j, i]) == pytest.approx(ref, rel=1e-12)
            mom = np.median([sups[:2, j, i].mean(), sups[2:4, j, i].mean(), sups[4:, j, i].mean()])
            assert maximal_statistic(paths[:, : n + 1], th, 1.0, s, blocks=3) == pytest.approx(mom, rel=1e-12)
    res = maximal_scaling(s, 1e-2, [0.2, 0.4], 0.0, 1.0, 9, 6)
    assert res["bound"] == pytest.approx(1 / 1.8) and np.isscalar(res["slope"]) and np.isscalar(res["mean_slope"])


def test_maximal_statistic_resists_single_extreme_path():
    s = NoiseSpectrum(1.8, 0.8, 8)
    paths = simulate_ou(s, 1e-2, 20, 2, 100)
    base = maximal_statistic(paths, 0.0, 1.0, s)
    paths[0, 5, 0] += 1e6
    assert maximal_statistic(paths, 0.0, 1.0, s) < 2 * base
    assert maximal_statistic(paths, 0.0, 1.0, s, blocks=1) > 1e3 * base


def test_tube_probability():
    s = NoiseSpectrum(1.8, 0.8, 16)
    z = simulate_ou(s, 1e-2, 50, 1, 2000)
    assert tube_probability(None, None, 1e6, 0.5, 2.0, 2000, s, h=1e-2, z_paths=z) == 1.0
    stat = tube_statistic(z, 1e-2)
    eps = float(np.quantile(stat, 0.1))
    assert tube_probability(None, None, eps, 0.5, 2.0, 2000, s, h=1e-2, z_paths=z) > 0
    freqs = [tube_probability(None, None, e, 0.5, 2.0, 2000, s, h=1e-2, z_paths=z) for e in np.geomspace(0.1, 10, 9)]
    assert np.all(np.diff(freqs) >= 0)
    with pytest.raises(DomainError):
        tube_probability(None, None, 0.0, 0.5, 2.0, 10, s)


@given(st.floats(1.05, 1.99), st.floats(1e-4, 10.0), st.floats(1e-4, 1.0))
def test_ou_scale_semigroup_identity(alpha, gamma, h):
    # scale(2h)^alpha = scale(h)^alpha (1 + e^{-alpha gamma h})
    lhs = ou_increment_scale(gamma, 2 * h, alpha) ** alpha
    rhs = ou_increment_scale(gamma, h, alpha) ** alpha * (1 + np.exp(-alpha * gamma * h))
    assert lhs == pytest.approx(rhs, rel=1e-12)
