import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from stochgl.noise import NoiseSpectrum
from stochgl.spectral import SpectralField

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def spec():
    return NoiseSpectrum(1.8, 0.8, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_coeffs(rng, n, m, decay=1.0, scale=1.0):
    k = np.arange(1, m + 1, dtype=float)
    return scale * (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) * k ** (-decay)


@st.composite
def fields(draw, m=None, max_amp=3.0):
    m = draw(st.integers(1, 24)) if m is None else m
    seed = draw(st.integers(0, 2**32 - 1))
    decay = draw(st.floats(0.0, 2.5))
    amp = draw(st.one_of(st.just(0.0), st.floats(1e-6, max_amp)))
    rng = np.random.default_rng(seed)
    return SpectralField(random_coeffs(rng, 1, m, decay, amp)[0])
