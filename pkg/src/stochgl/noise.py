"""Cylindrical symmetric alpha-stable noise and its Ornstein-Uhlenbeck convolution.

Conventions
-----------
* ``l(1)`` has characteristic function ``exp(-|theta|^alpha)``; draws use the
  Chambers-Mallows-Stuck map.
* The Levy measure is ``c_alpha |y|^{-1-alpha} dy`` with ``c_alpha`` fixed by
  that characteristic function (see :func:`levy_norm`).
* Mode amplitudes are ``beta_k = amplitude * gamma_k^{-beta}``.
* The real field ``L_t`` is expanded in the real orthonormal basis
  ``sqrt(2) cos(2 pi k xi), sqrt(2) sin(2 pi k xi)``, each coordinate driven by
  an independent ``beta_k l(t)``.  For the complex coefficient this means
  real and imaginary parts each carry ``beta_k / sqrt(2)`` times a standard
  stable process.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .spectral import DomainError, GAMMA_1, SpectralField, eigenvalues, sq_norm_weighted

# jitter keeping CMS uniforms strictly inside (0, 1)
_HALF_ULP = 2.0**-54


# ---------------------------------------------------------------------------
# random streams


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index`` under master ``seed``.

    Within a trajectory, draws are consumed in (step, mode, real/imag) order,
    so each (trajectory, mode) pair reads a fixed, disjoint part of the stream.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _check_alpha(alpha, upper_closed=True):
    ok = 1.0 < alpha <= 2.0 if upper_closed else 1.0 < alpha < 2.0
    if not ok:
        raise DomainError(f"alpha={alpha} outside {'(1, 2]' if upper_closed else '(1, 2)'}")


def stable_from_uniforms(alpha: float, u: np.ndarray) -> np.ndarray:
    """Chambers-Mallows-Stuck transform; ``u[..., 0]`` gives the angle, ``u[..., 1]`` the exponential."""
    v = np.pi * (u[..., 0] + _HALF_ULP - 0.5)
    w = -np.log1p(-(u[..., 1] + _HALF_ULP))
    return np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha) * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)


def sample_standard_stable(alpha: float, rng: np.random.Generator, size=None):
    """Symmetric alpha-stable draw(s) with characteristic function exp(-|theta|^alpha)."""
    _check_alpha(alpha)
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    out = stable_from_uniforms(alpha, rng.random(shape + (2,)))
    return float(out) if size is None else out


@lru_cache(maxsize=64)
def levy_norm(alpha: float, check: bool = True) -> float:
    """Density constant c_alpha of the Levy measure c_alpha |y|^{-1-alpha} dy.

    Fixed by int (1 - cos(y)) nu(dy) = 1.  The quadrature value is compared with
    the closed form -1 / (2 Gamma(-alpha) cos(pi alpha / 2)).
    """
    _check_alpha(alpha, upper_closed=False)
    closed = -1.0 / (2.0 * gamma_fn(-alpha) * np.cos(np.pi * alpha / 2.0))
    if check:
        # (1 - cos u) / u^2 = 2 sin^2(u/2) / u^2 is smooth; u^{1 - alpha} goes into the algebraic weight
        head = integrate.quad(lambda u: 2.0 * np.sinc(u / (2.0 * np.pi)) ** 2 / 4.0, 0.0, 1.0,
                              weight="alg", wvar=(1.0 - alpha, 0.0))[0]
        tail = 1.0 / alpha - integrate.quad(lambda u: u ** (-1.0 - alpha), 1.0, np.inf, weight="cos", wvar=1.0)[0]
        quad = 1.0 / (2.0 * (head + tail))
        if abs(quad - closed) > 1e-6 * closed:
            raise ArithmeticError(f"Levy constant mismatch: quadrature {quad} vs closed form {closed}")
    return float(closed)


# ---------------------------------------------------------------------------
# noise model


@dataclass(frozen=True)
class NoiseSpectrum:
    alpha: float
    beta: float
    m: int
    amplitude: float = 1.0
    c_alpha: float = field(init=False, repr=False)

    def __post_init__(self):
        _check_alpha(self.alpha, upper_closed=False)
        bound = 0.5 + 0.5 / self.alpha
        if not self.beta > bound:
            raise DomainError(f"beta must exceed 1/2 + 1/(2 alpha) = {bound:.6g}, got {self.beta}")
        if self.m < 1:
            raise DomainError("m must be >= 1")
        if self.amplitude < 0:
            raise DomainError("amplitude must be >= 0")
        object.__setattr__(self, "c_alpha", levy_norm(self.alpha))

    @property
    def amplitudes(self) -> np.ndarray:
        """beta_k for k = 1..m."""
        return self.amplitude * eigenvalues(self.m) ** (-self.beta)

    def with_cutoff(self, m: int) -> "NoiseSpectrum":
        return NoiseSpectrum(self.alpha, self.beta, m, self.amplitude)

    def with_amplitude(self, amplitude: float) -> "NoiseSpectrum":
        return NoiseSpectrum(self.alpha, self.beta, self.m, amplitude)

    def series(self, factor: int = 10, min_terms: int = 4096) -> tuple[float, float]:
        """(sum beta_i^2, sum |beta_i|) over all nonzero integers i.

        Summed exactly up to K = max(factor * m, min_terms); the remainder is
        bounded by int_{K+1/2}^inf of the (convex) summand.
        """
        K = max(factor * self.m, min_terms)
        k = np.arange(1, K + 1, dtype=float)
        out = []
        for s in (2.0 * self.beta, self.beta):
            head = np.sum((GAMMA_1 * k**2) ** (-s))
            tail = GAMMA_1 ** (-s) * (K + 0.5) ** (1.0 - 2.0 * s) / (2.0 * s - 1.0)
            out.append(2.0 * (head + tail))
        return out[0] * self.amplitude**2, out[1] * self.amplitude

    def to_config(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "m": self.m, "amplitude": self.amplitude}


def levy_density(y, spec_or_alpha) -> np.ndarray | float:
    alpha = spec_or_alpha.alpha if isinstance(spec_or_alpha, NoiseSpectrum) else spec_or_alpha
    c = spec_or_alpha.c_alpha if isinstance(spec_or_alpha, NoiseSpectrum) else levy_norm(alpha)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise DomainError("Levy density is singular at y = 0")
    out = c * np.abs(y) ** (-1.0 - alpha)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck convolution


def ou_increment_scale(gamma, h, alpha):
    """Stable scale of int_0^h exp(-gamma (h - s)) dl(s)."""
    gamma = np.asarray(gamma, dtype=float)
    ah = alpha * gamma
    return (-np.expm1(-ah * h) / ah) ** (1.0 / alpha)


class OUStepper:
    """Exact-in-law update z <- e^{-A h} z + noise for a fixed (spectrum, h)."""

    def __init__(self, spec: NoiseSpectrum, h: float):
        if h <= 0:
            raise DomainError("h must be > 0")
        self.spec, self.h = spec, h
        g = eigenvalues(spec.m)
        self.decay = np.exp(-g * h)
        self.scale = spec.amplitudes * ou_increment_scale(g, h, spec.alpha) / np.sqrt(2.0)

    def step(self, z: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """``xi``: standard stable draws of shape z.shape + (2,)."""
        return self.decay * z + self.scale * (xi[..., 0] + 1j * xi[..., 1])

    def draw(self, rng: np.random.Generator, batch=()) -> np.ndarray:
        u = rng.random(tuple(batch) + (self.spec.m, 2, 2))
        return stable_from_uniforms(self.spec.alpha, u)


def step_ou(z, h: float, spec: NoiseSpectrum, rng: np.random.Generator):
    stepper = OUStepper(spec, h)
    if isinstance(z, SpectralField):
        return SpectralField(stepper.step(z.coeffs, stepper.draw(rng)))
    z = np.asarray(z)
    return stepper.step(z, stepper.draw(rng, z.shape[:-1]))


class EnsembleNoise:
    """Per-step standard stable draws for a batch of trajectories.

    Trajectory ``i`` of the batch reads from ``trajectory_rng(seed, indices[i])``
    in blocks of ``block`` steps; the produced sequence does not depend on the
    block size or on how trajectories are batched.
    """

    def __init__(self, seed: int, indices, m: int, alpha: float, block: int = 32):
        self.rngs = [trajectory_rng(seed, i) for i in indices]
        self.m, self.alpha, self.block = m, alpha, block
        self._buf = np.empty((len(self.rngs), block, m, 2, 2))
        self._pos = block

    def next(self) -> np.ndarray:
        if self._pos == self.block:
            for i, g in enumerate(self.rngs):
                g.random(out=self._buf[i])
            self._xi = stable_from_uniforms(self.alpha, self._buf)
            self._pos = 0
        out = self._xi[:, self._pos]
        self._pos += 1
        return out


def simulate_ou(spec: NoiseSpectrum, h: float, n_steps: int, seed: int, n_paths: int = 1,
                path_offset: int = 0) -> np.ndarray:
    """Z on the grid 0, h, ..., n_steps h; array (n_paths, n_steps + 1, m)."""
    stepper = OUStepper(spec, h)
    noise = EnsembleNoise(seed, range(path_offset, path_offset + n_paths), spec.m, spec.alpha)
    out = np.zeros((n_paths, n_steps + 1, spec.m), dtype=np.complex128)
    for n in range(n_steps):
        out[:, n + 1] = stepper.step(out[:, n], noise.next())
    return out


def ou_running_sup(spec: NoiseSpectrum, h: float, horizons, theta, seed: int, n_paths: int,
                   chunk: int = 500) -> np.ndarray:
    """sup over snapshot times t <= T of ||A^theta Z_t||_H, one column per horizon T.

    ``theta`` may be a sequence, in which case the result has shape
    (n_paths, n_theta, n_horizons) and all exponents share the same paths.
    Streams through the path without storing it.
    """
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    horizons = np.asarray(horizons, dtype=float)
    checkpoints = np.rint(horizons / h).astype(int)
    n_steps = int(checkpoints.max())
    stepper = OUStepper(spec, h)
    weights = 2.0 * eigenvalues(spec.m)[None, :] ** (2.0 * thetas[:, None])   # (n_theta, m)
    out = np.zeros((n_paths, thetas.size, horizons.size))
    for start in range(0, n_paths, chunk):
        idx = range(start, min(start + chunk, n_paths))
        noise = EnsembleNoise(seed, idx, spec.m, spec.alpha)
        z = np.zeros((len(idx), spec.m), dtype=np.complex128)
        run = np.zeros((len(idx), thetas.size))
        for n in range(1, n_steps + 1):
            z = stepper.step(z, noise.next())
            a2 = z.real**2 + z.imag**2
            np.maximum(run, a2 @ weights.T, out=run)
            hit = checkpoints == n
            if hit.any():
                out[start : start + len(idx), :, hit] = np.sqrt(run)[:, :, None]
    return out if np.ndim(theta) else out[:, 0]


def _check_maximal_args(spec, theta, p):
    if not 0 <= theta < spec.beta - 0.5 / spec.alpha:
        raise DomainError(f"theta={theta} outside [0, beta - 1/(2 alpha)) = [0, {spec.beta - 0.5 / spec.alpha:.6g})")
    if not 0 < p < spec.alpha:
        raise DomainError(f"p={p} outside (0, alpha)")


def _median_of_means(x: np.ndarray, blocks: int) -> np.ndarray:
    return np.median(np.stack([b.mean(axis=0) for b in np.array_split(x, min(blocks, len(x)))]), axis=0)


def maximal_statistic(paths: np.ndarray, theta: float, p: float, spec: NoiseSpectrum, blocks: int = 10) -> float:
    """Monte Carlo E sup_t ||A^theta Z_t||_H^p from Z paths of shape (n_paths, n_times, m).

    The sup has a stable-type tail (index alpha / p), so the mean is estimated
    by median-of-means over ``blocks`` blocks; blocks=1 gives the plain mean.
    """
    _check_maximal_args(spec, theta, p)
    sups = np.sqrt(sq_norm_weighted(np.asarray(paths), theta).max(axis=1))
    return float(_median_of_means(sups**p, blocks))


def maximal_scaling(spec: NoiseSpectrum, h: float, horizons, theta, p: float, seed: int,
                    n_paths: int, blocks: int = 10) -> dict:
    """Statistic at each horizon and the least-squares slope of log statistic on log T.

    With a sequence of ``theta`` values the entries become lists, one per theta.
    ``mean_slope`` is the same fit on plain means, which a single extreme path can dominate.
    """
    for th in np.atleast_1d(theta):
        _check_maximal_args(spec, float(th), p)
    sups = ou_running_sup(spec, h, horizons, theta, seed, n_paths) ** p
    stats = _median_of_means(sups, blocks)
    logT = np.log(horizons)
    slope = np.polyfit(logT, np.log(stats.T), 1)[0]
    mean_slope = np.polyfit(logT, np.log(sups.mean(axis=0).T), 1)[0]
    return {"horizons": list(map(float, horizons)), "statistic": stats.tolist(), "slope": slope.tolist(),
            "mean_slope": mean_slope.tolist(), "bound": p / spec.alpha}


def _coeffs(x):
    return x.coeffs if isinstance(x, SpectralField) else np.asarray(x)


def tube_statistic(z_paths: np.ndarray, h: float, phi=None, a=None, p: float = 2.0) -> np.ndarray:
    """int_0^T ||Z_t - phi_t||_V^p dt + ||Z_T - a||_V for each path (left-endpoint step quadrature).

    ``phi`` is None (zero path), an array of coefficients (n_times, m), or a callable t -> coefficients.
    """
    z_paths = np.asarray(z_paths)
    n_times, m = z_paths.shape[-2:]
    if phi is None:
        phi_arr = np.zeros((n_times, m))
    elif callable(phi):
        phi_arr = np.stack([_coeffs(phi(i * h)) for i in range(n_times)])
    else:
        phi_arr = np.asarray(phi)
    a_arr = np.zeros(m) if a is None else _coeffs(a)
    d = z_paths - phi_arr
    integral = h * np.sum(sq_norm_weighted(d[..., :-1, :], 0.5) ** (p / 2.0), axis=-1)
    return integral + np.sqrt(sq_norm_weighted(z_paths[..., -1, :] - a_arr, 0.5))


def tube_probability(phi, a, eps: float, T: float, p: float, n_paths: int, spec: NoiseSpectrum,
                     h: float = 1e-3, seed: int = 0, z_paths=None) -> float:
    """Empirical frequency of the tube event around (phi, a); pass ``z_paths`` to reuse a path set."""
    if eps <= 0 or n_paths < 1:
        raise DomainError("need eps > 0 and n_paths >= 1")
    if z_paths is None:
        z_paths = simulate_ou(spec, h, int(round(T / h)), seed, n_paths)
    stat = tube_statistic(z_paths, h, phi, a, p)
    return float(np.mean(stat < eps))
