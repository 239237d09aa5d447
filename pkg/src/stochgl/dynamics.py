"""Galerkin integration of dX + AX dt = (X - X^3) dt + dL_t.

The state is split as X = Y + Z where Z solves the linear equation
dZ + AZ dt = dL (advanced exactly in law by :class:`~stochgl.noise.OUStepper`)
and Y solves the random PDE  dY/dt + AY = N(Y + Z), advanced by exponential
Euler.  Z therefore never sees a time-discretisation of the heavy-tailed
increments.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft

from .noise import EnsembleNoise, NoiseSpectrum, OUStepper, stable_from_uniforms
from .spectral import DomainError, SpectralField, eigenvalues, sq_norm_weighted, truncate

OVERFLOW = 1e12
DEALIAS_MODES = ("pad", "2/3", "none")


class NumericAbort(RuntimeError):
    """Field norm blew past the overflow guard; rerun with a smaller step."""


def _even_fast_len(n: int) -> int:
    n = sfft.next_fast_len(n, real=True)
    while n % 2:
        n = sfft.next_fast_len(n + 1, real=True)
    return n


class CubicNonlinearity:
    """u -> pi_out(u - u^3) evaluated pseudospectrally on coefficient arrays.

    dealias:
      ``"pad"``  grid large enough that the projection is exact (no aliasing);
      ``"2/3"``  modes above 2m/3 are zeroed before cubing, 4m-point grid;
      ``"none"`` plain 4m-point grid.
    """

    def __init__(self, m: int, dealias: str = "pad", m_out: int | None = None):
        if dealias not in DEALIAS_MODES:
            raise DomainError(f"dealias must be one of {DEALIAS_MODES}")
        self.m, self.dealias = m, dealias
        self.m_out = m if m_out is None else m_out
        if dealias == "pad":
            self.n = _even_fast_len(3 * m + self.m_out + 2)
        else:
            self.n = max(4 * m, 2 * self.m_out + 2)
        self.keep = m if dealias != "2/3" else (2 * m) // 3

    def cube(self, c: np.ndarray) -> np.ndarray:
        spec = np.zeros(c.shape[:-1] + (self.n // 2 + 1,), dtype=np.complex128)
        spec[..., 1 : self.keep + 1] = c[..., : self.keep] * self.n
        u = sfft.irfft(spec, n=self.n, axis=-1)
        return sfft.rfft(u * u * u, axis=-1)[..., 1 : self.m_out + 1] / self.n

    def __call__(self, c: np.ndarray) -> np.ndarray:
        lin = c if self.m_out == self.m else truncate_coeffs(c, self.m_out)
        return lin - self.cube(c)


def truncate_coeffs(c: np.ndarray, m_new: int) -> np.ndarray:
    out = np.zeros(c.shape[:-1] + (m_new,), dtype=np.complex128)
    k = min(m_new, c.shape[-1])
    out[..., :k] = c[..., :k]
    return out


def nonlinearity(u: SpectralField, dealias: str = "pad", m_out: int | None = None) -> SpectralField:
    return SpectralField(CubicNonlinearity(u.m, dealias, m_out)(u.coeffs))


# ---------------------------------------------------------------------------
# configuration and trajectories


@dataclass(frozen=True)
class SimConfig:
    m: int
    h: float
    T: float
    noise: NoiseSpectrum | None = None
    x0: SpectralField | None = None
    dealias: str = "pad"
    endpoint: str = "left"

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("m must be >= 1")
        if not self.h > 0:
            raise DomainError("h must be > 0")
        if not self.T >= self.h:
            raise DomainError("T must be >= h")
        if self.dealias not in DEALIAS_MODES:
            raise DomainError(f"dealias must be one of {DEALIAS_MODES}")
        if self.endpoint not in ("left", "right"):
            raise DomainError("endpoint must be 'left' or 'right'")
        if abs(self.T / self.h - round(self.T / self.h)) > 1e-6:
            raise DomainError("T must be an integer multiple of h")
        x0 = SpectralField.zeros(self.m) if self.x0 is None else self.x0
        if x0.m > self.m:
            raise DomainError(f"x0 cutoff {x0.m} exceeds m={self.m}")
        object.__setattr__(self, "x0", truncate(x0, self.m))
        if self.noise is not None and self.noise.m != self.m:
            object.__setattr__(self, "noise", self.noise.with_cutoff(self.m))

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))

    @property
    def noiseless(self) -> bool:
        return self.noise is None or self.noise.amplitude == 0

    def replace(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    def to_config(self) -> dict:
        return {
            "m": self.m, "h": self.h, "T": self.T, "dealias": self.dealias, "endpoint": self.endpoint,
            "noise": None if self.noise is None else self.noise.to_config(),
            "x0": [[float(z.real), float(z.imag)] for z in self.x0.coeffs],
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray | None = None
    Z: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.X.shape[-1]

    def __len__(self):
        return self.times.size

    def state(self, i: int) -> SpectralField:
        return SpectralField(self.X[i])

    def norms_H(self) -> np.ndarray:
        return np.sqrt(sq_norm_weighted(self.X))

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = ["t"] + [f"{p}_{k}" for k in range(1, self.m + 1) for p in ("re", "im")] + ["norm_H"]
        buf.write(",".join(head) + "\n")
        nh = self.norms_H()
        for t, row, n in zip(self.times, self.X, nh):
            vals = np.column_stack([row.real, row.imag]).ravel()
            buf.write(",".join([repr(float(t))] + [repr(float(v)) for v in vals] + [repr(float(n))]) + "\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# time stepping


class GLStepper:
    """Exponential Euler for dy/dt + Ay = N(y + z) (+ u)."""

    def __init__(self, m: int, h: float, dealias: str = "pad", nonlinear=None):
        g = eigenvalues(m)
        self.m, self.h = m, h
        self.decay = np.exp(-g * h)
        self.phi1 = -np.expm1(-g * h) / g
        self.N = nonlinear if nonlinear is not None else CubicNonlinearity(m, dealias)

    def step(self, y: np.ndarray, z: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        f = self.N(y + z)
        if u is not None:
            f = f + u
        return self.decay * y + self.phi1 * f


def step(Y: SpectralField, Z: SpectralField, h: float, cfg: SimConfig | None = None, nonlinear=None) -> SpectralField:
    if Y.m != Z.m:
        raise DomainError("Y and Z must share the cutoff")
    dealias = cfg.dealias if cfg is not None else "pad"
    return SpectralField(GLStepper(Y.m, h, dealias, nonlinear).step(Y.coeffs, Z.coeffs))


def _guard(x: np.ndarray, t: float, offset: int):
    bad = ~np.isfinite(x).all(axis=-1) | (np.abs(x).max(axis=-1) > OVERFLOW)
    if bad.any():
        i = int(np.flatnonzero(bad)[0]) % bad.shape[-1]
        raise NumericAbort(f"trajectory {offset + i} exceeded {OVERFLOW:g} at t={t:.6g}; reduce h")


class _GeneratorNoise:
    def __init__(self, rng, batch, m, alpha):
        self.rng, self.shape, self.alpha = rng, (batch, m, 2, 2), alpha

    def next(self):
        return stable_from_uniforms(self.alpha, self.rng.random(self.shape))


def _run_chunk(cfg: SimConfig, source, batch: int, offset: int, record_every: int, reducer, z_path, nonlinear,
               x0s=None):
    """Advance one batch; records come back as (n_init, batch, n_times, ...)."""
    n_steps = cfg.n_steps
    stepper = GLStepper(cfg.m, cfg.h, cfg.dealias, nonlinear)
    ou = None if cfg.noiseless or z_path is not None else OUStepper(cfg.noise, cfg.h)
    inits = cfg.x0.coeffs[None] if x0s is None else np.asarray(x0s)
    y = np.repeat(inits[:, None, :], batch, axis=1)
    z = np.zeros((batch, cfg.m), dtype=np.complex128)
    if z_path is not None:
        z = np.broadcast_to(z_path[..., 0, :], (batch, cfg.m)).copy()
    rec_idx = list(range(0, n_steps + 1, record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    rec = None
    j = 0
    for n in range(n_steps + 1):
        if n == rec_idx[j]:
            val = np.asarray(reducer(y + z, y, np.broadcast_to(z, y.shape)))
            if rec is None:
                rec = np.empty((len(rec_idx),) + val.shape, dtype=val.dtype)
            rec[j] = val
            j += 1
        if n == n_steps:
            break
        if z_path is not None:
            z_next = np.broadcast_to(z_path[..., n + 1, :], (batch, cfg.m))
        elif ou is not None:
            z_next = ou.step(z, source.next())
        else:
            z_next = z
        y = stepper.step(y, z if cfg.endpoint == "left" else z_next)
        z = z_next
        _guard(y + z, (n + 1) * cfg.h, offset)
    return np.asarray(rec_idx) * cfg.h, np.moveaxis(rec, 0, 2)


def run_ensemble(cfg: SimConfig, seed: int, n_paths: int, *, record_every: int = 1, reducer=None,
                 threads: int = 1, path_offset: int = 0, chunk: int = 256, nonlinear=None, x0s=None):
    """Simulate ``n_paths`` trajectories; returns (times, records of shape (n_paths, n_times, ...)).

    ``reducer(x, y, z)`` maps coefficient batches to the recorded quantity
    (default: the X coefficients).  Trajectory ``i`` uses the random stream
    ``(seed, path_offset + i)``, so results are independent of ``chunk`` and
    ``threads``.  With ``x0s`` (n_init, m) every path is run from each initial
    state under the same noise and records gain a leading n_init axis.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    reducer = reducer or (lambda x, y, z: x)
    starts = list(range(0, n_paths, chunk))

    def work(start):
        b = min(chunk, n_paths - start)
        off = path_offset + start
        src = None if cfg.noiseless else EnsembleNoise(seed, range(off, off + b), cfg.m, cfg.noise.alpha)
        return _run_chunk(cfg, src, b, off, record_every, reducer, None, nonlinear, x0s)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    rec = np.concatenate([p[1] for p in parts], axis=1)
    return parts[0][0], (rec if x0s is not None else rec[0])


def run_with_noise(cfg: SimConfig, z_paths: np.ndarray, *, record_every: int = 1, reducer=None,
                   nonlinear=None):
    """Drive Y by supplied noise channels of shape (n_paths, n_steps + 1, m); returns (times, records)."""
    z_paths = np.asarray(z_paths)
    if z_paths.ndim != 3 or z_paths.shape[1:] != (cfg.n_steps + 1, cfg.m):
        raise DomainError(f"z_paths must have shape (n, {cfg.n_steps + 1}, {cfg.m})")
    reducer = reducer or (lambda x, y, z: x)
    times, rec = _run_chunk(cfg, None, z_paths.shape[0], 0, record_every, reducer, z_paths, nonlinear)
    return times, rec[0]


def simulate(cfg: SimConfig, rng=0, *, path: int = 0, z_path: np.ndarray | None = None,
             nonlinear=None) -> Trajectory:
    """Single trajectory with separate Y and Z channels on the grid 0, h, ..., T.

    ``rng`` is a master seed (trajectory ``path`` of that seed's ensemble) or a
    ``numpy.random.Generator``.  ``z_path`` of shape (n_steps + 1, m) replaces
    the sampled noise channel, which is how coupled refinement runs share noise.
    """
    if z_path is not None:
        z_path = np.asarray(z_path)
        if z_path.shape != (cfg.n_steps + 1, cfg.m):
            raise DomainError(f"z_path must have shape {(cfg.n_steps + 1, cfg.m)}")
        src = None
    elif cfg.noiseless:
        src = None
    elif isinstance(rng, np.random.Generator):
        src = _GeneratorNoise(rng, 1, cfg.m, cfg.noise.alpha)
    else:
        src = EnsembleNoise(int(rng), [path], cfg.m, cfg.noise.alpha)
    times, rec = _run_chunk(cfg, src, 1, path, 1, lambda x, y, z: np.stack([x, y, z], axis=-2), z_path, nonlinear)
    rec = rec[0, 0]
    return Trajectory(times, rec[:, 0], rec[:, 1], rec[:, 2])


# ---------------------------------------------------------------------------
# diagnostics


def _linear_weights(g: np.ndarray, h: float):
    """Weights (w0, w1) of int_0^h e^{-g(h-s)} [(1-s/h) f0 + (s/h) f1] ds."""
    x = g * h
    phi1 = -np.expm1(-x) / g
    # (1 - e^{-x}(1 + x)) / x^2, series for small x
    small = x < 1e-2
    xs = np.where(small, x, 1.0)
    q = np.where(small,
                 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0 + x**4 / 144.0,
                 (-np.expm1(-xs) - xs * np.exp(-xs)) / xs**2)
    w1 = phi1 - h * q
    return phi1 - w1, w1


def mild_residual(traj: Trajectory, cfg: SimConfig, nonlinear=None) -> float:
    """max_t || Y_t - e^{-At} x0 - int_0^t e^{-A(t-s)} N(X_s) ds ||_H.

    The convolution uses an exponential trapezoid rule (N linear on each
    step), which is second order and independent of the first-order stepper.
    """
    if traj.Y is None or traj.Z is None:
        raise DomainError("trajectory needs separate Y and Z channels")
    h = cfg.h
    if not np.allclose(np.diff(traj.times), h):
        raise DomainError("trajectory grid spacing must equal cfg.h")
    g = eigenvalues(cfg.m)
    N = nonlinear if nonlinear is not None else CubicNonlinearity(cfg.m, cfg.dealias)
    decay = np.exp(-g * h)
    w0, w1 = _linear_weights(g, h)
    NX = N(traj.X)
    q = np.zeros(cfg.m, dtype=np.complex128)
    worst = 0.0
    for n in range(1, len(traj)):
        q = decay * q + w0 * NX[n - 1] + w1 * NX[n]
        r = traj.Y[n] - np.exp(-g * traj.times[n]) * cfg.x0.coeffs - q
        worst = max(worst, math.sqrt(sq_norm_weighted(r)))
    return worst


def nonlinear_estimates(c: np.ndarray, dealias: str = "pad") -> dict:
    """Per-field quantities entering the standard estimates for N, batched over (..., m).

    l4_lhs = ||x||_{L4}^4, l4_rhs = ||x||_V^2 ||x||_H^2, dissipation = <x, N(x)>_H,
    nv_ratio = ||N(x)||_V / (||x||_V + ||x||_V^3),
    nah_ratio = ||A N(x)||_H / ((1 + ||x||_V^2)(1 + ||Ax||_H^2)).
    """
    c = np.asarray(c, dtype=np.complex128)
    m = c.shape[-1]
    n = 4 * m + 2  # x^4 has modes up to 4m: the grid mean is exact
    u = sfft.irfft(np.concatenate([np.zeros(c.shape[:-1] + (1,)), c * n,
                                   np.zeros(c.shape[:-1] + (n // 2 - m,))], axis=-1), n=n, axis=-1)
    Nx = CubicNonlinearity(m, dealias)(c)
    h2, v2, a2 = sq_norm_weighted(c), sq_norm_weighted(c, 0.5), sq_norm_weighted(c, 1.0)
    v = np.sqrt(v2)
    return {
        "l4_lhs": np.mean(u**4, axis=-1),
        "l4_rhs": v2 * h2,
        "dissipation": 2.0 * np.real(np.sum(c * np.conj(Nx), axis=-1)),
        "nv_ratio": np.sqrt(sq_norm_weighted(Nx, 0.5)) / (v + v**3),
        "nah_ratio": np.sqrt(sq_norm_weighted(Nx, 1.0)) / ((1 + v2) * (1 + a2)),
    }
