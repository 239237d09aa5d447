"""Fourier representation of mean-zero real fields on the unit torus.

A field is stored through its positive-mode coefficients x_k, k = 1..m, of
the expansion x(xi) = sum_{0 < |k| <= m} x_k exp(2 pi i k xi) with
x_{-k} = conj(x_k).  The negative Laplacian A is diagonal in this basis with
eigenvalues gamma_k = 4 pi^2 k^2, so every operator here is a per-mode
multiplication.

Most functions come in two flavours: one taking a :class:`SpectralField`
and a lower-level one working on raw coefficient arrays of shape (..., m),
which the ensemble integrators use directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

TWO_PI = 2.0 * np.pi
GAMMA_1 = 4.0 * np.pi**2


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Band-limited mean-zero real field, coefficients for modes 1..m."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise DomainError("coeffs must be a non-empty 1-d array")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, m: int) -> "SpectralField":
        return cls(np.zeros(m, dtype=np.complex128))

    @classmethod
    def from_modes(cls, m: int, sines=None, cosines=None) -> "SpectralField":
        """Build sum_k s_k sin(2 pi k xi) + c_k cos(2 pi k xi) from dicts {k: amplitude}."""
        c = np.zeros(m, dtype=np.complex128)
        for k, amp in (sines or {}).items():
            c[k - 1] += -0.5j * amp
        for k, amp in (cosines or {}).items():
            c[k - 1] += 0.5 * amp
        return cls(c)

    def __add__(self, other):
        return SpectralField(self.coeffs + _as_coeffs(other, self.m))

    def __sub__(self, other):
        return SpectralField(self.coeffs - _as_coeffs(other, self.m))

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(-self.coeffs)

    def allclose(self, other, rtol=1e-12, atol=1e-14) -> bool:
        return self.m == other.m and np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)

    def __repr__(self):
        return f"SpectralField(m={self.m}, norm_H={norm_H(self):.6g})"

    # serialization -------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"m": self.m, "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs]})

    @classmethod
    def from_json(cls, text) -> "SpectralField":
        obj = json.loads(text) if isinstance(text, str) else text
        pairs = np.asarray(obj["coeffs"], dtype=float).reshape(-1, 2)
        if pairs.shape[0] != int(obj["m"]):
            raise DomainError(f"m={obj['m']} but {pairs.shape[0]} coefficient pairs given")
        return cls(pairs[:, 0] + 1j * pairs[:, 1])

    def to_csv_row(self) -> str:
        vals = np.column_stack([self.coeffs.real, self.coeffs.imag]).ravel()
        return ",".join([str(self.m)] + [repr(float(v)) for v in vals])

    @classmethod
    def from_csv_row(cls, row: str) -> "SpectralField":
        parts = row.strip().split(",")
        m = int(parts[0])
        vals = np.array([float(p) for p in parts[1:]])
        if vals.size != 2 * m:
            raise DomainError(f"expected {2 * m} values after m, got {vals.size}")
        return cls(vals[0::2] + 1j * vals[1::2])


def _as_coeffs(x, m=None) -> np.ndarray:
    c = x.coeffs if isinstance(x, SpectralField) else np.asarray(x)
    if m is not None and c.shape[-1] != m:
        raise DomainError(f"cutoff mismatch: {c.shape[-1]} vs {m}")
    return c


def wavenumbers(m: int) -> np.ndarray:
    return np.arange(1, m + 1, dtype=float)


def eigenvalues(m: int) -> np.ndarray:
    """gamma_k for k = 1..m."""
    return GAMMA_1 * wavenumbers(m) ** 2


def eigenvalue(k: int) -> float:
    if k == 0:
        raise DomainError("mode k=0 is excluded (fields have zero mean)")
    return GAMMA_1 * float(k) ** 2


# ---------------------------------------------------------------------------
# diagonal operators


def apply_fractional_power(x: SpectralField, sigma: float) -> SpectralField:
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if sigma == 0:
        return x
    return SpectralField(x.coeffs * eigenvalues(x.m) ** sigma)


def apply_semigroup(x: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise DomainError("semigroup time must be >= 0")
    return SpectralField(x.coeffs * np.exp(-eigenvalues(x.m) * t))


def smoothing_bound(sigma: float, t: float) -> float:
    """Sharp bound (sigma/(e t))^sigma on sup_k gamma_k^sigma exp(-gamma_k t)."""
    if t <= 0:
        raise DomainError("t must be > 0")
    if sigma == 0:
        return 1.0
    return (sigma / (np.e * t)) ** sigma


# ---------------------------------------------------------------------------
# norms

def sq_norm_weighted(c: np.ndarray, sigma: float = 0.0) -> np.ndarray:
    """||A^sigma x||_H^2 along the last axis of a coefficient array."""
    w = 2.0 * np.abs(c) ** 2
    if sigma:
        w = w * eigenvalues(c.shape[-1]) ** (2 * sigma)
    return w.sum(axis=-1)


def norm_H(x) -> float:
    return float(np.sqrt(sq_norm_weighted(_as_coeffs(x))))


def norm_V(x) -> float:
    return float(np.sqrt(sq_norm_weighted(_as_coeffs(x), 0.5)))


def norm_A(x, sigma: float) -> float:
    """||A^sigma x||_H."""
    return float(np.sqrt(sq_norm_weighted(_as_coeffs(x), sigma)))


def inner_H(x, y) -> float:
    cx, cy = _as_coeffs(x), _as_coeffs(y)
    return float(2.0 * np.real(np.sum(cx * np.conj(cy))))


def norm_Lp(x, p: float, n_grid: int | None = None) -> float:
    if p < 1:
        raise DomainError("p must be >= 1")
    c = _as_coeffs(x)
    # 4m + 2 points: the grid mean of |x|^p is exact for p = 4
    n_grid = 4 * c.shape[-1] + 2 if n_grid is None else n_grid
    vals = to_physical(c, n_grid)
    # trapezoid on a periodic grid is the plain mean
    return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# transforms

def check_grid(m: int, n_grid: int):
    if n_grid < 2 * m + 2 or n_grid % 2:
        raise DomainError(f"grid of {n_grid} points aliases modes up to {m}; need even n >= {2 * m + 2}")


def to_physical(x, n_grid: int) -> np.ndarray:
    """Samples x(j/n), j = 0..n-1; batched along leading axes for raw arrays."""
    c = _as_coeffs(x)
    m = c.shape[-1]
    check_grid(m, n_grid)
    spec = np.zeros(c.shape[:-1] + (n_grid // 2 + 1,), dtype=np.complex128)
    spec[..., 1 : m + 1] = c * n_grid
    return sfft.irfft(spec, n=n_grid, axis=-1)


def coeffs_from_physical(samples: np.ndarray, m: int) -> np.ndarray:
    n = samples.shape[-1]
    check_grid(m, n)
    return sfft.rfft(samples, axis=-1)[..., 1 : m + 1] / n


def from_physical(samples, m: int | None = None) -> SpectralField:
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    m = (n - 2) // 2 if m is None else m
    return SpectralField(coeffs_from_physical(samples, m))


def grid(n_grid: int) -> np.ndarray:
    return np.arange(n_grid) / n_grid


# ---------------------------------------------------------------------------
# projections

def project_galerkin(x: SpectralField, m_new: int) -> SpectralField:
    if m_new > x.m:
        raise DomainError(f"cannot project cutoff {x.m} onto larger cutoff {m_new}")
    c = x.coeffs.copy()
    c[m_new:] = 0.0
    return SpectralField(c)


def truncate(x: SpectralField, m_new: int) -> SpectralField:
    """Change the storage cutoff: drop modes above m_new or zero-pad up to it."""
    c = np.zeros(m_new, dtype=np.complex128)
    k = min(m_new, x.m)
    c[:k] = x.coeffs[:k]
    return SpectralField(c)
