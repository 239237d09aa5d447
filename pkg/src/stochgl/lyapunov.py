"""Lyapunov function Psi(x) = (M + ||x||_H^2)^{1/2} and drift certificates.

The generator of Psi splits into
  J1 = <-Ax, x>/Psi = -||x||_V^2 / Psi              (computed exactly)
  J2 = <N(x), x>/Psi <= 1 / (4 Psi)
  J3 (small jumps)   <= 2 c_alpha S2 / ((2 - alpha) Psi)
  J4 (large jumps)   <= 2 c_alpha S1 / (alpha - 1)
with S2 = sum_i beta_i^2 and S1 = sum_i |beta_i| over all nonzero modes.
c_alpha is the Levy density constant (the reciprocal of the C_alpha that
appears when the density is written 1 / (C_alpha |y|^{1+alpha})).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import SimConfig, run_ensemble
from .noise import NoiseSpectrum
from .spectral import DomainError, SpectralField, norm_H, sq_norm_weighted


def psi(x, M: float) -> float:
    if M <= 0:
        raise DomainError("M must be > 0")
    return float(np.sqrt(M + norm_H(x) ** 2))


def psi_coeffs(c: np.ndarray, M: float) -> np.ndarray:
    return np.sqrt(M + sq_norm_weighted(c))


def _jump_constants(spec: NoiseSpectrum) -> tuple[float, float]:
    """(2 c S2 / (2 - alpha), 2 c S1 / (alpha - 1))."""
    s2, s1 = spec.series()
    a, c = spec.alpha, spec.c_alpha
    return 2.0 * c * s2 / (2.0 - a), 2.0 * c * s1 / (a - 1.0)


def eq_I5_lhs(spec: NoiseSpectrum, M: float) -> float:
    small, large = _jump_constants(spec)
    return 0.25 / M + small / M + large / np.sqrt(M)


def choose_M(spec: NoiseSpectrum, max_doublings: int = 200) -> float:
    """Smallest M in {1, 2, 4, ...} with eq_I5_lhs(M) <= 1/4."""
    M = 1.0
    for _ in range(max_doublings):
        if eq_I5_lhs(spec, M) <= 0.25:
            return M
        M *= 2.0
    raise ArithmeticError("no admissible M found")


@dataclass(frozen=True)
class DriftReport:
    norm_H: float
    norm_V: float
    M: float
    psi: float
    J1_exact: float
    J2_bound: float
    J3_bound: float
    J4_bound: float
    drift_ratio_lower: float
    in_K: bool
    alpha: float
    c_alpha: float
    sum_beta_sq: float
    sum_beta_abs: float

    def recompute_ratio(self) -> float:
        d = self.M + self.norm_H**2
        small = 2.0 * self.c_alpha * self.sum_beta_sq / (2.0 - self.alpha)
        large = 2.0 * self.c_alpha * self.sum_beta_abs / (self.alpha - 1.0)
        return self.norm_V**2 / d - 0.25 / d - small / d - large / np.sqrt(d)

    def as_row(self) -> dict:
        return asdict(self)


def drift_arrays(c: np.ndarray, spec: NoiseSpectrum, M: float) -> dict:
    """Vectorised drift terms for coefficient arrays (..., m)."""
    if M <= 0:
        raise DomainError("M must be > 0")
    h2 = sq_norm_weighted(c)
    v2 = sq_norm_weighted(c, 0.5)
    d = M + h2
    p = np.sqrt(d)
    small, large = _jump_constants(spec)
    return {
        "norm_H": np.sqrt(h2), "norm_V": np.sqrt(v2), "psi": p,
        "J1_exact": -v2 / p, "J2_bound": 0.25 / p, "J3_bound": small / p, "J4_bound": np.broadcast_to(large, p.shape),
        "drift_ratio_lower": v2 / d - 0.25 / d - small / d - large / p,
        "in_K": v2 <= M,
    }


def generator_terms(x: SpectralField, spec: NoiseSpectrum, M: float) -> DriftReport:
    t = drift_arrays(x.coeffs, spec, M)
    s2, s1 = spec.series()
    return DriftReport(
        float(t["norm_H"]), float(t["norm_V"]), M, float(t["psi"]), float(t["J1_exact"]), float(t["J2_bound"]),
        float(t["J3_bound"]), float(t["J4_bound"]), float(t["drift_ratio_lower"]), bool(t["in_K"]),
        spec.alpha, spec.c_alpha, s2, s1,
    )


def certify_drift(states, spec: NoiseSpectrum, M: float) -> dict:
    """Check drift_ratio_lower >= 1/4 off K and >= -1/4 on K for every state."""
    c = np.asarray([s.coeffs if isinstance(s, SpectralField) else s for s in states])
    out = {"M": M, "n_states": int(len(c)), "n_K": 0, "n_Kc": 0, "n_violations_K": 0, "n_violations_Kc": 0,
           "min_ratio_K": None, "min_ratio_Kc": None, "violations": []}
    if len(c) == 0:
        return out
    t = drift_arrays(c, spec, M)
    r, inK = t["drift_ratio_lower"], t["in_K"]
    bad = np.where(inK, r < -0.25, r < 0.25)
    out.update(
        n_K=int(inK.sum()), n_Kc=int((~inK).sum()),
        n_violations_K=int((bad & inK).sum()), n_violations_Kc=int((bad & ~inK).sum()),
        min_ratio_K=float(r[inK].min()) if inK.any() else None,
        min_ratio_Kc=float(r[~inK].min()) if (~inK).any() else None,
        violations=[int(i) for i in np.flatnonzero(bad)],
    )
    return out


def sample_on_V_sphere(n: int, m: int, radius_sq: float, rng: np.random.Generator, decay: float = 1.0) -> np.ndarray:
    """Random band-limited states with ||x||_V^2 = radius_sq; spectral envelope k^{-decay}."""
    k = np.arange(1, m + 1, dtype=float)
    c = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) * k ** (-decay)
    return c * np.sqrt(radius_sq / sq_norm_weighted(c, 0.5))[:, None]


def median_of_means(values: np.ndarray, blocks: int = 10) -> tuple[float, float]:
    """Median of block means and an approximate standard error (1.2533 sd / sqrt(blocks))."""
    values = np.asarray(values, dtype=float)
    means = np.array([b.mean() for b in np.array_split(values, blocks)])
    return float(np.median(means)), float(1.2533 * means.std(ddof=1) / np.sqrt(blocks))


def generator_mc_check(x: SpectralField, spec: NoiseSpectrum | None, M: float, h: float = 1e-3,
                       n_paths: int = 10_000, seed: int = 0, blocks: int = 10, dealias: str = "pad") -> dict:
    """Median-of-means (E Psi(X_h) - Psi(x)) / h against the analytic bound -drift_ratio_lower * Psi(x)."""
    cfg = SimConfig(x.m, h, h, spec, x, dealias)
    _, xh = run_ensemble(cfg, seed, n_paths if not cfg.noiseless else 1, record_every=1)
    d = (psi_coeffs(xh[:, -1], M) - psi(x, M)) / h
    est, se = median_of_means(d, blocks) if d.size >= 2 * blocks else (float(d.mean()), 0.0)
    ref = spec if spec is not None else NoiseSpectrum(1.5, 1.0, x.m, 0.0)
    bound = -generator_terms(x, ref, M).drift_ratio_lower * psi(x, M)
    return {"analytic_bound": float(bound), "mc_estimate": est, "stderr": se,
            "ok": bool(est <= bound + 3.0 * se)}


def deterministic_generator(x: SpectralField, M: float, dealias: str = "pad") -> float:
    """<-Ax + N(x), x>_H / Psi(x): the noiseless generator of Psi."""
    from .dynamics import nonlinearity
    from .spectral import inner_H, norm_V

    return (-norm_V(x) ** 2 + inner_H(nonlinearity(x, dealias), x)) / psi(x, M)
