"""Trajectory statistics: occupation averages, irreducibility probes, exponential
rate fits and moderate-deviation functionals.

Observables act on coefficient arrays (..., m) so that they can be used as
ensemble reducers as well as on recorded trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .dynamics import SimConfig, Trajectory, run_ensemble
from .spectral import DomainError, SpectralField, sq_norm_weighted


@dataclass(frozen=True)
class Observable:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    bound: float | None = None   # |f| <= bound * Psi

    def __call__(self, x) -> np.ndarray:
        c = x.coeffs if isinstance(x, SpectralField) else np.asarray(x)
        return np.asarray(self.fn(c), dtype=float)

    def affine(self, scale: float, shift: float) -> "Observable":
        return Observable(f"{scale}*{self.name}+{shift}", lambda c: scale * self.fn(c) + shift)


def norm_sq_H(clip: float | None = 10.0) -> Observable:
    if clip is None:
        return Observable("norm_H^2", sq_norm_weighted)
    return Observable(f"min(norm_H^2,{clip:g})", lambda c: np.minimum(sq_norm_weighted(c), clip), 1.0)


def constant(value: float) -> Observable:
    return Observable(f"const({value:g})", lambda c: np.full(np.shape(c)[:-1], float(value)))


def _values(traj_or_values, f: Observable | None) -> np.ndarray:
    if isinstance(traj_or_values, Trajectory):
        if f is None:
            raise DomainError("an observable is needed to evaluate a trajectory")
        return f(traj_or_values.X)
    return np.asarray(traj_or_values, dtype=float)


# ---------------------------------------------------------------------------
# occupation measure


def occupation_average(traj: Trajectory, f: Observable) -> float:
    """(1/t_end) sum_i f(X_{t_i}) (t_{i+1} - t_i), left-endpoint rule."""
    if len(traj) < 2:
        if len(traj) == 1:
            return float(f(traj.X[0]))
        raise DomainError("empty trajectory")
    v = f(traj.X)
    dt = np.diff(traj.times)
    return float(np.sum(v[:-1] * dt) / (traj.times[-1] - traj.times[0]))


def occupation_average_values(values: np.ndarray, h: float) -> np.ndarray:
    """Left-endpoint time average along the last axis of evenly spaced values."""
    v = np.asarray(values, dtype=float)
    return v[..., :-1].sum(axis=-1) * h / ((v.shape[-1] - 1) * h)


# ---------------------------------------------------------------------------
# irreducibility


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def hit_frequency(terminal: np.ndarray, a: SpectralField, eps: float) -> dict:
    if eps <= 0:
        raise DomainError("eps must be > 0")
    d = np.sqrt(sq_norm_weighted(np.asarray(terminal) - a.coeffs))
    k, n = int((d < eps).sum()), int(d.size)
    lo, hi = clopper_pearson(k, n)
    return {"hits": k, "n_paths": n, "frequency": k / n, "lower95": lo, "upper95": hi,
            "min_distance": float(d.min())}


def terminal_states(x0: SpectralField, T: float, n_paths: int, cfg: SimConfig, seed: int = 0,
                    threads: int = 1) -> np.ndarray:
    run = cfg.replace(T=T, x0=x0)
    _, rec = run_ensemble(run, seed, n_paths, record_every=run.n_steps, threads=threads)
    return rec[:, -1]


def irreducibility_probe(x0: SpectralField, a: SpectralField, eps: float, T: float, n_paths: int,
                         cfg: SimConfig, seed: int = 0, threads: int = 1) -> dict:
    """Frequency of ||X_T - a||_H < eps with a 95% Clopper-Pearson interval."""
    if eps <= 0:
        raise DomainError("eps must be > 0")
    if a.m > cfg.m:
        raise DomainError("target cutoff exceeds m")
    a = SpectralField(np.pad(a.coeffs, (0, cfg.m - a.m)))
    return hit_frequency(terminal_states(x0, T, n_paths, cfg, seed, threads), a, eps)


# ---------------------------------------------------------------------------
# exponential rate


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    name: str
    times: np.ndarray
    means: np.ndarray
    mom: np.ndarray
    stderr: np.ndarray
    n: int
    tag: str = ""
    psi0: float = 1.0   # Psi of the initial condition

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("ensemble size must be >= 2")

    @classmethod
    def from_values(cls, name, times, values, tag="", psi0=1.0, blocks=10):
        """values: (n_paths, n_times)."""
        v = np.asarray(values, dtype=float)
        n = v.shape[0]
        if v.ndim != 2 or n < 2:
            raise DomainError("need a (n_paths >= 2, n_times) array")
        nb = min(blocks, n)
        mom = np.median(np.stack([b.mean(axis=0) for b in np.array_split(v, nb)]), axis=0)
        se = v.std(axis=0, ddof=1) / np.sqrt(n)
        return cls(name, np.asarray(times), v.mean(axis=0), mom, se, n, tag, psi0)

    def to_csv(self) -> str:
        rows = ["t,mean,median_of_means,stderr"]
        rows += [f"{t!r},{a!r},{b!r},{c!r}" for t, a, b, c in
                 zip(self.times.tolist(), self.means.tolist(), self.mom.tolist(), self.stderr.tolist())]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class RateFit:
    rho_hat: float
    theta_hat: float
    r2: float
    n_used: int
    ok: bool
    reason: str = ""
    slope: float = float("nan")

    def summary(self) -> dict:
        return {"rho_hat": self.rho_hat, "theta_hat": self.theta_hat, "r2": self.r2, "n_used": self.n_used,
                "ok": self.ok, "reason": self.reason}


def rate_fit(sx: EnsembleStats, sy: EnsembleStats, rel_floor: float = 1e-8, min_points: int = 5) -> RateFit:
    """Fit |mean_x(t) - mean_y(t)| <= theta (Psi(x) + Psi(y)) rho^t.

    The log-gap is regressed on t over the decaying range: from the peak of
    the gap up to the first time it falls below ``rel_floor`` times the peak.
    rho_hat = exp(slope); theta_hat is the smallest prefactor that makes the
    fitted envelope dominate every point of that range.
    """
    if sx.times.shape != sy.times.shape or not np.allclose(sx.times, sy.times):
        raise DomainError("ensembles must share a time grid")
    nan = float("nan")
    gap = np.abs(sx.means - sy.means)
    gmax = gap.max()
    if not gmax > 0:
        return RateFit(nan, nan, nan, 0, False, "degenerate: identical ensembles")
    start = int(np.argmax(gap))
    below = np.flatnonzero(gap[start:] <= rel_floor * gmax)
    end = start + below[0] if below.size else gap.size
    t, g = sx.times[start:end], gap[start:end]
    if t.size < min_points:
        reason = "gap not decaying" if start > 0 else "too few points in decaying range"
        return RateFit(nan, nan, nan, int(t.size), False, reason)
    res = stats.linregress(t, np.log(g))
    r2 = float(res.rvalue**2)
    if res.slope >= 0:
        return RateFit(nan, nan, r2, int(t.size), False, "gap not decaying", float(res.slope))
    rho = float(np.exp(res.slope))
    theta = float(np.max(g / rho**t) / (sx.psi0 + sy.psi0))
    return RateFit(rho, theta, r2, int(t.size), True, "", float(res.slope))


def ensemble_stats_pair(cfg: SimConfig, f: Observable, x0s, seed: int, n_paths: int, M: float,
                        record_every: int = 10, threads: int = 1) -> list[EnsembleStats]:
    """Ensembles from several initial states driven by common noise (same seed, same streams)."""
    from .lyapunov import psi

    c0 = np.asarray([x.coeffs for x in x0s])
    times, rec = run_ensemble(cfg, seed, n_paths, record_every=record_every, threads=threads,
                              reducer=lambda x, y, z: f(x), x0s=c0)
    return [EnsembleStats.from_values(f.name, times, rec[i], f"x0[{i}]", psi(x, M)) for i, x in enumerate(x0s)]


# ---------------------------------------------------------------------------
# moderate deviations


def check_kappa(kappa: float):
    if not 0.0 < kappa < 0.5:
        raise DomainError("kappa must lie in (0, 1/2)")


def mdp_functional(traj, f: Observable | None, kappa: float, pi_f_hat: float, h: float | None = None,
                   b: Callable[[float], float] | None = None) -> np.ndarray | float:
    """(1/(b(t) sqrt t)) sum_i (f(X_{t_i}) - pi_f_hat) h with b(t) = t^kappa.

    ``traj`` is a Trajectory or an array of observable values (..., n_times)
    on an even grid of step ``h``.
    """
    check_kappa(kappa)
    if isinstance(traj, Trajectory):
        h = float(traj.times[1] - traj.times[0])
    elif h is None:
        raise DomainError("h is required for raw value arrays")
    v = _values(traj, f)
    t = (v.shape[-1] - 1) * h
    b_t = t**kappa if b is None else b(t)
    out = np.sum(v[..., :-1] - pi_f_hat, axis=-1) * h / (b_t * np.sqrt(t))
    return float(out) if np.ndim(out) == 0 else out


def sigma2_batch_means(traj, f: Observable | None, n_batches: int = 20, h: float | None = None,
                       min_batch_steps: int = 50) -> float:
    """Batch-means estimate of lim (1/t) Var(int_0^t f(X_s) ds)."""
    if n_batches < 10:
        raise DomainError("need at least 10 batches")
    if isinstance(traj, Trajectory):
        h = float(traj.times[1] - traj.times[0])
    elif h is None:
        raise DomainError("h is required for raw value arrays")
    v = _values(traj, f)[:-1]
    B = v.size // n_batches
    if B < min_batch_steps:
        raise DomainError(f"trajectory too short: {B} steps per batch, need {min_batch_steps}")
    v = v[v.size - B * n_batches:]
    means = v.reshape(n_batches, B).mean(axis=1)
    return float(B * h * means.var(ddof=1))


def estimate_pi(cfg: SimConfig, f: Observable, seed: int, burn: float = 0.2, path: int = 0,
                record_every: int = 1) -> float:
    """Time average of f over one long run after discarding the first ``burn`` fraction."""
    times, rec = run_ensemble(cfg, seed, 1, record_every=record_every, path_offset=path,
                              reducer=lambda x, y, z: f(x))
    v = rec[0]
    return float(v[int(burn * (v.size - 1)):-1].mean())


@dataclass
class TailReport:
    sigma2: float
    b: float
    n: int
    rows: list = field(default_factory=list)
    degenerate: bool = False
    reason: str = ""

    @property
    def ratios(self) -> list[float]:
        return [r["ratio"] for r in self.rows]

    @property
    def within_factor2(self) -> bool:
        return not self.degenerate and all(0.5 <= r <= 2.0 for r in self.ratios)

    def summary(self) -> dict:
        return {"sigma2": self.sigma2, "b": self.b, "n": self.n, "degenerate": self.degenerate,
                "reason": self.reason, "tail_ratios": self.ratios, "within_factor2": self.within_factor2,
                "rows": self.rows}


def mdp_tail_check(samples, sigma2: float, b: float, factors=(0.5, 1.0, 1.5)) -> TailReport:
    """Compare -log P(|M| > r) / b^2 against the quadratic rate r^2 / (2 sigma2).

    Each row also carries the finite-b Gaussian value -log(2 Phibar(r b / sigma)) / b^2,
    to which the empirical rate converges for Gaussian samples of variance sigma2 / b^2.
    """
    s = np.asarray(samples, dtype=float)
    rep = TailReport(float(sigma2), float(b), int(s.size))
    if s.size < 2 or not sigma2 > 0 or np.ptp(s) == 0:
        rep.degenerate, rep.reason = True, "zero variance"
        return rep
    sd = np.sqrt(sigma2)
    for fct in factors:
        r = fct * sd
        p = float(np.mean(np.abs(s) > r))
        emp = -np.log(p) / b**2 if p > 0 else float("inf")
        quad = r**2 / (2 * sigma2)
        gauss = -(np.log(2.0) + stats.norm.logsf(r * b / sd)) / b**2
        rep.rows.append({"r": r, "p_hat": p, "empirical_rate": emp, "quadratic_rate": quad,
                         "gaussian_rate": float(gauss), "ratio": emp / quad})
    if any(r["p_hat"] == 0 for r in rep.rows):
        rep.degenerate, rep.reason = True, "empty tail at some radius"
    return rep
