"""Approximate controllability of  x' + Ax = N(x) + u  and the Gronwall comparison.

The control is built in three stages: free flow on [0, t0] (u = 0), a
smoothed copy of the target, and the straight line between x(t0) and that
copy on [t0, T], with u read off from the equation along the line.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .dynamics import CubicNonlinearity, GLStepper, SimConfig, run_with_noise, simulate
from .spectral import DomainError, SpectralField, apply_semigroup, eigenvalues, norm_V, sq_norm_weighted

GRONWALL_EXPONENTS = (4.0 / 3.0, 2.0, 8.0 / 3.0, 4.0)


def smooth_target(a: SpectralField, eps: float, max_halvings: int = 200) -> tuple[float, SpectralField]:
    """Largest dyadic theta with ||e^{-theta A} a - a||_V <= eps / 4."""
    if eps <= 0:
        raise DomainError("eps must be > 0")
    if not np.isfinite(norm_V(a)):
        raise DomainError("target must lie in V")
    theta = 1.0
    for _ in range(max_halvings):
        a_s = apply_semigroup(a, theta)
        if norm_V(a_s - a) <= eps / 4.0:
            return theta, a_s
        theta *= 0.5
    raise ArithmeticError("dyadic smoothing search did not terminate")


def free_flow(x0: SpectralField, t0: float, cfg: SimConfig) -> SpectralField:
    """x(t0) of the uncontrolled deterministic flow."""
    if t0 <= 0:
        raise DomainError("t0 must be > 0")
    traj = simulate(cfg.replace(T=t0, noise=None, x0=x0))
    return traj.state(-1)


@dataclass(frozen=True, eq=False)
class ControlPlan:
    t0: float
    theta_s: float
    T: float
    h: float
    target: SpectralField
    a_smooth: SpectralField
    x_t0: SpectralField
    free_states: np.ndarray   # x on the grid 0, h, ..., t0
    u: np.ndarray             # u on the steps t0, t0 + h, ..., T - h (piecewise constant)

    @property
    def m(self) -> int:
        return self.target.m

    @property
    def n_free(self) -> int:
        return self.free_states.shape[0] - 1

    def x_at(self, t: float) -> SpectralField:
        if t <= self.t0:
            return SpectralField(self.free_states[int(round(t / self.h))])
        s = (t - self.t0) / (self.T - self.t0)
        return SpectralField(s * self.a_smooth.coeffs + (1.0 - s) * self.x_t0.coeffs)

    def endpoint(self) -> SpectralField:
        return self.x_at(self.T)

    def u_at(self, n: int) -> np.ndarray:
        """Control on step n (from t_n to t_{n+1})."""
        k = n - self.n_free
        return np.zeros(self.m, dtype=np.complex128) if k < 0 else self.u[k]

    @property
    def sup_u_V(self) -> float:
        return float(np.sqrt(sq_norm_weighted(self.u, 0.5).max())) if len(self.u) else 0.0

    def to_csv(self) -> str:
        n_total = self.n_free + self.u.shape[0]
        buf = io.StringIO()
        buf.write("t,u_norm_V,x_norm_V\n")
        for n in range(n_total + 1):
            t = n * self.h
            un = np.sqrt(sq_norm_weighted(self.u_at(n), 0.5)) if n < n_total else 0.0
            buf.write(f"{t!r},{float(un)!r},{norm_V(self.x_at(t))!r}\n")
        return buf.getvalue()

    def summary(self, terminal_error: float | None = None) -> dict:
        return {"theta_s": self.theta_s, "t0": self.t0, "terminal_error": terminal_error, "sup_u_V": self.sup_u_V}


def synthesize(x0: SpectralField, a: SpectralField, T: float, eps: float, cfg: SimConfig,
               t0: float | None = None) -> ControlPlan:
    if T <= 0:
        raise DomainError("T must be > 0")
    if a.m > cfg.m or not np.isfinite(norm_V(a)):
        raise DomainError("target must be band-limited within the cutoff (in V)")
    t0 = T / 2.0 if t0 is None else t0
    if not 0 < t0 < T:
        raise DomainError("need 0 < t0 < T")
    h = cfg.h
    n_free, n_total = int(round(t0 / h)), int(round(T / h))
    if abs(n_free * h - t0) > 1e-9 * T or abs(n_total * h - T) > 1e-9 * T:
        raise DomainError("t0 and T must be multiples of h")
    a = SpectralField(np.pad(a.coeffs, (0, cfg.m - a.m)))
    theta_s, a_s = smooth_target(a, eps)
    free = simulate(cfg.replace(T=t0, noise=None, x0=x0)).X
    x_t0 = free[-1]
    slope = (a_s.coeffs - x_t0) / (T - t0)
    s = (np.arange(n_total - n_free) * h) / (T - t0)
    x_line = s[:, None] * a_s.coeffs + (1.0 - s[:, None]) * x_t0
    N = CubicNonlinearity(cfg.m, cfg.dealias)
    # u = x' + Ax - N(x) along the line
    u = slope + eigenvalues(cfg.m) * x_line - N(x_line)
    return ControlPlan(t0, theta_s, T, h, a, a_s, SpectralField(x_t0), free, u)


def integrate_controlled(plan: ControlPlan, cfg: SimConfig) -> np.ndarray:
    """x_num on the full grid for x' + Ax = N(x) + u, u piecewise constant per step."""
    stepper = GLStepper(cfg.m, plan.h, cfg.dealias)
    n_total = plan.n_free + plan.u.shape[0]
    out = np.empty((n_total + 1, cfg.m), dtype=np.complex128)
    out[0] = plan.free_states[0]
    zero = np.zeros(cfg.m, dtype=np.complex128)
    for n in range(n_total):
        out[n + 1] = stepper.step(out[n], zero, plan.u_at(n))
    return out


def verify_reachability(plan: ControlPlan, cfg: SimConfig) -> float:
    """||x_num(T) - a||_V after integrating the controlled equation."""
    x_T = integrate_controlled(plan, cfg)[-1]
    return float(np.sqrt(sq_norm_weighted(x_T - plan.target.coeffs, 0.5)))


def solver_error(plan: ControlPlan, cfg: SimConfig) -> float:
    """||x_num(T) - x(T)||_V: the part of the terminal error due to time stepping alone."""
    x_T = integrate_controlled(plan, cfg)[-1]
    return float(np.sqrt(sq_norm_weighted(x_T - plan.a_smooth.coeffs, 0.5)))


# ---------------------------------------------------------------------------
# Gronwall comparison


def controlled_ou(u_steps: np.ndarray, h: float) -> np.ndarray:
    """z on the grid for z' + Az = u, z(0) = 0, exact for piecewise-constant u."""
    m = u_steps.shape[-1]
    g = eigenvalues(m)
    decay, phi1 = np.exp(-g * h), -np.expm1(-g * h) / g
    z = np.zeros((u_steps.shape[0] + 1, m), dtype=np.complex128)
    for n in range(u_steps.shape[0]):
        z[n + 1] = decay * z[n] + phi1 * u_steps[n]
    return z


def gronwall_gap(z_path: np.ndarray, z_ref: np.ndarray, cfg: SimConfig) -> tuple[float, float]:
    """(||Y_T - y(T)||_H^2, sum_i int_0^T ||Z_s - z(s)||_V^i ds) for i in {4/3, 2, 8/3, 4}."""
    z_path, z_ref = np.asarray(z_path), np.asarray(z_ref)
    shape = (cfg.n_steps + 1, cfg.m)
    if z_path.shape != shape or z_ref.shape != shape:
        raise DomainError(f"noise channels must both have shape {shape}")
    Y = simulate(cfg, z_path=z_path).Y[-1]
    y = simulate(cfg, z_path=z_ref).Y[-1]
    lhs = float(sq_norm_weighted(Y - y))
    dv = np.sqrt(sq_norm_weighted(z_path[:-1] - z_ref[:-1], 0.5))
    rhs = float(sum(cfg.h * np.sum(dv**i) for i in GRONWALL_EXPONENTS))
    return lhs, rhs


def gronwall_gaps(z_paths: np.ndarray, z_ref: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """Batched :func:`gronwall_gap`; returns an array of (lhs, rhs) rows."""
    z_paths, z_ref = np.asarray(z_paths), np.asarray(z_ref)
    shape = (cfg.n_steps + 1, cfg.m)
    if z_paths.shape[1:] != shape or z_ref.shape != shape:
        raise DomainError(f"noise channels must have shape {shape}")
    last = lambda x, y, z: y
    _, Y = run_with_noise(cfg, z_paths, record_every=cfg.n_steps, reducer=last)
    _, y = run_with_noise(cfg, z_ref[None], record_every=cfg.n_steps, reducer=last)
    lhs = sq_norm_weighted(Y[:, -1] - y[0, -1])
    dv = np.sqrt(sq_norm_weighted(z_paths[:, :-1] - z_ref[:-1], 0.5))
    rhs = sum(cfg.h * np.sum(dv**i, axis=-1) for i in GRONWALL_EXPONENTS)
    return np.column_stack([lhs, rhs])


def fit_gronwall_constant(pairs) -> float:
    """Smallest C with lhs <= C rhs over (lhs, rhs) pairs having rhs > 0."""
    ratios = [l / r for l, r in pairs if r > 0]
    return max(ratios) if ratios else 0.0


def plan_summary_json(plan: ControlPlan, terminal_error: float) -> str:
    return json.dumps(plan.summary(terminal_error), indent=2, sort_keys=True)
