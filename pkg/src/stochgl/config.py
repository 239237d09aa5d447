"""Run configuration: JSON blocks merged over defaults, plus validation.

Fields are given either as {"sines": {"k": amp}, "cosines": {...}} or as
{"coeffs": [[re, im], ...]}.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEALIAS_MODES, SimConfig
from .noise import NoiseSpectrum
from .spectral import DomainError, SpectralField

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "n_paths": 1,
    "simulation": {"m": 64, "h": 1e-3, "T": 10.0, "dealias": "pad", "endpoint": "left", "x0": None},
    "noise": {"alpha": 1.8, "beta": 0.8, "amplitude": 1.0},
    "noise_test": {"h": 1e-3, "horizons": [1, 2, 4, 8, 16], "theta": [0.0, 0.2], "p": 1.0, "n_paths": 1000, "m": 32},
    "control": {"m": 32, "h": 1e-4, "T": 1.0, "t0": 0.5, "eps": 0.05, "x0": None,
                "target": {"sines": {"1": 0.3}}},
    "drift": {"n_states": 1000, "radius_factor": 2.0, "n_K": 1000},
    "ergodic": {"n_paths": 500, "clip": 10.0, "record_every": 10,
                "x0s": [None, {"sines": {"1": 0.5}}]},
    "mdp": {"n_paths": 400, "kappa": 0.25, "clip": 10.0, "unit_steps": 1, "exponents": [6, 7, 8, 9, 10],
            "burn": 0.5, "pi_T": 300.0, "n_batches": 20},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_field(obj, m: int) -> SpectralField:
    if obj is None:
        return SpectralField.zeros(m)
    if "coeffs" in obj:
        f = SpectralField.from_json({"m": len(obj["coeffs"]), "coeffs": obj["coeffs"]})
    else:
        sines = {int(k): float(v) for k, v in obj.get("sines", {}).items()}
        cosines = {int(k): float(v) for k, v in obj.get("cosines", {}).items()}
        ks = list(sines) + list(cosines)
        if any(k < 1 for k in ks):
            raise DomainError("mode indices must be >= 1")
        if any(k > m for k in ks):
            raise DomainError(f"mode index above cutoff m={m}")
        f = SpectralField.from_modes(m, sines, cosines)
    if f.m > m:
        raise DomainError(f"field cutoff {f.m} exceeds m={m}")
    return f


@dataclass
class RunConfig:
    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, d: dict | None) -> "RunConfig":
        return cls(_merge(DEFAULTS, d or {}))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def spectrum(self, m: int | None = None) -> NoiseSpectrum | None:
        n = self.raw["noise"]
        if n is None:
            return None
        m = self.raw["simulation"]["m"] if m is None else m
        return NoiseSpectrum(float(n["alpha"]), float(n["beta"]), int(m), float(n.get("amplitude", 1.0)))

    def sim_config(self, block: str = "simulation", noise: bool = True) -> SimConfig:
        s = self.raw[block]
        m = int(s.get("m", self.raw["simulation"]["m"]))
        sim = self.raw["simulation"]
        return SimConfig(m, float(s.get("h", sim["h"])), float(s.get("T", sim["T"])),
                         self.spectrum(m) if noise else None, parse_field(s.get("x0"), m),
                         s.get("dealias", sim["dealias"]), s.get("endpoint", sim["endpoint"]))

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def validate(cfg: RunConfig) -> tuple[list[str], list[str]]:
    """(errors, warnings); an empty error list means every subcommand can run."""
    errors, warnings = [], []
    r = cfg.raw
    n = r.get("noise")
    if n is not None:
        a, b = n.get("alpha"), n.get("beta")
        if not isinstance(a, (int, float)) or not 1 < a < 2:
            errors.append(f"alpha must lie in (1, 2), got {a}")
        elif not isinstance(b, (int, float)):
            errors.append(f"beta must be a number, got {b}")
        else:
            lo, hi = 0.5 + 0.5 / a, 1.5 - 1.0 / a
            if not b > lo:
                errors.append(f"beta must exceed 1/2 + 1/(2 alpha) = {lo:.6g}, got {b}")
            elif not b < hi:
                warnings.append(f"beta={b} outside the ergodicity band ({lo:.6g}, {hi:.6g}); "
                                "ergodic experiments are not covered by theory")
            if a <= 1.5:
                warnings.append(f"alpha={a} <= 3/2: the ergodicity band is empty")
        if n.get("amplitude", 1.0) < 0:
            errors.append("noise amplitude must be >= 0")
    s = r["simulation"]
    for name, blk in (("simulation", s), ("control", r["control"]), ("noise_test", r["noise_test"])):
        m = blk.get("m", s["m"])
        h = blk.get("h", s["h"])
        if not isinstance(m, int) or m < 1:
            errors.append(f"{name}.m must be a positive integer")
        if not (isinstance(h, (int, float)) and h > 0):
            errors.append(f"{name}.h must be > 0")
    if not errors:
        try:
            cfg.sim_config()
            cfg.sim_config("control", noise=False)
            parse_field(r["control"]["target"], r["control"]["m"])
            for x in r["ergodic"]["x0s"]:
                parse_field(x, s["m"])
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            errors.append(str(exc))
    if s.get("dealias") not in DEALIAS_MODES:
        errors.append(f"dealias must be one of {DEALIAS_MODES}")
    k = r["mdp"]["kappa"]
    if not 0 < k < 0.5:
        errors.append(f"mdp.kappa must lie in (0, 1/2), got {k}")
    if r["mdp"]["n_batches"] < 10:
        errors.append("mdp.n_batches must be >= 10")
    nt = r["noise_test"]
    if n is not None and not errors:
        spec = cfg.spectrum(nt.get("m"))
        if not all(0 <= th < spec.beta - 0.5 / spec.alpha for th in np.atleast_1d(nt["theta"])):
            errors.append("noise_test.theta must lie in [0, beta - 1/(2 alpha))")
        if not 0 < nt["p"] < spec.alpha:
            errors.append("noise_test.p must lie in (0, alpha)")
    if not (isinstance(r["threads"], int) and r["threads"] >= 1):
        errors.append("threads must be a positive integer")
    return errors, warnings
