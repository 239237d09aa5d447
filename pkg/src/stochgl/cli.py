"""Command line entry point: ``stochgl <subcommand> --config run.json --out DIR``.

Exit codes: 0 success, 2 invalid configuration, 3 numeric abort.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__, experiments
from .config import RunConfig, parse_field, validate
from .dynamics import NumericAbort
from .spectral import DomainError

SUBCOMMANDS = ("simulate", "noise-test", "control", "drift", "ergodic", "mdp", "validate")
EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3


def _dispatch(cmd: str, cfg: RunConfig) -> tuple[dict, dict]:
    seed, threads = cfg.seed, int(cfg["threads"])
    if cmd == "simulate":
        return experiments.run_simulate(cfg.sim_config(), seed)
    if cmd == "noise-test":
        nt = cfg["noise_test"]
        return experiments.run_noise_test(cfg.spectrum(nt["m"]), nt["h"], nt["horizons"], nt["theta"], nt["p"],
                                          seed, nt["n_paths"])
    if cmd == "control":
        c = cfg["control"]
        sim = cfg.sim_config("control", noise=False)
        return experiments.run_control(sim.x0, parse_field(c["target"], sim.m), c["T"], c["eps"], sim, c["t0"])
    if cmd == "drift":
        d = cfg["drift"]
        return experiments.run_drift(cfg.spectrum(), d["n_states"], seed, d["radius_factor"], d["n_K"])
    if cmd == "ergodic":
        e = cfg["ergodic"]
        sim = cfg.sim_config()
        x0s = [parse_field(x, sim.m) for x in e["x0s"]]
        return experiments.run_ergodic(sim, x0s, seed, e["n_paths"], e["clip"], e["record_every"], threads)
    if cmd == "mdp":
        p = cfg["mdp"]
        return experiments.run_mdp(cfg.sim_config(), seed, p["n_paths"], p["kappa"], p["unit_steps"],
                                   tuple(p["exponents"]), p["burn"], p["pi_T"], p["clip"], p["n_batches"], threads)
    raise ValueError(f"unknown subcommand {cmd}")


def manifest(cmd: str, cfg: RunConfig, summary: dict, wall: float, files) -> dict:
    return {
        "subcommand": cmd,
        "config": cfg.raw,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wall_time_s": wall,
        "seed_scheme": "trajectory i uses PCG64(SeedSequence(seed, spawn_key=(i,)))",
        "endpoint": cfg["simulation"]["endpoint"],
        "dealias": cfg["simulation"]["dealias"],
        "files": sorted(files),
        "summary": summary,
    }


def _write(out: str, name: str, text: str):
    with open(os.path.join(out, name), "w", newline="\n") as fh:
        fh.write(text)


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def run(cmd: str, cfg: RunConfig, out: str | None) -> int:
    errors, warnings = validate(cfg)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if cmd == "validate":
        for e in errors:
            print(f"error: {e}")
        if not errors:
            print("ok")
        return EXIT_INVALID if errors else EXIT_OK
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    out = out or "out"
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_INVALID
    t0 = time.perf_counter()
    try:
        summary, files = _dispatch(cmd, cfg)
    except NumericAbort as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    wall = time.perf_counter() - t0
    for name, text in files.items():
        _write(out, name, text)
    _write(out, "summary.json", json.dumps(summary, indent=2, sort_keys=True, default=_default) + "\n")
    man = manifest(cmd, cfg, summary, wall, list(files) + ["summary.json"])
    _write(out, "manifest.json", json.dumps(man, indent=2, sort_keys=True, default=_default) + "\n")
    print(json.dumps(summary, sort_keys=True, default=_default))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochgl", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON run configuration (defaults are used for missing keys)")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    ap.add_argument("--out", help="output directory (default ./out)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        cfg.raw["seed"] = args.seed
    if args.threads is not None:
        cfg.raw["threads"] = args.threads
    return run(args.subcommand, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
