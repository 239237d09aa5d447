"""Certify the Lyapunov drift of Psi = sqrt(M + |x|_H^2) on sampled states."""
from _common import parser, save

from stochgl import experiments, lyapunov
from stochgl.noise import NoiseSpectrum
from stochgl.spectral import SpectralField

if __name__ == "__main__":
    ap = parser(__doc__, paths=10_000)
    ap.add_argument("--alpha", type=float, default=1.8)
    ap.add_argument("--beta", type=float, default=0.8)
    ap.add_argument("--m", type=int, default=64)
    ap.add_argument("--states", type=int, default=1000)
    ap.add_argument("--mc", action="store_true", help="also run the Monte Carlo generator check")
    a = ap.parse_args()
    spec = NoiseSpectrum(a.alpha, a.beta, a.m)
    summary, files = experiments.run_drift(spec, a.states, a.seed, 2.0, a.states)
    if a.mc:
        M = summary["M"]
        for name, x in (("zero", SpectralField.zeros(a.m)), ("half_sine", SpectralField.from_modes(a.m, {1: 0.5}))):
            summary[f"generator_mc_{name}"] = lyapunov.generator_mc_check(x, spec, M, 1e-3, a.paths, a.seed)
    save(a.out, summary, files)
