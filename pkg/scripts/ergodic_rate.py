"""Exponential decay of |E f(X_t^x) - E f(X_t^y)| under common noise."""
from _common import parser, save

from stochgl import experiments
from stochgl.dynamics import SimConfig
from stochgl.noise import NoiseSpectrum
from stochgl.spectral import SpectralField

if __name__ == "__main__":
    ap = parser(__doc__, paths=500)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--clip", type=float, default=10.0)
    a = ap.parse_args()
    m = 64
    cfg = SimConfig(m, 1e-3, a.T, NoiseSpectrum(1.8, 0.8, m))
    x0s = [SpectralField.zeros(m), SpectralField.from_modes(m, {1: 0.5})]
    summary, files = experiments.run_ergodic(cfg, x0s, a.seed, a.paths, a.clip)
    save(a.out, summary, files)
