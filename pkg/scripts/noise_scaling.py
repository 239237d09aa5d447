"""Growth of E sup_{t<=T} ||A^theta Z_t||^p with T for the stable OU process.

    python3 scripts/noise_scaling.py --paths 1000 --out runs/noise
"""
from _common import parser, save

from stochgl import experiments
from stochgl.noise import NoiseSpectrum

if __name__ == "__main__":
    ap = parser(__doc__.splitlines()[0], paths=1000)
    ap.add_argument("--alpha", type=float, default=1.8)
    ap.add_argument("--beta", type=float, default=0.8)
    ap.add_argument("--m", type=int, default=32)
    ap.add_argument("--p", type=float, default=1.0)
    a = ap.parse_args()
    spec = NoiseSpectrum(a.alpha, a.beta, a.m)
    summary, files = experiments.run_noise_test(spec, 1e-3, [1, 2, 4, 8, 16], [0.0, 0.2], a.p, a.seed, a.paths)
    save(a.out, summary, files)
