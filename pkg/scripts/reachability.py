"""Control synthesis to a target, then the stochastic hit frequency near the same target."""
from _common import parser, save

from stochgl import ergodics, experiments
from stochgl.dynamics import SimConfig
from stochgl.noise import NoiseSpectrum
from stochgl.spectral import SpectralField

if __name__ == "__main__":
    ap = parser(__doc__, paths=10_000)
    ap.add_argument("--target", type=float, nargs="+", default=[0.3],
                    help="sine amplitudes for modes 1, 2, ...")
    ap.add_argument("--eps", type=float, default=0.25, help="ball radius for the hit frequency")
    a = ap.parse_args()
    amps = {k + 1: v for k, v in enumerate(a.target)}

    cfg = SimConfig(32, 1e-4, 1.0, None, SpectralField.zeros(32))
    summary, files = experiments.run_control(cfg.x0, SpectralField.from_modes(32, amps), 1.0, 0.05, cfg, 0.5)

    m = 64
    noisy = SimConfig(m, 1e-3, 1.0, NoiseSpectrum(1.8, 0.8, m), SpectralField.zeros(m))
    summary["hit"] = ergodics.irreducibility_probe(noisy.x0, SpectralField.from_modes(m, amps), a.eps, 1.0,
                                                   a.paths, noisy, a.seed)
    save(a.out, summary, files)
