"""Median |M_t| across window lengths, for a high and a low clip of |x|_H^2.

With the high clip (10) the observable is heavy tailed (index alpha/2 < 1)
and the medians grow; with a clip near the stationary 90% quantile and
windows of 10 * 2^j steps they decay.
"""
from _common import parser, save

from stochgl import experiments
from stochgl.dynamics import SimConfig
from stochgl.noise import NoiseSpectrum

if __name__ == "__main__":
    ap = parser(__doc__.splitlines()[0], paths=400)
    ap.add_argument("--kappa", type=float, default=0.25)
    a = ap.parse_args()
    m = 64
    cfg = SimConfig(m, 1e-3, 1.0, NoiseSpectrum(1.8, 0.8, m))
    summary, files = {}, {}
    for name, clip, unit in (("clip10", 10.0, 1), ("clip3e-4", 3e-4, 10)):
        s, f = experiments.run_mdp(cfg, a.seed, a.paths, a.kappa, unit_steps=unit, clip=clip)
        s["tail_check"] = experiments.gaussian_tail_oracle(s["sigma2"], 3.0, 10**6, a.seed).summary()
        summary[name] = s
        files.update({f"{name}_{k}": v for k, v in f.items()})
    save(a.out, summary, files)
