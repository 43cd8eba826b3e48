"""Brownian first passage three ways.

A particle starts at x0 = 1 with D = 1/2 and is killed on reaching the origin. We sample
paths by Monte Carlo, integrate the Fokker-Planck equation with an absorbing edge, and
compare both with the reflection-principle law Pr{tau <= t} = erfc(x0 / sqrt(4 D t)).
"""

import math

from mqm.core import Grid1D
from mqm.diffusion import (DiffusionSpec, fokker_planck_absorbing, halfline_fpt_cdf, ks_distance,
                           simulate_first_passage)

spec = DiffusionSpec(x0=1.0, diffusion_coeff=0.5, horizon=50.0, dt=1e-4, n_paths=100_000)
samples = simulate_first_passage(spec, seed=20240601)
fp = fokker_planck_absorbing(DiffusionSpec(1.0, 0.5, horizon=50.0, dt=2e-4), Grid1D.from_spacing(0, 40, 0.02))


def exact(t):
    return halfline_fpt_cdf(t, spec.distance, spec.diffusion_coeff)


print(f"Pr(tau <= 1): Monte Carlo {samples.empirical_cdf(1.0):.4f}, exact {math.erfc(1 / math.sqrt(2)):.4f}")
print(f"censored at t=50: {samples.censored_fraction:.4f}")
print(f"KS distance MC vs exact {ks_distance(samples, exact):.4f}, MC vs Fokker-Planck {ks_distance(samples, fp.cdf):.4f}")
