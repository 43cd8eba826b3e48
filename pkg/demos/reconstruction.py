"""Recovering a free 2-D density from two screens.

One screen sits on the line x = 0, the other is rotated by a quarter turn and placed at
a distance a' from the origin. Combining the absorption currents measured on both at
the same time gives the density |psi_F(x, y, t)|^2 up to a normalisation, which is then
fixed by requiring unit mass.
"""

import math

import numpy as np

from mqm import analytic as an
from mqm.core import GaussianPacketSpec, PhysicalParams
from mqm.reconstruct import reconstruct_density, rotate_frame, synthetic_measurements

params = PhysicalParams()
packet = GaussianPacketSpec(x0=2.0, sigma_x=0.5, sigma_y=1.0)
h = 0.025
frame = rotate_frame(math.pi / 2, packet.x0)
positions = np.arange(-800, 801) * h
screen0, screen1 = synthetic_measurements(packet, params, frame, positions, positions, [1.0])

x = np.arange(-320, 481) * h
y = np.arange(-360, 361) * h
result = reconstruct_density(screen0, screen1, frame, 1.0, x, y)

truth = an.free_density_2d(x[None, :], y[:, None], 1.0, packet, params, normalized=True)
truth /= np.trapezoid(np.trapezoid(truth, x, axis=1), y)
keep = ~result.mask
err = np.max(np.abs(result.density - truth)[keep] / truth[keep])
print(f"unmasked fraction {result.unmasked_fraction:.3f}, max relative error {err:.2e}")
