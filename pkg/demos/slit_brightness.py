"""Absorption on a screen behind a Gaussian slit.

The absorption rate along the screen is proportional, at every instant, to the free
Feynman density there. The proportionality factor depends on time only and can be read
as the screen's brightness. This script prints it for a few times and checks that the
ratio is flat across the screen.
"""

import numpy as np

from mqm import analytic as an
from mqm.core import GaussianPacketSpec, PhysicalParams

params = PhysicalParams()
packet = GaussianPacketSpec(x0=2.0, sigma_x=1.0, sigma_y=1.0)
geometry = an.SlitGeometry(packet.x0)
y = np.linspace(-6, 6, 121)

for t in (0.1, 0.5, 1.0, 2.0, 5.0):
    rate = an.slit_absorption_rate(y, t, geometry, packet, params)
    density = an.screen_density_feynman(y, t, geometry, packet, params)
    ratio = rate / density
    bright = an.relative_brightness(t, geometry, packet, params)
    print(f"t={t:4.1f}  brightness {float(bright):.6e}  spread of ratio over y {np.ptp(ratio) / bright:.1e}")
