"""Recover the free-packet density |psi_F(x, y, t)|^2 from currents on two absorbing screens.

One screen sits at ``x = 0``; the other is the same plane rotated by ``theta`` about the
origin and placed at distance ``a'`` from the packet centre. Only |psi_F|^2 is
recoverable, and only up to a time-dependent factor that the normalisation absorbs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import SlitGeometry, absorption_prefactor, free_density_2d, slit_absorption_rate
from .core import GaussianPacketSpec, PhysicalParams, ScreenMeasurement

DENOMINATOR_EPS = 1e-6


def _snap(v: float) -> float:
    return 0.0 if abs(v) < 1e-15 else v


@dataclass(frozen=True)
class RotationFrame:
    """Rotation x' = alpha x + beta y, y' = gamma x + delta y, with the rotated screen at x' = a'."""

    theta: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    a_prime: float

    @property
    def determinant(self) -> float:
        return self.alpha * self.delta - self.beta * self.gamma

    def to_rotated(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return self.alpha * x + self.beta * y, self.gamma * x + self.delta * y

    def from_rotated(self, xp, yp):
        xp, yp = np.asarray(xp, dtype=float), np.asarray(yp, dtype=float)
        return self.alpha * xp + self.gamma * yp, self.beta * xp + self.delta * yp


def rotate_frame(theta: float, a_prime: float) -> RotationFrame:
    c, s = _snap(math.cos(theta)), _snap(math.sin(theta))
    if abs(s) < 1e-12:
        raise ValueError("degenerate rotation: β = 0")
    return RotationFrame(theta, c, s, -s, c, a_prime)


def phi_factor(t, x0_or_a: float, packet: GaussianPacketSpec, params: PhysicalParams):
    """Time-only factor linking a screen current to the transverse density, for a screen at distance ``x0_or_a``."""
    return absorption_prefactor(t, x0_or_a, packet.sigma_x, params)


@dataclass(frozen=True)
class ReconstructionResult:
    """Normalised density on ``density[iy, ix]``; masked points hold 0 and are flagged in ``mask``."""

    x: np.ndarray
    y: np.ndarray
    t: float
    density: np.ndarray
    mask: np.ndarray
    inverse_normalization: float
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def unmasked_fraction(self) -> float:
        return float(1.0 - np.mean(self.mask))


def normalization_constant(density, x, y, mask=None) -> float:
    """2-D trapezoidal integral of ``density[iy, ix]``; masked points contribute nothing."""
    dens = np.asarray(density, dtype=float)
    if mask is not None:
        dens = np.where(mask, 0.0, dens)
    if not np.all(np.isfinite(dens)):
        raise ValueError("density is not finite on unmasked points")
    total = float(np.trapezoid(np.trapezoid(dens, x, axis=1), y))
    if not total > 0:
        raise ValueError("zero unmasked mass: cannot normalise")
    return total


def _row_at(meas: ScreenMeasurement, t: float) -> tuple[np.ndarray, int]:
    """Current profile at time t and the interpolation order used in time (0 = exact sample)."""
    times = meas.times
    if not times[0] <= t <= times[-1]:
        raise ValueError(f"t={t} outside measured times [{times[0]}, {times[-1]}] of {meas.screen_id!r}")
    i = int(np.searchsorted(times, t))
    if i < times.size and times[i] == t:
        return meas.current[i], 0
    w = (t - times[i - 1]) / (times[i] - times[i - 1])
    return (1 - w) * meas.current[i - 1] + w * meas.current[i], 1


def _sample(positions, profile, q):
    """Linear interpolation; points outside the sampled range come back as NaN."""
    vals = np.interp(q, positions, profile)
    return np.where((q < positions[0]) | (q > positions[-1]), np.nan, vals)


def reconstruct_density(m0: ScreenMeasurement, m1: ScreenMeasurement, frame: RotationFrame, t: float,
                        x, y, eps: float = DENOMINATOR_EPS) -> ReconstructionResult:
    """Two-screen reconstruction on the grid ``x`` by ``y``.

    ``m0`` is the current J(0, y, t) on the unrotated screen and ``m1`` the current
    J~(a', y', t) on the rotated one. A point is masked when the denominator current
    falls below ``eps`` times the screen maximum at ``t`` or when any needed position
    lies outside a measured range.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    row0, order0 = _row_at(m0, t)
    row1, order1 = _row_at(m1, t)
    a, al, be, ga, de = frame.a_prime, frame.alpha, frame.beta, frame.gamma, frame.delta

    ys = (a - al * x) / be  # y on the x = 0 screen paired with column x
    yprime = ga * x + de * ys
    num_x = _sample(m1.positions, row1, yprime)
    den_x = _sample(m0.positions, row0, ys)
    num_y = _sample(m0.positions, row0, y)

    threshold = eps * float(np.max(row0))
    bad_x = ~np.isfinite(num_x) | ~np.isfinite(den_x) | ~(den_x >= threshold) | ~(den_x > 0)
    bad_y = ~np.isfinite(num_y)
    mask = bad_y[:, None] | bad_x[None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bad_x, 0.0, num_x / np.where(bad_x, 1.0, den_x))
    raw = np.where(mask, 0.0, np.nan_to_num(num_y)[:, None] * ratio[None, :])
    n_inv = normalization_constant(raw, x, y, mask)
    meta = {
        "position_interpolation_order": 1,
        "time_interpolation_order": max(order0, order1),
        "denominator_eps": eps,
        "masked_points": int(mask.sum()),
    }
    return ReconstructionResult(x, y, float(t), raw / n_inv, mask, n_inv, meta)


def synthetic_measurements(packet: GaussianPacketSpec, params: PhysicalParams, frame: RotationFrame,
                           positions0, positions1, times) -> tuple[ScreenMeasurement, ScreenMeasurement]:
    """Analytic currents on both screens for a free Gaussian packet centred at (x0, 0).

    The unrotated screen carries the slit absorption rate. The rotated screen carries
    ``phi~(t)`` times the free density at the screen point whose rotated coordinates
    are ``(a', y')``.
    """
    times = np.asarray(times, dtype=float)
    p0 = np.asarray(positions0, dtype=float)
    p1 = np.asarray(positions1, dtype=float)
    geom = SlitGeometry(packet.x0)
    cur0 = slit_absorption_rate(p0[None, :], times[:, None], geom, packet, params)
    xs, ys = frame.from_rotated(frame.a_prime, p1)
    phi1 = phi_factor(times, frame.a_prime, packet, params)
    cur1 = phi1[:, None] * free_density_2d(xs[None, :], ys[None, :], times[:, None], packet, params)
    meta = {"source": "analytic"}
    return (ScreenMeasurement("screen-0", p0, times, cur0, dict(meta)),
            ScreenMeasurement("screen-rotated", p1, times, cur1, dict(meta, theta=frame.theta,
                                                                      a_prime=frame.a_prime)))
