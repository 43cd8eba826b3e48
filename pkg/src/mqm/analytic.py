"""Closed-form free and half-line Gaussian solutions and the slit-experiment formulas.

All functions broadcast over their position/time arguments.

The initial packet used throughout is ``N0 * exp(-(z - x0)**2 / (2 sigma**2) + i k0 z)``
with ``N0 = 1 / (sqrt(2 pi i) sigma)`` unless ``normalized=True``, in which case
``N0 = (pi sigma**2) ** -0.25`` and the packet carries unit probability.
Free evolution uses the propagator ``sqrt(m / 2 pi i hbar t) exp(i m (x - z)**2 / 2 hbar t)``,
so the closed forms solve the same equation as :mod:`mqm.solver`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .core import GaussianPacketSpec, PhysicalParams

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SlitGeometry:
    """Slit plane at ``x = x0``, screen at ``x = screen_at``, optional lateral walls at ``y = +-y0``."""

    x0: float
    screen_at: float = 0.0
    y0: float | None = None
    slit_half_width: float = math.pi / 2

    def __post_init__(self):
        if not self.x0 - self.screen_at > 0:
            raise ValueError(f"slit plane must lie at x0 > screen, got x0={self.x0}")
        if self.y0 is not None and not self.y0 > self.slit_half_width:
            raise ValueError(
                f"lateral walls y0={self.y0} must lie outside the slit half-width {self.slit_half_width}"
            )

    @property
    def distance(self) -> float:
        return self.x0 - self.screen_at


def packet_amplitude(sigma: float, normalized: bool = False) -> complex:
    if normalized:
        return complex((math.pi * sigma**2) ** -0.25)
    return 1.0 / (np.sqrt(2j * math.pi) * sigma)


def spread_width(t, sigma: float, params: PhysicalParams):
    """hbar^2 t^2 / (sigma^2 m^2) + sigma^2, the squared width of the spreading packet."""
    t = np.asarray(t, dtype=float)
    return (params.hbar * t / (sigma * params.mass)) ** 2 + sigma**2


def _gaussian_parts(x, t, center, k, sigma, params):
    """Free-packet value (without N0) and log-derivative, both broadcast over x and t."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    tau = params.hbar * t / params.mass
    s = 1.0 + 1j * tau / sigma**2
    shift = x - center - k * tau
    value = np.exp(-(shift**2) / (2 * sigma**2 * s) + 1j * k * x - 0.5j * k**2 * tau) / np.sqrt(s)
    logderiv = -shift / (sigma**2 * s) + 1j * k
    return value, logderiv


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be non-negative")


def free_gaussian_1d(x, t, packet: GaussianPacketSpec, params: PhysicalParams,
                     normalized: bool = False):
    """Freely evolved 1-D Gaussian packet psi_F^1(x, t)."""
    _check_time(t)
    n0 = packet_amplitude(packet.sigma_x, normalized)
    value, _ = _gaussian_parts(x, t, packet.x0, packet.k0, packet.sigma_x, params)
    return n0 * value


def free_gaussian_gradient(x, t, packet: GaussianPacketSpec, params: PhysicalParams,
                           normalized: bool = False):
    _check_time(t)
    n0 = packet_amplitude(packet.sigma_x, normalized)
    value, logderiv = _gaussian_parts(x, t, packet.x0, packet.k0, packet.sigma_x, params)
    return n0 * value * logderiv


def _half_integral(x, t, center, k, sigma, side, params):
    """Integral of the initial packet times the propagator over the half-line ``side * z > 0``.

    Returns the value and its x-derivative, both without the N0 factor. Requires t > 0.
    The expression is the full-line result times erfc(w)/2, rewritten with erfcx so that
    neither the Gaussian nor the error function overflows on its own.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a = 1.0 / (2 * sigma**2)
    beta = params.mass / (2 * params.hbar * t)
    sqrt_a = np.sqrt(a - 1j * beta)
    b = 2 * a * center + 1j * k - 2j * beta * x
    w = -side * b / (2 * sqrt_a)
    dw = side * 1j * beta / sqrt_a
    # P * exp(C): prefactor times the z-independent part of the exponent
    pref = np.exp(-a * center**2 + 1j * beta * x**2) / np.sqrt(1.0 + 1j * params.hbar * t / (params.mass * sigma**2))
    full, logderiv = _gaussian_parts(x, t, center, k, sigma, params)
    positive = w.real >= 0
    w_pos = np.where(positive, w, -w)
    tail = 0.5 * pref * erfcx(w_pos)
    value = np.where(positive, tail, full - tail)
    deriv = logderiv * value - pref * dw / SQRT_PI
    return value, deriv


def method_is_images(packet: GaussianPacketSpec) -> bool:
    """True when the packet sits far enough from the wall for the two-term image formula."""
    return packet.sigma_x < abs(packet.x0) / 10


def _halfline(x, t, packet, params, normalized, method, want_gradient):
    _check_time(t)
    if packet.x0 == 0:
        raise ValueError("packet centre must not sit on the wall")
    if method == "auto":
        method = "images" if method_is_images(packet) else "truncated"
    if method not in ("images", "truncated"):
        raise ValueError(f"unknown method {method!r}")
    side = math.copysign(1.0, packet.x0)
    c, k, sigma = packet.x0, packet.k0, packet.sigma_x
    n0 = packet_amplitude(sigma, normalized)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    # below this the evolved packet equals the initial one to double precision
    started = params.hbar * t / (params.mass * sigma**2) > 1e-15
    ts = np.where(started, t, 1.0)

    if method == "images":
        # free packet minus its mirror image (centre -c, drift -k)
        f, df = _gaussian_parts(x, ts, c, k, sigma, params)
        g, dg = _gaussian_parts(-x, ts, c, k, sigma, params)
        value, deriv = f - g, f * df + g * dg
        f0, df0 = _gaussian_parts(x, 0.0, c, k, sigma, params)
        g0, dg0 = _gaussian_parts(-x, 0.0, c, k, sigma, params)
        value0, deriv0 = f0 - g0, f0 * df0 + g0 * dg0
    else:
        tp, dtp = _half_integral(x, ts, c, k, sigma, side, params)
        tm, dtm = _half_integral(-x, ts, c, k, sigma, side, params)
        value, deriv = tp - tm, dtp + dtm
        f0, df0 = _gaussian_parts(x, 0.0, c, k, sigma, params)
        inside = side * x > 0
        value0 = np.where(inside, f0, 0.0)
        deriv0 = np.where(inside, f0 * df0, 0.0)

    value = np.where(started, value, value0)
    deriv = np.where(started, deriv, deriv0)
    beyond = side * x < 0
    value = np.where(beyond | (x == 0), 0.0, value)
    deriv = np.where(beyond, 0.0, deriv)
    out = deriv if want_gradient else value
    return n0 * out


def halfline_images_1d(x, t, packet: GaussianPacketSpec, params: PhysicalParams,
                       normalized: bool = False, method: str = "auto"):
    """Half-line solution with a reflecting (Dirichlet) wall at the origin.

    The source sits at ``packet.x0``; the particle lives on that side of the wall and
    the amplitude is zero on the other side. ``method`` selects the two-term image
    formula (``"images"``), the exact integral over the truncated initial packet
    (``"truncated"``), or picks the former when ``sigma_x < |x0| / 10`` (``"auto"``).
    """
    return _halfline(x, t, packet, params, normalized, method, want_gradient=False)


def halfline_images_gradient(x, t, packet: GaussianPacketSpec, params: PhysicalParams,
                             normalized: bool = False, method: str = "auto"):
    """d/dx of :func:`halfline_images_1d`."""
    return _halfline(x, t, packet, params, normalized, method, want_gradient=True)


def wall_gradient_sq(t, packet: GaussianPacketSpec, params: PhysicalParams,
                     normalized: bool = True, method: str = "auto"):
    """|d psi_B / dx|^2 at the wall for the half-line Gaussian."""
    return np.abs(halfline_images_gradient(0.0, t, packet, params, normalized, method)) ** 2


def transverse_density(y, t, sigma_y: float, params: PhysicalParams, normalized: bool = False):
    """|psi^2(y, t)|^2 of the freely spreading transverse Gaussian.

    With ``normalized=False`` the printed amplitude normalisation is kept, so the
    density integrates to ``1 / (2 sigma_y sqrt(pi))`` at every time.
    """
    _check_time(t)
    w = spread_width(t, sigma_y, params)
    dens = np.exp(-np.asarray(y, dtype=float) ** 2 / w) / (2 * math.pi * sigma_y * np.sqrt(w))
    if normalized:
        dens = dens * (2 * sigma_y * SQRT_PI)
    return dens


def free_density_2d(x, y, t, packet: GaussianPacketSpec, params: PhysicalParams,
                    normalized: bool = False):
    """|psi_F(x, y, t)|^2 = |psi_F^1(x, t)|^2 |psi^2(y, t)|^2 of the free 2-D packet."""
    px = np.abs(free_gaussian_1d(x, t, packet, params, normalized)) ** 2
    return px * transverse_density(y, t, packet.sigma_y, params, normalized)


def screen_density_feynman(y, t, geom: SlitGeometry, packet: GaussianPacketSpec,
                           params: PhysicalParams):
    """Free-packet density on the screen plane, ignoring the screen."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("screen density needs t > 0")
    w = spread_width(t, packet.sigma_x, params)
    d = geom.distance
    xfactor = np.exp(-(d**2) / w) / (2 * math.pi * packet.sigma_x * np.sqrt(w))
    return xfactor * transverse_density(y, t, packet.sigma_y, params)


def absorption_prefactor(t, distance: float, sigma_x: float, params: PhysicalParams):
    """Time-only factor of the printed slit absorption rate for a screen at ``distance``.

    4 d^2 lambda m / (2 pi sigma^2) * W^(-3/2) * exp(-d^2 / W) with W the spread width.
    """
    _check_time(t)
    w = spread_width(t, sigma_x, params)
    return (4 * distance**2 * params.lam * params.mass / (2 * math.pi * sigma_x**2)
            * w**-1.5 * np.exp(-(distance**2) / w))


def slit_absorption_rate(y, t, geom: SlitGeometry, packet: GaussianPacketSpec,
                         params: PhysicalParams):
    """Instantaneous absorption rate J(0, y, t) on the screen, in its printed closed form."""
    pre = absorption_prefactor(t, geom.distance, packet.sigma_x, params)
    return pre * transverse_density(y, t, packet.sigma_y, params)


def relative_brightness(t, geom: SlitGeometry, packet: GaussianPacketSpec,
                        params: PhysicalParams):
    """Absorption rate divided by the free screen density; depends on t only.

    Evaluates to ``4 d^2 lambda m / (sigma_x W(t))``. The hand-simplified form
    ``4 d^2 lambda / (m^2 sigma_x^6 W(t))`` agrees with it only when ``m = sigma_x = 1``;
    see :func:`relative_brightness_simplified`.
    """
    _check_time(t)
    w = spread_width(t, packet.sigma_x, params)
    return 4 * geom.distance**2 * params.lam * params.mass / (packet.sigma_x * w)


def relative_brightness_simplified(t, geom: SlitGeometry, packet: GaussianPacketSpec,
                                   params: PhysicalParams):
    _check_time(t)
    w = spread_width(t, packet.sigma_x, params)
    return 4 * geom.distance**2 * params.lam / (params.mass**2 * packet.sigma_x**6 * w)


def slit_velocity_density(k):
    """|sin(pi k / 2) / (pi k / 2)|^2, the transverse velocity density behind a uniform slit."""
    return np.sinc(np.asarray(k, dtype=float) / 2) ** 2


def box_expansion(y, t, y0: float, n_max: int = 256, params: PhysicalParams | None = None,
                  variant: str = "printed", slit_half_width: float = math.pi / 2):
    """Truncated eigenfunction series for the slit between absorbing walls at ``y = +-y0``.

    ``variant="printed"`` sums
    ``2/(n pi^1.5) cos(n pi^2 / 4 y0) sin(n pi y / y0) exp(-i n^2 pi^2 t / (hbar y0^2))``.
    ``variant="standard"`` expands a normalised top-hat of half-width ``slit_half_width``
    in the particle-in-a-box eigenfunctions of ``[-y0, y0]`` with E_n = hbar^2 k_n^2 / 2m.
    """
    params = params or PhysicalParams()
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > y0 * (1 + 1e-12)):
        raise ValueError(f"|y| must not exceed y0={y0}")
    _check_time(t)
    n = np.arange(1, n_max + 1, dtype=float)
    yy = y[..., None]
    tt = np.asarray(t, dtype=float)[..., None]
    if variant == "printed":
        coef = 2 / (n * math.pi**1.5) * np.cos(n * math.pi**2 / (4 * y0))
        modes = np.sin(n * math.pi * yy / y0)
        phase = np.exp(-1j * (n * math.pi / y0) ** 2 * tt / params.hbar)
    elif variant == "standard":
        kn = n * math.pi / (2 * y0)
        h = slit_half_width
        coef = (2 * np.sin(kn * y0) * np.sin(kn * h) / kn) / math.sqrt(2 * h * y0)
        modes = np.sin(kn * (yy + y0)) / math.sqrt(y0)
        phase = np.exp(-1j * params.hbar * kn**2 * tt / (2 * params.mass))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    out = np.sum(coef * modes * phase, axis=-1)
    # exact zeros on the walls for every truncation
    return np.where(np.abs(y) >= y0, 0.0, out)


def box_tail_bound(y, y0: float, n_max: int):
    """Bound on the truncation error of the printed series at t = 0.

    The terms pair into ``sin(n theta)/n`` sums; by Dirichlet's test each tail past
    ``n_max`` is at most ``1 / ((n_max + 1) |sin(theta / 2)|)``.
    """
    y = np.asarray(y, dtype=float)
    bound = 0.0
    for sign in (1.0, -1.0):
        theta = math.pi * y / y0 + sign * math.pi**2 / (4 * y0)
        s = np.abs(np.sin(theta / 2))
        term = np.where(s > 0, 1.0 / ((n_max + 1) * np.where(s > 0, s, 1.0)), 0.0)
        bound = bound + term
    return (1 / math.pi**1.5) * bound
