"""Shared domain types: physical constants, uniform grids and complex fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NumericalGuardError(RuntimeError):
    """A numerical safety guard tripped (instability, contamination, NaN)."""

    def __init__(self, guard: str, message: str):
        super().__init__(f"[{guard}] {message}")
        self.guard = guard


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhysicalParams:
    """Planck constant, particle mass and detector absorption length."""

    hbar: float = 1.0
    mass: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")

    @property
    def absorption_rate_constant(self) -> float:
        """lambda * hbar / (m * pi), the prefactor of every discounting exponent."""
        return self.lam * self.hbar / (self.mass * math.pi)


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {self.n_points}")
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid1D":
        """Grid with spacing as close as possible to ``dx`` (never coarser)."""
        n = int(math.ceil(round((x_max - x_min) / dx, 9))) + 1
        return cls(x_min, x_max, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class WaveField:
    """Complex amplitudes sampled on a :class:`Grid1D` at one time."""

    grid: Grid1D
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes, np.complex128)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"amplitudes have shape {amps.shape}, grid has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain NaN or Inf")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_function(cls, grid: Grid1D, func, time: float = 0.0) -> "WaveField":
        return cls(grid, func(grid.points), time)

    def scaled(self, factor: complex) -> "WaveField":
        return WaveField(self.grid, self.amplitudes * factor, self.time)


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Initial Gaussian packet centred at ``(x0, 0)`` with optional drift ``k0`` along x."""

    x0: float
    sigma_x: float
    sigma_y: float = 1.0
    k0: float = 0.0

    def __post_init__(self):
        if not self.sigma_x > 0:
            raise ValueError(f"sigma_x must be positive, got {self.sigma_x}")
        if not self.sigma_y > 0:
            raise ValueError(f"sigma_y must be positive, got {self.sigma_y}")


@dataclass(frozen=True)
class ScreenMeasurement:
    """Absorption current J(position, t) sampled on a full position x time grid.

    ``current`` has shape ``(len(times), len(positions))``: one row per time.
    """

    screen_id: str
    positions: np.ndarray
    times: np.ndarray
    current: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = _frozen_array(self.positions, float)
        times = _frozen_array(self.times, float)
        cur = _frozen_array(self.current, float)
        if pos.ndim != 1 or times.ndim != 1:
            raise ValueError("positions and times must be 1-D")
        if cur.shape != (times.size, pos.size):
            raise ValueError(
                f"current has shape {cur.shape}, expected {(times.size, pos.size)}"
            )
        if not np.all(np.isfinite(cur)):
            raise ValueError("current contains NaN or Inf")
        if np.any(cur < 0):
            raise ValueError("absorption currents must be non-negative")
        if np.any(np.diff(pos) <= 0) or np.any(np.diff(times) <= 0):
            raise ValueError("positions and times must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "current", cur)

    def scaled_in_time(self, factor) -> "ScreenMeasurement":
        """Multiply every row by ``factor(t)`` (a positive function of time)."""
        f = np.asarray([factor(t) for t in self.times], dtype=float)
        return ScreenMeasurement(
            self.screen_id, self.positions, self.times, self.current * f[:, None], self.metadata
        )


def l2_norm_sq(field: WaveField) -> float:
    """Trapezoidal estimate of the integral of |psi|^2 over the grid."""
    dens = np.abs(field.amplitudes) ** 2
    return float(np.trapezoid(dens, dx=field.grid.dx))


def inner_product(a: WaveField, b: WaveField) -> complex:
    """Trapezoidal estimate of the integral of conj(a) * b."""
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")
    return complex(np.trapezoid(np.conj(a.amplitudes) * b.amplitudes, dx=a.grid.dx))
