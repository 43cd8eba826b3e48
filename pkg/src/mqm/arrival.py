"""Arrival-time and arrival-point statistics derived from absorption currents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ScreenMeasurement
from .solver import SurvivalRecord


@dataclass(frozen=True)
class ArrivalDistribution:
    """pdf and survival function of the arrival time over the recorded horizon.

    ``total_mass`` is Pr{tau <= T}; the remaining ``1 - total_mass`` is never
    silently renormalised away.
    """

    times: np.ndarray
    pdf: np.ndarray
    cdf_complement: np.ndarray
    total_mass: float


@dataclass(frozen=True)
class ArrivalPointDensity:
    points: np.ndarray
    density: np.ndarray
    total_mass: float
    truncated_mass: float


@dataclass(frozen=True)
class TailClassification:
    """Outcome of the tail test on the accumulated absorption exponent.

    ``certain`` means the exponent diverges (absorption with probability one);
    otherwise ``p_never`` estimates Pr{tau = infinity}.
    """

    certain: bool
    p_never: float
    fitted_power: float
    fitted_prefactor: float
    tail_exponent: float
    window: tuple
    n_samples: int
    residual_rms: float

    @property
    def label(self) -> str:
        return "certain" if self.certain else "deficient"


def arrival_time_pdf(record: SurvivalRecord) -> ArrivalDistribution:
    """Pr{tau = t} is the absorption current and Pr{tau > t} the survival probability."""
    return ArrivalDistribution(
        times=record.times,
        pdf=record.current,
        cdf_complement=record.survival,
        total_mass=float(1.0 - record.survival[-1]),
    )


def _check_in_range(record: SurvivalRecord, *ts):
    lo, hi = record.times[0], record.times[-1]
    for t in ts:
        if not lo <= t <= hi:
            raise ValueError(f"time {t} outside record range [{lo}, {hi}]")


def hazard_rate(record: SurvivalRecord, s: float) -> float:
    """Arrival rate at time ``s`` given survival to ``s``: (lambda hbar / m pi) |d psi_B/dx|^2."""
    _check_in_range(record, s)
    return float(record.rate_constant * np.interp(s, record.times, record.grad_sq))


def conditional_arrival_density(record: SurvivalRecord, s: float, t: float) -> float:
    """Pr{tau = t | tau >= s} for ``s <= t``."""
    if s > t:
        raise ValueError(f"conditioning time s={s} exceeds t={t}")
    _check_in_range(record, s, t)
    expo = np.interp([s, t], record.times, record.exponent)
    return hazard_rate(record, t) * math.exp(-(expo[1] - expo[0]))


def arrival_point_pdf(measurement: ScreenMeasurement,
                      survival_at_end: float | None = None) -> ArrivalPointDensity:
    """Time-integrated current per screen point (trapezoid over the measured times).

    ``truncated_mass`` is the probability not yet absorbed at the last measured time:
    ``survival_at_end`` when supplied, else one minus the screen-integrated density.
    """
    density = np.trapezoid(measurement.current, measurement.times, axis=0)
    total = float(np.trapezoid(density, measurement.positions))
    truncated = 1.0 - total if survival_at_end is None else float(survival_at_end)
    return ArrivalPointDensity(measurement.positions, density, total, truncated)


def classify_total_absorption(record: SurvivalRecord, window: tuple | None = None,
                              min_samples: int = 10) -> TailClassification:
    """Decide whether absorption is certain by extrapolating the gradient tail.

    A power law ``A t^p`` is fitted to ``grad_sq`` against ``t`` on a log-log scale over
    ``window`` (default: the last fifth of the record). If ``p >= -1`` the exponent
    integral diverges; otherwise the tail beyond the record is added analytically.
    """
    t, g = record.times, record.grad_sq
    if window is None:
        window = (t[0] + 0.8 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    sel = (t >= lo) & (t <= hi) & (t > 0)
    n = int(np.count_nonzero(sel))
    if n < min_samples:
        raise ValueError(f"tail window {window} holds {n} samples, need >= {min_samples}")
    expo_end = float(record.exponent[-1])
    if record.rate_constant == 0.0:
        return TailClassification(False, 1.0, math.nan, 0.0, 0.0, tuple(window), n, 0.0)
    tw, gw = t[sel], g[sel]
    positive = gw > 0
    if not np.any(positive):
        # gradient already vanished: nothing more will be absorbed
        return TailClassification(False, float(math.exp(-expo_end)), -math.inf, 0.0, 0.0,
                                  tuple(window), n, 0.0)
    if np.count_nonzero(positive) < 2:
        raise ValueError("tail window has fewer than two positive gradient samples")
    lt, lg = np.log(tw[positive]), np.log(gw[positive])
    power, intercept = np.polyfit(lt, lg, 1)
    resid = lg - (power * lt + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    pref = float(math.exp(intercept))
    if power >= -1.0:
        return TailClassification(True, 0.0, float(power), pref, math.inf, tuple(window), n, rms)
    t_end = float(t[-1])
    tail = record.rate_constant * pref * t_end ** (power + 1) / (-(power + 1))
    p_never = math.exp(-(expo_end + tail))
    return TailClassification(False, p_never, float(power), pref, tail, tuple(window), n, rms)
