"""Brownian first passage: Monte Carlo paths, Fokker-Planck with absorbing walls, residence times.

Serves as the classical reference for the absorption-current picture: the flux of
trajectories into an absorbing wall is the first-passage-time density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np
from numba import njit, prange
from scipy.linalg import solve_banded
from scipy.special import log_ndtr

from .core import Grid1D, NumericalGuardError
from .solver import DetectorSpec


class StabilityError(NumericalGuardError):
    def __init__(self, message: str):
        super().__init__("cfl", message)


@dataclass(frozen=True)
class DiffusionSpec:
    """Release point, diffusion coefficient, drift and absorbing wall(s) of a 1-D Brownian particle.

    ``far_boundary``, when set, is a second absorbing wall on the far side of the domain.
    """

    x0: float
    diffusion_coeff: float
    drift: float = 0.0
    boundary: DetectorSpec = field(default_factory=lambda: DetectorSpec(0.0))
    horizon: float = 50.0
    dt: float = 1e-4
    n_paths: int = 100_000
    far_boundary: float | None = None

    def __post_init__(self):
        if not self.diffusion_coeff > 0:
            raise ValueError("diffusion_coeff must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        lo, hi = self.walls
        if not lo < self.x0 < hi:
            raise ValueError(f"x0={self.x0} must lie strictly inside ({lo}, {hi})")

    @property
    def walls(self) -> tuple[float, float]:
        """(lower, upper) absorbing positions; infinite where there is no wall."""
        far = self.far_boundary
        if self.boundary.side == "right":
            return self.boundary.location, (math.inf if far is None else far)
        return (-math.inf if far is None else far), self.boundary.location

    @property
    def distance(self) -> float:
        return abs(self.x0 - self.boundary.location)

    @property
    def drift_away(self) -> float:
        """Drift component pointing away from the detector wall."""
        return self.drift if self.boundary.side == "right" else -self.drift

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


class FirstPassageSample(NamedTuple):
    hit_time: float
    hit_point: float

    @property
    def censored(self) -> bool:
        return math.isinf(self.hit_time)


@dataclass(frozen=True)
class FirstPassageSamples:
    """Per-path first-passage times; censored paths carry ``inf`` and a NaN hit point."""

    hit_time: np.ndarray
    hit_point: np.ndarray
    horizon: float

    def __len__(self):
        return self.hit_time.size

    def __getitem__(self, i) -> FirstPassageSample:
        return FirstPassageSample(float(self.hit_time[i]), float(self.hit_point[i]))

    @property
    def censored(self) -> np.ndarray:
        return np.isinf(self.hit_time)

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.censored))

    def empirical_cdf(self, t) -> np.ndarray:
        """Fraction of all paths (censored included) absorbed by time t."""
        hits = np.sort(self.hit_time[~self.censored])
        return np.searchsorted(hits, np.asarray(t, dtype=float), side="right") / len(self)


# block lengths (in fine steps) tried from coarsest to finest
_LEVELS = np.array([4096, 512, 64, 8, 1], dtype=np.int64)
# a block is taken only if the wall lies this many block standard deviations away
_SAFETY = 8.0


@njit(cache=True, parallel=True)
def _first_passage_kernel(x0, diff, drift, lo, hi, dt, n_steps, seeds, levels, safety,
                          hit_step, hit_wall):
    for p in prange(seeds.size):
        np.random.seed(seeds[p])
        x = x0
        k = 0
        hit_step[p] = -1
        hit_wall[p] = 0
        while k < n_steps:
            dist = min(x - lo, hi - x)
            m = 1
            for lev in levels:
                if lev > 1 and k + lev <= n_steps:
                    h = lev * dt
                    if dist > safety * math.sqrt(2.0 * diff * h) + abs(drift) * h:
                        m = lev
                        break
            h = m * dt
            xn = x + drift * h + math.sqrt(2.0 * diff * h) * np.random.standard_normal()
            k += m
            if xn <= lo:
                hit_step[p] = k
                hit_wall[p] = 0
                break
            if xn >= hi:
                hit_step[p] = k
                hit_wall[p] = 1
                break
            if m == 1:
                # Brownian-bridge probability of touching a wall inside the step
                if lo > -math.inf:
                    pb = math.exp(-(x - lo) * (xn - lo) / (diff * dt))
                    if pb > 1e-16 and np.random.random() < pb:
                        hit_step[p] = k
                        hit_wall[p] = 0
                        break
                if hi < math.inf:
                    pb = math.exp(-(hi - x) * (hi - xn) / (diff * dt))
                    if pb > 1e-16 and np.random.random() < pb:
                        hit_step[p] = k
                        hit_wall[p] = 1
                        break
            x = xn


def path_seeds(seed: int, n_paths: int) -> np.ndarray:
    """Independent per-path seeds, so results do not depend on thread scheduling."""
    return np.random.SeedSequence(seed).generate_state(n_paths, dtype=np.uint32).astype(np.int64)


def simulate_first_passage(spec: DiffusionSpec, seed: int, threads: int | None = None) -> FirstPassageSamples:
    """Euler-Maruyama paths with a Brownian-bridge crossing test, absorbed at the first hit.

    Far from every wall, blocks of 8 to 4096 fine steps are drawn as one Gaussian
    increment (exact in law for constant drift and diffusion); within reach of a wall
    the path advances in single steps of ``spec.dt`` with the bridge correction.
    Hit times are reported at the end of the step in which the hit occurs.
    """
    if threads is not None:
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    lo, hi = spec.walls
    seeds = path_seeds(seed, spec.n_paths)
    steps = np.empty(spec.n_paths, dtype=np.int64)
    walls = np.empty(spec.n_paths, dtype=np.int64)
    _first_passage_kernel(float(spec.x0), float(spec.diffusion_coeff), float(spec.drift),
                          float(lo), float(hi), float(spec.dt), spec.n_steps, seeds,
                          _LEVELS, _SAFETY, steps, walls)
    hit = steps >= 0
    times = np.where(hit, steps * spec.dt, np.inf)
    points = np.where(hit, np.where(walls == 0, lo, hi), np.nan)
    return FirstPassageSamples(times, points, spec.n_steps * spec.dt)


@dataclass(frozen=True)
class FptHistogram:
    edges: np.ndarray
    density: np.ndarray
    censored_fraction: float
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def fpt_density_histogram(samples: FirstPassageSamples, bin_width: float) -> FptHistogram:
    """Histogram of hit times normalised by the total path count.

    It integrates to the uncensored fraction; the censored mass is reported separately.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    n_bins = max(1, int(math.ceil(samples.horizon / bin_width - 1e-9)))
    edges = bin_width * np.arange(n_bins + 1)
    hits = samples.hit_time[~samples.censored]
    counts, _ = np.histogram(hits, bins=edges)
    density = counts / (len(samples) * bin_width)
    return FptHistogram(edges, density, samples.censored_fraction, len(samples))


def halfline_fpt_density(t, distance: float, diffusion_coeff: float, drift_away: float = 0.0):
    """First-passage density to a single wall by the method of images (inverse Gaussian)."""
    t = np.asarray(t, dtype=float)
    ts = np.where(t > 0, t, 1.0)
    d, D, v = distance, diffusion_coeff, drift_away
    dens = d / np.sqrt(4 * math.pi * D * ts**3) * np.exp(-((d + v * ts) ** 2) / (4 * D * ts))
    return np.where(t > 0, dens, 0.0)


def halfline_fpt_cdf(t, distance: float, diffusion_coeff: float, drift_away: float = 0.0):
    """Pr{tau <= t} for a single wall; tends to min(1, exp(-v d / D)) as t grows."""
    t = np.asarray(t, dtype=float)
    ts = np.where(t > 0, t, 1.0)
    d, D, v = distance, diffusion_coeff, drift_away
    s = np.sqrt(2 * D * ts)
    cdf = np.exp(log_ndtr(-(d + v * ts) / s)) + np.exp(-v * d / D + log_ndtr((v * ts - d) / s))
    return np.where(t > 0, np.minimum(cdf, 1.0), 0.0)


def ks_distance(samples: FirstPassageSamples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the sampled hit-time distribution and ``cdf``.

    Censored paths count as not absorbed; the supremum runs over [0, horizon].
    """
    n = len(samples)
    hits = np.sort(samples.hit_time[~samples.censored])
    if hits.size == 0:
        return float(abs(cdf(samples.horizon)))
    f = np.asarray(cdf(hits), dtype=float)
    right = np.searchsorted(hits, hits, side="right") / n
    left = np.searchsorted(hits, hits, side="left") / n
    dist = max(np.max(np.abs(right - f)), np.max(np.abs(left - f)))
    tail = abs(hits.size / n - float(cdf(samples.horizon)))
    return float(max(dist, tail))


@dataclass(frozen=True)
class FokkerPlanckResult:
    """Density snapshots and boundary bookkeeping of an absorbing Fokker-Planck run.

    ``boundary_current[k]`` is the flux into the detector wall during step k and
    ``far_current`` the flux into an absorbing far wall (zero for a reflecting edge).
    ``surviving_mass[k]`` is the trapezoidal mass after k steps.
    """

    grid: Grid1D
    dt: float
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    boundary_current: np.ndarray
    far_current: np.ndarray
    surviving_mass: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.surviving_mass.size)

    @property
    def absorbed(self) -> np.ndarray:
        """Cumulative probability absorbed by the detector at each output time."""
        return np.concatenate([[0.0], np.cumsum(self.boundary_current) * self.dt])

    @property
    def far_absorbed(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.far_current) * self.dt])

    def cdf(self, t):
        """Pr{tau <= t} at the detector, linear between output times."""
        return np.interp(t, self.times, self.absorbed)


def _edge_roles(spec: DiffusionSpec, grid: Grid1D) -> tuple[bool, bool, int]:
    """(left absorbing, right absorbing, detector edge index) for this grid."""
    tol = 1e-9 * max(1.0, abs(grid.x_min), abs(grid.x_max))
    loc = spec.boundary.location
    if spec.boundary.side == "right" and abs(loc - grid.x_min) <= tol:
        det = 0
    elif spec.boundary.side == "left" and abs(loc - grid.x_max) <= tol:
        det = grid.n_points - 1
    else:
        raise ValueError(
            f"no absorbing boundary on the grid: detector at {loc} ({spec.boundary.side}) "
            f"is not an edge of [{grid.x_min}, {grid.x_max}]"
        )
    far_edge = grid.x_max if det == 0 else grid.x_min
    far_abs = False
    if spec.far_boundary is not None:
        if abs(spec.far_boundary - far_edge) > tol:
            raise ValueError(f"far boundary {spec.far_boundary} is not the grid edge {far_edge}")
        far_abs = True
    left_abs = det == 0 or far_abs
    right_abs = det != 0 or far_abs
    return left_abs, right_abs, det


def _initial_delta(spec: DiffusionSpec, grid: Grid1D, left_abs: bool, right_abs: bool) -> np.ndarray:
    n, dx = grid.n_points, grid.dx
    f = (spec.x0 - grid.x_min) / dx
    j = int(math.floor(f))
    w = f - j
    if not 0 <= f <= n - 1:
        raise ValueError(f"x0={spec.x0} lies outside the grid")
    cell = np.full(n, dx)
    cell[0] = cell[-1] = dx / 2
    p = np.zeros(n)
    p[j] += (1.0 - w) / cell[j]
    if w > 0:
        p[j + 1] += w / cell[j + 1]
    if (left_abs and p[0] != 0) or (right_abs and p[-1] != 0):
        raise ValueError("x0 must lie strictly inside the grid interior")
    return p


def _check_stability(spec: DiffusionSpec, dx: float):
    D, v, dt = spec.diffusion_coeff, abs(spec.drift), spec.dt
    if v * dx > 2 * D:
        raise StabilityError(f"cell Peclet number {v * dx / (2 * D):.3g} > 1; refine dx below {2 * D / v:.3g}")
    dt_max = 1.0 / (2 * D / dx**2 + v / dx)
    if dt > dt_max * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.6g} exceeds the explicit stability limit {dt_max:.6g}")


@njit(cache=True)
def _fp_advance(p, n_steps, r, q, left_abs, right_abs, dx, dt, cur_left, cur_right, mass, offset):
    n = p.size
    g = np.empty(n - 1)
    for s in range(n_steps):
        # g[j] = dt/dx * flux through the face between nodes j and j+1
        for j in range(n - 1):
            g[j] = q * (p[j] + p[j + 1]) - r * (p[j + 1] - p[j])
        for j in range(1, n - 1):
            p[j] -= g[j] - g[j - 1]
        if left_abs:
            cur_left[offset + s] = -g[0] * dx / dt
            p[0] = 0.0
        else:
            p[0] -= 2.0 * g[0]
        if right_abs:
            cur_right[offset + s] = g[n - 2] * dx / dt
            p[n - 1] = 0.0
        else:
            p[n - 1] += 2.0 * g[n - 2]
        m = 0.5 * (p[0] + p[n - 1])
        for j in range(1, n - 1):
            m += p[j]
        mass[offset + s + 1] = m * dx


def fokker_planck_absorbing(spec: DiffusionSpec, grid: Grid1D, n_steps: int | None = None,
                            save_every: int | None = None) -> FokkerPlanckResult:
    """Explicit conservative scheme for dp/dt = D p'' - v p' started from a delta at x0.

    The detector edge is absorbing; the other edge is absorbing when ``far_boundary``
    matches it and reflecting otherwise. Raises :class:`StabilityError` when ``spec.dt``
    would break positivity.
    """
    n_steps = spec.n_steps if n_steps is None else int(n_steps)
    dx, dt = grid.dx, spec.dt
    _check_stability(spec, dx)
    left_abs, right_abs, det = _edge_roles(spec, grid)
    p = _initial_delta(spec, grid, left_abs, right_abs)
    r = spec.diffusion_coeff * dt / dx**2
    q = spec.drift * dt / (2 * dx)
    cur_left = np.zeros(n_steps)
    cur_right = np.zeros(n_steps)
    mass = np.empty(n_steps + 1)
    mass[0] = float(np.trapezoid(p, dx=dx))
    save_every = save_every or max(n_steps, 1)
    snaps, snap_t = [p.copy()], [0.0]
    done = 0
    while done < n_steps:
        chunk = min(save_every, n_steps - done)
        _fp_advance(p, chunk, r, q, left_abs, right_abs, dx, dt, cur_left, cur_right, mass, done)
        done += chunk
        snaps.append(p.copy())
        snap_t.append(done * dt)
    if det == 0:
        det_cur, far_cur = cur_left, cur_right
    else:
        det_cur, far_cur = cur_right, cur_left
    return FokkerPlanckResult(grid, dt, np.array(snap_t), np.array(snaps), det_cur, far_cur, mass)


def mean_residence(spec: DiffusionSpec, grid: Grid1D) -> np.ndarray:
    """Mean time spent near each grid point before absorption, for a unit source at x0.

    Solves the stationary equation D p'' - v p' = -delta(x - x0) with the same flux
    discretisation as :func:`fokker_planck_absorbing`; zero on absorbing edges.
    """
    left_abs, right_abs, _ = _edge_roles(spec, grid)
    n, dx = grid.n_points, grid.dx
    D, v = spec.diffusion_coeff, spec.drift
    src = _initial_delta(spec, grid, left_abs, right_abs)
    ab = np.zeros((3, n))  # rows: upper, main, lower diagonals
    a_minus = -(v / 2 + D / dx) / dx
    a_plus = (v / 2 - D / dx) / dx
    ab[1, 1:-1] = 2 * D / dx**2
    ab[2, :-2] = a_minus  # coefficient of p[j-1] in row j
    ab[0, 2:] = a_plus  # coefficient of p[j+1] in row j
    rhs = src.copy()
    if left_abs:
        ab[1, 0], ab[0, 1], rhs[0] = 1.0, 0.0, 0.0
    else:
        ab[1, 0] = (v / 2 + D / dx) * 2 / dx
        ab[0, 1] = (v / 2 - D / dx) * 2 / dx
    if right_abs:
        ab[1, -1], ab[2, -2], rhs[-1] = 1.0, 0.0, 0.0
    else:
        ab[2, -2] = -(v / 2 + D / dx) * 2 / dx
        ab[1, -1] = -(v / 2 - D / dx) * 2 / dx
    res = solve_banded((1, 1), ab, rhs)
    # pivoting leaves roundoff in the pinned rows
    if left_abs:
        res[0] = 0.0
    if right_abs:
        res[-1] = 0.0
    return res
