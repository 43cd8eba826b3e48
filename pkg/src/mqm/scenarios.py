"""Named experiments: each runner computes, writes its files and returns a summary mapping."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.integrate import quad

from . import analytic
from .arrival import arrival_point_pdf
from .config import ScenarioConfig
from .core import Grid1D, ScreenMeasurement, WaveField
from .diffusion import (fokker_planck_absorbing, fpt_density_histogram, halfline_fpt_cdf,
                        halfline_fpt_density, ks_distance, mean_residence, simulate_first_passage)
from .io import ResultWriter
from .reconstruct import reconstruct_density, rotate_frame, synthetic_measurements
from .solver import DetectorSpec, absorbed_probability, evolve_dirichlet, far_edge_distance


def _record_summary(record) -> dict:
    absorbed = absorbed_probability(record)
    out = {
        "final_survival": record.final_survival,
        "absorbed_probability": absorbed,
        "bookkeeping_residual": abs(absorbed - (1.0 - record.final_survival)),
        "survival_non_increasing": bool(np.all(np.diff(record.survival) <= 0)),
    }
    return out


def _write_record(writer: ResultWriter, name: str, record):
    writer.write_series(name, {"t": record.times, "grad_sq": record.grad_sq,
                               "survival": record.survival, "current": record.current})


def run_halfline(cfg: ScenarioConfig, writer: ResultWriter, threads=None) -> dict:
    pk, pp, nm = cfg.packet, cfg.params, cfg.numerics
    t_final, dt = nm["t_final"], nm["dt"]
    x_max = nm["x_max"] or pk.x0 + far_edge_distance(pk, t_final, pp)
    grid = Grid1D.from_spacing(0.0, x_max, nm["dx"])
    init = WaveField.from_function(
        grid, lambda x: analytic.halfline_images_1d(x, 0.0, pk, pp, normalized=True, method="images"))
    n_steps = int(round(t_final / dt))
    snaps = np.linspace(0, n_steps, nm["n_snapshots"] + 2).round().astype(int)[1:-1]
    res = evolve_dirichlet(init, None, DetectorSpec(0.0), dt, n_steps, pp,
                           snapshot_steps=snaps, guard_tol=nm["guard_tol"])
    rec = res.record
    _write_record(writer, "survival.csv", rec)

    x = grid.points
    snap_t = np.array([s.time for s in res.snapshots])
    surv_at = np.interp(snap_t, rec.times, rec.survival)
    dens = np.array([np.abs(s.amplitudes) ** 2 for s in res.snapshots]) * surv_at[:, None]
    writer.write_grid("discounted_density.csv", dens, ("t", snap_t), ("x", x), "S(t)|psi_B(x,t)|^2")

    final = res.snapshots[-1]
    exact = analytic.halfline_images_1d(x, final.time, pk, pp, normalized=True, method="images")
    err = float(np.max(np.abs(final.amplitudes - exact)) / np.max(np.abs(exact)))
    integral, _ = quad(lambda t: float(analytic.wall_gradient_sq(t, pk, pp, True, "images")),
                       0.0, rec.times[-1], epsabs=1e-14, epsrel=1e-12, limit=400)
    s_exact = math.exp(-pp.absorption_rate_constant * integral)
    summary = _record_summary(rec)
    summary.update({
        "analytic_final_survival": s_exact,
        "survival_error": abs(rec.final_survival - s_exact),
        "linf_relative_error_vs_images": err,
        "norm_drift": abs(res.final_norm - res.initial_norm),
        "grid": {"x_max": x_max, "n_points": grid.n_points, "dx": grid.dx},
        "n_steps": n_steps,
    })
    return summary


def run_gaussian_slit(cfg: ScenarioConfig, writer: ResultWriter, threads=None) -> dict:
    pk, pp, nm, geom = cfg.packet, cfg.params, cfg.numerics, cfg.slit
    times = np.linspace(0.0, nm["t_final"], nm["n_times"])
    y = np.linspace(-nm["y_max"], nm["y_max"], nm["n_y"])
    cur = analytic.slit_absorption_rate(y[None, :], times[:, None], geom, pk, pp)
    writer.write_grid("screen_current.csv", cur, ("t", times), ("y", y), "J(0,y,t)")

    meas = ScreenMeasurement("screen-0", y, times, cur)
    pts = arrival_point_pdf(meas)
    writer.write_series("arrival_points.csv", {"position": pts.points, "density": pts.density})

    tp = times[times > 0]
    ratio = cur[times > 0] / analytic.screen_density_feynman(y[None, :], tp[:, None], geom, pk, pp)
    bright = analytic.relative_brightness(tp, geom, pk, pp)
    spread = (ratio.max(axis=1) - ratio.min(axis=1)) / np.abs(ratio).max(axis=1)
    writer.write_series("brightness.csv", {
        "t": tp, "relative_brightness": bright,
        "relative_brightness_simplified": analytic.relative_brightness_simplified(tp, geom, pk, pp),
        "ratio_relative_spread": spread,
    })
    k = np.linspace(-8.0, 8.0, 801)
    writer.write_series("velocity_density.csv", {"k": k, "density": analytic.slit_velocity_density(k)})
    return {
        "max_ratio_relative_spread": float(spread.max()),
        "max_brightness_mismatch": float(np.max(np.abs(ratio.mean(axis=1) - bright) / bright)),
        "arrival_point_mass": pts.total_mass,
    }


def run_lateral_walls(cfg: ScenarioConfig, writer: ResultWriter, threads=None) -> dict:
    pp, nm, geom = cfg.params, cfg.numerics, cfg.slit
    y0, half = geom.y0, geom.slit_half_width
    grid = Grid1D.from_spacing(-y0, y0, nm["dy"])
    # a finite mode sum of the top-hat slit: smooth and exactly zero on both walls
    amps = analytic.box_expansion(grid.points, 0.0, y0, nm["initial_modes"], pp, "standard", half)
    amps = amps / math.sqrt(np.trapezoid(np.abs(amps) ** 2, dx=grid.dx))
    init = WaveField(grid, amps)
    n_steps = int(round(nm["t_final"] / nm["dt"]))
    walls = [DetectorSpec(-y0, "right"), DetectorSpec(y0, "left")]
    res = evolve_dirichlet(init, None, walls, nm["dt"], n_steps, pp)
    _write_record(writer, "wall_survival.csv", res.record)

    y = np.linspace(-y0, y0, nm["n_y"])
    pt = np.array(nm["pattern_times"])
    pattern = np.abs(analytic.box_expansion(y[None, :], pt[:, None], y0, nm["pattern_modes"], pp)) ** 2
    writer.write_grid("screen_pattern.csv", pattern, ("t", pt), ("y", y), "|psi^2(y,t)|^2 (printed series)")
    summary = _record_summary(res.record)
    summary["norm_drift"] = abs(res.final_norm - res.initial_norm)
    return summary


def reconstruction_grids(cfg: ScenarioConfig):
    """Target grid and screen sampling for the reconstruction scenario.

    Every axis is an integer multiple of ``position_step`` so that, for a quarter turn,
    the positions the reconstruction asks for are sampled exactly.
    """
    pk, pp, nm = cfg.packet, cfg.params, cfg.numerics
    h, k, t = nm["position_step"], nm["half_widths"], nm["t"]
    wx = math.sqrt(analytic.spread_width(t, pk.sigma_x, pp) / 2)
    wy = math.sqrt(analytic.spread_width(t, pk.sigma_y, pp) / 2)
    ix = np.arange(math.floor((pk.x0 - k * wx) / h), math.ceil((pk.x0 + k * wx) / h) + 1)
    iy = np.arange(-math.ceil(k * wy / h), math.ceil(k * wy / h) + 1)
    x, y = ix * h, iy * h
    reach = max(abs(x).max(), abs(y).max(), abs(nm["a_prime"])) * 2 + abs(nm["a_prime"])
    ip = np.arange(-math.ceil(reach / h), math.ceil(reach / h) + 1)
    return x, y, ip * h


def run_reconstruction(cfg: ScenarioConfig, writer: ResultWriter, threads=None) -> dict:
    pk, pp, nm = cfg.packet, cfg.params, cfg.numerics
    frame = rotate_frame(nm["theta"], nm["a_prime"])
    x, y, pos = reconstruction_grids(cfg)
    times = sorted(set(nm["times"]) | {nm["t"]})
    m0, m1 = synthetic_measurements(pk, pp, frame, pos, pos, times)
    res = reconstruct_density(m0, m1, frame, nm["t"], x, y, eps=nm["eps"])
    writer.write_grid("screen0_current.csv", m0.current, ("t", m0.times), ("y", m0.positions), "J(0,y,t)")
    writer.write_grid("screen_rotated_current.csv", m1.current, ("t", m1.times), ("y'", m1.positions),
                      "J~(a',y',t)")
    writer.write_grid("density.csv", res.density, ("y", y), ("x", x), "|psi_F(x,y,t)|^2")
    writer.write_grid("mask.csv", res.mask.astype(float), ("y", y), ("x", x), "1 where masked")

    ref = analytic.free_density_2d(x[None, :], y[:, None], nm["t"], pk, pp, normalized=True)
    ref = ref / np.trapezoid(np.trapezoid(ref, x, axis=1), y)
    ok = ~res.mask
    err = float(np.max(np.abs(res.density - ref)[ok] / ref[ok])) if ok.any() else math.nan
    return {
        "linf_relative_error": err,
        "unmasked_fraction": res.unmasked_fraction,
        "integral": float(np.trapezoid(np.trapezoid(res.density, x, axis=1), y)),
        "inverse_normalization": res.inverse_normalization,
        "frame": {"theta": frame.theta, "a_prime": frame.a_prime},
        "metadata": res.metadata,
    }


def _fp_grid(spec, length: float) -> tuple[float, float]:
    loc, far = spec.boundary.location, spec.far_boundary
    if spec.boundary.side == "right":
        return loc, (far if far is not None else loc + length)
    return (far if far is not None else loc - length), loc


def run_diffusion_compare(cfg: ScenarioConfig, writer: ResultWriter, threads=None) -> dict:
    spec, nm = cfg.diffusion, cfg.numerics
    samples = simulate_first_passage(spec, cfg.seed, threads)
    lo, hi = _fp_grid(spec, nm["fp_length"])
    grid = Grid1D.from_spacing(lo, hi, nm["fp_dx"])
    D, v, dx = spec.diffusion_coeff, abs(spec.drift), grid.dx
    fp_dt = nm["fp_dt"] or 0.5 / (2 * D / dx**2 + v / dx)
    n_fp = int(math.ceil(spec.horizon / fp_dt))
    fp_spec = dataclasses.replace(spec, dt=spec.horizon / n_fp)
    fp = fokker_planck_absorbing(fp_spec, grid, n_fp, save_every=max(1, n_fp // 10))

    hist = fpt_density_histogram(samples, nm["bin_width"])
    single_wall = spec.far_boundary is None
    exact = lambda t: halfline_fpt_cdf(t, spec.distance, D, spec.drift_away)  # noqa: E731
    cols = {"t_center": hist.centers, "density_mc": hist.density}
    if single_wall:
        cols["density_exact"] = halfline_fpt_density(hist.centers, spec.distance, D, spec.drift_away)
    writer.write_series("fpt_histogram.csv", cols)

    stride = max(1, n_fp // 5000)
    idx = np.arange(0, n_fp + 1, stride)
    cur = np.concatenate([[0.0], fp.boundary_current])
    writer.write_series("fp_boundary.csv", {"t": fp.times[idx], "current": cur[idx],
                                            "surviving_mass": fp.surviving_mass[idx],
                                            "absorbed": fp.absorbed[idx]})
    writer.write_grid("fp_density.csv", fp.snapshots, ("t", fp.snapshot_times), ("x", grid.points),
                      "p(x,t|x0)")
    book = np.abs(fp.surviving_mass + fp.absorbed + fp.far_absorbed - 1.0)
    summary = {
        "ks_mc_vs_fp": ks_distance(samples, fp.cdf),
        "p_tau_le_1": float(samples.empirical_cdf(1.0)),
        "censored_fraction": samples.censored_fraction,
        "fp_bookkeeping_max_error": float(book.max()),
        "fp_min_density": float(fp.snapshots.min()),
        "fp_dt": fp_spec.dt,
        "n_paths": len(samples),
    }
    if single_wall:
        summary["ks_mc_vs_exact"] = ks_distance(samples, exact)
        summary["p_tau_le_1_exact"] = float(exact(1.0))
    else:
        res = mean_residence(spec, grid)
        writer.write_series("residence.csv", {"x": grid.points, "residence": res})
        summary["mean_absorption_time_pde"] = float(np.trapezoid(res, dx=grid.dx))
        summary["mean_absorption_time_mc"] = (float(np.mean(samples.hit_time))
                                             if not samples.censored.any() else math.inf)
    return summary


RUNNERS = {
    "halfline": run_halfline,
    "gaussian-slit": run_gaussian_slit,
    "lateral-walls": run_lateral_walls,
    "reconstruction": run_reconstruction,
    "diffusion-compare": run_diffusion_compare,
}


def run_scenario(cfg: ScenarioConfig, out_dir=None, threads=None) -> tuple[dict, ResultWriter]:
    """Run ``cfg`` into ``out_dir`` (default ``mqm-out/<scenario>``) and write summary and manifest."""
    writer = ResultWriter(out_dir or cfg.output_dir or f"mqm-out/{cfg.scenario}")
    writer.ensure_writable()
    summary = RUNNERS[cfg.scenario](cfg, writer, threads)
    writer.write_json("summary.json", summary)
    writer.write_manifest(cfg.scenario, cfg.resolved)
    return summary, writer
