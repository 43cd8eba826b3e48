"""Scenario configuration: YAML loading, defaults and field-level validation."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analytic import SlitGeometry
from .core import GaussianPacketSpec, PhysicalParams
from .diffusion import DiffusionSpec
from .solver import DetectorSpec

SCENARIOS = {
    "halfline": "Crank-Nicolson half-line evolution with an absorbing wall; survival and arrival times",
    "gaussian-slit": "Closed-form absorption rate and brightness on a screen behind a Gaussian slit",
    "lateral-walls": "Slit between absorbing lateral walls: screen pattern series and wall arrival times",
    "reconstruction": "Free-packet density recovered from currents on an original and a rotated screen",
    "diffusion-compare": "Brownian first passage: Monte Carlo against Fokker-Planck and the image solution",
}

# per-scenario sections that must be present, and numeric defaults
_REQUIRED = {
    "halfline": ("packet",),
    "gaussian-slit": ("packet", "slit"),
    "lateral-walls": ("slit",),
    "reconstruction": ("packet",),
    "diffusion-compare": ("diffusion",),
}

_NUMERICS = {
    "halfline": {"dx": 0.005, "dt": 1e-4, "t_final": 1.0, "x_max": None, "n_snapshots": 4,
                 "guard_tol": 1e-6},
    "gaussian-slit": {"t_final": 5.0, "n_times": 201, "y_max": 10.0, "n_y": 401},
    "lateral-walls": {"dy": 0.005, "dt": 1e-4, "t_final": 1.0, "initial_modes": 64,
                      "pattern_modes": 256, "pattern_times": [0.25, 0.5, 1.0], "n_y": 401},
    "reconstruction": {"theta": math.pi / 2, "a_prime": None, "t": 1.0, "position_step": 0.025,
                       "half_widths": 6.0, "times": [0.5, 1.0, 1.5], "eps": 1e-6},
    "diffusion-compare": {"fp_dx": 0.02, "fp_dt": None, "fp_length": 40.0, "bin_width": 0.05},
}


class ConfigError(ValueError):
    """Validation failure pinned to one config field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: PhysicalParams
    packet: GaussianPacketSpec | None
    slit: SlitGeometry | None
    diffusion: DiffusionSpec | None
    numerics: dict
    output_dir: str | None
    seed: int
    resolved: dict = field(compare=False, default_factory=dict)


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    return raw


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a mapping")
    return sec


def _number(sec: dict, prefix: str, key: str, default=None, *, positive=False, nonneg=False,
            required=False, integer=False):
    if key not in sec or sec[key] is None:
        if required:
            raise ConfigError(f"{prefix}.{key}", "is required")
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{prefix}.{key}", f"must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{prefix}.{key}", f"must be an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{prefix}.{key}", "must be finite")
    if positive and not val > 0:
        raise ConfigError(f"{prefix}.{key}", f"must be positive, got {val!r}")
    if nonneg and not val >= 0:
        raise ConfigError(f"{prefix}.{key}", f"must be non-negative, got {val!r}")
    return int(val) if integer else float(val)


def _check_keys(sec: dict, prefix: str, allowed):
    extra = sorted(set(sec) - set(allowed))
    if extra:
        raise ConfigError(f"{prefix}.{extra[0]}", f"unknown key (allowed: {', '.join(sorted(allowed))})")


def parse_config(raw: dict, *, seed: int | None = None, out: str | None = None) -> ScenarioConfig:
    """Validate a config mapping; ``seed`` and ``out`` override the file's values."""
    raw = copy.deepcopy(raw)
    _check_keys(raw, "config", ("scenario", "seed", "params", "packet", "slit", "diffusion",
                                "numerics", "output"))
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}")
    for sec in _REQUIRED[name]:
        if sec not in raw:
            raise ConfigError(sec, f"section is required for scenario {name!r}")

    if seed is None:
        seed = _number(raw, "config", "seed", 0, nonneg=True, integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    p = _section(raw, "params")
    _check_keys(p, "params", ("hbar", "mass", "lambda"))
    params = PhysicalParams(
        hbar=_number(p, "params", "hbar", 1.0, positive=True),
        mass=_number(p, "params", "mass", 1.0, positive=True),
        lam=_number(p, "params", "lambda", 1.0, nonneg=True),
    )

    packet = None
    if "packet" in raw:
        s = _section(raw, "packet")
        _check_keys(s, "packet", ("x0", "sigma_x", "sigma_y", "k0"))
        packet = GaussianPacketSpec(
            x0=_number(s, "packet", "x0", required=True),
            sigma_x=_number(s, "packet", "sigma_x", required=True, positive=True),
            sigma_y=_number(s, "packet", "sigma_y", 1.0, positive=True),
            k0=_number(s, "packet", "k0", 0.0),
        )
        if name == "halfline" and not packet.x0 > 0:
            raise ConfigError("packet.x0", "must be positive (distance from the wall at 0)")
        if name == "reconstruction" and not packet.x0 > 0:
            raise ConfigError("packet.x0", "must be positive (distance from the screen at 0)")

    slit = None
    if "slit" in raw:
        s = _section(raw, "slit")
        _check_keys(s, "slit", ("x0", "screen_at", "y0", "slit_half_width"))
        x0_default = packet.x0 if packet is not None else None
        x0 = _number(s, "slit", "x0", x0_default, required=x0_default is None)
        half = _number(s, "slit", "slit_half_width", math.pi / 2, positive=True)
        y0 = _number(s, "slit", "y0", None, positive=True, required=name == "lateral-walls")
        try:
            slit = SlitGeometry(x0, _number(s, "slit", "screen_at", 0.0), y0, half)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("slit", str(exc)) from exc

    diffusion = None
    if "diffusion" in raw:
        s = _section(raw, "diffusion")
        _check_keys(s, "diffusion", ("x0", "diffusion_coeff", "drift", "boundary", "horizon", "dt",
                                     "n_paths", "far_boundary"))
        b = _section(s, "boundary")
        _check_keys(b, "diffusion.boundary", ("location", "side"))
        side = b.get("side", "right")
        if side not in ("right", "left"):
            raise ConfigError("diffusion.boundary.side", f"must be 'right' or 'left', got {side!r}")
        try:
            diffusion = DiffusionSpec(
                x0=_number(s, "diffusion", "x0", required=True),
                diffusion_coeff=_number(s, "diffusion", "diffusion_coeff", required=True, positive=True),
                drift=_number(s, "diffusion", "drift", 0.0),
                boundary=DetectorSpec(_number(b, "diffusion.boundary", "location", 0.0), side),
                horizon=_number(s, "diffusion", "horizon", 50.0, positive=True),
                dt=_number(s, "diffusion", "dt", 1e-4, positive=True),
                n_paths=_number(s, "diffusion", "n_paths", 100_000, positive=True, integer=True),
                far_boundary=_number(s, "diffusion", "far_boundary", None),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("diffusion", str(exc)) from exc

    n = _section(raw, "numerics")
    defaults = _NUMERICS[name]
    _check_keys(n, "numerics", defaults)
    numerics = {}
    for key, default in defaults.items():
        if isinstance(default, list):
            vals = n.get(key, default)
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"numerics.{key}", "must be a non-empty list of numbers")
            numerics[key] = [_number({key: v}, "numerics", key, positive=True) for v in vals]
        elif key in ("theta", "a_prime", "x_max"):
            numerics[key] = _number(n, "numerics", key, default)
        else:
            is_int = key.startswith("n_") or key.endswith("_modes")
            numerics[key] = _number(n, "numerics", key, default, positive=True, integer=is_int)
    if name == "reconstruction" and numerics["a_prime"] is None:
        numerics["a_prime"] = packet.x0 * math.cos(numerics["theta"])

    o = _section(raw, "output")
    _check_keys(o, "output", ("dir",))
    out_dir = out if out is not None else o.get("dir")

    resolved = {
        "scenario": name,
        "seed": int(seed),
        "params": {"hbar": params.hbar, "mass": params.mass, "lambda": params.lam},
        "numerics": numerics,
    }
    if packet is not None:
        resolved["packet"] = {"x0": packet.x0, "sigma_x": packet.sigma_x, "sigma_y": packet.sigma_y,
                              "k0": packet.k0}
    if slit is not None:
        resolved["slit"] = {"x0": slit.x0, "screen_at": slit.screen_at, "y0": slit.y0,
                            "slit_half_width": slit.slit_half_width}
    if diffusion is not None:
        resolved["diffusion"] = {
            "x0": diffusion.x0, "diffusion_coeff": diffusion.diffusion_coeff, "drift": diffusion.drift,
            "boundary": {"location": diffusion.boundary.location, "side": diffusion.boundary.side},
            "horizon": diffusion.horizon, "dt": diffusion.dt, "n_paths": diffusion.n_paths,
            "far_boundary": diffusion.far_boundary,
        }
    return ScenarioConfig(name, params, packet, slit, diffusion, numerics, out_dir, int(seed), resolved)
