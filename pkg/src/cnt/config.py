"""Experiment configuration files.

Configurations are INI files read with :mod:`configparser`. Every section is
optional except ``[experiment]``, which must name the ``kind`` and the
``seed``. Example::

    [experiment]
    kind = validate
    seed = 7

    [scene]
    speckle_grain = 8
    d_ome = 2.0

    [trajectory]
    kind = constant-velocity
    velocity = 1.5, 0
    duration = 1.0

    [tracking]
    n = 1
    omega = 50

The optional ``[input]`` section names files consumed by the ``aggregate``,
``optimize``, ``track`` and ``plot`` commands (``events``, ``results``);
relative paths are resolved against the configuration file's directory.

Lists are comma separated; integer ranges may be written ``1-10``.
Waypoints and legs are ``;``-separated triples, e.g.
``waypoints = 0 0 0; 2 1 1; 4 2 0``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .filtering import SHAPES
from .objective import ObjectiveWeights, SearchDomain
from .scene import EventCameraModel, FrameCamera, SceneConfig, TrajectorySpec

KINDS = ("validate", "sweep-n", "optimize-joint", "sweep-speed", "sweep-illumination",
         "trajectory")


@dataclass(frozen=True)
class TrackingConfig:
    """CNT settings; ``n`` or ``omega`` left as None are chosen by the optimizer."""

    n: Optional[int] = None
    omega: Optional[int] = None
    tau: float = 0.040
    filter_shape: str = "ideal-circular"
    maps_per_eval: int = 8

    def __post_init__(self):
        if self.n is not None and self.n < 1:
            raise ConfigurationError("tracking.n must be positive")
        if self.omega is not None and self.omega < 1:
            raise ConfigurationError("tracking.omega must be positive")
        if not self.tau > 0:
            raise ConfigurationError("tracking.tau must be positive")
        if self.filter_shape not in SHAPES:
            raise ConfigurationError(f"unknown filter shape {self.filter_shape!r}")
        if self.maps_per_eval < 2:
            raise ConfigurationError("tracking.maps_per_eval must be >= 2")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``event_camera.noise_rate`` is the rate at illumination 1; each condition
    scales it inversely with its illumination. For sweeps over speed, the
    trajectory's velocity supplies the direction, and each condition runs for
    ``clamp(travel_budget / v, min_duration, trajectory.duration)`` seconds.
    """

    kind: str
    seed: int
    scene: SceneConfig = SceneConfig()
    trajectory: TrajectorySpec = TrajectorySpec.constant((1.5, 0.0), 1.0)
    frame_camera: FrameCamera = FrameCamera()
    event_camera: EventCameraModel = EventCameraModel()
    domain: SearchDomain = SearchDomain()
    weights: ObjectiveWeights = ObjectiveWeights()
    tracking: TrackingConfig = TrackingConfig()
    speeds: tuple = (0.5, 1.0, 2.0, 3.3, 5.0, 10.0, 20.0)
    illuminations: tuple = (1.0, 0.5, 0.25, 0.17, 0.086)
    n_values: tuple = tuple(range(1, 11))
    travel_budget: float = 3.0
    min_duration: float = 0.4
    out_dir: Optional[str] = None
    events_path: Optional[str] = None
    results_path: Optional[str] = None
    trajectory_given: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        if not self.speeds or any(v <= 0 for v in self.speeds):
            raise ConfigurationError("speeds must be positive")
        if not self.illuminations or any(i <= 0 for i in self.illuminations):
            raise ConfigurationError("illuminations must be positive")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigurationError("n_values must be positive integers")
        if not self.travel_budget > 0 or not self.min_duration > 0:
            raise ConfigurationError("travel_budget and min_duration must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# --- parsing helpers ----------------------------------------------------------

def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"expected numbers, got {text!r}") from None


def _ints(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigurationError(f"expected integers or ranges, got {text!r}") from None
    return tuple(out)


def _triples(text: str) -> tuple:
    rows = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = chunk.replace(",", " ").split()
        if len(vals) != 3:
            raise ConfigurationError(f"expected three numbers per entry, got {chunk.strip()!r}")
        try:
            rows.append(tuple(float(v) for v in vals))
        except ValueError:
            raise ConfigurationError(f"expected numbers, got {chunk.strip()!r}") from None
    return tuple(rows)


def _optional_int(text: str) -> Optional[int]:
    if text.strip().lower() in ("", "auto", "none"):
        return None
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"expected an integer or 'auto', got {text!r}") from None


def _section(cp, name: str, cls, conv: dict) -> dict:
    if not cp.has_section(name):
        return {}
    known = {f.name for f in dataclasses.fields(cls)}
    out = {}
    for key, raw in cp.items(name):
        if key not in known and key not in conv:
            raise ConfigurationError(f"[{name}] unknown key {key!r}")
        try:
            out[key] = conv[key](raw) if key in conv else raw
        except ConfigurationError:
            raise
        except ValueError:
            raise ConfigurationError(f"[{name}] {key}: invalid value {raw!r}") from None
    return out


def _typed(cls) -> dict:
    conv = {}
    for f in dataclasses.fields(cls):
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        if t in ("int",):
            conv[f.name] = int
        elif t in ("float",):
            conv[f.name] = float
        elif t in ("bool",):
            conv[f.name] = lambda s: s.strip().lower() in ("1", "true", "yes", "on")
    return conv


def _trajectory(cp) -> TrajectorySpec:
    if not cp.has_section("trajectory"):
        return ExperimentConfig.trajectory
    sec = cp["trajectory"]
    kind = sec.get("kind", "constant-velocity")
    unknown = set(sec) - {"kind", "velocity", "duration", "legs", "waypoints"}
    if unknown:
        raise ConfigurationError(f"[trajectory] unknown key(s) {sorted(unknown)}")
    duration = float(sec["duration"]) if "duration" in sec else None
    if kind == "constant-velocity":
        vel = _floats(sec.get("velocity", "1.5, 0"))
        if len(vel) != 2:
            raise ConfigurationError("[trajectory] velocity needs two components")
        return TrajectorySpec.constant(vel, 1.0 if duration is None else duration)
    if kind == "waypoint-path":
        return TrajectorySpec.from_waypoints(_triples(sec.get("waypoints", "")), duration)
    if kind == "piecewise-linear":
        return TrajectorySpec.from_legs(_triples(sec.get("legs", "")), duration)
    raise ConfigurationError(f"unknown trajectory kind {kind!r}")


def _inputs(cp, base: Optional[Path]) -> dict:
    if not cp.has_section("input"):
        return {}
    sec = cp["input"]
    unknown = set(sec) - {"events", "results"}
    if unknown:
        raise ConfigurationError(f"[input] unknown key(s) {sorted(unknown)}")
    out = {}
    for key in ("events", "results"):
        if key in sec:
            p = Path(sec[key].strip())
            if base is not None and not p.is_absolute():
                p = base / p
            out[f"{key}_path"] = str(p)
    return out


def parse_config(text: str, seed_override: Optional[int] = None,
                 out_dir: Optional[str] = None, base_dir=None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from INI text."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigurationError("missing [experiment] section")
    exp = cp["experiment"]
    if "kind" not in exp:
        raise ConfigurationError("[experiment] kind is required")
    if "seed" not in exp and seed_override is None:
        raise ConfigurationError("[experiment] seed is required")
    try:
        seed = int(exp["seed"]) if seed_override is None else int(seed_override)
    except ValueError:
        raise ConfigurationError("[experiment] seed must be an integer") from None
    extra = set(exp) - {"kind", "seed", "speeds", "illuminations", "n_values",
                        "travel_budget", "min_duration", "out"}
    if extra:
        raise ConfigurationError(f"[experiment] unknown key(s) {sorted(extra)}")

    scene = SceneConfig(**_section(cp, "scene", SceneConfig, _typed(SceneConfig)))
    frame = FrameCamera(**_section(cp, "frame_camera", FrameCamera, _typed(FrameCamera)))
    event = EventCameraModel(**_section(cp, "event_camera", EventCameraModel,
                                        _typed(EventCameraModel)))
    weights = ObjectiveWeights(**_section(cp, "objective", ObjectiveWeights,
                                          _typed(ObjectiveWeights)))
    dom = _section(cp, "search", SearchDomain, {"n_set": _ints, "omega_set": _ints})
    domain = SearchDomain(**dom)
    tconv = _typed(TrackingConfig)
    tconv.update(n=_optional_int, omega=_optional_int)
    tracking = TrackingConfig(**_section(cp, "tracking", TrackingConfig, tconv))

    kw = {}
    if "speeds" in exp:
        kw["speeds"] = _floats(exp["speeds"])
    if "illuminations" in exp:
        kw["illuminations"] = _floats(exp["illuminations"])
    if "n_values" in exp:
        kw["n_values"] = _ints(exp["n_values"])
    for key in ("travel_budget", "min_duration"):
        if key in exp:
            kw[key] = float(exp[key])
    return ExperimentConfig(kind=exp["kind"].strip(), seed=seed, scene=scene,
                            trajectory=_trajectory(cp), frame_camera=frame,
                            event_camera=event, domain=domain, weights=weights,
                            tracking=tracking, out_dir=out_dir or exp.get("out"),
                            trajectory_given=cp.has_section("trajectory"),
                            **_inputs(cp, None if base_dir is None else Path(base_dir)), **kw)


def load_config(path, seed_override: Optional[int] = None,
                out_dir: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, seed_override, out_dir, path.parent)
