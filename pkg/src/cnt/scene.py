"""Synthetic speckle scenes rendered as frame-camera sequences and event streams.

The hidden object is never imaged directly. Its lateral displacement ``d``
(millimetres) translates a fully developed speckle pattern on the sensor by
``d * px_per_mm`` pixels. The memory effect is modelled by letting the
complex amplitude rotate smoothly from one independent realisation to the
next as the object travels: after ``d_ome`` of travel the intensity
correlation with the starting pattern is 1/2, after ``2 d_ome`` it is 0.

Frame cameras integrate that pattern over the exposure and add shot noise,
a static fixed-pattern offset and 8-bit quantisation. Event cameras emit a
polarity event each time the per-pixel log intensity moves by the contrast
threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .errors import ConfigurationError, RangeError
from .events import EventStream

#: Lux value mapped to illumination 1.0; illumination is linear in lux.
REFERENCE_LUX = 10.5

#: Slack used when counting threshold crossings, so that a change of exactly
#: ``k * D`` yields ``k`` events despite rounding in the logarithm.
CROSSING_TOL = 1e-9

_TAG_FIELD, _TAG_FRAMES, _TAG_FPN, _TAG_EVENT_NOISE = 0, 1, 2, 3


def lux_to_illumination(lux: float) -> float:
    """Map a lux value onto the dimensionless illumination scale (10.5 lux -> 1)."""
    return float(lux) / REFERENCE_LUX


def illumination_to_lux(illumination: float) -> float:
    return float(illumination) * REFERENCE_LUX


def _rng(seed: int, tag: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag, *extra]))


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneConfig:
    """Sensor geometry, speckle statistics and calibration of a synthetic scene.

    ``max_displacement`` (mm) is the padding budget: the rendered field
    extends ``ceil(max_displacement * px_per_mm)`` pixels beyond the sensor on
    every side so that any displacement up to that magnitude samples real data.
    """

    grid_width: int = 346
    grid_height: int = 260
    speckle_grain: float = 8.0
    px_per_mm: float = 7.5
    d_ome: float = 2.0
    illumination: float = 1.0
    rng_seed: int = 0
    max_displacement: float = 4.0

    def __post_init__(self):
        if self.grid_width < 32 or self.grid_height < 32:
            raise ConfigurationError("grid dimensions must be >= 32 px")
        if not 1 <= self.speckle_grain <= min(self.grid_width, self.grid_height) / 8:
            raise ConfigurationError("speckle_grain must lie in [1, min(grid)/8] px")
        if not self.px_per_mm > 0:
            raise ConfigurationError("px_per_mm must be positive")
        if not self.d_ome > 0:
            raise ConfigurationError("d_ome must be positive")
        if not self.illumination > 0:
            raise ConfigurationError("illumination must be positive")
        if not self.max_displacement >= 0:
            raise ConfigurationError("max_displacement must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.grid_height, self.grid_width)

    @property
    def padding(self) -> int:
        return int(math.ceil(self.max_displacement * self.px_per_mm))

    def replace(self, **changes) -> "SceneConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class TrajectorySpec:
    """Ground-truth lateral motion of the hidden object.

    ``kind`` is one of ``constant-velocity`` (uses ``velocity``),
    ``piecewise-linear`` (``legs`` of ``(duration_s, vx, vy)``) or
    ``waypoint-path`` (``waypoints`` of ``(t_s, x_mm, y_mm)``).
    """

    kind: str
    duration: float
    velocity: tuple[float, float] = (0.0, 0.0)
    legs: tuple[tuple[float, float, float], ...] = ()
    waypoints: tuple[tuple[float, float, float], ...] = ()

    KINDS = ("constant-velocity", "piecewise-linear", "waypoint-path")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown trajectory kind {self.kind!r}")
        if not self.duration > 0:
            raise ConfigurationError("trajectory duration must be positive")
        if self.kind == "waypoint-path":
            if len(self.waypoints) < 2:
                raise ConfigurationError("waypoint-path needs at least two waypoints")
            ts = [w[0] for w in self.waypoints]
            if ts[0] != 0:
                raise ConfigurationError("first waypoint must be at t = 0")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ConfigurationError("waypoint times must be strictly increasing")
            if self.duration > ts[-1] + 1e-12:
                raise ConfigurationError("duration exceeds the last waypoint time")
        if self.kind == "piecewise-linear":
            if not self.legs or any(leg[0] <= 0 for leg in self.legs):
                raise ConfigurationError("piecewise-linear legs need positive durations")
            if self.duration > sum(leg[0] for leg in self.legs) + 1e-12:
                raise ConfigurationError("duration exceeds the summed leg durations")

    @classmethod
    def constant(cls, velocity: Sequence[float], duration: float) -> "TrajectorySpec":
        return cls("constant-velocity", float(duration),
                   velocity=(float(velocity[0]), float(velocity[1])))

    @classmethod
    def static(cls, duration: float) -> "TrajectorySpec":
        return cls.constant((0.0, 0.0), duration)

    @classmethod
    def from_waypoints(cls, waypoints, duration: float | None = None) -> "TrajectorySpec":
        wps = tuple((float(t), float(x), float(y)) for t, x, y in waypoints)
        return cls("waypoint-path", wps[-1][0] if duration is None else float(duration),
                   waypoints=wps)

    @classmethod
    def from_legs(cls, legs, duration: float | None = None) -> "TrajectorySpec":
        legs = tuple((float(d), float(vx), float(vy)) for d, vx, vy in legs)
        total = sum(leg[0] for leg in legs)
        return cls("piecewise-linear", total if duration is None else float(duration),
                   legs=legs)

    def _knots(self) -> np.ndarray:
        if self.kind == "waypoint-path":
            return np.asarray(self.waypoints, dtype=float)
        if self.kind == "piecewise-linear":
            pts = [(0.0, 0.0, 0.0)]
            for dur, vx, vy in self.legs:
                t, x, y = pts[-1]
                pts.append((t + dur, x + vx * dur, y + vy * dur))
            return np.asarray(pts)
        vx, vy = self.velocity
        return np.array([(0.0, 0.0, 0.0), (self.duration, vx * self.duration, vy * self.duration)])

    def position(self, t) -> np.ndarray:
        """Displacement (mm) at time(s) ``t``; shape ``(..., 2)``. No range check."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant-velocity":
            return t[..., None] * np.asarray(self.velocity)
        k = self._knots()
        return np.stack([np.interp(t, k[:, 0], k[:, 1]), np.interp(t, k[:, 0], k[:, 2])], -1)

    def travel(self, t) -> np.ndarray:
        """Path length (mm) covered between 0 and ``t``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant-velocity":
            return t * math.hypot(*self.velocity)
        k = self._knots()
        seg = np.hypot(np.diff(k[:, 1]), np.diff(k[:, 2]))
        return np.interp(t, k[:, 0], np.concatenate([[0.0], np.cumsum(seg)]))

    def path_length(self) -> float:
        return float(self.travel(self.duration))

    def max_speed(self) -> float:
        if self.kind == "constant-velocity":
            return math.hypot(*self.velocity)
        k = self._knots()
        return float(np.max(np.hypot(np.diff(k[:, 1]), np.diff(k[:, 2])) / np.diff(k[:, 0])))

    def max_excursion(self) -> float:
        """Largest |displacement| (mm) reached within the duration."""
        k = self._knots()
        ts = np.concatenate([k[:, 0][k[:, 0] < self.duration], [self.duration]])
        return float(np.max(np.hypot(*self.position(ts).T)))


def sample_trajectory(traj: TrajectorySpec, t: float) -> tuple[float, float]:
    """Displacement (mm) of the object at time ``t`` in ``[0, duration]``."""
    if not (0.0 <= t <= traj.duration + 1e-12):
        raise RangeError(f"t={t} outside [0, {traj.duration}]")
    x, y = traj.position(t)
    return float(x), float(y)


@dataclass(frozen=True)
class FrameCamera:
    """Fixed-exposure intensity camera.

    ``photons_per_ms`` is the mean photon count per pixel per millisecond at
    illumination 1. Noise comprises Poisson shot noise, a static
    fixed-pattern offset (std ``fixed_pattern_dn``, drawn once per camera),
    Gaussian read noise, the ``black_level_dn`` pedestal, and 8-bit rounding.
    """

    fps: float = 25.0
    exposure: float = 0.040
    photons_per_ms: float = 1.0
    dn_per_photon: float = 0.5
    black_level_dn: float = 4.0
    fixed_pattern_dn: float = 1.0
    read_noise_dn: float = 0.5
    noise: bool = True
    min_substeps: int = 8

    def __post_init__(self):
        if not self.fps > 0 or not self.exposure > 0:
            raise ConfigurationError("fps and exposure must be positive")
        if self.exposure > 1.0 / self.fps + 1e-12:
            raise ConfigurationError("exposure must not exceed the frame period 1/fps")
        if self.min_substeps < 8:
            raise ConfigurationError("min_substeps must be >= 8")

    @property
    def gain(self) -> float:
        """DN per unit of (illumination-scaled) intensity over one exposure."""
        return self.photons_per_ms * self.exposure * 1e3 * self.dn_per_photon

    def quantize(self, intensity: np.ndarray) -> np.ndarray:
        """Noise-free 8-bit rendering of an intensity grid."""
        return np.clip(np.rint(intensity * self.gain), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray          # (count, height, width) uint8
    fps: float
    exposure: float
    timestamps: np.ndarray      # mid-exposure times, seconds

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class EventCameraModel:
    """Threshold-crossing event pixel.

    ``noise_rate`` counts spurious events per pixel per second; use
    :meth:`for_illumination` to scale a base rate inversely with light level.
    ``dt_us`` is the simulation step.
    """

    threshold_D: float = 0.2
    refractory_us: int = 100
    noise_rate: float = 0.1
    log_floor: float = 0.05
    dt_us: int = 1000

    def __post_init__(self):
        if not self.threshold_D > 0:
            raise ConfigurationError("threshold_D must be positive")
        if self.refractory_us < 0 or self.noise_rate < 0:
            raise ConfigurationError("refractory and noise_rate must be non-negative")
        if not self.log_floor > 0:
            raise ConfigurationError("log_floor must be positive")
        if not 1 <= self.dt_us <= 1000:
            raise ConfigurationError("simulation step must be within 1..1000 us")

    @classmethod
    def for_illumination(cls, illumination: float, base_noise_rate: float = 0.1,
                         **kw) -> "EventCameraModel":
        return cls(noise_rate=base_noise_rate / illumination, **kw)


# ---------------------------------------------------------------------------
# speckle field
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SpeckleField:
    """Padded speckle (mean intensity 1) plus lazily generated independent layers.

    Each layer is a band-limited complex amplitude on the padded grid; the
    intensity is its squared magnitude. ``values`` is the intensity of layer 0.
    ``origin_offset`` is the padding in pixels: sensor pixel ``(x, y)`` at zero
    displacement reads ``values[y + off, x + off]``. Layers are periodic over
    the padded grid, so sub-pixel shifts are rendered exactly by a Fourier
    phase ramp on the amplitude.
    """

    values: np.ndarray
    origin_offset: int
    speckle_grain: float
    rng_seed: int
    _amplitudes: dict = field(default_factory=dict, repr=False)
    _spectra: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def amplitude(self, k: int) -> np.ndarray:
        if k not in self._amplitudes:
            self._amplitudes[k] = _amplitude(self.shape, self.speckle_grain, self.rng_seed, k)
        return self._amplitudes[k]

    def layer(self, k: int) -> np.ndarray:
        """Intensity of layer ``k`` at zero displacement."""
        a = self.amplitude(k)
        return a.real ** 2 + a.imag ** 2

    def spectrum(self, k: int) -> np.ndarray:
        # single precision is ample for rendering and twice as fast
        if k not in self._spectra:
            self._spectra[k] = sfft.fft2(self.amplitude(k)).astype(np.complex64)
        return self._spectra[k]

    def render(self, k: int, ck: float, ck1: float, sx: float, sy: float) -> np.ndarray:
        """Intensity of ``ck * A_k + ck1 * A_{k+1}`` translated by ``(sx, sy)`` px."""
        if float(sx).is_integer() and float(sy).is_integer():
            amp = ck * self.amplitude(k)
            if ck1:
                amp = amp + ck1 * self.amplitude(k + 1)
            amp = np.roll(amp, (int(sy), int(sx)), axis=(0, 1))
        else:
            h, w = self.shape
            spec = np.complex64(ck) * self.spectrum(k)
            if ck1:
                spec += np.complex64(ck1) * self.spectrum(k + 1)
            ry = np.exp(-2j * np.pi * sfft.fftfreq(h) * sy).astype(np.complex64)
            rx = np.exp(-2j * np.pi * sfft.fftfreq(w) * sx).astype(np.complex64)
            spec *= ry[:, None]
            spec *= rx[None, :]
            amp = sfft.ifft2(spec, overwrite_x=True)
        return (amp.real ** 2 + amp.imag ** 2).astype(float)

    def shifted(self, k: int, sx: float, sy: float) -> np.ndarray:
        """Layer ``k`` intensity translated by ``(sx, sy)`` px (periodic)."""
        return self.render(k, 1.0, 0.0, sx, sy)


def _amplitude(shape, grain: float, seed: int, index: int) -> np.ndarray:
    rng = _rng(seed, _TAG_FIELD, index)
    h, w = shape
    noise = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
    fy = sfft.fftfreq(h)[:, None]
    fx = sfft.fftfreq(w)[None, :]
    pupil = (fx ** 2 + fy ** 2) <= (1.0 / grain) ** 2
    amp = sfft.ifft2(sfft.fft2(noise) * pupil)
    return amp / np.sqrt(np.mean(amp.real ** 2 + amp.imag ** 2))


def padded_shape(cfg: SceneConfig) -> tuple[int, int]:
    """Field grid: the sensor plus the padding on every side, grown to FFT-friendly sizes."""
    pad = cfg.padding
    return (sfft.next_fast_len(cfg.grid_height + 2 * pad),
            sfft.next_fast_len(cfg.grid_width + 2 * pad))


def generate_field(cfg: SceneConfig) -> SpeckleField:
    """Fully developed speckle for ``cfg``: filtered circular Gaussian, squared magnitude."""
    pad = cfg.padding
    if pad > 4 * min(cfg.grid_width, cfg.grid_height):
        raise ConfigurationError(
            f"padding of {pad} px (max_displacement={cfg.max_displacement} mm) exceeds "
            f"4x the smaller grid side; enlarge the grid or reduce max_displacement")
    shape = padded_shape(cfg)
    amp = _amplitude(shape, cfg.speckle_grain, cfg.rng_seed, 0)
    f = SpeckleField(amp.real ** 2 + amp.imag ** 2, pad, cfg.speckle_grain, cfg.rng_seed)
    f._amplitudes[0] = amp
    return f


def blend_weights(travel: float, d_ome: float) -> tuple[int, float, float]:
    """Layer index and amplitude weights at a given accumulated travel (mm).

    Returns ``(k, a, b)`` with ``a = cos(pi f / 2)``, ``b = sin(pi f / 2)`` and
    ``k + f = travel / (2 d_ome)``. The rendered amplitude ``a A_k + b A_{k+1}``
    is again fully developed speckle; its intensity correlation with layer
    ``k`` is ``a**2``, i.e. 1/2 after ``d_ome`` of travel and 0 after ``2 d_ome``.
    """
    q = travel / (2.0 * d_ome)
    k = int(math.floor(q))
    f = q - k
    if f == 0.0:
        return k, 1.0, 0.0
    return k, math.cos(0.5 * math.pi * f), math.sin(0.5 * math.pi * f)


def instantaneous_intensity(field: SpeckleField, cfg: SceneConfig, displacement,
                            travel: float | None = None) -> np.ndarray:
    """Intensity on the sensor for an object displaced by ``displacement`` (mm).

    ``travel`` is the path length since the start (defaults to
    ``|displacement|``) and drives memory-effect decorrelation.
    """
    dx, dy = (float(v) for v in displacement)
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise RangeError("displacement must be finite")
    sx, sy = dx * cfg.px_per_mm, dy * cfg.px_per_mm
    off = field.origin_offset
    h, w = cfg.grid_height, cfg.grid_width
    if field.shape != padded_shape(cfg) or off != cfg.padding:
        raise ConfigurationError("field was generated for a different grid")
    if max(abs(sx), abs(sy)) > off:
        raise RangeError(f"displacement ({dx:.3f}, {dy:.3f}) mm exceeds the field padding "
                         f"of {off / cfg.px_per_mm:.3f} mm")
    if travel is None:
        travel = math.hypot(dx, dy)
    k, a, b = blend_weights(travel, cfg.d_ome)
    out = field.render(k, a, b, sx, sy)[off:off + h, off:off + w]
    return out * cfg.illumination


def _check_extent(cfg: SceneConfig, traj: TrajectorySpec) -> None:
    if traj.max_excursion() * cfg.px_per_mm > cfg.padding:
        raise ConfigurationError(
            f"trajectory reaches {traj.max_excursion():.3f} mm but the scene pads only "
            f"{cfg.max_displacement} mm; raise SceneConfig.max_displacement")


# ---------------------------------------------------------------------------
# frame camera
# ---------------------------------------------------------------------------

def blur_span_px(cfg: SceneConfig, traj: TrajectorySpec, t0: float, t1: float) -> float:
    """Pattern travel in pixels during the exposure ``[t0, t1]``."""
    return float(traj.travel(t1) - traj.travel(t0)) * cfg.px_per_mm


def simulate_frames(field: SpeckleField, cfg: SceneConfig, traj: TrajectorySpec,
                    camera: FrameCamera = FrameCamera()) -> FrameSequence:
    """Render the fixed-exposure frames a conventional camera would record."""
    _check_extent(cfg, traj)
    count = int(math.floor(traj.duration * camera.fps + 1e-9))
    h, w = cfg.shape
    frames = np.empty((count, h, w), dtype=np.uint8)
    stamps = np.empty(count)
    rng = _rng(cfg.rng_seed, _TAG_FRAMES)
    fpn = (_rng(cfg.rng_seed, _TAG_FPN).standard_normal((h, w)) * camera.fixed_pattern_dn
           + camera.black_level_dn)
    for k in range(count):
        t0 = k / camera.fps
        t1 = min(t0 + camera.exposure, traj.duration)
        nsub = max(camera.min_substeps, math.ceil(blur_span_px(cfg, traj, t0, t1) * 4))
        ts = np.linspace(t0, t1, nsub)
        pos, trav = traj.position(ts), traj.travel(ts)
        acc = np.zeros((h, w))
        for j in range(nsub):
            acc += instantaneous_intensity(field, cfg, pos[j], trav[j])
        acc /= nsub
        if camera.noise:
            photons = rng.poisson(acc * camera.gain / camera.dn_per_photon)
            dn = (photons * camera.dn_per_photon + fpn
                  + rng.standard_normal((h, w)) * camera.read_noise_dn)
            frames[k] = np.clip(np.rint(dn), 0, 255).astype(np.uint8)
        else:
            frames[k] = camera.quantize(acc)
        stamps[k] = 0.5 * (t0 + t1)
    return FrameSequence(frames, camera.fps, camera.exposure, stamps)


# ---------------------------------------------------------------------------
# event camera
# ---------------------------------------------------------------------------

class _PixelArray:
    """Threshold-crossing state for a flat array of event pixels.

    Events are recorded as packed int64 keys ``((t * npix + pixel) << 1) | (p > 0)``
    so that numeric key order equals the stream order (t, y, x, p). Keys of
    each step are sorted on emission; the concatenation is globally sorted.
    """

    def __init__(self, log0: np.ndarray, model: EventCameraModel):
        self.model = model
        self.ref = log0.astype(float).copy()
        self.prev = self.ref.copy()
        self.npix = self.ref.size
        self.last = np.full(self.ref.shape, np.iinfo(np.int64).min // 2, dtype=np.int64)
        self.keys: list[np.ndarray] = []

    def step(self, t0: int, t1: int, log_now: np.ndarray) -> None:
        D = self.model.threshold_D
        diff = log_now - self.ref
        cand = np.flatnonzero(np.abs(diff) >= D * (1 - CROSSING_TOL))
        if cand.size:
            up = diff[cand] > 0
            pol = np.where(up, 1.0, -1.0)
            remaining = np.floor(np.abs(diff[cand]) / D + CROSSING_TOL).astype(np.int64)
            lp, lc = self.prev[cand], log_now[cand]
            ref, last = self.ref[cand], self.last[cand]
            slope = lc - lp
            active = remaining > 0
            span = t1 - t0
            emitted = []
            while np.any(active):
                level = ref + pol * D
                with np.errstate(divide="ignore", invalid="ignore"):
                    frac = np.where(slope != 0, (level - lp) / slope, 1.0)
                frac = np.clip(np.nan_to_num(frac, nan=1.0), 0.0, 1.0)
                tc = np.clip(np.ceil(t0 + frac * span), t0 + 1, t1).astype(np.int64)
                tf = np.maximum(tc, last + self.model.refractory_us)
                ok = active & (tf <= t1)
                if np.any(ok):
                    emitted.append(((tf[ok] * self.npix + cand[ok]) << 1) | up[ok])
                    ref[ok] += pol[ok] * D
                    last[ok] = tf[ok]
                    remaining[ok] -= 1
                active = ok & (remaining > 0)
            self.ref[cand] = ref
            self.last[cand] = last
            if emitted:
                step_keys = np.concatenate(emitted) if len(emitted) > 1 else emitted[0]
                step_keys.sort()
                self.keys.append(step_keys)
        self.prev = log_now

    def collect_keys(self) -> np.ndarray:
        if not self.keys:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.keys)


def _decode(keys: np.ndarray, npix: int):
    p = np.where(keys & 1, 1, -1).astype(np.int8)
    t, idx = np.divmod(keys >> 1, npix)
    return t, idx, p


def threshold_events(intensities, times_us, model: EventCameraModel):
    """Apply the threshold-crossing pixel to arbitrary intensity histories.

    Parameters
    ----------
    intensities : array_like, shape (T, ...)
        Intensity samples; trailing axes are flattened into pixels.
    times_us : array_like of int, shape (T,)
        Strictly increasing sample times.

    Returns
    -------
    t, pixel, p : ndarray
        Event timestamps, flat pixel indices and polarities sorted by
        (t, pixel, p). No noise events are added.
    """
    arr = np.asarray(intensities, dtype=float)
    arr = arr.reshape(arr.shape[0], -1)
    times = np.asarray(times_us, dtype=np.int64)
    px = _PixelArray(np.log(arr[0] + model.log_floor), model)
    for i in range(1, len(times)):
        px.step(int(times[i - 1]), int(times[i]), np.log(arr[i] + model.log_floor))
    return _decode(px.collect_keys(), px.npix)


def _noise_keys(cfg: SceneConfig, model: EventCameraModel, duration_us: int) -> np.ndarray:
    rng = _rng(cfg.rng_seed, _TAG_EVENT_NOISE)
    npix = cfg.grid_width * cfg.grid_height
    n = int(rng.poisson(model.noise_rate * npix * duration_us * 1e-6)) if model.noise_rate else 0
    t = rng.integers(0, max(duration_us, 1), n, dtype=np.int64)
    idx = rng.integers(0, npix, n, dtype=np.int64)
    up = rng.integers(0, 2, n, dtype=np.int64)
    return np.sort(((t * npix + idx) << 1) | up)


def simulate_events(field: SpeckleField, cfg: SceneConfig, traj: TrajectorySpec,
                    model: EventCameraModel = EventCameraModel()) -> EventStream:
    """Event stream seen by a neuromorphic sensor watching the moving speckle.

    Signal events follow the threshold-crossing law with crossing times
    interpolated inside each simulation step; spurious events arrive as a
    homogeneous Poisson process of random polarity at ``model.noise_rate``.
    """
    _check_extent(cfg, traj)
    duration_us = int(round(traj.duration * 1e6))
    steps = duration_us // model.dt_us
    times = np.arange(steps + 1, dtype=np.int64) * model.dt_us
    if times[-1] < duration_us:
        times = np.append(times, duration_us)
    ts = times * 1e-6
    pos, trav = traj.position(ts), traj.travel(ts)

    def log_at(i):
        img = instantaneous_intensity(field, cfg, pos[i], trav[i])
        return np.log(img.ravel() + model.log_floor)

    px = _PixelArray(log_at(0), model)
    for i in range(1, len(times)):
        px.step(int(times[i - 1]), int(times[i]), log_at(i))
    keys = px.collect_keys()
    noise = _noise_keys(cfg, model, duration_us)
    if noise.size:
        # both runs are sorted; a stable sort merges them in linear time
        keys = np.sort(np.concatenate([keys, noise]), kind="stable")
    t, idx, p = _decode(keys, px.npix)
    y, x = np.divmod(idx, cfg.grid_width)
    return EventStream(t, x, y, p, cfg.grid_width, cfg.grid_height, duration_us)
