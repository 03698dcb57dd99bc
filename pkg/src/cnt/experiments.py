"""Desk-scale experiment runners and their results bundle.

Each experiment simulates one trajectory realisation per condition and runs
CNT, the event-only baseline and the frame baseline on the same data. The
machine-readable document is plain JSON; trajectories go to CSV sidecars.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .aggregation import AggregationParams, map_sequence, max_windows
from .config import ExperimentConfig
from .errors import CNTError
from .events import EventStream
from .filtering import FilterSpec, transfer_function
from .objective import OMEConstraint, ObjectiveReport, SearchDomain, optimize
from .scene import (EventCameraModel, FrameSequence, SceneConfig, TrajectorySpec,
                    generate_field, illumination_to_lux, simulate_events, simulate_frames)
from .tracker import (TrackReport, prepare_spectra, track_event_only, track_frames,
                      track_recursive, track_spectra)

log = logging.getLogger(__name__)

SCHEMA = "cnt-results/1"
METHODS = ("cnt", "event-only", "frame")


def condition_seed(master: int, index: int) -> int:
    """Seed of condition ``index``, derived from the master seed alone."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


@dataclass
class SimulatedData:
    scene: SceneConfig
    trajectory: TrajectorySpec
    events: EventStream
    frames: FrameSequence


def simulate(cfg: ExperimentConfig, traj: TrajectorySpec, seed: int,
             illumination: Optional[float] = None) -> SimulatedData:
    """Render events and frames of one realisation of ``traj``."""
    illum = cfg.scene.illumination if illumination is None else illumination
    margin = 2.0 / cfg.scene.px_per_mm
    scene = cfg.scene.replace(rng_seed=seed, illumination=illum,
                              max_displacement=traj.max_excursion() + margin)
    model = dataclasses.replace(cfg.event_camera,
                                noise_rate=cfg.event_camera.noise_rate / illum)
    fld = generate_field(scene)
    events = simulate_events(fld, scene, traj, model)
    frames = simulate_frames(fld, scene, traj, cfg.frame_camera)
    return SimulatedData(scene, traj, events, frames)


# --- per-method tracking --------------------------------------------------------

def _error(rep: TrackReport, traj: TrajectorySpec) -> float:
    if traj.kind == "constant-velocity":
        return rep.final_error
    return rep.path_error()


def choose_parameters(cfg: ExperimentConfig, data: SimulatedData,
                      exhaustive: bool = False) -> tuple[int, int, Optional[ObjectiveReport]]:
    """CNT ``(n, omega)``: configured values, or the objective optimum for the free ones."""
    tc = cfg.tracking
    if tc.n is not None and tc.omega is not None:
        return tc.n, tc.omega, None
    domain = SearchDomain(cfg.domain.n_set if tc.n is None else (tc.n,),
                          cfg.domain.omega_set if tc.omega is None else (tc.omega,))
    constraint = OMEConstraint(data.trajectory.max_speed(), tc.tau, data.scene.d_ome,
                               data.scene.px_per_mm)
    rep = optimize(data.events, domain, cfg.weights, constraint, tau=tc.tau,
                   maps_per_eval=tc.maps_per_eval, exhaustive=exhaustive)
    return rep.n_star, rep.omega_star, rep


def run_methods(cfg: ExperimentConfig, data: SimulatedData, n: int, omega: int) -> dict:
    """Track with all three methods; failures are recorded as 100 % error."""
    sc, traj, tc = data.scene, data.trajectory, cfg.tracking
    jobs = {
        "cnt": lambda: track_recursive(data.events, AggregationParams(n, tc.tau),
                                       FilterSpec(omega, tc.filter_shape), sc.px_per_mm,
                                       sc.d_ome, truth=traj),
        "event-only": lambda: track_event_only(data.events, sc.px_per_mm, sc.d_ome,
                                               tau=tc.tau, truth=traj),
        "frame": lambda: track_frames(data.frames, None, sc.px_per_mm, sc.d_ome, truth=traj),
    }
    out = {}
    for name, job in jobs.items():
        try:
            rep = job()
            out[name] = {"error": _error(rep, traj), "report": rep, "failure": None}
            if rep.degenerate_steps:
                out[name]["failure"] = f"degenerate maps at steps {rep.degenerate_steps}"
        except CNTError as exc:
            log.warning("%s tracking failed: %s", name, exc)
            out[name] = {"error": 1.0, "report": None, "failure": str(exc)}
    return out


def error_grid(stream: EventStream, traj: TrajectorySpec, domain: SearchDomain,
               scene: SceneConfig, tau: float = 0.040,
               shape: str = "ideal-circular") -> np.ndarray:
    """CNT error over every ``(n, omega)`` of ``domain``, shape ``(len(n_set), len(omega_set))``."""
    h, w = stream.height, stream.width
    out = np.full((len(domain.n_set), len(domain.omega_set)), np.nan)
    for i, n in enumerate(domain.n_set):
        params = AggregationParams(n, tau)
        maps = map_sequence(stream, params.window / 2, max_windows(stream, params), params)
        spectra = prepare_spectra([m.values for m in maps])
        t = np.array([m.t_center for m in maps])
        gt = traj.position(t)
        gt_step = gt[-1] - gt[0]
        if traj.kind == "constant-velocity":
            scale = float(np.hypot(*gt_step))
        else:
            scale = float(np.sum(np.hypot(*np.diff(gt, axis=0).T)))
        for j, om in enumerate(domain.omega_set):
            H = transfer_function(FilterSpec(om, shape), w, h)
            steps, _, bad = track_spectra(spectra, (h, w), H, scene.px_per_mm)
            if bad:
                out[i, j] = 1.0
                continue
            out[i, j] = float(np.hypot(*(steps.sum(axis=0) - gt_step))) / scale
    return out


# --- results bundle ---------------------------------------------------------------

@dataclass
class ResultsBundle:
    """Results document plus the track reports that become CSV sidecars."""

    document: dict
    reports: dict = field(default_factory=dict)    # file stem -> TrackReport
    plots: list = field(default_factory=list)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        traj_dir = out / "trajectories"
        if self.reports:
            traj_dir.mkdir(exist_ok=True)
        for stem, rep in sorted(self.reports.items()):
            rep.write_csv(traj_dir / f"{stem}.csv")
        path = out / "results.json"
        path.write_text(to_json(self.document))
        return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def to_json(document: dict) -> str:
    return json.dumps(_clean(document), indent=1, sort_keys=True, allow_nan=False) + "\n"


def config_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d.pop("out_dir", None)
    return d


# --- experiment kinds ---------------------------------------------------------------

def _condition_record(label: str, value, seed: int, data: SimulatedData, n: int, omega: int,
                      results: dict, bundle: ResultsBundle, objective=None) -> dict:
    rec = {
        "label": label,
        "value": value,
        "seed": seed,
        "duration_s": data.trajectory.duration,
        "path_length_mm": data.trajectory.path_length(),
        "illumination": data.scene.illumination,
        "lux": illumination_to_lux(data.scene.illumination),
        "n_events": len(data.events),
        "n_frames": len(data.frames),
        "cnt_params": {"n": n, "omega": omega},
        "errors": {m: results[m]["error"] for m in METHODS},
        "failures": {m: results[m]["failure"] for m in METHODS if results[m]["failure"]},
        "trajectories": {},
    }
    for m in METHODS:
        rep = results[m]["report"]
        if rep is not None:
            stem = f"{label}_{m}"
            bundle.reports[stem] = rep
            rec["trajectories"][m] = {"csv": f"trajectories/{stem}.csv",
                                      "t": rep.trajectory.t, "x_mm": rep.trajectory.xy[:, 0],
                                      "y_mm": rep.trajectory.xy[:, 1],
                                      "truth_x_mm": rep.truth.xy[:, 0],
                                      "truth_y_mm": rep.truth.xy[:, 1],
                                      "ome_violations": rep.ome_violations}
    if objective is not None:
        rec["objective"] = objective.to_dict()
    return rec


def _single(cfg: ExperimentConfig, traj: TrajectorySpec, label: str, value, index: int,
            bundle: ResultsBundle, illumination: Optional[float] = None) -> dict:
    seed = condition_seed(cfg.seed, index)
    data = simulate(cfg, traj, seed, illumination)
    n, omega, obj = choose_parameters(cfg, data)
    log.info("%s: %d events, %d frames, CNT n=%d omega=%d", label, len(data.events),
             len(data.frames), n, omega)
    res = run_methods(cfg, data, n, omega)
    return _condition_record(label, value, seed, data, n, omega, res, bundle, obj)


def _speed_trajectory(cfg: ExperimentConfig, speed: float) -> TrajectorySpec:
    base = cfg.trajectory
    vx, vy = base.velocity if base.kind == "constant-velocity" else (1.0, 0.0)
    norm = math.hypot(vx, vy) or 1.0
    duration = min(max(cfg.min_duration, cfg.travel_budget / speed), base.duration)
    duration = max(duration, cfg.min_duration)
    return TrajectorySpec.constant((speed * vx / norm, speed * vy / norm), duration)


def _run_validate(cfg, bundle):
    rec = _single(cfg, cfg.trajectory, "validate", cfg.trajectory.max_speed(), 0, bundle)
    return [rec], {"errors": rec["errors"]}


def _run_trajectory(cfg, bundle):
    rec = _single(cfg, cfg.trajectory, "trajectory", cfg.trajectory.path_length(), 0, bundle)
    cnt = bundle.reports.get("trajectory_cnt")
    summary = {"errors": rec["errors"], "path_length_mm": cfg.trajectory.path_length(),
               "d_ome_mm": cfg.scene.d_ome,
               "path_over_d_ome": cfg.trajectory.path_length() / cfg.scene.d_ome}
    if cnt is not None:
        summary["max_step_mm"] = float(np.max(np.hypot(*cnt.steps.T)))
        summary["ome_violations"] = len(cnt.ome_violations)
    return [rec], summary


def _run_sweep_speed(cfg, bundle):
    recs = []
    for i, v in enumerate(cfg.speeds):
        recs.append(_single(cfg, _speed_trajectory(cfg, v), f"speed_{v:g}", v, i, bundle))
    return recs, {"speeds": list(cfg.speeds),
                  "errors": {m: [r["errors"][m] for r in recs] for m in METHODS}}


def _run_sweep_illumination(cfg, bundle):
    recs = []
    for i, il in enumerate(cfg.illuminations):
        recs.append(_single(cfg, cfg.trajectory, f"illum_{il:g}", il, i, bundle, il))
    return recs, {"illuminations": list(cfg.illuminations),
                  "lux": [illumination_to_lux(i) for i in cfg.illuminations],
                  "errors": {m: [r["errors"][m] for r in recs] for m in METHODS}}


def _run_sweep_n(cfg, bundle):
    omega = cfg.tracking.omega or 50
    recs = []
    for i, v in enumerate(cfg.speeds):
        traj = _speed_trajectory(cfg, v)
        seed = condition_seed(cfg.seed, i)
        data = simulate(cfg, traj, seed)
        dom = SearchDomain(cfg.n_values, (omega,))
        errs = error_grid(data.events, traj, dom, data.scene, cfg.tracking.tau,
                          cfg.tracking.filter_shape)[:, 0]
        best = int(dom.n_set[int(np.argmin(errs))])
        res = run_methods(cfg, data, best, omega)
        rec = _condition_record(f"speed_{v:g}", v, seed, data, best, omega, res, bundle)
        rec["n_values"] = list(dom.n_set)
        rec["cnt_error_by_n"] = errs
        recs.append(rec)
    return recs, {"speeds": list(cfg.speeds), "omega": omega,
                  "best_n": [r["cnt_params"]["n"] for r in recs]}


def joint_landscape(cfg: ExperimentConfig, data: SimulatedData) -> dict:
    """Exhaustive J table, exhaustive error table and the hill-climbing optimum for one stream."""
    tc = cfg.tracking
    constraint = OMEConstraint(data.trajectory.max_speed(), tc.tau, data.scene.d_ome,
                               data.scene.px_per_mm)
    full = optimize(data.events, cfg.domain, cfg.weights, constraint, tau=tc.tau,
                    maps_per_eval=tc.maps_per_eval, exhaustive=True)
    table = full.table
    climbed = optimize(data.events, cfg.domain, cfg.weights, constraint, tau=tc.tau,
                       maps_per_eval=tc.maps_per_eval,
                       evaluate=lambda n, w: table[(n, w)])
    err = error_grid(data.events, data.trajectory, cfg.domain, data.scene, tc.tau,
                     tc.filter_shape)
    J = full.grid("J")
    masked = np.where(np.isnan(J), np.inf, err)
    i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
    e_best = (cfg.domain.n_set[i], cfg.domain.omega_set[j])
    j_best = full.best
    return {
        "n_set": list(cfg.domain.n_set),
        "omega_set": list(cfg.domain.omega_set),
        "J": J, "K": full.grid("K"), "G": full.grid("G"), "M": full.grid("M"),
        "error": err,
        "j_argmax": list(j_best),
        "error_argmin": list(e_best),
        "refined": list(climbed.best),
        "refined_evaluations": len(climbed.table),
        "refined_matches_exhaustive": tuple(climbed.best) == tuple(j_best),
        "refined_J_deficit": (table[j_best].J - table[climbed.best].J) / abs(table[j_best].J),
        "aligned": abs(j_best[0] - e_best[0]) <= 1 and abs(j_best[1] - e_best[1]) <= 10,
        "error_at_j_argmax": float(err[cfg.domain.n_set.index(j_best[0]),
                                       cfg.domain.omega_set.index(j_best[1])]),
        "error_min": float(err[i, j]),
    }


def _run_optimize_joint(cfg, bundle):
    recs = []
    for i, v in enumerate(cfg.speeds):
        traj = _speed_trajectory(cfg, v)
        seed = condition_seed(cfg.seed, i)
        data = simulate(cfg, traj, seed)
        land = joint_landscape(cfg, data)
        n, omega = land["refined"]
        res = run_methods(cfg, data, n, omega)
        rec = _condition_record(f"speed_{v:g}", v, seed, data, n, omega, res, bundle)
        rec["landscape"] = land
        log.info("speed %g: J argmax %s, error argmin %s, aligned=%s", v, land["j_argmax"],
                 land["error_argmin"], land["aligned"])
        recs.append(rec)
    return recs, {"speeds": list(cfg.speeds),
                  "aligned": [r["landscape"]["aligned"] for r in recs],
                  "aligned_count": sum(r["landscape"]["aligned"] for r in recs)}


_RUNNERS = {
    "validate": _run_validate,
    "trajectory": _run_trajectory,
    "sweep-speed": _run_sweep_speed,
    "sweep-illumination": _run_sweep_illumination,
    "sweep-n": _run_sweep_n,
    "optimize-joint": _run_optimize_joint,
}


def run_experiment(cfg: ExperimentConfig) -> ResultsBundle:
    """Run the experiment named by ``cfg.kind`` and collect its results."""
    bundle = ResultsBundle({})
    conditions, summary = _RUNNERS[cfg.kind](cfg, bundle)
    bundle.document = {"schema": SCHEMA, "kind": cfg.kind, "seed": cfg.seed,
                       "config": config_dict(cfg), "conditions": conditions,
                       "summary": summary}
    return bundle
