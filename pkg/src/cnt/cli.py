"""Command-line entry point.

``cnt simulate|aggregate|optimize|track|sweep|plot --config FILE --out DIR [--seed N]``

All numeric output goes to files in ``--out``; logs go to standard error.
Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .aggregation import AggregationParams, map_sequence, max_windows
from .config import ExperimentConfig, load_config
from .errors import CNTError, ConfigurationError
from .experiments import run_experiment, simulate, to_json
from .filtering import FilterSpec, lowpass
from .io import read_events, write_events
from .objective import OMEConstraint, SearchDomain, optimize
from .plotting import emit_plots
from .tracker import track_recursive

log = logging.getLogger("cnt")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
DEFAULT_N, DEFAULT_OMEGA = 1, 50


def _events(cfg: ExperimentConfig, out: Path):
    path = Path(cfg.events_path) if cfg.events_path else out / "events.bin"
    if not path.exists():
        raise ConfigurationError(f"event file {path} not found; set [input] events "
                                 "or run `cnt simulate` first")
    log.info("reading %s", path)
    return read_events(path, cfg.scene.grid_width, cfg.scene.grid_height)


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(to_json(doc))
    log.info("wrote %s", path)


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> None:
    """Simulate events, frames and ground truth."""
    data = simulate(cfg, cfg.trajectory, cfg.seed)
    write_events(out / "events.bin", data.events)
    np.savez_compressed(out / "frames.npz", frames=data.frames.frames,
                        timestamps=data.frames.timestamps)
    t = np.arange(0.0, cfg.trajectory.duration + 1e-12, 1e-3)
    xy = cfg.trajectory.position(t)
    np.savetxt(out / "truth.csv", np.column_stack([t, xy]), delimiter=",",
               header="t_s,x_mm,y_mm", comments="", fmt="%.9g")
    _write_json(out / "simulate.json", {
        "seed": cfg.seed, "n_events": len(data.events), "n_frames": len(data.frames),
        "duration_s": cfg.trajectory.duration, "path_length_mm": cfg.trajectory.path_length(),
        "files": ["events.bin", "frames.npz", "truth.csv"]})


def cmd_aggregate(cfg: ExperimentConfig, out: Path) -> None:
    """Aggregate and denoise event maps."""
    stream = _events(cfg, out)
    params = AggregationParams(cfg.tracking.n or DEFAULT_N, cfg.tracking.tau)
    spec = FilterSpec(cfg.tracking.omega or DEFAULT_OMEGA, cfg.tracking.filter_shape)
    maps = map_sequence(stream, params.window / 2, max_windows(stream, params), params)
    np.savez_compressed(out / "maps.npz",
                        t_center=np.array([m.t_center for m in maps]),
                        aggregated=np.stack([m.values for m in maps]).astype(np.int32),
                        denoised=np.stack([lowpass(m, spec).values for m in maps]))
    _write_json(out / "aggregate.json", {"n": params.n, "tau": params.tau, "omega": spec.omega,
                                         "window_s": params.window, "maps": len(maps)})


def _optimize(cfg: ExperimentConfig, stream):
    constraint = OMEConstraint(cfg.trajectory.max_speed(), cfg.tracking.tau, cfg.scene.d_ome,
                               cfg.scene.px_per_mm) if cfg.trajectory_given else None
    return optimize(stream, cfg.domain, cfg.weights, constraint, tau=cfg.tracking.tau,
                    maps_per_eval=cfg.tracking.maps_per_eval)


def cmd_optimize(cfg: ExperimentConfig, out: Path) -> None:
    """Search (n, omega) maximising the objective."""
    rep = _optimize(cfg, _events(cfg, out))
    _write_json(out / "objective.json", rep.to_dict())


def cmd_track(cfg: ExperimentConfig, out: Path) -> None:
    """Track displacement recursively with CNT."""
    stream = _events(cfg, out)
    n, omega = cfg.tracking.n, cfg.tracking.omega
    if n is None or omega is None:
        domain = SearchDomain(cfg.domain.n_set if n is None else (n,),
                              cfg.domain.omega_set if omega is None else (omega,))
        rep = _optimize(cfg.replace(domain=domain), stream)
        n, omega = rep.best
    truth = cfg.trajectory if cfg.trajectory_given else None
    rep = track_recursive(stream, AggregationParams(n, cfg.tracking.tau),
                          FilterSpec(omega, cfg.tracking.filter_shape), cfg.scene.px_per_mm,
                          cfg.scene.d_ome, truth=truth)
    rep.write_csv(out / "track.csv")
    doc = rep.to_dict()
    if truth is not None:
        doc["relative_error"] = rep.final_error
        doc["path_error"] = rep.path_error()
    _write_json(out / "track.json", doc)


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> None:
    """Run the experiment named in the config."""
    bundle = run_experiment(cfg)
    path = bundle.write(out)
    log.info("wrote %s", path)
    for p in emit_plots(bundle.document, out):
        log.info("wrote %s", p)


def cmd_plot(cfg: ExperimentConfig, out: Path) -> None:
    """Draw figures from a results file."""
    path = Path(cfg.results_path) if cfg.results_path else out / "results.json"
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"results file {path} not found; set [input] results") from None
    for p in emit_plots(doc, out):
        log.info("wrote %s", p)


COMMANDS = {
    "simulate": cmd_simulate,
    "aggregate": cmd_aggregate,
    "optimize": cmd_optimize,
    "track": cmd_track,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cnt", description="Neuromorphic speckle tracking.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="INI experiment configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.out)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (CNTError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
