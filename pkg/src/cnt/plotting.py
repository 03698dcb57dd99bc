"""Figures drawn from a results document.

Plots read only the JSON-ready document, so every plotted number is also in
the machine-readable results. Failures are logged and never touch the
results themselves.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

COLORS = {"cnt": "tab:orange", "event-only": "tab:blue", "frame": "tab:green"}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _arr(values) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def _grid(rows) -> np.ndarray:
    return np.array([_arr(r) for r in rows], dtype=float)


def _errors_vs(plt, doc, key, xlabel, path, logx=False, invert=False):
    summ = doc["summary"]
    xs = summ[key]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for m, errs in summ["errors"].items():
        ax.plot(xs, 100 * _arr(errs), "o-", color=COLORS.get(m), label=m)
    ax.axhline(10, color="gray", lw=0.8, ls=":")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("relative error (%)")
    if logx:
        ax.set_xscale("log")
    if invert:
        ax.invert_xaxis()
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def _tracks(plt, doc, path):
    conds = [c for c in doc["conditions"] if c.get("trajectories")]
    if not conds:
        return []
    fig, axes = plt.subplots(1, len(conds), figsize=(4.5 * len(conds), 4), squeeze=False)
    for ax, c in zip(axes[0], conds):
        first = next(iter(c["trajectories"].values()))
        ax.plot(_arr(first["truth_x_mm"]), _arr(first["truth_y_mm"]), "-", color="tab:blue",
                lw=2, label="ground truth")
        for m, tr in c["trajectories"].items():
            ax.plot(_arr(tr["x_mm"]), _arr(tr["y_mm"]), ".", ms=3, color=COLORS.get(m), label=m)
        ax.set_title(c["label"])
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def _sweep_n(plt, doc, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for c in doc["conditions"]:
        ax.plot(c["n_values"], 100 * _arr(c["cnt_error_by_n"]), "o-", label=f"{c['value']:g} mm/s")
    ax.set_xlabel("n")
    ax.set_ylabel("CNT relative error (%)")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def _heatmaps(plt, doc, out):
    paths = []
    for c in doc["conditions"]:
        land = c["landscape"]
        ns, ws = land["n_set"], land["omega_set"]
        ext = (ws[0] - 0.5, ws[-1] + 0.5, ns[-1] + 0.5, ns[0] - 0.5)
        fig, (a, b) = plt.subplots(1, 2, figsize=(10, 3.8))
        im = a.imshow(_grid(land["J"]), aspect="auto", extent=ext, cmap="viridis")
        fig.colorbar(im, ax=a)
        a.plot(land["j_argmax"][1], land["j_argmax"][0], "r*", ms=12)
        a.set_title(f"J, {c['value']:g} mm/s")
        im = b.imshow(100 * _grid(land["error"]), aspect="auto", extent=ext, cmap="magma_r",
                      vmax=np.nanpercentile(100 * _grid(land["error"]), 90))
        fig.colorbar(im, ax=b)
        b.plot(land["error_argmin"][1], land["error_argmin"][0], "c*", ms=12)
        b.set_title("tracking error (%)")
        for ax in (a, b):
            ax.set_xlabel("omega")
            ax.set_ylabel("n")
        fig.tight_layout()
        p = out / f"joint_{c['label']}.png"
        fig.savefig(p, dpi=110)
        plt.close(fig)
        paths.append(p)
    return paths


def emit_plots(document: dict, out_dir) -> list:
    """Write the figure(s) for ``document['kind']`` into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not document.get("conditions"):
        log.warning("results contain no conditions; no plot written")
        return []
    kind = document["kind"]
    try:
        plt = _pyplot()
        if kind == "sweep-speed":
            return _errors_vs(plt, document, "speeds", "speed (mm/s)", out / "error_vs_speed.png",
                              logx=True)
        if kind == "sweep-illumination":
            return _errors_vs(plt, document, "illuminations", "illumination (relative)",
                              out / "error_vs_illumination.png", logx=True, invert=True)
        if kind == "sweep-n":
            return _sweep_n(plt, document, out / "error_vs_n.png")
        if kind == "optimize-joint":
            return _heatmaps(plt, document, out)
        return _tracks(plt, document, out / f"{kind}_tracks.png")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        log.warning("plotting failed: %s", exc)
        if isinstance(exc, OSError):
            raise
        return []
