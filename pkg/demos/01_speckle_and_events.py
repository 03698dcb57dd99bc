"""From a moving speckle field to neuromorphic speckle maps.

Renders a speckle field, moves it at constant speed, converts the intensity
to polarity events, and shows how the aggregation window (tau / n) and the
lowpass cutoff omega shape the maps that CNT correlates.

    python3 demos/01_speckle_and_events.py [out_dir]
"""
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cnt import (AggregationParams, EventCameraModel, FilterSpec, SceneConfig, TrajectorySpec,
                 aggregate, generate_field, instantaneous_intensity, lowpass, simulate_events)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

scene = SceneConfig(rng_seed=1, max_displacement=0.5)
traj = TrajectorySpec.constant((2.0, 0.0), 0.2)
field = generate_field(scene)
stream = simulate_events(field, scene, traj, EventCameraModel())
print(f"{len(stream)} events in {stream.duration:.2f} s on a "
      f"{stream.width} x {stream.height} sensor")

intensity = instantaneous_intensity(field, scene, (0.0, 0.0))
print(f"speckle contrast std/mean = {intensity.std() / intensity.mean():.2f}")

fig, axes = plt.subplots(2, 3, figsize=(12, 6))
axes[0, 0].imshow(intensity, cmap="gray")
axes[0, 0].set_title("intensity")
for ax, n in zip(axes[0, 1:], (1, 8)):
    m = aggregate(stream, 0.1, AggregationParams(n))
    ax.imshow(m.values, cmap="bwr", vmin=-3, vmax=3)
    ax.set_title(f"events, n = {n} ({1e3 * 0.04 / n:g} ms)")
raw = aggregate(stream, 0.1, AggregationParams(1))
for ax, om in zip(axes[1], (20, 50, 100)):
    ax.imshow(lowpass(raw, FilterSpec(om)).values, cmap="bwr")
    ax.set_title(f"n = 1, omega = {om}")
for ax in axes.ravel():
    ax.set_axis_off()
fig.tight_layout()
fig.savefig(out / "speckle_and_events.png", dpi=100)
print(f"wrote {out / 'speckle_and_events.png'}")
