"""Does maximising J pick the (n, omega) that tracks best?

Evaluates the objective J = K + 0.2 G + 5 M and the CNT tracking error on
the full grid n in 1..10, omega in 20..60 for one speed, then draws both
tables side by side. Takes about a minute.

    python3 demos/03_objective_landscape.py [out_dir] [speed_mm_s]
"""
import sys
from pathlib import Path

import numpy as np

from cnt import TrajectorySpec, parse_config
from cnt.experiments import joint_landscape, simulate
from cnt.plotting import emit_plots

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
speed = float(sys.argv[2]) if len(sys.argv) > 2 else 3.0

cfg = parse_config("[experiment]\nkind = optimize-joint\nseed = 4\n")
data = simulate(cfg, TrajectorySpec.constant((speed, 0.0), 0.32), seed=4)
land = joint_landscape(cfg, data)

print(f"speed {speed:g} mm/s")
print(f"  J argmax        (n, omega) = {tuple(land['j_argmax'])}, "
      f"error there {100 * land['error_at_j_argmax']:.1f}%")
print(f"  error argmin    (n, omega) = {tuple(land['error_argmin'])}, "
      f"error {100 * land['error_min']:.2f}%")
print(f"  hill climb      (n, omega) = {tuple(land['refined'])} after "
      f"{land['refined_evaluations']} of {np.size(land['J'])} evaluations")
K = np.asarray(land["K"], dtype=float)
M = np.asarray(land["M"], dtype=float)
print(f"  K spans {np.nanmin(K):.1f} to {np.nanmax(K):.1f}; 5 M spans "
      f"{5 * np.nanmin(M):.2f} to {5 * np.nanmax(M):.2f}")

doc = {"kind": "optimize-joint",
       "conditions": [{"label": f"speed_{speed:g}", "value": speed, "landscape": land}]}
for p in emit_plots(doc, out):
    print(f"wrote {p}")
