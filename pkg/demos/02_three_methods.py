"""CNT against event-only and frame-based tracking on one stream.

The object moves at 1.5 mm/s for 1 s. Event streams and frames come from
the same speckle field; frames are taken at 25 fps with 40 ms exposure.
Lowering the illumination raises the event noise rate and the frame shot
noise, which is where the methods separate.

    python3 demos/02_three_methods.py [out_dir] [illumination]
"""
import sys
from pathlib import Path

from cnt import TrajectorySpec, parse_config
from cnt.experiments import run_methods, simulate

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
illumination = float(sys.argv[2]) if len(sys.argv) > 2 else 0.25
out.mkdir(parents=True, exist_ok=True)

cfg = parse_config((Path(__file__).parent / "configs" / "validate.ini").read_text())
traj = TrajectorySpec.constant((1.5, 0.0), 1.0)
data = simulate(cfg, traj, seed=7, illumination=illumination)
print(f"illumination {illumination:g}: {len(data.events)} events, {len(data.frames)} frames")

results = run_methods(cfg, data, n=1, omega=50)
for name, res in results.items():
    rep = res["report"]
    end = rep.trajectory.xy[-1]
    print(f"{name:>10}: error {100 * res['error']:5.1f}%   endpoint ({end[0]:.3f}, {end[1]:.3f}) mm"
          f"   truth ({rep.truth.xy[-1, 0]:.3f}, {rep.truth.xy[-1, 1]:.3f}) mm")
    rep.write_csv(out / f"three_methods_{name}.csv")
