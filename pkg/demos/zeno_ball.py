"""Bouncing ball through its Zeno point.

A ball dropped from height h0 with restitution coefficient c impacts the
ground at a geometric sequence of times accumulating at

    t_inf = sqrt(2 h0 / g) * (1 + 2c / (1 - c)).

The classical event-driven engine fires one reset per impact and must
truncate once the gaps shrink below resolvable size; the glued-space
engine detects the geometric contraction onto the corner, extrapolates
t_inf, pins the state there, and keeps integrating the resting solution.

Run:  python demos/zeno_ball.py
Artifacts land in demos/out/.
"""

import math
from pathlib import Path

import numpy as np

from hybridsim import bouncing_ball, simulate_execution, simulate_filippov

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

C, H0, G = 0.5, 1.0, 9.81
scn = bouncing_ball(c=C, h0=H0, g_grav=G)
t_inf = math.sqrt(2 * H0 / G) * (1 + 2 * C / (1 - C))
print(f"closed-form accumulation time t_inf = {t_inf:.12f}")

print("\n--- classical execution ---")
ex = simulate_execution(scn.system, scn.default_x0, T=scn.default_T)
jumps = [e for e in ex.events if e.kind == "ResetJump"]
# Ground impacts are the jumps with nonzero pre-impact speed; the others
# are apex mode switches.
impacts = [e for e in jumps if abs(e.meta["pre"][1][1]) > 1e-12]
print(f"{len(impacts)} ground impacts before truncation; first five speeds:")
v0 = math.sqrt(2 * G * H0)
for k, e in enumerate(impacts[:5]):
    pre_speed = abs(e.meta["pre"][1][1])
    print(f"  impact {k}: t = {e.time:.9f}, |v-| = {pre_speed:.9f} "
          f"(oracle c^k*sqrt(2 g h0) = {C**k * v0:.9f})")
zeno = next(e for e in ex.events if e.kind == "ZenoTruncation")
est = zeno.meta["t_accumulation"]
print(f"truncation at t = {zeno.time:.9f}; estimated t_inf = {est:.12f} "
      f"(error {abs(est - t_inf):.2e})")

print("\n--- solution on the glued space ---")
tr = simulate_filippov(scn.system, scn.default_x0, T=scn.default_T)
pin = tr.meta["corner_pin"]
print(f"corner pin at t = {pin['time']:.9f}, extrapolated t_inf = "
      f"{pin['t_accumulation']:.12f} (error "
      f"{abs(pin['t_accumulation'] - t_inf):.2e})")
rest = max(np.linalg.norm(tr.sample(t).coords)
           for t in np.linspace(t_inf + 0.05, scn.default_T, 200))
print(f"sup |x(t)| on [t_inf + 0.05, T] = {rest:.3e}  (the ball rests)")

# CSV artifacts in the CLI trajectory format, for the figure renderer.
from hybridsim.cli import trajectory_csv  # noqa: E402

for name, traj in (("ball_execution", ex), ("ball_glued", tr)):
    path = OUT / f"{name}.csv"
    path.write_text(trajectory_csv(traj, scn.default_T, samples=400))
    print(f"wrote {path}")

try:
    from plots import PlotJob, render
except ImportError:
    print("figure renderer not installed; skipping images")
else:
    for name in ("ball_execution", "ball_glued"):
        img = render(PlotJob(input_path=str(OUT / f"{name}.csv"),
                             kind="phase", output_path=str(OUT / f"{name}.png"),
                             title=f"bouncing ball ({name.split('_')[1]})"))
        print(f"wrote {img}")
