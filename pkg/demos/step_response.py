"""
Single-joint step response
==========================

One joint, driven directly by its motor neurons: every extensor spike adds
one angle increment, every flexor spike removes one. The controller closes
the loop from a 1 rad position error.
"""

import numpy as np

from snnreach.experiments import ControllerSpec, PlantSpec, ScheduleEntry, simulate
from snnreach.metrics import speed_profile, step_metrics

from _ascii import sparkline

trace = simulate(PlantSpec(), ControllerSpec(), [ScheduleEntry(0.0, (1.0,))], duration_ms=2500)
m = step_metrics(trace, joint=0, theta_0=0.0, theta_d=1.0)
print(f"overshoot {m.overshoot_pct:.2f} %   rise {m.rise_time:.0f} ms   settling {m.settling_time:.0f} ms")
print(f"final angle {trace.q[-1, 0]:.4f} rad")

###############################################################################
# Spike counts. The flexor is not idle: the velocity neurons drive it while
# the joint moves, which brakes the extensor. The net count times the
# increment is the distance travelled.
n_e, n_f = int(trace.spikes["e"].sum()), int(trace.spikes["f"].sum())
print(f"extensor spikes {n_e}, flexor spikes {n_f}, net {n_e - n_f} x 0.005 rad = {0.005 * (n_e - n_f):.3f} rad")

###############################################################################
# Facilitation ramps up while the error is large; presynaptic inhibition
# pulls the gain down at the same time, which flattens the velocity peak.
for t in (0, 100, 300, 600, 1000, 2000):
    print(f"t={t:5d} ms  f={trace.fac_e[t, 0]:.3f}  g={trace.gain[t, 0]:.3f}")

###############################################################################
# Joint speed after 40 ms Gaussian smoothing (one character ~ 35 ms).
print(sparkline(speed_profile(trace, 0, smoothing_ms=40.0)))
print("peak speed", f"{np.max(speed_profile(trace, 0, smoothing_ms=40.0)):.3f} rad/s")
