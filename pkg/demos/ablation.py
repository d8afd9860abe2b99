"""
Removing facilitation and presynaptic inhibition
================================================

The same two-joint reach three times: with both mechanisms, without the
presynaptic inhibition (PSI), and without either. End-effector speed and jerk
grow at each step.
"""

from snnreach.experiments import ABLATIONS, ControllerSpec, MetricsSpec, PlantSpec, ScheduleEntry, simulate
from snnreach.experiments import trial_metrics
from snnreach.metrics import speed_profile
from snnreach.presets import REFERENCE_REACH

from _ascii import sparkline

start, goal = REFERENCE_REACH
plant = PlantSpec(n_joints=2, initial_q=start, lengths=(0.1, 0.11))
schedule = [ScheduleEntry(0.0, goal)]

for name, (no_fac, no_psi) in ABLATIONS.items():
    ctrl = ControllerSpec(disable_facilitation=no_fac, disable_psi=no_psi)
    trace = simulate(plant, ctrl, schedule, 3000.0)
    row = trial_metrics(trace, schedule, MetricsSpec(smoothing_ms=40.0))[0]
    print(f"{name:8s} peak speed {row['peak_speed']:.3f} m/s   max|jerk| {row['max_abs_jerk']:8.1f} m/s^3   "
          f"rise {row['rise_time_ms']:.0f} ms   symmetry {row['symmetry_ratio']:.2f}")
    print("         " + sparkline(speed_profile(trace, smoothing_ms=40.0), 60))

###############################################################################
# Without PSI the motor synapses run at full gain and the arm accelerates
# hard; without facilitation as well, recruitment is immediate and the speed
# profile starts with a jump.
