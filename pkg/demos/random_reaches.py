"""
Reaching to random goals
========================

A new reachable goal appears every 3 s regardless of whether the previous
movement has finished. Goals are drawn in the workspace and converted to
joint targets with the closed-form inverse kinematics.
"""

import numpy as np

from snnreach.arm import build_topology
from snnreach.experiments import ControllerSpec, PlantSpec, WorkspaceBounds, random_goal_schedule, simulate

lengths = (0.1, 0.11)
schedule = random_goal_schedule(seed=3, count=4, interval_ms=3000, bounds=WorkspaceBounds(0.08, 0.19, -1.5, 1.5),
                                lengths=lengths)
plant = PlantSpec(n_joints=2, initial_q=(0.3, 1.2), lengths=lengths)
trace = simulate(plant, ControllerSpec(coordination=build_topology("reacher2")), schedule, 12000.0)

for i, goal in enumerate(schedule):
    end = int(goal.time_ms) + 2999
    miss = np.linalg.norm(trace.ee[end] - np.asarray(goal.point))
    print(f"goal {i}: ({goal.point[0]:+.3f}, {goal.point[1]:+.3f}) m  ->  distance after 3 s {1000 * miss:.2f} mm")
