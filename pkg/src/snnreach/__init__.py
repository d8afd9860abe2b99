"""Spiking joint controller with synaptic facilitation and presynaptic inhibition.

Submodules
----------
snn          LIF neurons, facilitation, PSI gain, effective weights
joint        single-DOF controller block
arm          multi-joint controller with leading-joint coordination
plant        two-link dynamic arm, kinematic chain, FK/IK, torque calibration
pid          PID baseline
metrics      step-response and smoothness metrics
presets      shipped parameter sets
experiments  closed-loop runner, configs, trace I/O
cli          command-line entry point
"""

from .snn import (
    FacilitationParams,
    LifParams,
    LifState,
    PlasticSynapse,
    PsiGainState,
    PsiParams,
    effective_weight,
    facilitation_step,
    lif_step,
    psi_step,
)
from .joint import JointBlockState, JointCommand, JointConfig, SynapseWeights, ablate, joint_step
from .arm import ArmControllerState, CoordinationEdge, CoordinationGraph, arm_step, build_topology
from .plant import (
    ArmState,
    TwoLinkParams,
    calibrate_torque_increment,
    forward_kinematics,
    ik_two_link,
    kinematic_step,
    two_link_step,
)
from .pid import PidGains, PidState, pid_step
from .metrics import StepMetrics, TrialTrace, bell_shape_score, jerk_profile, step_metrics

__version__ = "0.1.0"
