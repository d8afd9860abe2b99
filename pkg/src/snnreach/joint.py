"""
Single-DOF spiking controller block.

Seven LIF neurons per joint:

* ``ePPC-`` / ``ePPC+`` encode the position error ``theta_d - theta``; only the
  one matching the error sign receives excitatory drive.
* ``dPPC-`` / ``dPPC+`` encode falling / rising joint velocity.
* ``E`` (extensor) raises the joint angle, ``F`` (flexor) lowers it. E listens
  to ``ePPC-`` and ``dPPC-``; F listens to ``ePPC+`` and ``dPPC+``. The
  velocity pathway therefore brakes the movement it observes.
* ``PSI`` listens to both ePPC neurons and lowers the shared gain ``g`` on the
  ePPC->motor synapses, which are also facilitated.

Every motor spike is one fixed angle increment, so a tick produces
``(s_E - s_F) * angle_increment``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

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

__all__ = [
    "SynapseWeights",
    "JointConfig",
    "JointBlockState",
    "JointCommand",
    "encode_error_currents",
    "encode_derivative_currents",
    "joint_step",
    "ablate",
    "initial_state",
]


def _relu(x: float) -> float:
    return x if x > 0.0 else 0.0


@dataclass(frozen=True)
class SynapseWeights:
    """Static weights, in current units per presynaptic spike."""

    eppc_to_motor: float
    dppc_to_motor: float
    eppc_to_psi: float


@dataclass(frozen=True)
class JointConfig:
    error_gain: float
    derivative_gain: float
    derivative_window: int
    angle_increment: float
    eppc: LifParams
    dppc: LifParams
    extensor: LifParams
    flexor: LifParams
    psi: LifParams
    weights: SynapseWeights
    facilitation: FacilitationParams = field(default_factory=FacilitationParams)
    psi_gain: PsiParams = field(default_factory=PsiParams)
    uses_facilitation: bool = True
    uses_psi_gain: bool = True
    dt: float = 1.0  # ms per control step

    def __post_init__(self):
        if self.error_gain <= 0:
            raise ValueError("error_gain must be positive")
        if self.derivative_gain < 0:
            raise ValueError("derivative_gain must be non-negative")
        if self.angle_increment <= 0:
            raise ValueError("angle_increment must be positive")
        if int(self.derivative_window) != self.derivative_window or self.derivative_window < 1:
            raise ValueError("derivative_window must be an integer >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def motor_synapse(self, facilitation: float) -> PlasticSynapse:
        return PlasticSynapse(self.weights.eppc_to_motor, facilitation,
                              self.uses_facilitation, self.uses_psi_gain)


@dataclass(frozen=True)
class JointBlockState:
    eppc_minus: LifState = LifState()
    eppc_plus: LifState = LifState()
    dppc_minus: LifState = LifState()
    dppc_plus: LifState = LifState()
    extensor: LifState = LifState()
    flexor: LifState = LifState()
    psi: LifState = LifState()
    fac_extensor: float = 0.1   # ePPC- -> E
    fac_flexor: float = 0.1     # ePPC+ -> F
    gain: PsiGainState = PsiGainState()
    angle_history: tuple[float, ...] = ()


def initial_state(cfg: JointConfig) -> JointBlockState:
    f0 = cfg.facilitation.initial
    return JointBlockState(fac_extensor=f0, fac_flexor=f0, gain=PsiGainState.resting(cfg.psi_gain))


@dataclass(frozen=True)
class JointCommand:
    delta: float
    e_spike: bool
    f_spike: bool
    spikes: dict[str, bool]
    gain: float
    fac_extensor: float
    fac_flexor: float


def encode_error_currents(theta: float, theta_d: float, cfg: JointConfig) -> tuple[float, float]:
    """Map target and feedback through four ReLU converters onto the ePPC pair.

    Returns ``(i_eppc_minus, i_eppc_plus)``. Each signed quantity drives a
    ``(+x, -x)`` ReLU pair; target converters excite ePPC- and inhibit ePPC+,
    feedback converters do the opposite, so the net drive is
    ``+-error_gain * (theta_d - theta)``.
    """
    target_pos, target_neg = _relu(theta_d), _relu(-theta_d)
    fb_pos, fb_neg = _relu(theta), _relu(-theta)
    k = cfg.error_gain
    i_minus = k * (target_pos - target_neg - fb_pos + fb_neg)
    i_plus = k * (-target_pos + target_neg + fb_pos - fb_neg)
    return i_minus, i_plus


def angular_velocity(angle_history, cfg: JointConfig) -> float:
    """Windowed finite difference in rad/s; zero until the window has filled."""
    w = int(cfg.derivative_window)
    if len(angle_history) < w + 1:
        return 0.0
    return (angle_history[-1] - angle_history[-1 - w]) / (w * cfg.dt * 1e-3)


def encode_derivative_currents(angle_history, cfg: JointConfig) -> tuple[float, float]:
    """Return ``(i_dppc_neg, i_dppc_pos)`` from the windowed angular velocity."""
    rate = angular_velocity(angle_history, cfg)
    return -cfg.derivative_gain * rate, cfg.derivative_gain * rate


def joint_step(state: JointBlockState, cfg: JointConfig, theta: float, theta_d: float,
               coordination_current: float = 0.0) -> tuple[JointBlockState, JointCommand]:
    """One synchronous tick of the block; returns the new state and the command."""
    history = (state.angle_history + (theta,))[-(int(cfg.derivative_window) + 1):]
    i_em, i_ep = encode_error_currents(theta, theta_d, cfg)
    i_dn, i_dp = encode_derivative_currents(history, cfg)

    eppc_minus, s_em = lif_step(state.eppc_minus, cfg.eppc, 0.0, i_em)
    eppc_plus, s_ep = lif_step(state.eppc_plus, cfg.eppc, 0.0, i_ep)
    dppc_minus, s_dn = lif_step(state.dppc_minus, cfg.dppc, 0.0, i_dn)
    dppc_plus, s_dp = lif_step(state.dppc_plus, cfg.dppc, 0.0, i_dp)

    w = cfg.weights
    psi, s_psi = lif_step(state.psi, cfg.psi, w.eppc_to_psi * (s_em + s_ep))

    fac_e = facilitation_step(state.fac_extensor, cfg.facilitation, s_em, cfg.dt)
    fac_f = facilitation_step(state.fac_flexor, cfg.facilitation, s_ep, cfg.dt)
    gain = psi_step(state.gain, cfg.psi_gain, s_psi, cfg.dt)

    drive_e = effective_weight(cfg.motor_synapse(fac_e), gain) * s_em + w.dppc_to_motor * s_dn
    drive_f = effective_weight(cfg.motor_synapse(fac_f), gain) * s_ep + w.dppc_to_motor * s_dp
    extensor, s_e = lif_step(state.extensor, cfg.extensor, drive_e + coordination_current)
    flexor, s_f = lif_step(state.flexor, cfg.flexor, drive_f + coordination_current)

    new_state = JointBlockState(eppc_minus, eppc_plus, dppc_minus, dppc_plus, extensor, flexor, psi,
                                fac_e, fac_f, gain, history)
    command = JointCommand(
        delta=(s_e - s_f) * cfg.angle_increment,
        e_spike=s_e,
        f_spike=s_f,
        spikes={"eppc_minus": s_em, "eppc_plus": s_ep, "dppc_minus": s_dn, "dppc_plus": s_dp,
                "extensor": s_e, "flexor": s_f, "psi": s_psi},
        gain=gain.gain,
        fac_extensor=fac_e,
        fac_flexor=fac_f,
    )
    return new_state, command


def ablate(cfg: JointConfig, disable_facilitation: bool, disable_psi: bool) -> JointConfig:
    """Return ``cfg`` with facilitation and/or PSI gain removed from the ePPC->motor synapses."""
    return replace(cfg,
                   uses_facilitation=cfg.uses_facilitation and not disable_facilitation,
                   uses_psi_gain=cfg.uses_psi_gain and not disable_psi)
