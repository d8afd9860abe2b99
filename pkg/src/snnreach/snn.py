"""
Neuron and synapse primitives.

Discrete-time leaky integrate-and-fire (LIF) neurons with a current and a
voltage compartment, activity-dependent synaptic facilitation, and a
presynaptic-inhibition (PSI) gain that divisively scales synaptic weights.

All updates are pure: they take a state value and return a new one. Time
constants are in milliseconds and are converted to per-step decay factors
with ``exp(-dt / tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "LifParams",
    "LifState",
    "FacilitationParams",
    "PsiParams",
    "PlasticSynapse",
    "PsiGainState",
    "decay_factor",
    "lif_step",
    "facilitation_step",
    "psi_step",
    "effective_weight",
]


def decay_factor(tau: float, dt: float = 1.0) -> float:
    """Per-step multiplicative decay for a time constant ``tau`` (same units as ``dt``)."""
    if tau <= 0:
        raise ValueError(f"time constant must be positive, got {tau}")
    return math.exp(-dt / tau)


@dataclass(frozen=True)
class LifParams:
    current_decay: float
    voltage_decay: float
    threshold: float
    bias: float = 0.0
    voltage_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.current_decay <= 1.0:
            raise ValueError(f"current_decay must be in [0, 1], got {self.current_decay}")
        if not 0.0 <= self.voltage_decay <= 1.0:
            raise ValueError(f"voltage_decay must be in [0, 1], got {self.voltage_decay}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.voltage_floor >= self.threshold:
            raise ValueError("voltage_floor must lie below threshold")

    @classmethod
    def from_time_constants(cls, tau_current: float, tau_voltage: float, threshold: float,
                            dt: float = 1.0, **kwargs) -> "LifParams":
        """Build parameters from time constants in ms instead of raw factors."""
        return cls(decay_factor(tau_current, dt), decay_factor(tau_voltage, dt), threshold, **kwargs)


@dataclass(frozen=True)
class LifState:
    current: float = 0.0
    voltage: float = 0.0
    spiked: bool = False


def lif_step(state: LifState, params: LifParams, weighted_spike_input: float = 0.0,
             injected_current: float = 0.0) -> tuple[LifState, bool]:
    """Advance one LIF neuron by one step.

    The synaptic current integrates weighted presynaptic spikes plus any
    injected (bias) current; the voltage integrates the current. Crossing the
    threshold emits a spike and resets the voltage to zero. Negative drive is
    allowed and is stopped at ``params.voltage_floor``.
    """
    u = state.current * params.current_decay + weighted_spike_input + injected_current + params.bias
    v = state.voltage * params.voltage_decay + u
    if v >= params.threshold:
        return LifState(u, 0.0, True), True
    if v < params.voltage_floor:
        v = params.voltage_floor
    return LifState(u, v, False), False


@dataclass(frozen=True)
class FacilitationParams:
    """Facilitation dynamics; ``decay_tau`` in ms."""

    decay_tau: float = 500.0
    increment: float = 0.005
    max_factor: float = 1.0
    initial: float = 0.1

    def __post_init__(self):
        if self.decay_tau <= 0:
            raise ValueError("decay_tau must be positive")
        if not 0.0 < self.increment <= self.max_factor:
            raise ValueError("increment must satisfy 0 < increment <= max_factor")
        if not 0.0 <= self.initial <= self.max_factor:
            raise ValueError("initial facilitation must lie in [0, max_factor]")


def facilitation_step(f: float, params: FacilitationParams, pre_spike: bool, dt: float = 1.0) -> float:
    """Decay the facilitation factor, add one increment per presynaptic spike, saturate."""
    f = f * math.exp(-dt / params.decay_tau)
    if pre_spike:
        f += params.increment
    return min(params.max_factor, f)


@dataclass(frozen=True)
class PsiParams:
    """Presynaptic-inhibition gain dynamics; ``decay_tau`` in ms."""

    decay_tau: float = 50.0
    increment: float = 0.005
    g_max: float = 1.0

    def __post_init__(self):
        if self.decay_tau <= 0:
            raise ValueError("decay_tau must be positive")
        if not 0.0 < self.increment <= self.g_max:
            raise ValueError("increment must satisfy 0 < increment <= g_max")


@dataclass(frozen=True)
class PsiGainState:
    accumulator: float = 0.0
    gain: float = 1.0

    @classmethod
    def resting(cls, params: PsiParams) -> "PsiGainState":
        return cls(0.0, params.g_max)


def psi_step(state: PsiGainState, params: PsiParams, psi_spike: bool, dt: float = 1.0) -> PsiGainState:
    """Update the inhibition accumulator and derive the gain ``g = g_max - h``.

    Each PSI spike adds ``increment`` to the accumulator, which otherwise
    decays toward zero, so the gain relaxes back to ``g_max``.
    """
    h = state.accumulator * math.exp(-dt / params.decay_tau)
    if psi_spike:
        h += params.increment
    g = min(params.g_max, max(0.0, params.g_max - h))
    return PsiGainState(h, g)


@dataclass(frozen=True)
class PlasticSynapse:
    static_weight: float
    facilitation: float = 1.0
    uses_facilitation: bool = True
    uses_psi_gain: bool = True

    def with_facilitation(self, f: float) -> "PlasticSynapse":
        return replace(self, facilitation=f)


def effective_weight(synapse: PlasticSynapse, gain: PsiGainState) -> float:
    """Static weight scaled by facilitation and PSI gain; an ablated factor counts as 1."""
    w = synapse.static_weight
    if synapse.uses_facilitation:
        w *= synapse.facilitation
    if synapse.uses_psi_gain:
        w *= gain.gain
    return w
