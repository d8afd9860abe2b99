"""
Joint-space PID baseline with velocity damping.

``command = kp * e - kv * theta_dot + ki * integral(e)``, where ``e`` is
``theta_d - theta``. The damping term acts on the measured velocity rather
than on the error derivative, so a step in the target produces no derivative
kick. Default gains: kp=20, kv=30, ki=0.001.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PidGains", "PidState", "pid_step"]


@dataclass(frozen=True)
class PidGains:
    kp: float = 20.0
    kv: float = 30.0
    ki: float = 0.001
    integral_limit: float = 10.0   # rad s, anti-windup clamp

    def __post_init__(self):
        if min(self.kp, self.kv, self.ki) < 0:
            raise ValueError("gains must be non-negative")
        if self.integral_limit < 0:
            raise ValueError("integral_limit must be non-negative")


@dataclass(frozen=True)
class PidState:
    integral_accumulator: float = 0.0
    previous_error: float = 0.0


def pid_step(state: PidState, gains: PidGains, theta: float, theta_d: float,
             theta_dot: float, dt: float) -> tuple[PidState, float]:
    """One PID update; ``dt`` in seconds."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = theta_d - theta
    lim = gains.integral_limit
    integral = min(lim, max(-lim, state.integral_accumulator + e * dt))
    command = gains.kp * e - gains.kv * theta_dot + gains.ki * integral
    return PidState(integral, e), command
