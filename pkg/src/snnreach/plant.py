"""
Arm plants driven by the controllers.

Two models share :class:`ArmState`:

* a torque-driven planar two-link arm (horizontal plane by default) with
  viscous joint damping and rotor armature, integrated with semi-implicit
  Euler;
* an N-joint kinematic chain in configuration space that applies angle
  increments directly and clamps to joint limits.

Lengths in m, masses in kg, inertias in kg m^2, time in s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "TwoLinkParams",
    "ArmState",
    "IntegrationError",
    "OutOfWorkspaceError",
    "CalibrationError",
    "TorqueCalibration",
    "mass_matrix",
    "two_link_step",
    "kinetic_energy",
    "kinematic_step",
    "forward_kinematics",
    "link_points",
    "ik_two_link",
    "calibrate_torque_increment",
]


class IntegrationError(ArithmeticError):
    """Raised when a dynamics step produces non-finite values."""


class OutOfWorkspaceError(ValueError):
    """Raised when an IK target lies outside the reachable annulus."""


class CalibrationError(RuntimeError):
    """Raised when the torque search cannot bracket the requested increment."""


def _pair(x) -> tuple[float, float]:
    a = tuple(float(v) for v in x)
    if len(a) != 2:
        raise ValueError(f"expected two values, got {len(a)}")
    return a


@dataclass(frozen=True)
class TwoLinkParams:
    """Planar two-link arm.

    ``link_inertias`` are about each link's proximal joint; when omitted they
    follow the uniform-rod value ``m L^2 / 3``. ``armature`` adds rotor
    inertia on each joint axis. Centres of mass sit at mid-link.
    """

    link_lengths: tuple[float, float] = (0.1, 0.11)
    link_masses: tuple[float, float] = (0.5, 0.5)
    link_inertias: Optional[tuple[float, float]] = None
    joint_damping: tuple[float, float] = (1.0, 1.0)
    armature: tuple[float, float] = (0.05, 0.05)
    dt: float = 0.001
    gravity: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", _pair(self.link_lengths))
        object.__setattr__(self, "link_masses", _pair(self.link_masses))
        object.__setattr__(self, "joint_damping", _pair(self.joint_damping))
        object.__setattr__(self, "armature", _pair(self.armature))
        if self.link_inertias is None:
            rods = tuple(m * l * l / 3.0 for m, l in zip(self.link_masses, self.link_lengths))
            object.__setattr__(self, "link_inertias", rods)
        else:
            object.__setattr__(self, "link_inertias", _pair(self.link_inertias))
        for name in ("link_lengths", "link_masses", "link_inertias"):
            if min(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if min(self.joint_damping) < 0 or min(self.armature) < 0:
            raise ValueError("joint_damping and armature must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        com = [l / 2 for l in self.link_lengths]
        for i_prox, m, r in zip(self.link_inertias, self.link_masses, com):
            if i_prox - m * r * r <= 0:
                raise ValueError("link inertia about the proximal joint must exceed m * (L/2)^2")


@dataclass(frozen=True)
class ArmState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.array(self.q, dtype=float))
        object.__setattr__(self, "qdot", np.array(self.qdot, dtype=float))
        if self.q.shape != self.qdot.shape:
            raise ValueError("q and qdot must have the same shape")

    @classmethod
    def at_rest(cls, q) -> "ArmState":
        q = np.array(q, dtype=float)
        return cls(q, np.zeros_like(q))


def _link_terms(params: TwoLinkParams):
    (l1, _), (m1, m2) = params.link_lengths, params.link_masses
    r1, r2 = params.link_lengths[0] / 2, params.link_lengths[1] / 2
    ic1 = params.link_inertias[0] - m1 * r1 * r1
    ic2 = params.link_inertias[1] - m2 * r2 * r2
    return l1, m1, m2, r1, r2, ic1, ic2


def mass_matrix(q, params: TwoLinkParams) -> np.ndarray:
    l1, m1, m2, r1, r2, ic1, ic2 = _link_terms(params)
    c2 = np.cos(q[1])
    m22 = ic2 + m2 * r2 * r2
    m12 = m22 + m2 * l1 * r2 * c2
    m11 = ic1 + m1 * r1 * r1 + ic2 + m2 * (l1 * l1 + r2 * r2 + 2 * l1 * r2 * c2)
    return np.array([[m11 + params.armature[0], m12],
                     [m12, m22 + params.armature[1]]])


def kinetic_energy(state: ArmState, params: TwoLinkParams) -> float:
    return 0.5 * float(state.qdot @ mass_matrix(state.q, params) @ state.qdot)


def two_link_step(state: ArmState, torques, params: TwoLinkParams) -> ArmState:
    """Advance the dynamic arm by ``params.dt``.

    Solves ``M(q) qdd = tau - C(q, qd) qd - D qd - G(q)`` and applies
    semi-implicit Euler (velocity first, then position).
    """
    q, qd = state.q, state.qdot
    tau = np.asarray(torques, dtype=float)
    l1, m1, m2, r1, r2, _, _ = _link_terms(params)
    h = m2 * l1 * r2 * np.sin(q[1])
    coriolis = np.array([-h * qd[1] * (2 * qd[0] + qd[1]), h * qd[0] ** 2])
    damping = np.asarray(params.joint_damping) * qd
    g = params.gravity
    c1, c12 = np.cos(q[0]), np.cos(q[0] + q[1])
    grav = np.array([(m1 * r1 + m2 * l1) * g * c1 + m2 * r2 * g * c12, m2 * r2 * g * c12])
    qdd = np.linalg.solve(mass_matrix(q, params), tau - coriolis - damping - grav)
    qd_new = qd + params.dt * qdd
    q_new = q + params.dt * qd_new
    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(qd_new))):
        raise IntegrationError("non-finite arm state")
    return ArmState(q_new, qd_new)


def kinematic_step(state: ArmState, deltas, limits=None, dt: float = 0.001) -> ArmState:
    """Add angle increments, clamp to ``limits`` (``(lower, upper)`` arrays), report velocity.

    The reported velocity is the increment actually applied divided by ``dt``.
    """
    deltas = np.asarray(deltas, dtype=float)
    q = state.q + deltas
    applied = deltas
    if limits is not None:
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), q.shape) for b in limits)
        clamped = np.clip(q, lo, hi)
        hit = clamped != q
        if np.any(hit):
            applied = np.where(hit, clamped - state.q, deltas)
        q = clamped
    return ArmState(q, applied / dt)


def link_points(q, lengths) -> np.ndarray:
    """Joint and tip positions of a planar serial chain, shape ``(n + 1, 2)``."""
    q = np.asarray(q, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths <= 0):
        raise ValueError("link lengths must be positive")
    if len(q) != len(lengths):
        raise ValueError("need one length per joint")
    phi = np.cumsum(q)
    pts = np.zeros((len(q) + 1, 2))
    pts[1:, 0] = np.cumsum(lengths * np.cos(phi))
    pts[1:, 1] = np.cumsum(lengths * np.sin(phi))
    return pts


def forward_kinematics(q, lengths) -> np.ndarray:
    """End-effector ``(x, y)`` of a planar chain."""
    return link_points(q, lengths)[-1]


def ik_two_link(target, lengths, elbow: str = "down") -> np.ndarray:
    """Analytic IK for a planar two-link arm.

    ``elbow="down"`` returns the solution with ``q2 >= 0`` and ``"up"`` the one
    with ``q2 <= 0``.
    """
    if elbow not in ("up", "down"):
        raise ValueError("elbow must be 'up' or 'down'")
    x, y = _pair(target)
    l1, l2 = _pair(lengths)
    r2 = x * x + y * y
    r = np.sqrt(r2)
    tol = 1e-12 * (l1 + l2)
    if r > l1 + l2 + tol or r < abs(l1 - l2) - tol:
        raise OutOfWorkspaceError(
            f"target ({x:.6g}, {y:.6g}) at radius {r:.6g} outside [{abs(l1 - l2):.6g}, {l1 + l2:.6g}]")
    c2 = np.clip((r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2), -1.0, 1.0)
    q2 = np.arccos(c2)
    if elbow == "up":
        q2 = -q2
    q1 = np.arctan2(y, x) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return np.array([q1, q2])


@dataclass(frozen=True)
class TorqueCalibration:
    nominal_torque: np.ndarray    # N m per angle increment, one per joint
    delta_theta: np.ndarray
    achieved: np.ndarray          # measured advance at the returned torque

    def __post_init__(self):
        if np.any(np.asarray(self.nominal_torque) <= 0):
            raise ValueError("nominal torques must be positive")


def _advance(params, posture, joint, torque, pulse_steps, total_steps):
    state = ArmState.at_rest(posture)
    tau = np.zeros(2)
    tau[joint] = torque
    zero = np.zeros(2)
    for k in range(total_steps):
        state = two_link_step(state, tau if k < pulse_steps else zero, params)
    return state.q[joint] - posture[joint]


def calibrate_torque_increment(params: TwoLinkParams, delta_theta, posture=(0.0, 0.0),
                               control_period: Optional[float] = None, settle_time: float = 0.5,
                               rtol: float = 1e-4, max_torque: float = 1e6) -> TorqueCalibration:
    """Find, per joint, the torque pulse that moves that joint by ``delta_theta``.

    The torque is held for one ``control_period`` (default ``params.dt``) on one
    joint with the arm at rest in ``posture``; the advance is read after
    ``settle_time`` seconds of coasting so that it is the net displacement one
    motor spike produces. Bisection stops once the advance is within ``rtol``.
    """
    deltas = np.broadcast_to(np.asarray(delta_theta, dtype=float), (2,)).copy()
    if np.any(deltas <= 0):
        raise ValueError("delta_theta must be positive")
    period = params.dt if control_period is None else control_period
    pulse_steps = max(1, int(round(period / params.dt)))
    total_steps = pulse_steps + int(round(settle_time / params.dt))
    posture = np.asarray(posture, dtype=float)

    torques, achieved = np.zeros(2), np.zeros(2)
    for j in range(2):
        target = deltas[j]
        lo, hi = 0.0, 1e-6
        while _advance(params, posture, j, hi, pulse_steps, total_steps) < target:
            lo, hi = hi, hi * 2.0
            if hi > max_torque:
                raise CalibrationError(
                    f"joint {j}: torque {max_torque:g} N m still advances less than {target:g} rad "
                    f"(posture={posture.tolist()}, period={period:g} s)")
        adv = _advance(params, posture, j, hi, pulse_steps, total_steps)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            adv_mid = _advance(params, posture, j, mid, pulse_steps, total_steps)
            if adv_mid < target:
                lo = mid
            else:
                hi, adv = mid, adv_mid
            if abs(adv - target) <= rtol * target:
                break
        else:
            raise CalibrationError(f"joint {j}: bisection did not converge (last advance {adv:g})")
        torques[j], achieved[j] = hi, adv
    return TorqueCalibration(torques, deltas, achieved)
