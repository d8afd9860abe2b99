"""
Step-response and smoothness metrics.

Conventions
-----------
* Times are in milliseconds, angles in radians.
* Rise time is measured between the first samples at or beyond 10 % and 90 %
  of the step (no interpolation).
* Settling uses a band of 20 % of the step magnitude, centred on the target.
* Derivatives are successive central differences (one-sided at the ends);
  optional Gaussian smoothing of the position is applied before
  differentiating and must be shared by any traces being compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks

__all__ = [
    "TrialTrace",
    "StepMetrics",
    "NotSettled",
    "step_metrics",
    "derivatives",
    "JerkProfile",
    "jerk_profile",
    "speed_profile",
    "bell_shape_score",
]


@dataclass
class TrialTrace:
    """Time-indexed record of one closed-loop trial.

    ``q`` and ``targets`` have shape ``(n_steps, n_joints)``; ``ee`` has shape
    ``(n_steps, 2)``. ``spikes`` maps ``"e"``/``"f"`` to boolean arrays of shape
    ``(n_steps, n_joints)``; ``gain``/``fac_e``/``fac_f`` are float arrays of
    the same shape (NaN for controllers without them).
    """

    time: np.ndarray
    q: np.ndarray
    targets: np.ndarray
    ee: np.ndarray
    spikes: dict = field(default_factory=dict)
    gain: Optional[np.ndarray] = None
    fac_e: Optional[np.ndarray] = None
    fac_f: Optional[np.ndarray] = None

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float).T).T
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float).T).T
        self.ee = np.asarray(self.ee, dtype=float)
        n = len(self.time)
        for name in ("q", "targets", "ee"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} rows, expected {n}")
        if n > 1:
            steps = np.diff(self.time)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("trace time base must be uniform")

    @property
    def dt(self) -> float:
        """Sample spacing in ms."""
        return float(self.time[1] - self.time[0])

    @property
    def n_joints(self) -> int:
        return self.q.shape[1]


class NotSettled:
    """Marker for a trace that never stays inside the settling band."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NotSettled"

    def __bool__(self):
        return False


@dataclass(frozen=True)
class StepMetrics:
    overshoot_pct: float
    rise_time: Optional[float]     # ms, None if the 90 % level is never reached
    settling_time: object          # ms, or NotSettled()

    @property
    def settled(self) -> bool:
        return not isinstance(self.settling_time, NotSettled)


OVERSHOOT_TOL = 1e-9


def _first_crossing(t, y, level, direction):
    hit = np.nonzero(direction * (y - level) >= 0)[0]
    return float(t[hit[0]]) if len(hit) else None


def step_metrics(trace: TrialTrace, joint: int, theta_0: float, theta_d: float,
                 band: float = 0.2) -> StepMetrics:
    """Overshoot (% of step), 10-90 % rise time and settling time for one joint.

    Times are measured from the step command: the first sample whose target for
    ``joint`` equals ``theta_d`` (the trace start if there is none), so a
    settled prefix before the command does not change them. Excursions past the target
    smaller than ``OVERSHOOT_TOL`` of the step (float round-off from summing
    increments) count as zero overshoot.
    """
    step = theta_d - theta_0
    if step == 0:
        raise ValueError("theta_d must differ from theta_0")
    direction = 1.0 if step > 0 else -1.0
    commanded = np.nonzero(trace.targets[:, joint] == theta_d)[0]
    k0 = int(commanded[0]) if len(commanded) else 0
    t = trace.time[k0:] - trace.time[k0]
    y = trace.q[k0:, joint]

    peak = np.max(direction * (y - theta_d))
    ratio = peak / abs(step)
    overshoot = ratio * 100.0 if ratio > OVERSHOOT_TOL else 0.0

    t10 = _first_crossing(t, y, theta_0 + 0.1 * step, direction)
    t90 = _first_crossing(t, y, theta_0 + 0.9 * step, direction)
    rise = t90 - t10 if (t10 is not None and t90 is not None) else None

    outside = np.nonzero(np.abs(y - theta_d) > band * abs(step))[0]
    if len(outside) == 0:
        settling = 0.0
    elif outside[-1] == len(y) - 1:
        settling = NotSettled()
    else:
        settling = float(t[outside[-1] + 1])
    return StepMetrics(overshoot, rise, settling)


def derivatives(position, dt_s: float, smoothing_sigma: Optional[float] = None):
    """Velocity, acceleration and jerk of ``position`` sampled every ``dt_s`` seconds.

    ``position`` may be 1-D or ``(n, d)``; differentiation runs along axis 0.
    ``smoothing_sigma`` is a Gaussian width in samples applied to the position.
    """
    x = np.asarray(position, dtype=float)
    if len(x) < 4:
        raise ValueError("need at least 4 samples")
    if smoothing_sigma:
        x = gaussian_filter1d(x, smoothing_sigma, axis=0, mode="nearest")
    vel = np.gradient(x, dt_s, axis=0)
    acc = np.gradient(vel, dt_s, axis=0)
    jerk = np.gradient(acc, dt_s, axis=0)
    return vel, acc, jerk


@dataclass(frozen=True)
class JerkProfile:
    jerk: np.ndarray           # magnitude per sample
    max_abs_jerk: float
    integral_abs_jerk: float


def _source(trace: TrialTrace, source):
    if source == "end-effector":
        return trace.ee
    if source == "joint":
        return trace.q
    if isinstance(source, (int, np.integer)):
        return trace.q[:, int(source)]
    raise ValueError(f"unknown source {source!r}")


def _magnitude(a):
    return np.abs(a) if a.ndim == 1 else np.linalg.norm(a, axis=1)


def jerk_profile(trace: TrialTrace, source="end-effector", smoothing_ms: Optional[float] = None) -> JerkProfile:
    """Jerk magnitude of the end-effector, all joints (vector norm) or one joint index."""
    dt_s = trace.dt * 1e-3
    sigma = smoothing_ms / trace.dt if smoothing_ms else None
    _, _, jerk = derivatives(_source(trace, source), dt_s, sigma)
    mag = _magnitude(jerk)
    return JerkProfile(mag, float(mag.max()), float(np.sum(mag) * dt_s))


def speed_profile(trace: TrialTrace, source="end-effector", smoothing_ms: Optional[float] = None) -> np.ndarray:
    """Speed magnitude in units per second, same differencing as :func:`jerk_profile`."""
    sigma = smoothing_ms / trace.dt if smoothing_ms else None
    vel, _, _ = derivatives(_source(trace, source), trace.dt * 1e-3, sigma)
    return _magnitude(vel)


def bell_shape_score(velocity, prominence: float = 0.1, onset_fraction: float = 0.05) -> tuple[int, float]:
    """Count prominent peaks of a speed profile and locate the main one.

    A local maximum counts when its prominence exceeds ``prominence`` times the
    global peak. The movement spans the samples where speed exceeds
    ``onset_fraction`` of the peak; the symmetry ratio is time-to-peak over that
    span (0.5 for a symmetric bell).
    """
    v = np.abs(np.asarray(velocity, dtype=float))
    top = v.max()
    if top <= 0:
        return 0, float("nan")
    padded = np.concatenate(([0.0], v, [0.0]))
    peaks, _ = find_peaks(padded, prominence=prominence * top)
    moving = np.nonzero(v >= onset_fraction * top)[0]
    start, end = moving[0], moving[-1]
    duration = end - start
    if duration == 0:
        return len(peaks), 0.5
    return len(peaks), float((np.argmax(v) - start) / duration)
