import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snnreach.plant import (
    ArmState,
    CalibrationError,
    IntegrationError,
    OutOfWorkspaceError,
    TwoLinkParams,
    calibrate_torque_increment,
    forward_kinematics,
    ik_two_link,
    kinematic_step,
    kinetic_energy,
    link_points,
    mass_matrix,
    two_link_step,
)

from oracles import rk4_reference


def test_equilibrium_without_torque():
    p = TwoLinkParams()
    s = ArmState.at_rest([0.3, -0.7])
    s2 = two_link_step(s, [0.0, 0.0], p)
    assert np.array_equal(s2.q, s.q) and np.array_equal(s2.qdot, s.qdot)


def test_damped_motion_loses_kinetic_energy():
    p = TwoLinkParams()
    s = ArmState([0.2, 1.0], [3.0, -2.0])
    ke0 = kinetic_energy(s, p)
    s2 = two_link_step(s, [0.0, 0.0], p)
    assert kinetic_energy(s2, p) < ke0


def test_mass_matrix_symmetric_positive_definite():
    p = TwoLinkParams()
    for q2 in np.linspace(-np.pi, np.pi, 13):
        M = mass_matrix([0.0, q2], p)
        assert np.allclose(M, M.T)
        assert np.all(np.linalg.eigvalsh(M) > 0)


@pytest.mark.parametrize("tau", [(0.5, 0.0), (1.0, -0.3), (0.0, 0.2)])
def test_integrator_matches_refined_oracle(tau):
    p = TwoLinkParams()
    q0 = np.array([0.1, 0.4])
    s = ArmState.at_rest(q0)
    for _ in range(10):
        s = two_link_step(s, tau, p)
    q_ref, _ = rk4_reference(q0, np.zeros(2), tau, p, 10 * p.dt, 10 * 100)
    assert np.max(np.abs(s.q - q_ref)) < 1e-3


def test_semi_implicit_converges_to_oracle_with_smaller_steps():
    # first-order method: error shrinks roughly in proportion to dt
    p_coarse = TwoLinkParams(dt=0.001)
    p_fine = TwoLinkParams(dt=0.0001)
    tau = (1.0, 0.0)
    q0 = np.array([0.0, 0.5])
    q_ref, _ = rk4_reference(q0, np.zeros(2), tau, p_coarse, 0.05, 5000)
    errs = []
    for p, n in ((p_coarse, 50), (p_fine, 500)):
        s = ArmState.at_rest(q0)
        for _ in range(n):
            s = two_link_step(s, tau, p)
        errs.append(np.max(np.abs(s.q - q_ref)))
    assert errs[1] < errs[0] / 5


def test_non_finite_state_raises():
    with pytest.raises(IntegrationError):
        two_link_step(ArmState([0.0, 0.0], [0.0, 0.0]), [np.inf, 0.0], TwoLinkParams())


@settings(max_examples=20, deadline=None)
@given(q=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
       qd=st.lists(st.floats(-10, 10), min_size=2, max_size=2))
def test_passive_arm_comes_to_rest(q, qd):
    p = TwoLinkParams()
    s = ArmState(q, qd)
    for _ in range(3000):
        s = two_link_step(s, [0.0, 0.0], p)
    assert np.max(np.abs(s.qdot)) < 1e-6 * max(1.0, np.max(np.abs(qd)))


def test_params_validation():
    with pytest.raises(ValueError):
        TwoLinkParams(link_lengths=(0.0, 0.1))
    with pytest.raises(ValueError):
        TwoLinkParams(dt=0.0)
    with pytest.raises(ValueError):
        TwoLinkParams(link_masses=(1.0, 1.0), link_inertias=(1e-6, 1.0))


# --- kinematic chain ---------------------------------------------------------

def test_kinematic_zero_delta_unchanged():
    s = ArmState.at_rest([0.1, 0.2, 0.3])
    s2 = kinematic_step(s, [0, 0, 0])
    assert np.array_equal(s2.q, s.q)
    assert np.array_equal(s2.qdot, np.zeros(3))


def test_kinematic_clamps_at_limit():
    s = ArmState.at_rest([1.0, 0.0])
    s2 = kinematic_step(s, [0.01, 0.01], limits=([-1.0, -1.0], [1.0, 1.0]), dt=0.001)
    assert s2.q[0] == 1.0
    assert s2.qdot[0] == 0.0
    assert s2.q[1] == 0.01


def test_kinematic_alternating_increments():
    dtheta, dt = 0.002, 0.001
    s = ArmState.at_rest([0.5])
    qs, vs = [], []
    for k in range(6):
        d = dtheta if k % 2 == 0 else -dtheta
        s = kinematic_step(s, [d], dt=dt)
        qs.append(s.q[0])
        vs.append(s.qdot[0])
    assert max(qs) - min(qs) == pytest.approx(dtheta)
    assert vs == [dtheta / dt, -dtheta / dt] * 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([-0.003, 0.0, 0.003]), min_size=3, max_size=3))
def test_kinematic_velocity_is_delta_over_dt(deltas):
    s = kinematic_step(ArmState.at_rest([0.1, -0.2, 0.3]), deltas, dt=0.001)
    assert np.array_equal(s.qdot, np.asarray(deltas) / 0.001)


# --- kinematics ------------------------------------------------------------

@pytest.mark.parametrize("q, expected", [
    ((0.0, 0.0), (2.0, 0.0)),
    ((math.pi / 2, 0.0), (0.0, 2.0)),
    ((0.0, math.pi / 2), (1.0, 1.0)),
])
def test_forward_kinematics(q, expected):
    assert np.allclose(forward_kinematics(q, (1.0, 1.0)), expected, atol=1e-15)


def test_link_points_shape_and_rejects_bad_lengths():
    pts = link_points([0.1] * 6, [0.2] * 6)
    assert pts.shape == (7, 2)
    with pytest.raises(ValueError):
        forward_kinematics([0.0, 0.0], [1.0, -1.0])


def test_ik_examples():
    assert np.allclose(ik_two_link((2.0, 0.0), (1.0, 1.0)), (0.0, 0.0), atol=1e-7)
    q = ik_two_link((1.0, 1.0), (1.0, 1.0), elbow="down")
    assert np.allclose(q, (0.0, math.pi / 2), atol=1e-12)
    assert np.allclose(forward_kinematics(q, (1.0, 1.0)), (1.0, 1.0), atol=1e-12)
    q_up = ik_two_link((1.0, 1.0), (1.0, 1.0), elbow="up")
    assert np.allclose(q_up, (math.pi / 2, -math.pi / 2), atol=1e-12)


@pytest.mark.parametrize("target", [(3.0, 0.0), (0.0, 0.0), (0.05, 0.0)])
def test_ik_unreachable(target):
    with pytest.raises(OutOfWorkspaceError):
        ik_two_link(target, (1.0, 0.8))


@settings(max_examples=300, deadline=None)
@given(r=st.floats(0.02, 0.999), phi=st.floats(-math.pi, math.pi), elbow=st.sampled_from(["up", "down"]))
def test_ik_fk_round_trip_property(r, phi, elbow):
    lengths = (0.1, 0.11)
    rmin, rmax = abs(lengths[0] - lengths[1]), sum(lengths)
    rad = rmin + r * (rmax - rmin)
    p = np.array([rad * math.cos(phi), rad * math.sin(phi)])
    assert np.linalg.norm(forward_kinematics(ik_two_link(p, lengths, elbow), lengths) - p) < 1e-9


# --- calibration -------------------------------------------------------------

def _replay(p, torque, joint, period_steps=1, settle=0.5):
    s = ArmState.at_rest([0.0, 0.0])
    tau = np.zeros(2)
    tau[joint] = torque
    for k in range(period_steps + int(round(settle / p.dt))):
        s = two_link_step(s, tau if k < period_steps else np.zeros(2), p)
    return s.q[joint]


def test_calibration_replays_within_one_percent():
    p = TwoLinkParams()
    cal = calibrate_torque_increment(p, 0.002)
    for j in range(2):
        assert abs(_replay(p, cal.nominal_torque[j], j) - 0.002) <= 0.01 * 0.002
    assert np.all(np.abs(cal.achieved - 0.002) <= 0.01 * 0.002)


def test_calibration_monotone_in_mass_and_increment():
    light = calibrate_torque_increment(TwoLinkParams(link_masses=(0.5, 0.5)), 0.002)
    heavy = calibrate_torque_increment(TwoLinkParams(link_masses=(2.0, 2.0)), 0.002)
    assert np.all(heavy.nominal_torque > light.nominal_torque)
    double = calibrate_torque_increment(TwoLinkParams(), 0.004)
    assert np.all(double.nominal_torque > light.nominal_torque)


def test_calibration_fails_to_bracket():
    with pytest.raises(CalibrationError, match="joint 0"):
        calibrate_torque_increment(TwoLinkParams(), 0.002, max_torque=1e-3)
