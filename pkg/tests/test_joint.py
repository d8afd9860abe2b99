from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snnreach.joint import (
    ablate,
    angular_velocity,
    encode_derivative_currents,
    encode_error_currents,
    initial_state,
    joint_step,
)
from snnreach.presets import joint_config
from snnreach.snn import PsiGainState, effective_weight


def closed_loop(cfg, theta0, theta_d, steps):
    s, theta = initial_state(cfg), theta0
    q, cmds = [], []
    for _ in range(steps):
        s, c = joint_step(s, cfg, theta, theta_d)
        theta += c.delta
        q.append(theta)
        cmds.append(c)
    return np.array(q), cmds


# --- encoders ------------------------------------------------------------------

def test_error_encoding_zero_error():
    assert encode_error_currents(0.7, 0.7, joint_config()) == (0.0, 0.0)


@pytest.mark.parametrize("theta, theta_d, expected", [
    (0.0, 1.0, (2.0, -2.0)),
    (-0.5, -1.0, (-1.0, 1.0)),
])
def test_error_encoding_examples(theta, theta_d, expected):
    cfg = joint_config(overrides={"error_gain": 2.0})
    assert encode_error_currents(theta, theta_d, cfg) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(-4, 4), theta_d=st.floats(-4, 4))
def test_error_encoding_mutually_exclusive(theta, theta_d):
    i_minus, i_plus = encode_error_currents(theta, theta_d, joint_config())
    assert not (i_minus > 0 and i_plus > 0)
    assert i_minus == pytest.approx(-i_plus, abs=1e-12)


def test_derivative_examples():
    cfg = joint_config(overrides={"derivative_window": 100, "derivative_gain": 1.0})
    assert all(i == 0 for i in encode_derivative_currents([0.3] * 101, cfg))
    ramp = list(np.linspace(0.0, 0.1, 101))
    neg, pos = encode_derivative_currents(ramp, cfg)
    assert pos == pytest.approx(1.0, rel=1e-12)
    assert neg == pytest.approx(-1.0, rel=1e-12)
    assert angular_velocity([0.5], cfg) == 0.0


def test_config_validation():
    base = joint_config()
    for bad in ({"error_gain": 0.0}, {"derivative_gain": -1.0}, {"angle_increment": 0.0}, {"derivative_window": 0}):
        with pytest.raises(ValueError):
            replace(base, **bad)


# --- one network tick ------------------------------------------------------

def test_fixed_point_at_target():
    cfg = joint_config()
    q, cmds = closed_loop(cfg, 0.4, 0.4, 1000)
    assert all(c.delta == 0.0 and not c.e_spike and not c.f_spike for c in cmds)
    assert np.all(q == 0.4)


def _first_e_spike(cfg, err=0.5):
    s = initial_state(cfg)
    for t in range(5000):
        s, c = joint_step(s, cfg, 0.0, err)  # open loop: hold the error fixed
        if c.e_spike:
            return t
    return None


def test_facilitation_delays_first_motor_spike():
    cfg = joint_config()
    with_fac = _first_e_spike(cfg)
    without = _first_e_spike(ablate(cfg, True, False))
    assert with_fac is not None and without is not None
    assert with_fac > without


def test_psi_gain_lower_for_large_error():
    cfg = joint_config()

    def mean_gain(err):
        _, cmds = closed_loop(cfg, 0.0, err, 500)
        return np.mean([c.gain for c in cmds])

    assert mean_gain(1.0) < mean_gain(0.1)


def test_ablate_examples():
    cfg = joint_config()
    assert ablate(cfg, False, False) == cfg
    g = PsiGainState(0.4, 0.6)
    syn = ablate(cfg, False, True).motor_synapse(0.3)
    assert effective_weight(syn, g) == pytest.approx(cfg.weights.eppc_to_motor * 0.3)
    syn = ablate(cfg, True, True).motor_synapse(0.3)
    assert effective_weight(syn, g) == cfg.weights.eppc_to_motor


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(-2, 2), offset=st.floats(0.01, 2), above=st.booleans())
def test_sign_correctness_open_loop(theta, offset, above):
    # with theta held on one side of the target, only the corrective motor neuron fires
    cfg = joint_config()
    theta_d = theta - offset if above else theta + offset
    s = initial_state(cfg)
    for _ in range(600):
        s, c = joint_step(s, cfg, theta, theta_d)
        assert c.delta in (-cfg.angle_increment, 0.0, cfg.angle_increment)
        if above:
            assert not c.e_spike
        else:
            assert not c.f_spike


@pytest.mark.parametrize("theta0, theta_d", [(0.0, 1.0), (0.0, -1.0), (0.5, 2.0), (1.0, 0.5)])
def test_closed_loop_converges_without_oscillation(theta0, theta_d):
    cfg = joint_config()
    q, _ = closed_loop(cfg, theta0, theta_d, 3000)
    tol = 0.02 * abs(theta_d - theta0)
    inside = np.abs(q - theta_d) < tol
    first = int(np.argmax(inside))
    assert inside[first] and np.all(inside[first:])


def test_overshoot_ordering():
    cfg = joint_config()

    def overshoot(c):
        q, _ = closed_loop(c, 0.0, 1.0, 3000)
        return max(0.0, q.max() - 1.0)

    full, no_psi, neither = overshoot(cfg), overshoot(ablate(cfg, False, True)), overshoot(ablate(cfg, True, True))
    assert full <= no_psi + 1e-12 <= neither + 2e-12


def test_determinism_identical_rasters():
    cfg = joint_config()
    _, a = closed_loop(cfg, 0.0, 0.8, 1500)
    _, b = closed_loop(cfg, 0.0, 0.8, 1500)
    assert [(c.e_spike, c.f_spike, c.gain) for c in a] == [(c.e_spike, c.f_spike, c.gain) for c in b]


def test_coordination_current_reaches_both_motor_neurons():
    cfg = joint_config()
    s = initial_state(cfg)
    for _ in range(5):
        s, _ = joint_step(s, cfg, 0.0, 0.0, coordination_current=0.3)
    assert s.extensor.current > 0 and s.flexor.current > 0
