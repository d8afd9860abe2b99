import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snnreach.snn import (
    FacilitationParams,
    LifParams,
    LifState,
    PlasticSynapse,
    PsiGainState,
    PsiParams,
    decay_factor,
    effective_weight,
    facilitation_step,
    lif_step,
    psi_step,
)

from oracles import facilitation_reference, lif_reference, psi_reference, relative_error


# --- LIF -------------------------------------------------------------------

def test_lif_zero_fixed_point():
    p = LifParams(0.5, 0.8, 2.0)
    s, spike = lif_step(LifState(), p, 0.0, 0.0)
    assert (s.current, s.voltage, spike) == (0.0, 0.0, False)


def test_lif_two_step_hand_evaluation():
    p = LifParams(current_decay=0.5, voltage_decay=0.8, threshold=2.0)
    s, spike = lif_step(LifState(), p, 1.0)
    assert (s.current, s.voltage, spike) == (1.0, 1.0, False)
    s, spike = lif_step(s, p, 1.0)
    # u = 0.5 + 1 = 1.5, v = 0.8 + 1.5 = 2.3 >= 2
    assert s.current == 1.5
    assert spike and s.spiked
    assert s.voltage == 0.0


@pytest.mark.parametrize("current, threshold", [(0.3, 1.0), (0.25, 2.0), (0.7, 5.0)])
def test_lif_nonleaky_first_spike_matches_closed_form(current, threshold):
    # with d_u = d_v = 1 and constant injection I: u_t = t*I, v_t = I*t(t+1)/2
    p = LifParams(1.0, 1.0, threshold)
    expected = next(t for t in range(1, 10_000) if current * t * (t + 1) / 2 >= threshold)
    s, t = LifState(), 0
    while True:
        t += 1
        s, spike = lif_step(s, p, 0.0, current)
        if spike:
            break
    assert t == expected


def test_lif_negative_drive_is_floored():
    p = LifParams(0.5, 0.9, 1.0, voltage_floor=-0.2)
    s, _ = lif_step(LifState(), p, 0.0, -5.0)
    assert s.voltage == -0.2
    s, _ = lif_step(LifState(), LifParams(0.5, 0.9, 1.0), 0.0, -5.0)
    assert s.voltage == 0.0 and s.current == -5.0


def test_lif_param_validation():
    with pytest.raises(ValueError):
        LifParams(1.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        LifParams(0.5, -0.1, 1.0)
    with pytest.raises(ValueError):
        LifParams(0.5, 0.5, 0.0)


def test_lif_from_time_constants():
    p = LifParams.from_time_constants(10.0, 20.0, 1.0, dt=1.0)
    assert p.current_decay == pytest.approx(math.exp(-0.1))
    assert p.voltage_decay == pytest.approx(math.exp(-0.05))


@settings(max_examples=200, deadline=None)
@given(
    du=st.floats(0, 1), dv=st.floats(0, 1), th=st.floats(0.1, 10),
    inputs=st.lists(st.floats(-5, 5), min_size=1, max_size=50),
)
def test_lif_voltage_below_threshold_and_reset(du, dv, th, inputs):
    p = LifParams(du, dv, th)
    s = LifState()
    for x in inputs:
        s, spike = lif_step(s, p, x)
        assert s.voltage < th
        assert s.voltage >= 0.0
        if spike:
            assert s.voltage == 0.0


def test_lif_matches_brute_force_oracle():
    rng = np.random.default_rng(11)
    p = LifParams(0.7, 0.9, 1.5, bias=0.01)
    n = 1000
    pre = rng.random(n) < 0.3
    inj = rng.uniform(0.0, 0.2, n)
    w = 0.4
    s, cur, volt, spk = LifState(), [], [], []
    for t in range(n):
        s, spike = lif_step(s, p, w * pre[t], inj[t])
        cur.append(s.current)
        volt.append(s.voltage)
        spk.append(spike)
    ref_u, ref_v, ref_s = lif_reference(w * pre + inj + p.bias, 0.7, 0.9, 1.5)
    assert np.array_equal(ref_s, spk)
    assert ref_s.sum() > 20
    assert relative_error(cur, ref_u) < 1e-12
    assert relative_error(volt, ref_v) < 1e-12


# --- facilitation ----------------------------------------------------------

def test_facilitation_examples():
    p = FacilitationParams(decay_tau=500.0, increment=0.005, max_factor=1.0)
    assert facilitation_step(0.0, p, False, 1.0) == 0.0
    assert facilitation_step(0.0, p, True, 1.0) == pytest.approx(0.005, abs=0, rel=1e-15)
    assert facilitation_step(1.0, p, True, 1.0) == 1.0


def test_facilitation_decays_with_time_constant():
    p = FacilitationParams(decay_tau=500.0)
    assert facilitation_step(0.5, p, False, 1.0) == pytest.approx(0.5 * math.exp(-1 / 500))


@settings(max_examples=100, deadline=None)
@given(f0=st.floats(0, 1), train=st.lists(st.booleans(), min_size=1, max_size=200))
def test_facilitation_stays_in_bounds(f0, train):
    p = FacilitationParams()
    f = f0
    for s in train:
        f = facilitation_step(f, p, s)
        assert 0.0 <= f <= p.max_factor


def test_facilitation_monotone_under_dense_train():
    p = FacilitationParams()
    f = 0.1
    # increment 0.005 exceeds f * (1 - exp(-1/500)) for any f <= 1
    for _ in range(400):
        nxt = facilitation_step(f, p, True)
        assert nxt >= f
        f = nxt
    assert f == p.max_factor


def test_facilitation_matches_brute_force_oracle():
    rng = np.random.default_rng(5)
    p = FacilitationParams(decay_tau=500.0, increment=0.005, max_factor=1.0, initial=0.1)
    train = rng.random(1000) < 0.6
    f, got = p.initial, []
    for s in train:
        f = facilitation_step(f, p, s)
        got.append(f)
    ref = facilitation_reference(train, 500.0, 0.005, 1.0, 0.1)
    assert np.any(ref == 1.0), "train should reach saturation"
    assert relative_error(got, ref) < 1e-12


# --- presynaptic inhibition --------------------------------------------------

def test_psi_examples():
    p = PsiParams(decay_tau=50.0, increment=0.005, g_max=1.0)
    s = psi_step(PsiGainState(), p, False, 1.0)
    assert (s.accumulator, s.gain) == (0.0, 1.0)
    s = psi_step(PsiGainState(), p, True, 1.0)
    assert s.accumulator == pytest.approx(0.005, rel=1e-15)
    assert s.gain == pytest.approx(0.995, rel=1e-15)
    s = psi_step(PsiGainState(0.005, 0.995), p, False, 1.0)
    assert s.accumulator == pytest.approx(0.005 * math.exp(-1 / 50), rel=1e-15)
    assert s.accumulator == pytest.approx(0.004901, abs=1e-6)
    assert s.gain == pytest.approx(0.995099, abs=1e-6)


def test_psi_recovers_to_gmax():
    p = PsiParams()
    s = PsiGainState()
    for _ in range(100):
        s = psi_step(s, p, True)
    assert s.gain < 0.9
    for _ in range(2000):
        s = psi_step(s, p, False)
    assert s.gain == pytest.approx(p.g_max, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(inc=st.floats(0.01, 1.0), tau=st.floats(1.0, 200.0), train=st.lists(st.booleans(), max_size=300))
def test_psi_gain_bounds(inc, tau, train):
    p = PsiParams(decay_tau=tau, increment=inc, g_max=1.0)
    s = PsiGainState.resting(p)
    for spike in train:
        s = psi_step(s, p, spike)
        assert 0.0 <= s.gain <= p.g_max
        if s.accumulator <= p.g_max:
            assert s.gain == pytest.approx(p.g_max - s.accumulator, abs=1e-15)


def test_psi_matches_brute_force_oracle():
    rng = np.random.default_rng(9)
    p = PsiParams()
    train = rng.random(1000) < 0.4
    s, acc, gain = PsiGainState(), [], []
    for spike in train:
        s = psi_step(s, p, spike)
        acc.append(s.accumulator)
        gain.append(s.gain)
    ref_h, ref_g = psi_reference(train, 50.0, 0.005, 1.0)
    assert relative_error(acc, ref_h) < 1e-12
    assert relative_error(gain, ref_g) < 1e-12


# --- effective weight ------------------------------------------------------

@pytest.mark.parametrize("syn, g, expected", [
    (PlasticSynapse(1.0, 1.0), 1.0, 1.0),
    (PlasticSynapse(2.0, 0.5), 0.5, 0.5),
    (PlasticSynapse(2.0, 0.5, uses_psi_gain=False), 0.5, 1.0),
    (PlasticSynapse(2.0, 0.5, uses_facilitation=False), 0.5, 1.0),
    (PlasticSynapse(2.0, 0.5, False, False), 0.5, 2.0),
])
def test_effective_weight(syn, g, expected):
    assert effective_weight(syn, PsiGainState(1.0 - g, g)) == expected


def test_decay_factor():
    assert decay_factor(500.0, 1.0) == math.exp(-1 / 500)
    with pytest.raises(ValueError):
        decay_factor(0.0)


def test_determinism_bit_identical():
    rng = np.random.default_rng(3)
    inputs = rng.uniform(0, 1, 500)

    def trajectory():
        s, out = LifState(), []
        for x in inputs:
            s, _ = lif_step(s, LifParams(0.6, 0.85, 1.2), x)
            out.append((s.current, s.voltage, s.spiked))
        return out

    assert trajectory() == trajectory()
