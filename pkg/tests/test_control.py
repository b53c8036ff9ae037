import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pneumodel import control, plant
from pneumodel.control import (
    GridMismatchError, PidGains, PidState, Scenario, ScenarioError, Signal, Trajectory,
    bandwidth_metrics, gravity_comp_step, pid_step, position_controller_step, run_scenario,
    scenario_from_assignments,
)
from pneumodel.domain import DEG, KPA, ModelConfig

CFG = ModelConfig()


# --- PID ------------------------------------------------------------------

def test_pid_zero_error_is_a_no_op():
    g = PidGains(3.0, 2.0, 1.0, 5.0)
    state = PidState(0.0, 0.0)
    out, new = pid_step(g, 0.0, state, 0.01, measurement=0.0)
    assert out == 0.0 and new == state


def test_pid_proportional_only():
    out, _ = pid_step(PidGains(kp=1.5), 2.0, PidState(), 0.01)
    assert out == 3.0


def test_pid_integral_ramps_then_clamps():
    g = PidGains(ki=4.0, integral_limit=2.0)
    state, dt, e = PidState(), 0.01, 1.5
    for k in range(1, 101):
        out, state = pid_step(g, e, state, dt)
        # closed-form ramp ki * e * t until the clamp at 2.0
        assert out == pytest.approx(min(4.0 * e * k * dt, 2.0), rel=1e-12)
    assert out == 2.0


def test_pid_derivative_on_measurement():
    g = PidGains(kd=2.0)
    _, state = pid_step(g, 1.0, PidState(), 0.1, measurement=0.0)
    # the set point jumps but the measurement does not: no derivative kick
    out, state = pid_step(g, 5.0, state, 0.1, measurement=0.0)
    assert out == 0.0
    out, _ = pid_step(g, 4.0, state, 0.1, measurement=1.0)
    assert out == pytest.approx(-20.0)


def test_pid_validation():
    with pytest.raises(ValueError):
        PidGains(kp=-1.0)
    with pytest.raises(ValueError):
        PidGains(integral_limit=0.0)
    with pytest.raises(ValueError):
        pid_step(PidGains(), 1.0, PidState(), 0.0)


# --- position controller ---------------------------------------------------

@pytest.mark.parametrize("joint,theta_deg", [("elbow", 40), ("elbow", 80), ("shoulder", 20)])
def test_position_controller_fixed_point(joint, theta_deg):
    theta = theta_deg * DEG
    p1 = control.inverse_load(CFG, joint, theta, 0.0)
    out, _ = position_controller_step(CFG, joint, theta, theta, p1, PidState(), 0.01,
                                      gains=PidGains())
    assert out == p1
    # converged default-gain controller returns the same command
    out, _ = position_controller_step(CFG, joint, theta, theta, p1, PidState(0.0, theta), 0.01)
    assert out == pytest.approx(p1, rel=1e-9)


def test_zero_gains_track_the_inverse_model():
    for theta in np.linspace(20, 100, 5) * DEG:
        out, _ = position_controller_step(CFG, "elbow", theta, theta - 0.2, 30 * KPA, PidState(), 0.01,
                                          gains=PidGains())
        assert out == control.inverse_load(CFG, "elbow", theta, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(control.JOINTS), st.floats(0, 110), st.floats(0, 110), st.floats(0, 200))
def test_position_commands_within_limits(joint, set_deg, real_deg, p_kpa):
    if joint == "shoulder":
        set_deg, real_deg = set_deg / 2.5, real_deg / 2.5
    out, _ = position_controller_step(CFG, joint, set_deg * DEG, real_deg * DEG, p_kpa * KPA,
                                      PidState(), 0.01)
    assert 0.0 <= out <= control.p_max(CFG, joint)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(control.JOINTS), st.floats(-2, 2), st.floats(-2, 2))
def test_baseline_commands_within_limits(joint, set_angle, real_angle):
    out, _ = control.baseline_pid_step(CFG, joint, set_angle, real_angle, PidState(), 0.01)
    assert 0.0 <= out <= control.p_max(CFG, joint)


def test_position_controller_rejects_non_finite():
    with pytest.raises(ValueError):
        position_controller_step(CFG, "elbow", math.nan, 0.5, 0.0, PidState(), 0.01)
    with pytest.raises(ValueError):
        position_controller_step(CFG, "knee", 0.5, 0.5, 0.0, PidState(), 0.01)


def test_step_settles_within_two_degrees():
    """Elbow step 0 -> 20 deg on the simulated arm, shoulder held at 30 deg."""
    imu = plant.imu_model(CFG)
    rate, sub = imu.sample_rate, int(round(1 / (imu.sample_rate * CFG.sim.dt)))
    h = 1.0 / (rate * sub)
    q_set = {"shoulder": 30 * DEG, "elbow": 20 * DEG}
    act = {"shoulder": lambda q: plant.shoulder_extension(CFG, q),
           "elbow": lambda q: plant.elbow_bend(CFG, q)}
    state = plant.PlantState(30 * DEG, 0.0)
    pid = {j: PidState() for j in control.JOINTS}
    rng = plant.make_rng(imu.seed)
    errors = []
    for k in range(int(4 * rate)):
        (ms, me), rng = plant.measure(state, imu, rng)
        meas = {"shoulder": ms * DEG, "elbow": me * DEG}
        cmd = {}
        for j in control.JOINTS:
            p_now = state.p_shoulder if j == "shoulder" else state.p_elbow
            cmd[j], pid[j] = position_controller_step(CFG, j, act[j](q_set[j]), act[j](meas[j]),
                                                      p_now, pid[j], 1 / rate)
        for _ in range(sub):
            state = plant.step(state, (cmd["shoulder"], cmd["elbow"]), CFG, h)
        errors.append(abs(state.theta_elbow - q_set["elbow"]) / DEG)
    settled = np.nonzero(np.array(errors) > 2.0)[0]
    settle_time = (settled[-1] + 1) / rate if len(settled) else 0.0
    assert settle_time < 3.0
    assert max(errors[-int(rate):]) < 2.0


# --- gravity compensation --------------------------------------------------

def test_gravity_comp_vertical_posture_is_zero_load():
    arm = replace(CFG.arm, shoulder_limits=(0.0, 100 * DEG))
    cfg = replace(CFG, arm=arm)
    ps, pe = gravity_comp_step(cfg, 90 * DEG, 0.0)
    # cos(90 deg) leaves a ~1e-17 N*m gravity torque
    assert ps == pytest.approx(
        control.inverse_load(cfg, "shoulder", plant.shoulder_extension(cfg, 90 * DEG), 0.0), rel=1e-12)
    assert pe == pytest.approx(control.inverse_load(cfg, "elbow", plant.elbow_bend(cfg, 0.0), 0.0),
                               rel=1e-9)


def test_gravity_comp_horizontal_needs_more():
    # mount the shoulder actuator so a horizontal upper arm is its rest shape
    cfg = replace(CFG, arm=replace(CFG.arm, shoulder_limits=(-10 * DEG, 60 * DEG), shoulder_mount=0.0))
    ps, pe = gravity_comp_step(cfg, 0.0, 0.0)
    assert ps > control.inverse_load(cfg, "shoulder", plant.shoulder_extension(cfg, 0.0), 0.0)
    assert pe > control.inverse_load(cfg, "elbow", plant.elbow_bend(cfg, 0.0), 0.0)


def test_gravity_comp_unreachable():
    heavy = replace(CFG, arm=replace(CFG.arm, m2=50.0))
    with pytest.raises(control.UnreachableTorqueError) as exc:
        gravity_comp_step(heavy, 30 * DEG, 0.0)
    assert exc.value.joint in control.JOINTS


# --- scenarios -------------------------------------------------------------

def test_scenario_errors():
    with pytest.raises(ScenarioError):
        Scenario()
    with pytest.raises(ScenarioError):
        Trajectory("sine", frequency=0.0)
    with pytest.raises(ScenarioError):
        Scenario(mode="open-loop", duration=1.0)
    with pytest.raises(ScenarioError):
        scenario_from_assignments({"scenario.knee.value": 1.0})
    with pytest.raises(ScenarioError):
        scenario_from_assignments({"scenario.elbow.amplitude": 0.0, "scenario.elbow.frequency": -1.0})


def test_scenario_from_assignments_units():
    sc = scenario_from_assignments({
        "scenario.elbow.amplitude": 20.0, "scenario.elbow.offset": 10.0,
        "scenario.elbow.frequency": 0.25, "scenario.elbow.cycles": 2.0,
        "scenario.shoulder.value": 30.0, "sim.seed": 3.0,
    }, mode="gravity")
    assert sc.mode == "gravity"
    assert sc.elbow.kind == "sine" and sc.elbow.amplitude == pytest.approx(20 * DEG)
    assert sc.shoulder.kind == "constant" and sc.shoulder.value == pytest.approx(30 * DEG)
    assert sc.total_duration() == 8.0


def test_trajectory_shape():
    tr = Trajectory.sine_between(-10 * DEG, 30 * DEG, 0.5, cycles=1)
    assert tr.at(0.0) == pytest.approx(-10 * DEG)
    assert tr.at(1.0) == pytest.approx(30 * DEG)
    assert tr.at(5.0) == pytest.approx(-10 * DEG)


def short_scenario(mode="position", **kw):
    return Scenario(mode, Trajectory(value=30 * DEG),
                    Trajectory("sine", amplitude=0.0, offset=10 * DEG, frequency=0.5), duration=1.0, **kw)


def test_zero_amplitude_sine_gives_constant_set():
    out = run_scenario(CFG, short_scenario())
    assert np.all(out["elbow"].set_angle == out["elbow"].set_angle[0])
    assert out["elbow"].set_angle[0] == pytest.approx(10.0)


@pytest.mark.parametrize("duration", [0.5, 1.0, 1.234])
def test_scenario_length_and_grid(duration):
    sc = replace(short_scenario(), duration=duration)
    ts = run_scenario(CFG, sc)["shoulder"]
    rate = plant.imu_model(CFG).sample_rate
    assert abs(len(ts) - duration * rate) <= 1
    assert np.all(np.diff(ts.t) > 0)
    assert np.allclose(np.diff(ts.t), 1 / rate)


@pytest.mark.parametrize("mode", control.MODES)
def test_scenarios_are_deterministic(mode):
    a, b = run_scenario(CFG, short_scenario(mode)), run_scenario(CFG, short_scenario(mode))
    for j in control.JOINTS:
        for name in ("t", "set_angle", "real_angle", "p_cmd", "p_actual", "torque"):
            assert np.array_equal(getattr(a[j], name), getattr(b[j], name))


def test_set_trace_is_clipped_to_limits():
    sc = Scenario("position", Trajectory(value=90 * DEG), Trajectory(value=-40 * DEG), duration=0.2)
    out = run_scenario(CFG, sc)
    assert np.all(out["shoulder"].set_angle == pytest.approx(CFG.arm.shoulder_limits[1] / DEG))
    assert np.all(out["elbow"].set_angle == pytest.approx(CFG.arm.elbow_limits[0] / DEG))


# --- bandwidth metrics -----------------------------------------------------

RATE = 100.0


def sine_signal(freq, seconds, delay=0.0, offset=0.0):
    t = np.arange(int(round(seconds * RATE))) / RATE
    return Signal(t, offset + 40 * np.sin(2 * np.pi * freq * (t - delay)))


def test_identity_metrics():
    s = sine_signal(0.5, 8)
    m = bandwidth_metrics(s, s, 0.5)
    assert m.range_of_motion == pytest.approx(80.0, rel=1e-3)
    assert m.mean_time_error == 0.0 and m.max_angular_error == 0.0


@pytest.mark.parametrize("freq", [1.0, 0.5, 0.25])
def test_pure_delay_recovered(freq):
    s, r = sine_signal(freq, 4 / freq), sine_signal(freq, 4 / freq, delay=0.3)
    m = bandwidth_metrics(s, r, freq)
    assert abs(m.mean_time_error - 0.3) <= 1 / RATE


@settings(max_examples=30, deadline=None)
@given(st.floats(-100, 100), st.integers(0, 40))
def test_offset_invariance(offset, delay_samples):
    s, r = sine_signal(0.5, 6), sine_signal(0.5, 6, delay=delay_samples / RATE)
    base = bandwidth_metrics(s, r, 0.5)
    moved = bandwidth_metrics(Signal(s.t, s.values + offset), Signal(r.t, r.values + offset), 0.5)
    assert moved.mean_time_error == base.mean_time_error
    assert moved.range_of_motion == pytest.approx(base.range_of_motion, abs=1e-9)
    assert moved.max_angular_error == pytest.approx(base.max_angular_error, abs=1e-9)


def test_range_of_motion_time_shift_invariant():
    s = sine_signal(0.5, 6)
    r = sine_signal(0.5, 6, delay=0.37)
    assert bandwidth_metrics(s, r, 0.5).range_of_motion == pytest.approx(
        bandwidth_metrics(s, s, 0.5).range_of_motion, rel=1e-3)


def test_grid_mismatch():
    s = sine_signal(0.5, 6)
    with pytest.raises(GridMismatchError):
        bandwidth_metrics(s, Signal(s.t[:-1], s.values[:-1]), 0.5)
    with pytest.raises(GridMismatchError):
        bandwidth_metrics(s, Signal(s.t + 0.001, s.values), 0.5)
    with pytest.raises(GridMismatchError):
        bandwidth_metrics(sine_signal(0.5, 3), sine_signal(0.5, 3), 0.5)


def test_lisper_bench_order_of_magnitude():
    _, m = control.bandwidth_run(CFG, "elbow", 1.0, cycles=3)
    assert 10 < m.range_of_motion < 120
    assert 0.05 < m.mean_time_error < 1.0


def test_default_gains_overshoot_under_ten_percent():
    # 0.25 Hz sines kept clear of the stops, so overshoot is not clipped
    ranges = {"shoulder": (25.0, 50.0), "elbow": (0.0, 20.0)}
    sc = Scenario("position", *(Trajectory.sine_between(lo * DEG, hi * DEG, 0.25, cycles=3)
                                for lo, hi in ranges.values()))
    out = run_scenario(CFG, sc)
    for j, (lo, hi) in ranges.items():
        real = out[j].real_angle
        tail = real[len(real) // 3:]
        assert max(tail.max() - hi, lo - tail.min(), 0.0) < 0.1 * (hi - lo), j
