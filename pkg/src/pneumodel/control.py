"""Controllers, scenario runner and tracking metrics.

Two controllers act per joint on actuator pressure. The position controller
adds a PID force correction on top of the zero-load inverse model, using the
forward model at the measured angle as a force estimator. The gravity
compensator feeds the gravity torque at the measured posture through the
inverse models, open loop. A plain PID on pressure serves as a model-free
baseline.

Controller angles are actuator angles (LISPER bending angle, SCASPER real
extension angle) in radians; :func:`run_scenario` converts from joint angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import lisper, plant, scasper
from .domain import DEG, KPA, ModelConfig

JOINTS = ("shoulder", "elbow")
MODES = ("position", "gravity", "pid")


class ScenarioError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class UnreachableTorqueError(ValueError):
    def __init__(self, joint: str, torque: float, detail: str):
        self.joint = joint
        self.torque = torque
        super().__init__(f"{joint}: torque {torque:.6g} N*m is unreachable ({detail})")


# ---------------------------------------------------------------------------
# PID


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 1.0  # bound on |ki * integral|, in output units

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be >= 0")
        if self.integral_limit <= 0:
            raise ValueError("integral_limit must be > 0")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_measurement: float | None = None


def pid_step(gains: PidGains, error: float, state: PidState, dt: float,
             measurement: float | None = None) -> tuple[float, PidState]:
    """One PID update with derivative on measurement and a clamped integral.

    ``measurement`` is the controlled variable; when omitted, ``-error`` stands
    in for it, which is the same thing for a constant set point.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    y = -error if measurement is None else measurement
    integral = state.integral + error * dt
    if gains.ki > 0:
        bound = gains.integral_limit / gains.ki
        integral = min(max(integral, -bound), bound)
    deriv = 0.0
    if state.prev_measurement is not None:
        deriv = -(y - state.prev_measurement) / dt
    out = gains.kp * error + gains.ki * integral + gains.kd * deriv
    return out, PidState(integral, y)


def position_gains(cfg: ModelConfig, joint: str) -> PidGains:
    c = cfg.control
    return PidGains(getattr(c, f"kp_{joint}"), getattr(c, f"ki_{joint}"),
                    getattr(c, f"kd_{joint}"), getattr(c, f"integral_limit_{joint}"))


def baseline_gains(cfg: ModelConfig, joint: str) -> PidGains:
    c = cfg.control
    return PidGains(getattr(c, f"base_kp_{joint}"), getattr(c, f"base_ki_{joint}"),
                    getattr(c, f"base_kd_{joint}"), getattr(c, f"base_integral_limit_{joint}"))


# ---------------------------------------------------------------------------
# model wrappers in actuator angles


def p_max(cfg: ModelConfig, joint: str) -> float:
    return cfg.lisper.p_max if joint == "elbow" else cfg.scasper.p_max


def _clamp(p: float, hi: float) -> float:
    return min(max(p, 0.0), hi)


def forward_load(cfg: ModelConfig, joint: str, p: float, theta: float) -> float:
    """Exerted load: tip force (N) for the elbow, torque (N*m) for the shoulder."""
    if joint == "elbow":
        return lisper.output_force(cfg.lisper, cfg.material, p, theta, cfg.root_config(),
                                   **plant.quad_options(cfg)).f_output
    return scasper.total_torque(cfg.scasper, cfg.material, p, theta).m_total


def inverse_load(cfg: ModelConfig, joint: str, theta: float, load: float) -> float:
    """Pressure (Pa) producing ``load`` at actuator angle ``theta``; raises if unreachable."""
    if joint == "elbow":
        return lisper.inverse_pressure(cfg.lisper, cfg.material, theta, load, cfg.root_config(),
                                       **plant.quad_options(cfg))
    return scasper.inverse_pressure_scasper(cfg.scasper, cfg.material, theta, load)


def _inverse_clamped(cfg, joint, theta, load):
    try:
        return inverse_load(cfg, joint, theta, load)
    except lisper.UnreachableForceError as exc:
        return 0.0 if exc.f_desired < exc.f_lo else lisper.INVERSE_P_MAX
    except scasper.NegativePressureError:
        return 0.0


def _check_joint(joint):
    if joint not in JOINTS:
        raise ValueError(f"joint must be one of {JOINTS}, got {joint!r}")


def position_controller_step(
    cfg: ModelConfig, joint: str, theta_desired: float, theta_real: float,
    p_current: float, pid_state: PidState, dt: float, gains: PidGains | None = None,
) -> tuple[float, PidState]:
    """Zero-load feedforward plus a PID force correction.

    ``P1`` is the zero-load pressure at the set angle. The PID turns the angle
    error into a desired extra load, the forward model estimates the load
    exerted now, and ``P2`` is the pressure for the estimate plus the extra load
    at the measured angle. The command ``P1 + (P2 - p_current)`` is clamped to
    ``[0, p_max]`` last. An unreachable ``P2`` is replaced by the nearest end
    of the inverse-model range.
    """
    _check_joint(joint)
    for v in (theta_desired, theta_real, p_current):
        if not math.isfinite(v):
            raise ValueError("controller inputs must be finite")
    gains = position_gains(cfg, joint) if gains is None else gains
    p1 = inverse_load(cfg, joint, theta_desired, 0.0)
    f_des, pid_state = pid_step(gains, theta_desired - theta_real, pid_state, dt,
                                measurement=theta_real)
    dp = 0.0
    if f_des != 0.0:
        f_est = forward_load(cfg, joint, p_current, theta_real)
        dp = _inverse_clamped(cfg, joint, theta_real, f_est + f_des) - p_current
    return _clamp(p1 + dp, p_max(cfg, joint)), pid_state


def gravity_comp_step(cfg: ModelConfig, theta_shoulder_real: float,
                      theta_elbow_real: float) -> tuple[float, float]:
    """Open-loop pressures (shoulder, elbow) that hold the measured posture.

    Joint angles are arm angles in radians.
    """
    tau_s, tau_e = plant.gravity_torque(cfg.arm, theta_shoulder_real, theta_elbow_real)
    bend = plant.elbow_bend(cfg, theta_elbow_real)
    ext = plant.shoulder_extension(cfg, theta_shoulder_real)
    out = []
    for joint, theta, load in (("shoulder", ext, tau_s), ("elbow", bend, tau_e / cfg.lisper.l_equiv)):
        try:
            p = inverse_load(cfg, joint, theta, load)
        except (lisper.UnreachableForceError, scasper.NegativePressureError) as exc:
            tau = load * cfg.lisper.l_equiv if joint == "elbow" else load
            raise UnreachableTorqueError(joint, tau, str(exc)) from None
        if p > p_max(cfg, joint):
            tau = load * cfg.lisper.l_equiv if joint == "elbow" else load
            raise UnreachableTorqueError(
                joint, tau, f"needs {p / KPA:.6g} kPa > p_max {p_max(cfg, joint) / KPA:.6g} kPa")
        out.append(p)
    return out[0], out[1]


def baseline_pid_step(cfg: ModelConfig, joint: str, theta_desired: float, theta_real: float,
                      pid_state: PidState, dt: float) -> tuple[float, PidState]:
    """Model-free PID; the output is a pressure in kPa."""
    out, pid_state = pid_step(baseline_gains(cfg, joint), theta_desired - theta_real,
                              pid_state, dt, measurement=theta_real)
    return _clamp(out * KPA, p_max(cfg, joint)), pid_state


# ---------------------------------------------------------------------------
# trajectories and scenarios


@dataclass(frozen=True)
class Trajectory:
    """Set angle over time, in joint angles (radians).

    A sine starts at its trough, ``offset - amplitude``, runs ``cycles``
    periods and then holds the trough. ``cycles = 0`` means it never stops.
    """
    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    offset: float = 0.0
    frequency: float = 0.25
    cycles: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sine"):
            raise ScenarioError(f"trajectory kind must be 'constant' or 'sine', got {self.kind!r}")
        if self.kind == "sine":
            if self.frequency <= 0:
                raise ScenarioError(f"frequency must be > 0, got {self.frequency}")
            if self.amplitude < 0 or self.cycles < 0:
                raise ScenarioError("amplitude and cycles must be >= 0")

    @classmethod
    def sine_between(cls, low: float, high: float, frequency: float, cycles: float = 0.0):
        return cls("sine", amplitude=(high - low) / 2.0, offset=(high + low) / 2.0,
                   frequency=frequency, cycles=cycles)

    def at(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.cycles and t * self.frequency >= self.cycles:
            return self.offset - self.amplitude
        return self.offset - self.amplitude * math.cos(2.0 * math.pi * self.frequency * t)

    def natural_duration(self) -> float:
        return self.cycles / self.frequency if self.kind == "sine" else 0.0


@dataclass(frozen=True)
class Scenario:
    mode: str = "position"
    shoulder: Trajectory = field(default_factory=Trajectory)
    elbow: Trajectory = field(default_factory=Trajectory)
    duration: float = 0.0  # 0: longest natural trajectory duration
    dt: float = 0.0  # 0: take sim.dt from the config

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.duration < 0 or self.dt < 0:
            raise ScenarioError("duration and dt must be >= 0")
        if self.total_duration() <= 0:
            raise ScenarioError("scenario duration is zero")

    def total_duration(self) -> float:
        return self.duration or max(self.shoulder.natural_duration(), self.elbow.natural_duration())


_TRAJ_KEYS = {"sine", "value", "amplitude", "offset", "frequency", "cycles"}
_TRAJ_ANGLES = {"value", "amplitude", "offset"}


def scenario_from_assignments(values: dict, mode: str = "position") -> Scenario:
    """Build a scenario from ``scenario.*`` keys; angles are in degrees.

    Keys are ``scenario.duration``, ``scenario.dt`` and, per joint,
    ``scenario.<joint>.<field>`` with the :class:`Trajectory` fields plus
    ``sine = true|false`` (default: sine when an amplitude is given).
    Keys outside ``scenario.`` are ignored.
    """
    top, joints = {}, {"shoulder": {}, "elbow": {}}
    for key, v in values.items():
        if not key.startswith("scenario."):
            continue
        parts = key.split(".")[1:]
        if len(parts) == 2 and parts[0] in joints and parts[1] in _TRAJ_KEYS:
            joints[parts[0]][parts[1]] = v
        elif len(parts) == 1 and parts[0] in ("duration", "dt"):
            top[parts[0]] = v
        else:
            raise ScenarioError(f"unknown scenario key {key!r}")
    for k, v in top.items():
        if not isinstance(v, float):
            raise ScenarioError(f"scenario.{k}: expected a single number")
    trajs = {}
    for joint, kv in joints.items():
        sine = kv.pop("sine", "amplitude" in kv)
        if not isinstance(sine, bool):
            raise ScenarioError(f"scenario.{joint}.sine: expected true/false")
        for k, v in kv.items():
            if not isinstance(v, float):
                raise ScenarioError(f"scenario.{joint}.{k}: expected a single number")
        args = {k: v * DEG if k in _TRAJ_ANGLES else v for k, v in kv.items()}
        trajs[joint] = Trajectory("sine" if sine else "constant", **args)
    return Scenario(mode, trajs["shoulder"], trajs["elbow"],
                    top.get("duration", 0.0), top.get("dt", 0.0))


@dataclass(frozen=True)
class Timeseries:
    """Uniformly sampled record for one joint. Angles in degrees, pressures in kPa."""
    t: np.ndarray
    set_angle: np.ndarray
    real_angle: np.ndarray
    p_cmd: np.ndarray
    p_actual: np.ndarray
    torque: np.ndarray

    def __len__(self):
        return len(self.t)


def _sample_grid(duration: float, rate: float, dt: float) -> tuple[int, int, float]:
    n = int(round(duration * rate))
    if n < 1:
        raise ScenarioError(f"duration {duration} s gives no samples at {rate} Hz")
    sub = max(1, int(round(1.0 / (rate * dt))))
    return n, sub, 1.0 / (rate * sub)


def _clip(theta, limits):
    return min(max(theta, limits[0]), limits[1])


def run_scenario(cfg: ModelConfig, scenario: Scenario) -> dict[str, Timeseries]:
    """Simulate the arm under one controller; returns a trace per joint.

    Samples are taken at the IMU rate, ``N = round(duration * rate)`` of them
    starting at t = 0. The plant step is shrunk so a whole number of steps
    fits between samples, and the command is held in between. The arm starts
    at rest on the clipped initial set posture with the valves already at the
    first command.
    """
    arm, imu = cfg.arm, plant.imu_model(cfg)
    rate = imu.sample_rate
    n, sub, h = _sample_grid(scenario.total_duration(), rate, scenario.dt or cfg.sim.dt)
    ctrl_dt = 1.0 / rate
    traj = {"shoulder": scenario.shoulder, "elbow": scenario.elbow}
    lim = {"shoulder": arm.shoulder_limits, "elbow": arm.elbow_limits}
    to_act = {"shoulder": lambda q: plant.shoulder_extension(cfg, q),
              "elbow": lambda q: plant.elbow_bend(cfg, q)}

    rng = plant.make_rng(imu.seed)
    q0 = {j: _clip(traj[j].at(0.0), lim[j]) for j in JOINTS}
    state = plant.PlantState(q0["shoulder"], q0["elbow"])
    pid = {j: PidState() for j in JOINTS}
    rec = {j: np.zeros((6, n)) for j in JOINTS}

    def command(meas, t):
        q_set = {j: _clip(traj[j].at(t), lim[j]) for j in JOINTS}
        if scenario.mode == "gravity":
            cmd = dict(zip(JOINTS, gravity_comp_step(cfg, meas["shoulder"], meas["elbow"])))
        else:
            cmd = {}
            for j in JOINTS:
                p_now = state.p_shoulder if j == "shoulder" else state.p_elbow
                if scenario.mode == "position":
                    cmd[j], pid[j] = position_controller_step(
                        cfg, j, to_act[j](q_set[j]), to_act[j](meas[j]), p_now, pid[j], ctrl_dt)
                else:
                    cmd[j], pid[j] = baseline_pid_step(cfg, j, q_set[j], meas[j], pid[j], ctrl_dt)
        return q_set, cmd

    for k in range(n):
        t = k / rate
        (ms, me), rng = plant.measure(state, imu, rng)
        meas = {"shoulder": ms * DEG, "elbow": me * DEG}
        q_set, cmd = command(meas, t)
        if k == 0:
            state = replace(state, p_shoulder=cmd["shoulder"], p_elbow=cmd["elbow"])
        torques = dict(zip(JOINTS, plant.actuator_torques(cfg, state)))
        for j in JOINTS:
            p_now = state.p_shoulder if j == "shoulder" else state.p_elbow
            rec[j][:, k] = (t, q_set[j] / DEG, meas[j] / DEG, cmd[j] / KPA, p_now / KPA, torques[j])
        for _ in range(sub):
            state = plant.step(state, (cmd["shoulder"], cmd["elbow"]), cfg, h)
    return {j: Timeseries(*rec[j]) for j in JOINTS}


# ---------------------------------------------------------------------------
# bandwidth metrics


@dataclass(frozen=True)
class Signal:
    t: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class BandwidthMetrics:
    range_of_motion: float  # deg
    mean_time_error: float  # s
    max_angular_error: float  # deg


def bandwidth_metrics(set_sig: Signal, real_sig: Signal, frequency: float) -> BandwidthMetrics:
    """Tracking metrics of a periodic set signal against the measured one.

    The time error is the lag maximizing the circular cross-correlation of
    set and real over one period, searched within half a period either way,
    and averaged over every complete period after the first. The first period
    is also left out of the maximum angular error. The range of motion uses
    the whole real trace.
    """
    t, s = np.asarray(set_sig.t, float), np.asarray(set_sig.values, float)
    tr, r = np.asarray(real_sig.t, float), np.asarray(real_sig.values, float)
    if t.shape != tr.shape or s.shape != t.shape or r.shape != tr.shape or not np.array_equal(t, tr):
        raise GridMismatchError("set and real signals must share one sampling grid")
    if frequency <= 0:
        raise ValueError("frequency must be > 0")
    if len(t) < 2:
        raise GridMismatchError("need at least two samples")
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0.0):
        raise GridMismatchError("sampling grid is not uniform")
    period = int(round(1.0 / (frequency * dt)))
    cycles = len(t) // period
    if cycles < 2:
        raise GridMismatchError(f"need at least 2 full periods, got {len(t) / period:.3g}")

    lags = np.arange(-(period // 2), period - period // 2)
    found = []
    for c in range(1, cycles):
        seg = slice(c * period, (c + 1) * period)
        a = s[seg] - s[seg].mean()
        b = r[seg] - r[seg].mean()
        # corr[L] = sum_i a[i] * b[(i + L) mod period]
        corr = np.array([np.dot(a, np.roll(b, -lag)) for lag in lags])
        found.append(lags[int(np.argmax(corr))])
    tail = slice(period, None)
    return BandwidthMetrics(
        range_of_motion=float(r.max() - r.min()),
        mean_time_error=float(np.mean(found) * dt),
        max_angular_error=float(np.max(np.abs(s[tail] - r[tail]))),
    )


# ---------------------------------------------------------------------------
# single-actuator bandwidth bench

BENCH_SET_RANGE = (0.0, 85.0 * DEG)


def bandwidth_run(cfg: ModelConfig, joint: str, frequency: float, cycles: int = 4,
                  set_range: tuple[float, float] = BENCH_SET_RANGE) -> tuple[Timeseries, BandwidthMetrics]:
    """Sine tracking of one unloaded actuator on the bench, feedforward only.

    The set angle (actuator angle) goes through the zero-load inverse model
    each IMU sample; the lag comes from the valve and the plate dynamics.
    """
    _check_joint(joint)
    if frequency <= 0:
        raise ScenarioError(f"frequency must be > 0, got {frequency}")
    imu = plant.imu_model(cfg)
    rate = imu.sample_rate
    n, sub, h = _sample_grid(cycles / frequency, rate, cfg.sim.dt)
    traj = Trajectory.sine_between(*set_range, frequency)
    lim = plant.BENCH_LIMITS[joint]
    # bench angles are measured from the rest shape; the models want actuator angles
    act0 = cfg.lisper.theta_initial if joint == "elbow" else 0.0
    rng = plant.make_rng(imu.seed)
    zero = PidGains()
    state = plant.BenchState(theta=_clip(traj.at(0.0), lim))
    pid = PidState()
    rec = np.zeros((6, n))
    for k in range(n):
        t = k / rate
        (ms, me), rng = plant.measure(plant.PlantState(state.theta, state.theta), imu, rng)
        meas = (me if joint == "elbow" else ms) * DEG
        theta_set = _clip(traj.at(t), lim)
        cmd, pid = position_controller_step(cfg, joint, act0 + theta_set, act0 + meas, state.p,
                                            pid, 1.0 / rate, gains=zero)
        if k == 0:
            state = replace(state, p=cmd)
        tau = plant.bench_torque(cfg, joint, state.p, state.theta)
        rec[:, k] = (t, theta_set / DEG, meas / DEG, cmd / KPA, state.p / KPA, tau)
        for _ in range(sub):
            state = plant.bench_step(state, cmd, cfg, joint, h)
    ts = Timeseries(*rec)
    return ts, bandwidth_metrics(Signal(ts.t, ts.set_angle), Signal(ts.t, ts.real_angle), frequency)
