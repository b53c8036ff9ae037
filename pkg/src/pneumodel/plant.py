"""Time-stepped simulation of the 2-DOF dummy arm.

The shoulder is driven by SCASPER, the elbow by LISPER. Both actuators use
their quasi-static torque models inside a rigid-body step, so velocity effects
on the actuators are ignored on purpose. Angles are measured from the
horizontal; the elbow angle is relative to the upper arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lisper, scasper
from .domain import ArmParams, ModelConfig


class NonFiniteStateError(FloatingPointError):
    pass


@dataclass(frozen=True)
class PlantState:
    theta_shoulder: float
    theta_elbow: float
    omega_shoulder: float = 0.0
    omega_elbow: float = 0.0
    p_shoulder: float = 0.0
    p_elbow: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class ValveModel:
    tau_valve: float
    slew_max: float
    p_max: float

    def __post_init__(self):
        if self.tau_valve <= 0:
            raise ValueError("tau_valve must be > 0")


@dataclass(frozen=True)
class ImuModel:
    sample_rate: float = 100.0
    noise_std: float = 0.0  # deg
    seed: int = 0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")


def valves(cfg: ModelConfig) -> tuple[ValveModel, ValveModel]:
    """(shoulder, elbow) valve models."""
    s = cfg.sim
    return (ValveModel(s.valve_tau, s.slew_max, cfg.scasper.p_max),
            ValveModel(s.valve_tau, s.slew_max, cfg.lisper.p_max))


def imu_model(cfg: ModelConfig) -> ImuModel:
    return ImuModel(cfg.sim.imu_rate, cfg.sim.imu_noise, cfg.sim.seed)


def gravity_torque(arm: ArmParams, theta_shoulder: float, theta_elbow: float) -> tuple[float, float]:
    """Joint torques needed to hold the arm against gravity (shoulder, elbow)."""
    c1 = math.cos(theta_shoulder)
    c12 = math.cos(theta_shoulder + theta_elbow)
    elbow = arm.m2 * arm.g * arm.r_com2 * c12
    shoulder = arm.m1 * arm.g * arm.r_com1 * c1 + arm.m2 * arm.g * (arm.l1 * c1 + arm.r_com2 * c12)
    return shoulder, elbow


def forward_kinematics(arm: ArmParams, theta_shoulder: float, theta_elbow: float) -> tuple[float, float]:
    a, b = theta_shoulder, theta_shoulder + theta_elbow
    return (arm.l1 * math.cos(a) + arm.l2 * math.cos(b),
            arm.l1 * math.sin(a) + arm.l2 * math.sin(b))


def mass_matrix(arm: ArmParams, theta_elbow: float) -> tuple[float, float, float]:
    """(M11, M12, M22) for point masses at the link centers of mass."""
    m1, m2, l1, r1, r2 = arm.m1, arm.m2, arm.l1, arm.r_com1, arm.r_com2
    c2 = math.cos(theta_elbow)
    m22 = m2 * r2 * r2
    m12 = m22 + m2 * l1 * r2 * c2
    m11 = m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2 + 2.0 * l1 * r2 * c2)
    return m11, m12, m22


def elbow_bend(cfg: ModelConfig, theta_elbow: float) -> float:
    """LISPER bending angle for an elbow joint angle."""
    return cfg.lisper.theta_initial + theta_elbow - cfg.arm.elbow_mount


def shoulder_extension(cfg: ModelConfig, theta_shoulder: float) -> float:
    """SCASPER real extension angle for a shoulder joint angle."""
    return theta_shoulder - cfg.arm.shoulder_mount


def actuator_torques(cfg: ModelConfig, state: PlantState) -> tuple[float, float]:
    """Quasi-static actuator torques (shoulder, elbow) at the current state."""
    tau_s = scasper.total_torque(
        cfg.scasper, cfg.material, state.p_shoulder, shoulder_extension(cfg, state.theta_shoulder)
    ).m_total
    tau_e = lisper.output_torque(
        cfg.lisper, cfg.material, state.p_elbow, elbow_bend(cfg, state.theta_elbow),
        cfg.root_config(), **quad_options(cfg),
    )
    return tau_s, tau_e


def quad_options(cfg: ModelConfig) -> dict:
    s = cfg.sim
    return {"n": s.quad_n, "rtol": s.quad_rtol, "n_max": s.quad_n_max}


def valve_update(p: float, p_cmd: float, valve: ValveModel, dt: float) -> float:
    """Advance one first-order lag step (exact for piecewise-constant command)."""
    target = min(max(p_cmd, 0.0), valve.p_max)
    dp = (target - p) * -math.expm1(-dt / valve.tau_valve)
    limit = valve.slew_max * dt
    dp = min(max(dp, -limit), limit)
    return min(max(p + dp, 0.0), valve.p_max)


def _clamp_joint(theta, omega, lo, hi):
    if theta < lo:
        return lo, max(omega, 0.0)
    if theta > hi:
        return hi, min(omega, 0.0)
    return theta, omega


def joint_forces(cfg: ModelConfig, state: PlantState, tau_s: float, tau_e: float) -> tuple[float, float]:
    """Generalized forces (shoulder, elbow) left over for acceleration."""
    arm, sim = cfg.arm, cfg.sim
    q2 = state.theta_elbow
    w1, w2 = state.omega_shoulder, state.omega_elbow
    g_s, g_e = gravity_torque(arm, state.theta_shoulder, q2)
    h = arm.m2 * arm.l1 * arm.r_com2 * math.sin(q2)
    # Coriolis / centrifugal terms
    c_s = -h * (2.0 * w1 * w2 + w2 * w2)
    c_e = h * w1 * w1
    f_s = tau_s - g_s - c_s - sim.damping_shoulder * w1
    f_e = tau_e - g_e - c_e - sim.damping_elbow * w2
    if sim.strips:
        f_s -= sim.strip_stiffness * (state.theta_shoulder - sim.strip_rest) + sim.strip_damping * w1
    return f_s, f_e


def _stop_side(theta, omega, lo, hi):
    """+1 resting on the lower stop, -1 on the upper, 0 free."""
    if theta <= lo and omega <= 0.0:
        return 1
    if theta >= hi and omega >= 0.0:
        return -1
    return 0


def joint_accelerations(cfg: ModelConfig, state: PlantState, tau_s: float, tau_e: float) -> tuple[float, float]:
    """Joint accelerations with the hard stops treated as unilateral constraints.

    A joint sitting on a stop is held still when the stop has to push back to
    keep it there. Otherwise a blocked joint would still pass its acceleration
    to the other one through the off-diagonal inertia.
    """
    f = joint_forces(cfg, state, tau_s, tau_e)
    m11, m12, m22 = mass_matrix(cfg.arm, state.theta_elbow)
    mm = ((m11, m12), (m12, m22))
    side = (_stop_side(state.theta_shoulder, state.omega_shoulder, *cfg.arm.shoulder_limits),
            _stop_side(state.theta_elbow, state.omega_elbow, *cfg.arm.elbow_limits))
    det = m11 * m22 - m12 * m12
    free = ((m22 * f[0] - m12 * f[1]) / det, (m11 * f[1] - m12 * f[0]) / det)
    for locked in ((), (0,), (1,), (0, 1)):
        if any(side[j] == 0 for j in locked):
            continue
        if not locked:
            acc = free
        elif len(locked) == 2:
            acc = (0.0, 0.0)
        else:
            j = 1 - locked[0]
            acc = [0.0, 0.0]
            acc[j] = f[j] / mm[j][j]
        ok = True
        for j in range(2):
            if j in locked:
                # reaction the stop must supply, signed toward the free range
                reaction = (mm[j][0] * acc[0] + mm[j][1] * acc[1] - f[j]) * side[j]
                ok &= reaction >= 0.0
            elif side[j] != 0:
                ok &= acc[j] * side[j] >= 0.0
        if ok:
            return tuple(acc)
    return 0.0, 0.0


def step(state: PlantState, cmd: tuple[float, float], cfg: ModelConfig, dt: float) -> PlantState:
    """Advance the arm by ``dt`` under pressure commands ``(shoulder, elbow)`` in Pa.

    Semi-implicit Euler on the joints, exact first-order lag on the valves.
    Joint limits act as hard stops that zero the velocity into the stop.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    tau_s, tau_e = actuator_torques(cfg, state)
    a_s, a_e = joint_accelerations(cfg, state, tau_s, tau_e)
    w_s = state.omega_shoulder + dt * a_s
    w_e = state.omega_elbow + dt * a_e
    q_s, w_s = _clamp_joint(state.theta_shoulder + dt * w_s, w_s, *cfg.arm.shoulder_limits)
    q_e, w_e = _clamp_joint(state.theta_elbow + dt * w_e, w_e, *cfg.arm.elbow_limits)
    v_s, v_e = valves(cfg)
    new = PlantState(
        theta_shoulder=q_s, theta_elbow=q_e, omega_shoulder=w_s, omega_elbow=w_e,
        p_shoulder=valve_update(state.p_shoulder, cmd[0], v_s, dt),
        p_elbow=valve_update(state.p_elbow, cmd[1], v_e, dt),
        t=state.t + dt,
    )
    for name in ("theta_shoulder", "theta_elbow", "omega_shoulder", "omega_elbow",
                 "p_shoulder", "p_elbow"):
        if not math.isfinite(getattr(new, name)):
            raise NonFiniteStateError(f"{name} became non-finite at t={new.t:.6g} s")
    return new


def measure(state: PlantState, imu: ImuModel, rng: np.random.Generator) -> tuple[tuple[float, float], np.random.Generator]:
    """IMU angle readings (shoulder, elbow) in degrees."""
    noise = rng.normal(0.0, imu.noise_std, 2) if imu.noise_std > 0 else (0.0, 0.0)
    return ((math.degrees(state.theta_shoulder) + float(noise[0]),
             math.degrees(state.theta_elbow) + float(noise[1])), rng)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# single-joint bench (unloaded actuator on a test frame)

BENCH_LIMITS = {"elbow": (0.0, math.radians(112.2)), "shoulder": (0.0, math.radians(122.5))}


@dataclass(frozen=True)
class BenchState:
    theta: float = 0.0  # actuator angle
    omega: float = 0.0
    p: float = 0.0
    t: float = 0.0


def bench_torque(cfg: ModelConfig, joint: str, p: float, theta: float) -> float:
    if joint == "elbow":
        return lisper.output_torque(cfg.lisper, cfg.material, p, cfg.lisper.theta_initial + theta,
                                    cfg.root_config(), **quad_options(cfg))
    tau = scasper.total_torque(cfg.scasper, cfg.material, p, theta).m_total
    if cfg.sim.strips:
        tau -= cfg.sim.strip_stiffness * theta
    return tau


def bench_step(state: BenchState, p_cmd: float, cfg: ModelConfig, joint: str, dt: float) -> BenchState:
    """Unloaded actuator swinging its own distal plate; no gravity."""
    sim = cfg.sim
    inertia = sim.bench_inertia_elbow if joint == "elbow" else sim.bench_inertia_shoulder
    damping = sim.bench_damping_elbow if joint == "elbow" else sim.bench_damping_shoulder
    if joint == "shoulder" and sim.strips:
        damping += sim.strip_damping
    tau = bench_torque(cfg, joint, state.p, state.theta)
    w = state.omega + dt * (tau - damping * state.omega) / inertia
    q, w = _clamp_joint(state.theta + dt * w, w, *BENCH_LIMITS[joint])
    valve = valves(cfg)[1 if joint == "elbow" else 0]
    return BenchState(q, w, valve_update(state.p, p_cmd, valve, dt), state.t + dt)

