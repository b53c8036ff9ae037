"""Configuration and value types shared by the models, the plant and the CLI.

Internal units are SI with angles in radians. Config files use degrees for
angles and kPa for gauge pressures; conversion happens only in
:func:`load_config` / :func:`dump_config`.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

DEG = math.pi / 180.0
KPA = 1000.0


class ConfigError(ValueError):
    """A config file could not be parsed, or a key is unknown."""


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid configuration: " + "; ".join(violations))


@dataclass(frozen=True)
class MaterialParams:
    e_silicone: float = 1.53e6
    poisson: float = 0.5
    e_pipe: float = 30e6


def _rest_base_length(beta, r_inner, r_outer, l_wall):
    # third bellow relation solved for l_base at theta3 = beta, r_new = r
    r = 0.5 * (r_inner + r_outer)
    return 2.0 * (l_wall * math.cos(beta) + r * math.sin(beta))


def _rest_height(beta, r_inner, r_outer, l_wall):
    r = 0.5 * (r_inner + r_outer)
    return l_wall * math.sin(beta) + r * (1.0 - math.cos(beta))


# Internal LISPER dimensions are not published. Fold shape, h2, gamma and
# l_equiv are hand-picked to fit the 132 x 55 x 92 mm body with 15 bellows
# (l_equiv = 0.6 N*m / 12.5 N). Fields marked (cal) were then fitted once by
# ``python -m pneumodel.calibrate`` to: 35 % bellow share at 50 kPa / 45 deg,
# 112.2 deg free angle at 100 kPa, 12.5 N blocked force at 100 kPa.
_BETA = 0.10
_R_IN, _R_OUT = 0.002, 0.006
_L_WALL = 0.012


@dataclass(frozen=True)
class LisperGeometry:
    beta: float = _BETA
    r_inner: float = _R_IN
    r_outer: float = _R_OUT
    l_thick: float = _R_OUT - _R_IN
    l_base: float = _rest_base_length(_BETA, _R_IN, _R_OUT, _L_WALL)
    l_wall_initial: float = _L_WALL
    h_base: float = _rest_height(_BETA, _R_IN, _R_OUT, _L_WALL)
    r2_external: float = 0.030
    d_bellow_wall: float = 0.048459225075929716  # (cal)
    n_bellows: int = 15
    gamma: float = 75.0 * DEG
    l_equiv: float = 0.048
    h2: float = 0.045
    a_feet: float = 0.00010845706182064013  # (cal)
    a_base: float = 0.0018174825660116052  # (cal)
    r_base: float = 0.010
    theta_initial: float = 0.0
    p_max: float = 100.0 * KPA

    @property
    def r_mid(self) -> float:
        return 0.5 * (self.r_inner + self.r_outer)


FOLD_SHAPE_KEYS = ("beta", "r_inner", "r_outer", "l_wall_initial")


def with_rest_shape(g: LisperGeometry) -> LisperGeometry:
    """Re-derive ``l_thick``, ``l_base`` and ``h_base`` from the fold shape.

    Keeps the unpressurized bellow at its rest shape after a fold dimension
    changes.
    """
    args = (g.beta, g.r_inner, g.r_outer, g.l_wall_initial)
    return replace(g, l_thick=g.r_outer - g.r_inner, l_base=_rest_base_length(*args),
                   h_base=_rest_height(*args))


@dataclass(frozen=True)
class ScasperGeometry:
    n_bags: int = 6
    bag_width: float = 0.090
    bag_length: float = 0.120
    r1: float = 0.010
    l_pipe: float = 0.050
    d1: float = 0.002
    d2: float = 0.004
    poly: tuple[float, float, float] = (0.0145, 3.0507, -1.1438)
    p_max: float = 150.0 * KPA


@dataclass(frozen=True)
class ArmParams:
    l1: float = 0.28
    l2: float = 0.25
    m1: float = 1.5
    m2: float = 0.2
    r_com1: float = 0.14
    r_com2: float = 0.125
    g: float = 9.81
    elbow_limits: tuple[float, float] = (-10.0 * DEG, 30.0 * DEG)
    shoulder_limits: tuple[float, float] = (16.0 * DEG, 60.0 * DEG)
    # joint angle at which each actuator sits at its rest angle
    elbow_mount: float = -10.0 * DEG
    shoulder_mount: float = 16.0 * DEG


@dataclass(frozen=True)
class SimParams:
    root_abs_tol: float = 1e-12
    root_x_tol: float = 1e-14
    root_max_iter: int = 200
    quad_n: int = 256
    quad_rtol: float = 1e-8
    quad_n_max: int = 8192
    dt: float = 1e-3
    valve_tau: float = 0.2
    slew_max: float = 1000.0 * KPA
    damping_shoulder: float = 1.0
    damping_elbow: float = 0.1
    strips: bool = False
    strip_stiffness: float = 2.0
    strip_damping: float = 0.5
    strip_rest: float = 16.0 * DEG
    # unloaded single-actuator bench: distal plate inertia (kg m^2), damping (N m s/rad)
    bench_inertia_elbow: float = 6.5e-4
    bench_damping_elbow: float = 0.019
    bench_inertia_shoulder: float = 4.6e-4
    bench_damping_shoulder: float = 0.005
    imu_rate: float = 100.0
    imu_noise: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class ControlParams:
    # model-based controller: PID output is a force (elbow, N) or torque (shoulder, N m)
    kp_elbow: float = 60.0
    ki_elbow: float = 200.0
    kd_elbow: float = 8.0
    integral_limit_elbow: float = 10.0
    kp_shoulder: float = 30.0
    ki_shoulder: float = 30.0
    kd_shoulder: float = 4.0
    integral_limit_shoulder: float = 10.0
    # model-free baseline: PID output is a pressure (kPa per rad)
    base_kp_elbow: float = 400.0
    base_ki_elbow: float = 1500.0
    base_kd_elbow: float = 60.0
    base_integral_limit_elbow: float = 100.0
    base_kp_shoulder: float = 500.0
    base_ki_shoulder: float = 500.0
    base_kd_shoulder: float = 70.0
    base_integral_limit_shoulder: float = 150.0


@dataclass(frozen=True)
class ModelConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    lisper: LisperGeometry = field(default_factory=LisperGeometry)
    scasper: ScasperGeometry = field(default_factory=ScasperGeometry)
    arm: ArmParams = field(default_factory=ArmParams)
    sim: SimParams = field(default_factory=SimParams)
    control: ControlParams = field(default_factory=ControlParams)

    def root_config(self):
        from .numerics import RootConfig

        s = self.sim
        return RootConfig(abs_tol=s.root_abs_tol, x_tol=s.root_x_tol, max_iter=s.root_max_iter)

    def with_value(self, key: str, value: Any) -> "ModelConfig":
        """Copy with one dotted key replaced (value in internal units)."""
        section, name = _split_key(key)
        sub = getattr(self, section)
        return replace(self, **{section: replace(sub, **{name: value})})


# ---------------------------------------------------------------------------
# validation

def validate(config: ModelConfig) -> list[str]:
    """Return one message per violated invariant; empty means valid."""
    out: list[str] = []

    def need(ok: bool, key: str, rule: str):
        if not ok:
            out.append(f"{key}: {rule}")

    m = config.material
    need(m.e_silicone > 0, "material.e_silicone", "must be > 0")
    need(m.e_pipe > 0, "material.e_pipe", "must be > 0")
    need(0 < m.poisson <= 0.5, "material.poisson", "must satisfy 0 < poisson <= 0.5")

    g = config.lisper
    for name in ("r_inner", "r_outer", "l_thick", "l_base", "l_wall_initial", "h_base",
                 "r2_external", "d_bellow_wall", "l_equiv", "h2", "a_feet", "a_base",
                 "r_base", "p_max"):
        need(getattr(g, name) > 0, f"lisper.{name}", "must be > 0")
    need(g.r_inner < g.r_outer, "lisper.r_inner/r_outer", "r_inner must be < r_outer")
    need(0 < g.beta < math.pi / 2, "lisper.beta", "must satisfy 0 < beta < 90 deg")
    need(0 < g.gamma <= math.pi, "lisper.gamma", "must satisfy 0 < gamma <= 180 deg")
    need(g.n_bellows >= 1, "lisper.n_bellows", "must be >= 1")

    s = config.scasper
    need(s.n_bags >= 2, "scasper.n_bags", "must be >= 2")
    need(s.n_bags % 2 == 0, "scasper.n_bags", "n_bags must be even")
    need(s.d1 > 0, "scasper.d1", "must be > 0")
    need(s.d2 > s.d1, "scasper.d1/d2", "d2 must be > d1")
    for name in ("bag_width", "bag_length", "r1", "l_pipe", "p_max"):
        need(getattr(s, name) > 0, f"scasper.{name}", "must be > 0")
    need(len(s.poly) == 3, "scasper.poly", "needs exactly 3 coefficients")

    a = config.arm
    for name in ("l1", "l2", "m1", "m2", "r_com1", "r_com2", "g"):
        need(getattr(a, name) > 0, f"arm.{name}", "must be > 0")
    need(a.r_com1 <= a.l1, "arm.r_com1", "must be <= l1")
    need(a.r_com2 <= a.l2, "arm.r_com2", "must be <= l2")
    need(a.elbow_limits[0] < a.elbow_limits[1], "arm.elbow_limits", "interval must be non-empty")
    need(a.shoulder_limits[0] < a.shoulder_limits[1], "arm.shoulder_limits",
         "interval must be non-empty")

    sim = config.sim
    for name in ("root_abs_tol", "root_x_tol", "quad_rtol", "dt", "valve_tau", "slew_max",
                 "imu_rate", "bench_inertia_elbow", "bench_inertia_shoulder"):
        need(getattr(sim, name) > 0, f"sim.{name}", "must be > 0")
    need(sim.root_max_iter >= 1, "sim.root_max_iter", "must be >= 1")
    need(sim.quad_n >= 2 and sim.quad_n % 2 == 0, "sim.quad_n", "must be even and >= 2")
    need(sim.quad_n_max >= sim.quad_n, "sim.quad_n_max", "must be >= quad_n")
    for name in ("damping_shoulder", "damping_elbow", "strip_stiffness", "strip_damping",
                 "imu_noise", "bench_damping_elbow", "bench_damping_shoulder"):
        need(getattr(sim, name) >= 0, f"sim.{name}", "must be >= 0")

    c = config.control
    for f in fields(c):
        if "integral_limit" in f.name:
            need(getattr(c, f.name) > 0, f"control.{f.name}", "must be > 0")
        else:
            need(getattr(c, f.name) >= 0, f"control.{f.name}", "must be >= 0")
    return out


# ---------------------------------------------------------------------------
# config file I/O
#
# One ``section.key = value`` per line, ``#`` starts a comment. Values are
# numbers, ``true``/``false``, or comma-separated number lists.

_SECTIONS = {
    "material": MaterialParams,
    "lisper": LisperGeometry,
    "scasper": ScasperGeometry,
    "arm": ArmParams,
    "sim": SimParams,
    "control": ControlParams,
}

# file unit -> internal unit multipliers
_ANGLE_KEYS = {
    "lisper.beta", "lisper.gamma", "lisper.theta_initial",
    "arm.elbow_limits", "arm.shoulder_limits", "arm.elbow_mount", "arm.shoulder_mount",
    "sim.strip_rest",
}
_PRESSURE_KEYS = {"lisper.p_max", "scasper.p_max", "sim.slew_max"}


def _split_key(key: str) -> tuple[str, str]:
    section, _, name = key.partition(".")
    cls = _SECTIONS.get(section)
    if cls is None or name not in {f.name for f in fields(cls)}:
        raise ConfigError(f"unknown config key {key!r}")
    return section, name


def _scale(key: str) -> float:
    if key in _ANGLE_KEYS:
        return DEG
    if key in _PRESSURE_KEYS:
        return KPA
    return 1.0


def _parse_scalar(text: str, where: str) -> float | bool:
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r} as a number") from None


def parse_assignments(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines into a dict of raw (file-unit) values."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key in out:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        parts = [p.strip() for p in value.split(",")]
        if len(parts) > 1:
            out[key] = tuple(_parse_scalar(p, f"{where} ({key})") for p in parts)
        else:
            out[key] = _parse_scalar(parts[0], f"{where} ({key})")
    return out


def _coerce(key: str, cls, name: str, value: Any) -> Any:
    proto = getattr(cls(), name)
    k = _scale(key)
    if isinstance(proto, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false")
        return value
    if isinstance(proto, tuple):
        if not isinstance(value, tuple) or len(value) != len(proto):
            raise ConfigError(f"{key}: expected {len(proto)} comma-separated numbers")
        return tuple(float(v) * k for v in value)
    if isinstance(value, (tuple, bool)):
        raise ConfigError(f"{key}: expected a single number")
    if isinstance(proto, int):
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value}")
        return int(value)
    return float(value) * k


def config_from_assignments(values: dict[str, Any], base: ModelConfig | None = None) -> ModelConfig:
    sections = {name: {} for name in _SECTIONS}
    for key, value in values.items():
        section, name = _split_key(key)
        sections[section][name] = _coerce(key, _SECTIONS[section], name, value)
    base = base or ModelConfig()
    return replace(
        base, **{s: replace(getattr(base, s), **kv) for s, kv in sections.items() if kv}
    )


def load_config(path: str | os.PathLike | None = None, *, check: bool = True) -> ModelConfig:
    """Read a config file; missing keys keep their defaults.

    Keys under ``scenario.`` are ignored here so scenario files can be passed
    directly. Raises :class:`ConfigError` on syntax problems and
    :class:`ValidationError` when an invariant is violated.
    """
    if path is None:
        config = ModelConfig()
    else:
        path = Path(path)
        values = parse_assignments(path.read_text(encoding="utf-8"), str(path))
        values = {k: v for k, v in values.items() if not k.startswith("scenario.")}
        config = config_from_assignments(values)
    if check:
        problems = validate(config)
        if problems:
            raise ValidationError(problems)
    return config


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _fmt_scaled(v: float, k: float) -> str:
    # shortest file value that scales back to exactly v (30 deg, not 29.999999999999996)
    for digits in (15, 16):
        text = f"{v / k:.{digits}g}"
        if float(text) * k == v:
            return repr(float(text))
    return repr(v / k)


def dump_config(config: ModelConfig) -> str:
    """Serialize every key, in file units, in a form :func:`load_config` reads back."""
    lines = []
    for section in _SECTIONS:
        lines.append(f"# {section}")
        for name, value in asdict(getattr(config, section)).items():
            key = f"{section}.{name}"
            k = _scale(key)
            if isinstance(value, (tuple, list)):
                text = ", ".join(_fmt_scaled(v, k) for v in value)
            elif isinstance(value, (bool, int)):
                text = _fmt(value)
            else:
                text = _fmt_scaled(value, k)
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def config_keys() -> list[str]:
    return [f"{s}.{f.name}" for s, cls in _SECTIONS.items() for f in fields(cls)]
