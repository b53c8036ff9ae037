"""Command-line entry point: model curves, inverse queries, sweeps and simulations as CSV.

Examples:
  pneumodel lisper curve --p-start 10 --p-end 100 --p-step 10
  pneumodel lisper force --angle 45 --p-start 10 --p-end 100 --p-step 10
  pneumodel scasper torque --angle 0 --p-start 0 --p-end 0
  pneumodel inverse --joint elbow --angle 45 --load 2
  pneumodel sweep --param lisper.r_outer --values 0.0055:0.0065:0.00025 --metric free_angle
  pneumodel simulate --mode position --scenario run.cfg
  pneumodel bandwidth --freqs 1,0.5,0.25 --joint elbow

Exit status is 0 on success, 1 for usage and configuration errors and 2 for
model or solver failures. Data goes to stdout (or ``--out``), messages to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import control, lisper, plant, scasper
from .csvio import CsvTable, format_csv
from .domain import (
    DEG, FOLD_SHAPE_KEYS, KPA, ConfigError, ModelConfig, ValidationError, config_from_assignments,
    load_config, parse_assignments, validate, with_rest_shape,
)
from .numerics import DegenerateDesignError, RootFindingError

CONFIG_ENV = "PNEUMODEL_CONFIG"

MODEL_ERRORS = (
    RootFindingError, DegenerateDesignError, lisper.PoleError, lisper.InfeasibleGeometryError,
    lisper.UnreachableForceError, scasper.NegativePressureError, control.UnreachableTorqueError,
    plant.NonFiniteStateError, ZeroDivisionError,
)
USAGE_ERRORS = (ConfigError, ValidationError, control.ScenarioError, OSError)

HEADERS = {
    "lisper curve": ("pressure_kpa", "free_angle_deg"),
    "lisper force": ("pressure_kpa", "force_n", "f_total1_n", "f_total2_n", "f_total3_n",
                     "bellow_contrib_pct"),
    "scasper angle": ("pressure_kpa", "extension_angle_deg"),
    "scasper torque": ("pressure_kpa", "tau_bag_nm", "m_pipe_nm", "torque_nm"),
    "inverse": ("pressure_kpa",),
    "bandwidth": ("frequency_hz", "range_of_motion_deg", "mean_time_error_s",
                  "max_angular_error_deg"),
}
SWEEP_METRICS = {"free_angle": "free_angle_deg", "max_force": "max_force_n",
                 "max_torque": "max_torque_nm"}
SIM_FIELDS = (("set", "set_angle", "deg"), ("real", "real_angle", "deg"),
              ("p_cmd", "p_cmd", "kpa"), ("p", "p_actual", "kpa"), ("torque", "torque", "nm"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def simulate_header() -> tuple[str, ...]:
    cols = ["time_s"]
    for joint in control.JOINTS:
        cols += [f"{joint}_{name}_{unit}" for name, _, unit in SIM_FIELDS]
    return tuple(cols)


def pressure_grid(start: float, end: float, step: float) -> list[float]:
    """Inclusive grid in kPa, built from integer multiples of ``step``."""
    if start < 0 or end < start:
        raise UsageError(f"need 0 <= p-start <= p-end, got {start}, {end}")
    if step <= 0:
        raise UsageError(f"p-step must be > 0, got {step}")
    n = int(round((end - start) / step))
    return [start + i * step for i in range(n + 1)]


def value_grid(text: str) -> list[float]:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--values expects start:end:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise UsageError(f"--values needs start <= end and step > 0, got {text!r}")
    n = int(round((b - a) / step))
    return [a + i * step for i in range(n + 1)]


def _quad(cfg):
    return plant.quad_options(cfg)


# ---------------------------------------------------------------------------
# commands


def cmd_lisper_curve(cfg: ModelConfig, args) -> CsvTable:
    rows = []
    for p in pressure_grid(args.p_start, args.p_end, args.p_step):
        theta = lisper.free_bending_angle(cfg.lisper, cfg.material, p * KPA, cfg.root_config(),
                                          **_quad(cfg))
        rows.append((p, theta / DEG))
    return CsvTable(HEADERS["lisper curve"], tuple(rows))


def cmd_lisper_force(cfg: ModelConfig, args) -> CsvTable:
    rows = []
    for p in pressure_grid(args.p_start, args.p_end, args.p_step):
        fb = lisper.output_force(cfg.lisper, cfg.material, p * KPA, args.angle * DEG,
                                 cfg.root_config(), **_quad(cfg))
        share = lisper.contribution_percent(fb) if fb.f_output != 0.0 else float("nan")
        rows.append((p, fb.f_output, fb.f_total1, fb.f_total2, fb.f_total3, share))
    return CsvTable(HEADERS["lisper force"], tuple(rows))


def cmd_scasper_angle(cfg: ModelConfig, args) -> CsvTable:
    # the regression is fed the pressure number in kPa as is
    rows = [(p, scasper.extension_angle(cfg.scasper, p))
            for p in pressure_grid(args.p_start, args.p_end, args.p_step)]
    return CsvTable(HEADERS["scasper angle"], tuple(rows))


def cmd_scasper_torque(cfg: ModelConfig, args) -> CsvTable:
    rows = []
    for p in pressure_grid(args.p_start, args.p_end, args.p_step):
        tb = scasper.total_torque(cfg.scasper, cfg.material, p * KPA, args.angle * DEG)
        rows.append((p, tb.tau_bag, tb.m_pipe, tb.m_total))
    return CsvTable(HEADERS["scasper torque"], tuple(rows))


def cmd_inverse(cfg: ModelConfig, args) -> CsvTable:
    p = control.inverse_load(cfg, args.joint, args.angle * DEG, args.load)
    return CsvTable(HEADERS["inverse"], ((p / KPA,),))


def sweep_metric(cfg: ModelConfig, metric: str) -> float:
    if metric == "free_angle":
        return lisper.free_bending_angle(cfg.lisper, cfg.material, cfg.lisper.p_max,
                                         cfg.root_config(), **_quad(cfg)) / DEG
    if metric == "max_force":
        return lisper.output_force(cfg.lisper, cfg.material, cfg.lisper.p_max,
                                   cfg.lisper.theta_initial, cfg.root_config(),
                                   **_quad(cfg)).f_output
    return scasper.total_torque(cfg.scasper, cfg.material, cfg.scasper.p_max, 0.0).m_total


def cmd_sweep(cfg: ModelConfig, args) -> CsvTable:
    rows = []
    for v in value_grid(args.values):
        trial = config_from_assignments({args.param: v}, cfg)
        section, _, name = args.param.partition(".")
        if section == "lisper" and name in FOLD_SHAPE_KEYS:
            # a new fold shape moves the base length and peak height with it
            trial = replace(trial, lisper=with_rest_shape(trial.lisper))
        problems = validate(trial)
        if problems:
            raise ValidationError(problems)
        rows.append((v, sweep_metric(trial, args.metric)))
    return CsvTable((args.param, SWEEP_METRICS[args.metric]), tuple(rows))


def load_scenario(cfg: ModelConfig, path: str, mode: str) -> tuple[ModelConfig, control.Scenario]:
    """Scenario file: ``scenario.*`` keys plus optional model overrides."""
    values = parse_assignments(Path(path).read_text(encoding="utf-8"), path)
    overrides = {k: v for k, v in values.items() if not k.startswith("scenario.")}
    if overrides:
        cfg = config_from_assignments(overrides, cfg)
        problems = validate(cfg)
        if problems:
            raise ValidationError(problems)
    return cfg, control.scenario_from_assignments(values, mode)


def cmd_simulate(cfg: ModelConfig, args) -> CsvTable:
    cfg, scenario = load_scenario(cfg, args.scenario, args.mode)
    ts = control.run_scenario(cfg, scenario)
    cols = [ts["shoulder"].t]
    for joint in control.JOINTS:
        cols += [getattr(ts[joint], attr) for _, attr, _ in SIM_FIELDS]
    rows = tuple(tuple(float(c[i]) for c in cols) for i in range(len(cols[0])))
    return CsvTable(simulate_header(), rows)


def cmd_bandwidth(cfg: ModelConfig, args) -> CsvTable:
    try:
        freqs = [float(f) for f in args.freqs.split(",")]
    except ValueError:
        raise UsageError(f"--freqs expects comma-separated numbers, got {args.freqs!r}") from None
    if args.cycles < 2:
        raise UsageError("--cycles must be >= 2")
    rows = []
    for f in freqs:
        _, m = control.bandwidth_run(cfg, args.joint, f, cycles=args.cycles)
        rows.append((f, m.range_of_motion, m.mean_time_error, m.max_angular_error))
    return CsvTable(HEADERS["bandwidth"], tuple(rows))


# ---------------------------------------------------------------------------
# parser


def _add_pressure_range(p, start=10.0, end=100.0):
    p.add_argument("--p-start", type=float, default=start, help="first pressure, kPa")
    p.add_argument("--p-end", type=float, default=end, help="last pressure, kPa")
    p.add_argument("--p-step", type=float, default=10.0, help="pressure increment, kPa")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"config file (default: ${CONFIG_ENV} if set, else built-in defaults)")
    common.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="overrides sim.seed")

    ap = _Parser(prog="pneumodel", description="LISPER/SCASPER actuator models and arm simulation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lis = sub.add_parser("lisper", help="LISPER elbow actuator curves")
    lsub = lis.add_subparsers(dest="what", required=True, parser_class=_Parser)
    p = lsub.add_parser("curve", parents=[common], help="free bending angle vs pressure")
    _add_pressure_range(p)
    p.set_defaults(func=cmd_lisper_curve)
    p = lsub.add_parser("force", parents=[common], help="output force vs pressure at a fixed angle")
    p.add_argument("--angle", type=float, required=True, help="bending angle, deg")
    _add_pressure_range(p)
    p.set_defaults(func=cmd_lisper_force)

    sca = sub.add_parser("scasper", help="SCASPER shoulder actuator curves")
    ssub = sca.add_subparsers(dest="what", required=True, parser_class=_Parser)
    p = ssub.add_parser("angle", parents=[common], help="regression extension angle vs pressure")
    p.add_argument("--angle", type=float, default=None, help="ignored; accepted for symmetry")
    _add_pressure_range(p, end=90.0)
    p.set_defaults(func=cmd_scasper_angle)
    p = ssub.add_parser("torque", parents=[common], help="torque vs pressure at a fixed angle")
    p.add_argument("--angle", type=float, required=True, help="real extension angle, deg")
    _add_pressure_range(p, end=90.0)
    p.set_defaults(func=cmd_scasper_torque)

    p = sub.add_parser("inverse", parents=[common], help="pressure for a load at an angle")
    p.add_argument("--joint", choices=control.JOINTS, required=True)
    p.add_argument("--angle", type=float, required=True, help="actuator angle, deg")
    p.add_argument("--load", type=float, default=0.0,
                   help="tip force in N (elbow) or torque in N*m (shoulder)")
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("sweep", parents=[common], help="design-parameter study")
    p.add_argument("--param", required=True, help="dotted config key, in config-file units")
    p.add_argument("--values", required=True, help="start:end:step")
    p.add_argument("--metric", choices=tuple(SWEEP_METRICS), default="free_angle")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop arm simulation")
    p.add_argument("--mode", choices=control.MODES, required=True)
    p.add_argument("--scenario", required=True, help="scenario file (scenario.* keys)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bandwidth", parents=[common], help="sine-tracking metrics on the bench")
    p.add_argument("--freqs", default="1,0.5,0.25", help="comma-separated frequencies, Hz")
    p.add_argument("--joint", choices=control.JOINTS, default="elbow")
    p.add_argument("--cycles", type=int, default=4)
    p.set_defaults(func=cmd_bandwidth)
    return ap


def _config_for(args) -> ModelConfig:
    path = args.config or os.environ.get(CONFIG_ENV) or None
    cfg = load_config(path)
    if args.seed is not None:
        cfg = replace(cfg, sim=replace(cfg.sim, seed=args.seed))
    return cfg


def run_cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        table = args.func(_config_for(args), args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except MODEL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = format_csv(table)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    try:
        code = run_cli()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
