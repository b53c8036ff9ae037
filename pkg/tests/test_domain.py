import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pneumodel.domain import (
    DEG, KPA, ConfigError, ModelConfig, ValidationError, config_from_assignments, config_keys,
    dump_config, load_config, parse_assignments, validate,
)


def test_defaults_are_valid():
    assert validate(ModelConfig()) == []


def test_rest_geometry_is_consistent():
    g = ModelConfig().lisper
    # third closure relation holds at rest (theta3 = beta, r = r_mid)
    lhs = g.l_base / (2 * math.cos(g.beta))
    assert lhs == pytest.approx(g.l_wall_initial + g.r_mid * math.tan(g.beta), rel=1e-14)
    assert g.l_thick == pytest.approx(g.r_outer - g.r_inner)


def test_dump_load_round_trip(tmp_path):
    cfg = ModelConfig()
    path = tmp_path / "all.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_dump_lists_every_key():
    text = dump_config(ModelConfig())
    keys = [line.split("=")[0].strip() for line in text.splitlines() if "=" in line]
    assert keys == config_keys()


def test_file_units_are_converted(tmp_path):
    path = tmp_path / "u.cfg"
    path.write_text("lisper.gamma = 60\nlisper.p_max = 80\narm.elbow_limits = -5, 25\n")
    cfg = load_config(path)
    assert cfg.lisper.gamma == pytest.approx(60 * DEG)
    assert cfg.lisper.p_max == pytest.approx(80 * KPA)
    assert cfg.arm.elbow_limits == pytest.approx((-5 * DEG, 25 * DEG))
    # untouched keys keep defaults
    assert cfg.scasper == ModelConfig().scasper


def test_scenario_keys_are_ignored(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("scenario.duration = 3\nsim.seed = 4\n")
    assert load_config(path).sim.seed == 4


@settings(max_examples=60, deadline=None)
@given(
    e=st.floats(1e5, 1e8), poisson=st.floats(0.05, 0.5), gamma=st.floats(1.0, 179.0),
    bags=st.integers(1, 10), seed=st.integers(0, 2**31 - 1), strips=st.booleans(),
    tau=st.floats(0.01, 2.0),
)
def test_round_trip_property(tmp_path_factory, e, poisson, gamma, bags, seed, strips, tau):
    values = {
        "material.e_silicone": e, "material.poisson": poisson, "lisper.gamma": gamma,
        "scasper.n_bags": float(2 * bags), "sim.seed": float(seed), "sim.strips": strips,
        "sim.valve_tau": tau,
    }
    cfg = config_from_assignments(values)
    path = tmp_path_factory.mktemp("rt") / "c.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match=r"x.cfg:2"):
        parse_assignments("a.b = 1\nnot an assignment\n", "x.cfg")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_assignments("a.b = 1\na.b = 2\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_assignments("a.b = one\n")


def test_comments_and_blank_lines():
    assert parse_assignments("# header\n\nsim.dt = 0.002  # finer\n") == {"sim.dt": 0.002}


@pytest.mark.parametrize("values,message", [
    ({"lisper.nope": 1.0}, "unknown config key"),
    ({"scasper.n_bags": 6.5}, "integer"),
    ({"arm.elbow_limits": 3.0}, "comma-separated"),
    ({"sim.strips": 1.0}, "true/false"),
])
def test_bad_values(values, message):
    with pytest.raises(ConfigError, match=message):
        config_from_assignments(values)


@pytest.mark.parametrize("values,key", [
    ({"lisper.r_inner": 0.007}, "lisper.r_inner/r_outer"),
    ({"scasper.n_bags": 5.0}, "scasper.n_bags"),
    ({"material.poisson": 0.6}, "material.poisson"),
    ({"scasper.d2": 0.001}, "scasper.d1/d2"),
    ({"sim.quad_n": 255.0}, "sim.quad_n"),
    ({"control.kp_elbow": -1.0}, "control.kp_elbow"),
    ({"control.integral_limit_shoulder": 0.0}, "control.integral_limit_shoulder"),
])
def test_validation_names_the_key(tmp_path, values, key):
    problems = validate(config_from_assignments(values))
    assert any(p.startswith(key + ":") for p in problems), problems
    path = tmp_path / "bad.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    with pytest.raises(ValidationError) as exc:
        load_config(path)
    assert any(v.startswith(key) for v in exc.value.violations)


def test_with_value_replaces_one_key():
    cfg = ModelConfig().with_value("sim.dt", 5e-4)
    assert cfg.sim.dt == 5e-4
    assert cfg.lisper == ModelConfig().lisper
