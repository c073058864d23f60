import json
import logging
from pathlib import Path

import numpy as np
import pytest

import effgsa as eg
from effgsa import cli
from effgsa.config import RunConfig, apply_overrides, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    return code


def read_field(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data


def write_config(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- configuration -----------------------------------------------------------


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.toml")):
        RunConfig.from_dict(load_config(path), CONFIGS)


def test_defaults_describe_the_map_study():
    cfg = RunConfig.from_dict({})
    assert cfg.space.names == ["R_s", "lambda", "L_d", "L_q"]
    assert cfg.build_operating_set().n_op == 232
    assert cfg.settings.method == "pce"


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"colour": 1}, "colour"),
        ({"model": {"R_s": "high"}}, "model.R_s"),
        ({"model": {"R_s": -1.0}}, "model"),
        ({"model": {"pole_pairs": 2.5}}, "model.pole_pairs"),
        ({"method": {"name": "qmc"}}, "method.name"),
        ({"method": {"degree": -1}}, "method.degree"),
        ({"method": {"oversampling": 0.5}}, "method.oversampling"),
        ({"space": {"parameters": [{"name": "V_max"}]}}, "space.parameters[0].name"),
        ({"space": {"parameters": [{"name": "R_s", "lower": 9.0, "upper": 8.0}]}}, "space.parameters[0]"),
        ({"operating": {"kind": "grid", "t_max": 0.0}}, "operating.t_max"),
        ({"operating": {"kind": "map"}}, "operating.kind"),
        ({"operating": {"kind": "cycle", "vehicle": {"mass": 1.0}}}, "operating.vehicle.wheel_radius"),
        ({"reduction": {"fixed": ["L_d", "nope"]}}, "reduction.fixed"),
    ],
)
def test_validation_errors_name_the_key(doc, key):
    with pytest.raises(eg.ConfigurationError) as info:
        RunConfig.from_dict(doc)
    assert str(info.value).startswith(key)


def test_explicit_bounds_and_json_equivalence(tmp_path):
    toml = write_config(tmp_path, '[[space.parameters]]\nname = "R_s"\nlower = 8.0\nupper = 10.0\n')
    js = write_config(tmp_path, json.dumps({"space": {"parameters": [{"name": "R_s", "lower": 8.0, "upper": 10.0}]}}), "run.json")
    a = RunConfig.from_dict(load_config(toml))
    b = RunConfig.from_dict(load_config(js))
    assert a.space == b.space
    assert a.space["R_s"].lower == 8.0


def test_overrides():
    doc = apply_overrides({"method": {"seed": 1}}, {"method.seed": 5, "model.I_max": 0.25})
    cfg = RunConfig.from_dict(doc)
    assert cfg.settings.seed == 5 and cfg.ecm.I_max == 0.25


def test_flags_override_config(tmp_path):
    path = write_config(tmp_path, 'output = "x"\n[method]\nseed = 1\n')
    args = cli.build_parser().parse_args(["uq", "-c", str(path), "--seed", "9", "--set", "model.V_max=300", "-o", "y"])
    cfg = cli.config_from_args(args)
    assert cfg.settings.seed == 9 and cfg.ecm.V_max == 300.0 and cfg.output == "y"


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    assert cli.set_workers(None) == 1
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    with pytest.raises(eg.ConfigurationError):
        cli.set_workers(None)


# --- subcommands -------------------------------------------------------------


def test_map_outputs(tmp_path):
    out = tmp_path / "m"
    assert run(["map", "-o", out]) == 0
    data = read_field(out / "map.csv")
    assert data.dtype.names == ("torque_Nm", "omega_rad_s", "value")
    assert len(data) == 232
    assert np.all((data["value"] > 0) & (data["value"] <= 1))
    env = read_field(out / "envelope.csv")
    base = np.argmax(env["torque_Nm"] < env["torque_Nm"][0] * (1 - 1e-6))
    assert np.all(np.diff(env["torque_Nm"][base:]) <= 0)
    meta = json.loads((out / "map.meta.json").read_text())
    assert meta["grid_shape"] == [8, 31] and len(meta["mask"]) == 232


def test_map_rerun_is_byte_identical(tmp_path):
    names = ("map.csv", "envelope.csv", "map.meta.json", "run_meta.json", "cost.json")
    run(["map", "-o", tmp_path])
    first = {n: (tmp_path / n).read_bytes() for n in names}
    run(["map", "-o", tmp_path])
    assert first == {n: (tmp_path / n).read_bytes() for n in names}


def test_empty_grid_exits_with_config_error(tmp_path, capsys):
    code = run(["map", "-o", tmp_path, "--set", "operating.t_min=1.0", "--set", "operating.t_max=2.0"])
    assert code == 2
    assert "empty grid after clipping" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path, capsys):
    assert run(["map", "-c", tmp_path / "nope.toml"]) == 4
    assert "I/O error" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    # every point idle -> constant efficiency -> no generalized indices to select from
    code = run(["reduce", "-o", tmp_path, "--set", "operating.t_min=0.001", "--set", "operating.t_max=0.002",
                "--set", "operating.omega_min=1.0", "--set", "operating.omega_max=2.0"])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_uq_pce_cost(tmp_path):
    out = tmp_path / "u"
    assert run(["uq", "-o", out]) == 0
    cost = json.loads((out / "cost.json").read_text())
    assert cost["model_evaluations"] == 30 * 232 == cost["closed_form"]["value"]
    assert (out / "pce_model.json").exists()
    std = read_field(out / "std.csv")["value"]
    assert np.nanmin(std) >= 0


def test_uq_small_mc_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert run(["uq", "-o", tmp_path, "--method", "mc", "--n-samples", "2"]) == 0
    assert "noisy" in caplog.text
    std = read_field(tmp_path / "std.csv")["value"]
    assert np.isfinite(std).any()


class Quadratic:
    """Degree-2 polynomial in the four circuit elements, one output per point."""

    def __init__(self, opset):
        self.opset = opset
        self.w = np.linspace(0.5, 1.5, opset.n_op)

    def __call__(self, x, names):
        z = (x - eg.nominal_space().nominal) / eg.nominal_space().nominal
        base = 0.9 + 0.1 * z[:, 0] - 0.2 * z[:, 1] ** 2 + 0.05 * z[:, 2] * z[:, 3]
        return base[:, None] * self.w[None, :]


def test_compare_on_polynomial_model(tmp_path):
    cfg = RunConfig.from_dict({"output": str(tmp_path), "method": {"n_samples": 500}})
    model = Quadratic(eg.qoi.default_grid())
    out = cli.cmd_uq(cfg, compare=True, model=model)
    diff = read_field(tmp_path / "compare_mean.csv")["value"]
    assert np.nanmax(diff) <= 1e-10
    assert np.nanmax(read_field(tmp_path / "compare_std.csv")["value"]) <= 1e-10
    assert out["compare"]["max_abs_mean"] <= 1e-10


def test_gsa_map_ranking(tmp_path):
    out = tmp_path / "g"
    assert run(["gsa", "-o", out]) == 0
    doc = json.loads((out / "indices.json").read_text())
    g = {p["parameter"]: p["G_total"] for p in doc["parameters"]}
    assert min(g["R_s"], g["lambda"]) > max(g["L_d"], g["L_q"])
    head = (out / "sobol_lambda.csv").read_text().splitlines()[0]
    assert head == "torque_Nm,omega_rad_s,first,total"
    assert len(doc["parameters"][0]["S_first"]) == 232


def test_gsa_wltp_lambda_first(tmp_path):
    out = tmp_path / "w"
    assert run(["gsa", "-c", CONFIGS / "wltp_study.toml", "-o", out]) == 0
    doc = json.loads((out / "indices.json").read_text())
    assert doc["ranking"][0] == "lambda"
    cost = json.loads((out / "cost.json").read_text())
    assert cost["model_evaluations"] == 350 * 3601
    head = (out / "sobol_R_s.csv").read_text().splitlines()[0]
    assert head == "time_s,torque_Nm,omega_rad_s,first,total"


def test_single_parameter_space(tmp_path):
    out = tmp_path / "one"
    doc = {"output": str(out), "space": {"parameters": [{"name": "lambda"}]}}
    cfg = RunConfig.from_dict(doc)
    res = cli.cmd_gsa(cfg)["result"]
    assert res.generalized_total[0] == pytest.approx(1.0, abs=1e-12)
    assert res.generalized_first[0] == pytest.approx(1.0, abs=1e-12)


def test_reduce_with_explicit_fixed(tmp_path):
    out = tmp_path / "r"
    cfg = RunConfig.from_dict({"output": str(out), "reduction": {"fixed": ["L_d", "L_q"]}})
    rep = cli.cmd_reduce(cfg)["report"]
    doc = json.loads((out / "reduction.json").read_text())
    assert doc["fixed_parameters"] == ["L_d", "L_q"] and doc["threshold"] is None
    assert rep.mae_mean < 1e-4 and rep.mae_std < 1e-4


def test_reduce_selects_by_threshold(tmp_path, capsys):
    assert run(["reduce", "-c", CONFIGS / "map_study.toml", "-o", tmp_path]) == 0
    doc = json.loads((tmp_path / "reduction.json").read_text())
    assert doc["fixed_parameters"] == ["L_d", "L_q"]
    assert "MAE(mean)" in capsys.readouterr().out
