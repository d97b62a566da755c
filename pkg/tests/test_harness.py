import json
import os
import subprocess
import sys

import numpy as np
import pytest

from regional_bandits.analysis import regret_summary
from regional_bandits.cli import main
from regional_bandits.environment import Environment
from regional_bandits.harness import (
    OUTPUT_ENV_VAR,
    PLOT_HEADER,
    SUMMARY_HEADER,
    TRACE_HEADER,
    ValidationError,
    config_from_dict,
    emit_plot_data,
    parse_config,
    preset,
    presets,
    run,
    write_outputs,
)
from regional_bandits.reward_model import ConfigError

PRESET_NAMES = {
    "basic-stationary", "basic-nonstationary", "global-case",
    "classic-case", "pricing-stationary", "pricing-nonstationary",
}


def small(name="basic-stationary", **kw):
    kw.setdefault("horizon", 100)
    kw.setdefault("replications", 2)
    return preset(name, **kw)


def test_preset_names():
    assert set(presets()) == PRESET_NAMES


def test_preset_optimal_arms():
    assert Environment(preset("pricing-stationary").instance).oracle_best(1)[:2] == (0, 1)
    assert Environment(preset("basic-stationary").instance).oracle_best(1)[:2] == (3, 3)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("figure-9")


@pytest.mark.parametrize("name", sorted(PRESET_NAMES))
def test_config_round_trip(name):
    cfg = preset(name)
    again = parse_config(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()
    assert again.instance == cfg.instance


def test_labels_include_window():
    cfg = preset("basic-nonstationary")
    labels = [cfg.label(s) for s in cfg.policies]
    assert "sw-ucb-g(tau_w=200)" in labels and len(set(labels)) == 6


def test_auto_window():
    d = preset("basic-nonstationary").to_dict()
    d["window"] = "auto"
    for p in d["policies"]:
        p["params"].pop("window")
    d["policies"] = d["policies"][:1]
    cfg = config_from_dict(d)
    assert cfg.resolved_window(cfg.policies[0]) == 32


def _bad(mutate):
    d = json.loads(preset("basic-stationary").to_json())
    mutate(d)
    return json.dumps(d, indent=2)


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d["policies"][0]["params"].update(alphas=[4, 5, 5, 5]), "policies[0].params.alphas"),
    (lambda d: d["instance"]["theta_true"].__setitem__(0, 1.5), "instance.theta_true"),
    (lambda d: d["policies"].append({"name": "exp3"}), "policies[2].name"),
    (lambda d: d.update(horizon=0), "horizon"),
    (lambda d: d["instance"]["groups"][1]["arms"][2]["holder"].update(d2=0.01),
     "instance.groups[1].arms[2].holder"),
    (lambda d: d["policies"][1]["params"].update(beta=1), "policies[1].params"),
    (lambda d: d["policies"].append({"name": "ucb1"}), "policies[2]"),
])
def test_validation_errors_carry_path_and_line(mutate, where):
    text = _bad(mutate)
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    err = info.value
    assert str(err).startswith(f"line {err.line}: {where}:")
    assert err.line is not None and 1 <= err.line <= text.count("\n") + 1


def test_validation_line_points_at_key():
    text = _bad(lambda d: d.update(replications=-1))
    with pytest.raises(ValidationError) as info:
        parse_config(text)
    assert '"replications"' in text.splitlines()[info.value.line - 1]


def test_malformed_json():
    with pytest.raises(ValidationError) as info:
        parse_config('{\n  "horizon": 10,\n  oops\n}')
    assert info.value.line == 3


def test_pricing_domain_rejected_at_load():
    def mutate(d):
        d["instance"]["groups"][0]["arms"][0] = {"kind": "pricing", "params": {"p": 1.5},
                                                 "holder": d["instance"]["groups"][0]["arms"][0]["holder"]}
    with pytest.raises(ValidationError, match="theta"):
        parse_config(_bad(mutate))


def test_trace_csv_shape(tmp_path):
    cfg = small(replications=3, horizon=50)
    out = write_outputs(run(cfg, workers=1), tmp_path)
    lines = (out / "traces.csv").read_text().splitlines()
    assert lines[0] == TRACE_HEADER
    assert len(lines) == 1 + 2 * 3 * 50
    first = lines[1].split(",")
    assert first[:3] == ["ucb-g", "0", "1"]
    assert (out / "summary.csv").read_text().splitlines()[0] == SUMMARY_HEADER
    assert json.loads((out / "config.json").read_text())["horizon"] == 50


def test_thinning(tmp_path):
    cfg = small(horizon=1500, replications=1, thin=True)
    out = write_outputs(run(cfg, workers=1), tmp_path)
    ts = [int(l.split(",")[2]) for l in (out / "traces.csv").read_text().splitlines()[1:]
          if l.startswith("ucb1,")]
    assert ts[:1000] == list(range(1, 1001))
    assert ts[1000:] == list(range(1010, 1501, 10))


def test_regret_columns_consistent():
    res = run(small(horizon=300), workers=1)
    for traces in res.traces.values():
        for tr in traces:
            assert np.all(tr.inst_regret >= 0)
            assert np.all(np.diff(tr.cum_regret) >= 0)


def test_emit_plot_data_examples(tmp_path):
    res = run(small(horizon=10, replications=2), workers=1)
    text = emit_plot_data(res.summaries)
    lines = text.splitlines()
    assert lines[0] == PLOT_HEADER and len(lines) == 21
    with_bound = emit_plot_data(res.summaries, bounds={"thm1-bound": ([10], [5.0])})
    assert with_bound.splitlines()[-1] == "thm1-bound,10,5,0"
    path = tmp_path / "empty.csv"
    emit_plot_data({}, path)
    assert path.read_text() == PLOT_HEADER + "\n"
    with pytest.raises(ValueError):
        emit_plot_data({}, quantity="log")


def test_per_unit_plot_values():
    res = run(small(horizon=20, replications=3), workers=1)
    s = res.summaries["ucb1"]
    row = [l for l in emit_plot_data(res.summaries, quantity="per-unit").splitlines()
           if l.startswith("ucb1,20,")][0]
    assert float(row.split(",")[2]) == s.mean_unit[-1]


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_byte_identical_reruns(tmp_path):
    cfg = small(horizon=100, replications=1, base_seed=7)
    a = write_outputs(run(cfg, workers=1), tmp_path / "a")
    b = write_outputs(run(cfg, workers=1), tmp_path / "b")
    assert _files(a) == _files(b)


def test_concurrency_does_not_change_output(tmp_path):
    cfg = small("basic-nonstationary", horizon=400, replications=3)
    a = write_outputs(run(cfg, workers=1), tmp_path / "serial")
    b = write_outputs(run(cfg, workers=3), tmp_path / "pool")
    assert _files(a) == _files(b)


def test_seed_changes_output():
    a = run(small(base_seed=0), workers=1).traces["ucb-g"][0]
    b = run(small(base_seed=1), workers=1).traces["ucb-g"][0]
    assert not np.array_equal(a.rewards, b.rewards)


def test_policy_filter():
    res = run(small(), workers=1, policies=["ucb1"])
    assert list(res.traces) == ["ucb1"]


def test_oracle_single_group_zero_regret():
    cfg = preset("global-case", horizon=500, replications=2, policies=[{"name": "oracle"}])
    res = run(cfg, workers=1)
    for tr in res.traces["oracle"]:
        assert not tr.inst_regret.any()
    assert regret_summary(res.traces["oracle"]).mean_cum[-1] == 0.0


def test_cli_preset_and_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_ENV_VAR, str(tmp_path / "env"))
    assert main(["preset", "classic-case", "--horizon", "50", "--reps", "2", "--workers", "1"]) == 0
    assert (tmp_path / "env" / "traces.csv").exists()
    assert main(["preset", "classic-case", "--horizon", "50", "--reps", "1", "--workers", "1",
                 "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "summary.csv").exists()
    assert "ucb-g" in capsys.readouterr().out


def test_cli_run_validate_and_errors(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(small(horizon=30, replications=1).to_json())
    assert main(["validate", str(cfg_path)]) == 0
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0

    bad = tmp_path / "bad.json"
    bad.write_text(_bad(lambda d: d["instance"]["theta_true"].__setitem__(2, -0.5)))
    assert main(["validate", str(bad)]) == 2
    assert "line " in capsys.readouterr().err

    assert main(["validate", str(tmp_path / "missing.json")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(cfg_path), "--out", str(blocker / "sub"), "--workers", "1"]) == 3


def test_cli_bounds_and_regions(tmp_path, capsys):
    out = tmp_path / "bounds.csv"
    assert main(["bounds", "pricing-stationary", "--horizons", "100", "1000", "--out", str(out)]) == 0
    series = {l.split(",")[0] for l in out.read_text().splitlines()[1:]}
    assert series == {"thm1-bound", "thm2-shape", "thm4-lower"}
    assert main(["regions", "global-case", "--grid-step", "1e-3"]) == 0
    text = capsys.readouterr().out
    assert "arm 3: [0.800000, 1.000000]" in text


def test_cli_preset_list_and_dump(capsys):
    assert main(["preset", "list"]) == 0
    assert set(capsys.readouterr().out.split()) == PRESET_NAMES
    assert main(["preset", "global-case", "--dump", "--horizon", "77"]) == 0
    assert json.loads(capsys.readouterr().out)["horizon"] == 77


def test_module_entry_point(tmp_path):
    env = dict(os.environ, **{OUTPUT_ENV_VAR: str(tmp_path)})
    proc = subprocess.run([sys.executable, "-m", "regional_bandits", "validate", "basic-stationary"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "OK" in proc.stdout
