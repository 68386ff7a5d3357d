import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from smab.cli import CURVES_HEADER, main
from smab.config import config_to_dict, expand_lambdas, load_config, parse_config
from smab.core import ConfigurationError, Environment

ROOT = Path(__file__).resolve().parents[1]
REFERENCE_CONFIG = ROOT / "configs" / "reference.yaml"


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def tiny(**extra):
    data = {
        "seed": 3,
        "runs": 4,
        "horizon": 12,
        "initial_budget": 0.5,
        "paths": 8,
        "environment": {"arm_count": 3},
        "policies": [{"kind": "UCB"}, {"kind": "RuinAverse", "lambda": 1.0}],
    }
    data.update(extra)
    return data


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_reference_config_has_twelve_policies():
    config = load_config(REFERENCE_CONFIG)
    assert len(config.policies) == 12
    assert (config.runs, config.horizon, config.initial_budget) == (1000, 500, 0.5)
    assert {p.alpha for p in config.policies} == {10.0}
    assert {p.paths for p in config.policies} == {100}
    ruin_averse = [p for p in config.policies if p.kind.ruin_averse]
    assert sorted({p.lam for p in ruin_averse}) == [0, 1, 10, 100, 1000]


def test_overrides_beat_file():
    config = load_config(REFERENCE_CONFIG, {"runs": 7, "paths": 9, "alpha": 2.0, "seed": 5, "horizon": 30, "initial_budget": 1.0})
    assert (config.runs, config.horizon, config.master_seed, config.initial_budget) == (7, 30, 5, 1.0)
    assert {p.paths for p in config.policies} == {9}
    assert {p.alpha for p in config.policies} == {2.0}


def test_config_echo_round_trips():
    config = load_config(REFERENCE_CONFIG)
    assert parse_config(json.loads(json.dumps(config_to_dict(config)))) == config
    fixed = parse_config(tiny(environment={"arms": [{"mean": 0.1, "std_dev": 0.0}]}))
    assert isinstance(fixed.env_spec, Environment)
    assert parse_config(config_to_dict(fixed)) == fixed


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"runs": 0}, "runs"),
        ({"runs": "many"}, "runs"),
        ({"horizon": 2.5}, "horizon"),
        ({"environment": {"sigma_rate": -1}}, "sigma_rate"),
        ({"environment": {"arms": [{"mean": 0.0, "std_dev": -1}]}}, "environment.arms[0].std_dev"),
        ({"policies": [{"kind": "Greedy"}]}, "policies[0].kind"),
        ({"policies": [{"kind": "RuinAverse", "lambda": -1}]}, "policies[0].lambda"),
        ({"policies": [{"kind": "UCB", "alpha": 0}]}, "policies[0].alpha"),
        ({"policies": [{"kind": "UCB", "gamma": 1}]}, "gamma"),
        ({"policies": []}, "policies"),
        ({"budget": 1}, "budget"),
    ],
)
def test_config_errors_name_the_field(patch, field):
    with pytest.raises(ConfigurationError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(tiny(**patch))


def test_expand_lambdas():
    config = parse_config(tiny())
    swept = expand_lambdas(config, [0, 1, 10, 100, 1000])
    assert [p.lam for p in swept.policies if p.kind.ruin_averse] == [0, 1, 10, 100, 1000]
    assert sum(not p.kind.ruin_averse for p in swept.policies) == 1
    with pytest.raises(ConfigurationError):
        expand_lambdas(config, [])


def test_run_writes_bundle(tmp_path):
    cfg = write_config(tmp_path, tiny())
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    rows = read_rows(out / "curves.csv")
    assert list(rows[0].keys()) == CURVES_HEADER
    for policy in ("UCB", "RuinAverse"):
        stages = [int(r["stage"]) for r in rows if r["policy"] == policy]
        assert stages == list(range(1, 13))
    summary = read_rows(out / "summary.csv")
    assert [r["policy"] for r in summary] == ["UCB", "RuinAverse"]
    assert summary[0]["lambda"] == "" and float(summary[1]["lambda"]) == 1.0
    for s in summary:
        last = [r for r in rows if r["policy"] == s["policy"]][-1]
        assert s["survival_frequency"] == last["survival_frequency"]
        assert s["average_budget"] == last["average_budget"]
    structured = json.loads((out / "summary.json").read_text())
    assert structured[1]["lambda"] == 1.0
    assert "Survival Frequency" in (out / "summary.txt").read_text()
    meta = json.loads((out / "metadata.json").read_text())
    assert parse_config(meta["config"]) == load_config(cfg)
    assert meta["seed"] == 3 and meta["wall_clock_seconds"] >= 0


def test_single_positive_arm_three_stages(tmp_path):
    cfg = write_config(
        tmp_path,
        tiny(runs=1, horizon=3, environment={"arms": [{"mean": 0.2, "std_dev": 0.0}]}, policies=["UCB"]),
    )
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "curves.csv")
    assert len(rows) == 3
    assert all(float(r["survival_frequency"]) == 1.0 for r in rows)


def test_run_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, tiny())
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "2"])
    for name in ("curves.csv", "summary.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_single_lambda_matches_run(tmp_path):
    cfg = write_config(tmp_path, tiny(policies=[{"kind": "RuinAverse", "lambda": 0}]))
    other = write_config(tmp_path, tiny(policies=[{"kind": "RuinAverse", "lambda": 5}]), "other.yaml")
    main(["run", str(cfg), "--out", str(tmp_path / "run")])
    main(["sweep", str(other), "--lambdas", "0", "--out", str(tmp_path / "sweep")])
    assert (tmp_path / "run" / "summary.csv").read_bytes() == (tmp_path / "sweep" / "summary.csv").read_bytes()


def test_sweep_expands_ruin_averse(tmp_path):
    cfg = write_config(tmp_path, tiny(runs=2, horizon=5))
    assert main(["sweep", str(cfg), "--lambdas", "0,1,10,100,1000", "--out", str(tmp_path / "s")]) == 0
    summary = read_rows(tmp_path / "s" / "summary.csv")
    assert sum(r["policy"] == "RuinAverse" for r in summary) == 5
    assert sum(r["policy"] == "UCB" for r in summary) == 1


def test_sweep_empty_lambdas(tmp_path, capsys):
    cfg = write_config(tmp_path, tiny())
    assert main(["sweep", str(cfg), "--lambdas", "", "--out", str(tmp_path / "s")]) == 2
    assert "lambdas" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, tiny(horizon=-1))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "horizon" in capsys.readouterr().err


def test_unwritable_out_dir(tmp_path, capsys):
    cfg = write_config(tmp_path, tiny(runs=1, horizon=2))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", str(cfg), "--out", str(blocker / "sub")]) == 1
    assert "error" in capsys.readouterr().err


def test_smoke_preset_with_flag_override():
    from smab.cli import _overrides, build_parser

    args = build_parser().parse_args(["run", str(REFERENCE_CONFIG), "--smoke", "--runs", "3"])
    assert _overrides(args) == {"runs": 3, "paths": 50, "horizon": 500}


def test_console_entry_point(tmp_path):
    cfg = write_config(tmp_path, tiny(runs=1, horizon=3))
    proc = subprocess.run(
        [sys.executable, "-m", "smab.cli", "run", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "UCB" in proc.stdout
