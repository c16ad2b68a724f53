import csv
import json

import numpy as np
import pytest

from vertisched.cli import main
from vertisched.config import AppConfig, load_config
from vertisched.harness import (
    aggregate,
    evaluate_policy,
    make_policy,
    run_comparison,
    write_episode_rows,
)
from vertisched.learning.agents import GrlAgent
from vertisched.simulator import EpisodeSummary


def tiny_config():
    cfg = AppConfig()
    cfg.experiment.eval_episodes = 2
    cfg.experiment.episodes = 1
    return cfg


# ----------------------------------------------------------------------
# harness
# ----------------------------------------------------------------------

def test_make_policy_names():
    assert make_policy("random") is not None
    assert make_policy("fcfs") is not None
    with pytest.raises(ValueError):
        make_policy("grl")          # learned policy without an agent
    with pytest.raises(ValueError):
        make_policy("mystery")


def test_evaluate_policy_is_deterministic():
    cfg = tiny_config()
    seeds = cfg.experiment.eval_seeds()
    a = evaluate_policy("fcfs", cfg, seeds)
    b = evaluate_policy("fcfs", cfg, seeds)
    assert a == b
    assert [r.seed for r in a] == seeds


def test_evaluate_policy_seed_sensitivity():
    cfg = tiny_config()
    a = evaluate_policy("random", cfg, [100, 101])
    b = evaluate_policy("random", cfg, [200, 201])
    assert a != b


def test_aggregate_matches_numpy():
    cfg = tiny_config()
    rows = evaluate_policy("random", cfg, [0, 1, 2])
    report = aggregate(rows)
    rewards = np.array([r.total_reward for r in rows])
    assert report["total_reward"]["mean"] == pytest.approx(rewards.mean())
    assert report["total_reward"]["std"] == pytest.approx(rewards.std())
    assert report["episodes"] == 3


def test_write_episode_rows_round_trips(tmp_path):
    cfg = tiny_config()
    rows = evaluate_policy("fcfs", cfg, [5])
    path = tmp_path / "rows.csv"
    write_episode_rows(rows, path)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert len(got) == 1
    assert got[0]["seed"] == "5"
    assert float(got[0]["total_reward"]) == pytest.approx(rows[0].total_reward)
    assert list(got[0]) == list(EpisodeSummary.FIELDS)


def test_run_comparison_writes_reports(tmp_path):
    cfg = tiny_config()
    agent = GrlAgent(seed=0, hidden_dim=16)
    report = run_comparison(cfg, {"grl": agent}, tmp_path)
    assert set(report) == {"random", "fcfs", "grl"}   # no mlp checkpoint given
    on_disk = json.loads((tmp_path / "comparison.json").read_text())
    assert on_disk.keys() == report.keys()
    assert (tmp_path / "eval_random.csv").exists()
    assert (tmp_path / "eval_grl.csv").exists()


# ----------------------------------------------------------------------
# CLI
# ----------------------------------------------------------------------

def test_cli_conflict_check(capsys):
    rc = main(["conflict-check", "--p1", "0,0", "--v1", "10,0",
               "--p2", "100,0", "--v2=-10,0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "t_min=5.000000" in out
    assert "d_min=0.000000" in out
    assert "conflict=true" in out


def test_cli_conflict_check_from_file(tmp_path, capsys):
    payload = {"p1": [0, 0], "v1": [0, 0], "p2": [10, 0], "v2": [0, 0]}
    path = tmp_path / "query.json"
    path.write_text(json.dumps(payload))
    assert main(["conflict-check", "--file", str(path)]) == 0
    assert "conflict=false" in capsys.readouterr().out


def test_cli_conflict_check_missing_args_fails(capsys):
    rc = main(["conflict-check", "--p1", "0,0"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "runs"
    rc = main(["simulate", "--policy", "fcfs", "--seed", "3",
               "--out", str(out)])
    assert rc == 0
    assert (out / "episode_3.log").exists()
    summary = json.loads((out / "summary_3.json").read_text())
    assert summary["steps"] == 1440
    printed = json.loads(capsys.readouterr().out)
    assert printed == summary


def test_cli_evaluate_requires_checkpoint(capsys):
    rc = main(["evaluate", "--policy", "grl"])
    assert rc == 1
    assert "requires --checkpoint" in capsys.readouterr().err


def test_cli_default_config_round_trips(tmp_path, capsys):
    assert main(["default-config"]) == 0
    text = capsys.readouterr().out
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    assert load_config(path) == AppConfig()


def test_cli_evaluate_with_config_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[experiment]\neval_episodes = 2\neval_seed_start = 77\n")
    out = tmp_path / "runs"
    rc = main(["--config", str(cfg), "evaluate", "--policy", "random",
               "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "eval_random.json").read_text())
    assert report["episodes"] == 2
    with open(out / "eval_random.csv") as fh:
        seeds = [row["seed"] for row in csv.DictReader(fh)]
    assert seeds == ["77", "78"]
