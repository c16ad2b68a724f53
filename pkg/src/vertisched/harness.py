"""Experiment harness: evaluation runs, baseline comparisons, the safety
ablation, and the CSV/JSON report formats used by the CLI."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

from .baselines import FcfsPolicy, RandomPolicy
from .config import AppConfig, RewardWeights
from .simulator import EpisodeSummary, Simulator

POLICY_NAMES = ("random", "fcfs", "grl", "mlp-rl")

METRICS = ("total_reward", "delay_hours", "collisions",
           "good_takeoffs", "bad_takeoffs", "good_landings", "bad_landings",
           "mean_battery")


def make_policy(name: str, seed: int = 0, agent=None):
    """Fresh policy instance for one evaluation episode."""
    if name == "random":
        return RandomPolicy(seed)
    if name == "fcfs":
        return FcfsPolicy()
    if name in ("grl", "mlp-rl"):
        if agent is None:
            raise ValueError(f"policy {name!r} needs a trained agent checkpoint")
        return agent.as_policy(greedy=True)
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")


def evaluate_policy(name: str, config: AppConfig, seeds: list[int],
                    agent=None) -> list[EpisodeSummary]:
    """Run one episode per seed and return the per-episode scorecards."""
    sim = Simulator(layout=config.layout, sim=config.sim, weights=config.rewards)
    rows = []
    for seed in seeds:
        policy = make_policy(name, seed=seed, agent=agent)
        rows.append(sim.run_episode(policy, seed))
    return rows


def aggregate(rows: list[EpisodeSummary]) -> dict:
    """Mean and standard deviation of every scorecard metric."""
    out = {}
    n = len(rows)
    for metric in METRICS:
        values = [float(getattr(r, metric)) for r in rows]
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / n
        out[metric] = {"mean": mean, "std": math.sqrt(var)}
    out["episodes"] = n
    return out


def write_episode_rows(rows: list[EpisodeSummary], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(EpisodeSummary.FIELDS))
        writer.writeheader()
        writer.writerows(r.to_dict() for r in rows)


def write_report(report: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_comparison(config: AppConfig, agents: dict, out_dir: str | Path) -> dict:
    """Evaluate every policy over the configured seeds; one report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = config.experiment.eval_seeds()
    report = {}
    for name in POLICY_NAMES:
        agent = agents.get(name)
        if name in ("grl", "mlp-rl") and agent is None:
            continue
        rows = evaluate_policy(name, config, seeds, agent=agent)
        write_episode_rows(rows, out_dir / f"eval_{name.replace('-', '_')}.csv")
        report[name] = aggregate(rows)
    write_report(report, out_dir / "comparison.json")
    return report


def run_safety_ablation(config: AppConfig, out_dir: str | Path,
                        safety_weights=(0.0, 2.2), progress=None) -> dict:
    """Train one agent per safety weight, evaluate both, emit a paired report."""
    from .learning.agents import GrlAgent

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = config.experiment.eval_seeds()
    report = {}
    for w5 in safety_weights:
        weights = dataclasses.replace(config.rewards, w5=w5)
        sim = Simulator(layout=config.layout, sim=config.sim, weights=weights)
        agent = GrlAgent(seed=config.experiment.train_seed,
                         **_ppo_kwargs(config))
        agent.fit(config.experiment.episodes, simulator=sim, progress=progress)
        tag = f"w5_{w5:g}".replace(".", "p")
        agent.save(out_dir / f"grl_{tag}.pt")
        agent.write_history(out_dir / f"curve_{tag}.csv")
        eval_config = dataclasses.replace(config, rewards=weights)
        rows = evaluate_policy("grl", eval_config, seeds, agent=agent)
        write_episode_rows(rows, out_dir / f"eval_{tag}.csv")
        report[f"w5={w5:g}"] = aggregate(rows)
    write_report(report, out_dir / "safety_ablation.json")
    return report


def _ppo_kwargs(config: AppConfig) -> dict:
    ppo = config.ppo
    return {"hidden_dim": ppo.hidden_dim, "clip_ratio": ppo.clip_ratio,
            "discount": ppo.discount, "gae_lambda": ppo.gae_lambda,
            "epochs": ppo.epochs, "minibatch_size": ppo.minibatch_size,
            "learning_rate": ppo.learning_rate,
            "entropy_coef": ppo.entropy_coef, "value_coef": ppo.value_coef}


def train_agent(kind: str, config: AppConfig, out_dir: str | Path,
                resume: str | None = None, progress=None):
    """Train (or resume) one learned agent; writes checkpoint and curve CSV."""
    from .learning.agents import GrlAgent, MlpAgent, PpoAgent

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if resume:
        agent = PpoAgent.load(resume)
    elif kind == "grl":
        agent = GrlAgent(seed=config.experiment.train_seed, **_ppo_kwargs(config))
    elif kind == "mlp-rl":
        agent = MlpAgent(seed=config.experiment.train_seed, **_ppo_kwargs(config))
    else:
        raise ValueError(f"unknown trainable policy {kind!r}")
    sim = Simulator(layout=config.layout, sim=config.sim, weights=config.rewards)
    agent.fit(config.experiment.episodes, simulator=sim, progress=progress)
    tag = agent.kind
    ckpt = out_dir / f"{tag}_ep{agent.episodes_trained}.pt"
    agent.save(ckpt)
    agent.write_history(out_dir / f"curve_{tag}.csv")
    return agent, ckpt
