"""Command-line entry point: train, evaluate, compare, ablate-safety,
conflict-check and simulate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AppConfig, default_config_text, load_config
from .conflict import ConflictQuery, min_separation
from .harness import (
    evaluate_policy,
    aggregate,
    run_comparison,
    run_safety_ablation,
    train_agent,
    write_episode_rows,
    write_report,
)
from .simulator import Simulator, write_event_log


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vertisched",
        description="Vertiport schedule-management simulator and trainer")
    parser.add_argument("--config", help="path to an INI config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a learned policy")
    p.add_argument("--policy", choices=("grl", "mlp-rl"), default="grl")
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--out", default="runs", help="output directory")

    p = sub.add_parser("evaluate", help="evaluate one policy")
    p.add_argument("--policy", choices=("random", "fcfs", "grl", "mlp-rl"),
                   required=True)
    p.add_argument("--checkpoint", help="checkpoint for learned policies")
    p.add_argument("--episodes", type=int, help="evaluation episodes")
    p.add_argument("--seed", type=int, help="first evaluation seed")
    p.add_argument("--out", default="runs")

    p = sub.add_parser("compare", help="evaluate all policies side by side")
    p.add_argument("--grl-checkpoint")
    p.add_argument("--mlp-checkpoint")
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="runs")

    p = sub.add_parser("ablate-safety", help="train and evaluate with and "
                                             "without the safety weight")
    p.add_argument("--episodes", type=int, help="training episodes per agent")
    p.add_argument("--eval-episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="runs")

    p = sub.add_parser("conflict-check", help="closest-point-of-approach query")
    p.add_argument("--p1", type=_parse_pair, help="position of vehicle 1: x,y")
    p.add_argument("--v1", type=_parse_pair, help="velocity of vehicle 1: x,y")
    p.add_argument("--p2", type=_parse_pair)
    p.add_argument("--v2", type=_parse_pair)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--file", help="JSON file with p1/v1/p2/v2 arrays")

    p = sub.add_parser("simulate", help="run one logged episode")
    p.add_argument("--policy", choices=("random", "fcfs", "grl", "mlp-rl"),
                   default="random")
    p.add_argument("--checkpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs")

    p = sub.add_parser("default-config", help="print the built-in defaults")
    return parser


def _load_app_config(args) -> AppConfig:
    config = load_config(args.config) if args.config else AppConfig()
    if getattr(args, "episodes", None) is not None:
        if args.command in ("evaluate", "compare"):
            config.experiment.eval_episodes = args.episodes
        else:
            config.experiment.episodes = args.episodes
    if getattr(args, "eval_episodes", None) is not None:
        config.experiment.eval_episodes = args.eval_episodes
    if getattr(args, "seed", None) is not None:
        if args.command in ("evaluate", "compare"):
            config.experiment.eval_seed_start = args.seed
        else:
            config.experiment.train_seed = args.seed
    return config


def _load_agent(path: str | None, needed_for: str):
    if path is None:
        raise ValueError(f"policy {needed_for!r} requires --checkpoint")
    from .learning.agents import PpoAgent
    return PpoAgent.load(path)


def _progress(row: dict) -> None:
    print(f"episode {row['episode']:5d}  reward {row['reward']:10.1f}  "
          f"policy_loss {row['policy_loss']:+.4f}  entropy {row['entropy']:.3f}",
          flush=True)


def run(args) -> int:
    if args.command == "default-config":
        print(default_config_text())
        return 0

    if args.command == "conflict-check":
        if args.file:
            data = json.loads(Path(args.file).read_text())
            q = ConflictQuery(p1=tuple(data["p1"]), v1=tuple(data["v1"]),
                              p2=tuple(data["p2"]), v2=tuple(data["v2"]))
        else:
            missing = [n for n in ("p1", "v1", "p2", "v2")
                       if getattr(args, n) is None]
            if missing:
                raise ValueError(f"missing arguments: {', '.join(missing)}")
            q = ConflictQuery(p1=args.p1, v1=args.v1, p2=args.p2, v2=args.v2)
        res = min_separation(q, horizon=args.horizon, threshold=args.threshold)
        print(f"t_min={res.t_min:.6f} d_min={res.d_min:.6f} "
              f"conflict={str(res.conflict).lower()}")
        return 0

    config = _load_app_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "train":
        agent, ckpt = train_agent(args.policy, config, out_dir,
                                  resume=args.resume, progress=_progress)
        print(f"checkpoint written to {ckpt}")
        return 0

    if args.command == "evaluate":
        agent = None
        if args.policy in ("grl", "mlp-rl"):
            agent = _load_agent(args.checkpoint, args.policy)
        rows = evaluate_policy(args.policy, config,
                               config.experiment.eval_seeds(), agent=agent)
        tag = args.policy.replace("-", "_")
        write_episode_rows(rows, out_dir / f"eval_{tag}.csv")
        report = aggregate(rows)
        write_report(report, out_dir / f"eval_{tag}.json")
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0

    if args.command == "compare":
        agents = {}
        if args.grl_checkpoint:
            agents["grl"] = _load_agent(args.grl_checkpoint, "grl")
        if args.mlp_checkpoint:
            agents["mlp-rl"] = _load_agent(args.mlp_checkpoint, "mlp-rl")
        report = run_comparison(config, agents, out_dir)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0

    if args.command == "ablate-safety":
        report = run_safety_ablation(config, out_dir, progress=_progress)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0

    if args.command == "simulate":
        agent = None
        if args.policy in ("grl", "mlp-rl"):
            agent = _load_agent(args.checkpoint, args.policy)
        from .harness import make_policy
        sim = Simulator(layout=config.layout, sim=config.sim,
                        weights=config.rewards)
        policy = make_policy(args.policy, seed=args.seed, agent=agent)
        summary = _run_logged_episode(sim, policy, args.seed, out_dir)
        print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
        return 0

    raise ValueError(f"unhandled command {args.command!r}")


def _run_logged_episode(sim: Simulator, policy, seed: int, out_dir: Path):
    from .rewards import total_reward

    state = sim.reset(seed)
    cumulative = 0.0
    decision_steps = 0
    battery_sum = 0.0
    for _ in range(sim.sim.episode_steps):
        vid = sim.select_vehicle(state)
        if vid is None:
            sim.noop_step(state)
        else:
            mask = sim.action_mask(state, vid)
            _, out = sim.step(state, vid, policy(state, vid, mask))
            cumulative += total_reward(out, sim.weights).total
            decision_steps += 1
        battery_sum += sum(v.battery for v in state.vehicles.nodes) / 4.0
    write_event_log(state, out_dir / f"episode_{seed}.log")
    counts = sim._count_events(state)
    from .simulator import EpisodeSummary
    summary = EpisodeSummary(
        seed=seed, steps=state.clock, decision_steps=decision_steps,
        total_reward=cumulative, good_takeoffs=counts["good_takeoffs"],
        bad_takeoffs=counts["bad_takeoffs"], good_landings=counts["good_landings"],
        bad_landings=counts["bad_landings"], collisions=counts["collisions"],
        delay_hours=state.total_delay_minutes / 60.0,
        mean_battery=battery_sum / sim.sim.episode_steps)
    with open(out_dir / f"summary_{seed}.json", "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except Exception as exc:  # CLI boundary: fail with a message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
