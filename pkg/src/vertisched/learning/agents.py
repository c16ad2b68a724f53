"""Learned policies with an estimator-style API: fit / predict / get_params.

`GrlAgent` uses the two-GCN extractor, `MlpAgent` the flat extractor; both
train with PPO against the simulator and act through the feasibility mask.
Single-worker training and greedy evaluation are bit-deterministic.
"""

from __future__ import annotations

import csv
from pathlib import Path

import torch

from ..config import LayoutConfig, PpoConfig, RewardWeights, SimConfig
from ..domain import Action, NUM_VEHICLES, VehicleGraph, VertiportGraph, build_canonical_layout
from ..rewards import total_reward
from ..simulator import Simulator
from .nets import FlatActorCritic, GraphActorCritic, build_observation, normalized_adjacency
from .ppo import RolloutBuffer, ppo_update

# tiny networks gain nothing from intra-op threads; single-threaded execution
# keeps rollouts and evaluation bit-reproducible
torch.set_num_threads(1)

CHECKPOINT_VERSION = 1


class PpoAgent:
    """Shared PPO machinery for both feature extractors."""

    kind = "base"

    def __init__(self, hidden_dim: int = 64, clip_ratio: float = 0.2,
                 discount: float = 0.99, gae_lambda: float = 0.95,
                 epochs: int = 4, minibatch_size: int = 256,
                 learning_rate: float = 1e-5, entropy_coef: float = 0.01,
                 value_coef: float = 0.5, seed: int = 0):
        self.hidden_dim = hidden_dim
        self.clip_ratio = clip_ratio
        self.discount = discount
        self.gae_lambda = gae_lambda
        self.epochs = epochs
        self.minibatch_size = minibatch_size
        self.learning_rate = learning_rate
        self.entropy_coef = entropy_coef
        self.value_coef = value_coef
        self.seed = seed
        self.episodes_trained = 0
        self.history: list[dict] = []

        torch.manual_seed(seed)
        layout = build_canonical_layout(LayoutConfig())
        self.net = self._build_net(layout)
        self.optimizer = torch.optim.Adam(self.net.parameters(), lr=learning_rate)
        self.generator = torch.Generator().manual_seed(seed)
        self.vp_adj = normalized_adjacency(layout.adjacency)
        self.ev_adj = normalized_adjacency(
            VehicleGraph([_dummy_vehicle(i) for i in range(NUM_VEHICLES)]).adjacency)

    def _build_net(self, layout: VertiportGraph):
        raise NotImplementedError

    # ------------------------------------------------------------------
    # estimator-style parameter access
    # ------------------------------------------------------------------

    PARAM_NAMES = ("hidden_dim", "clip_ratio", "discount", "gae_lambda",
                   "epochs", "minibatch_size", "learning_rate",
                   "entropy_coef", "value_coef", "seed")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self.PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def ppo_config(self) -> PpoConfig:
        return PpoConfig(clip_ratio=self.clip_ratio, discount=self.discount,
                         gae_lambda=self.gae_lambda, epochs=self.epochs,
                         minibatch_size=self.minibatch_size,
                         learning_rate=self.learning_rate,
                         entropy_coef=self.entropy_coef,
                         value_coef=self.value_coef,
                         hidden_dim=self.hidden_dim)

    # ------------------------------------------------------------------
    # acting
    # ------------------------------------------------------------------

    def action_distribution(self, state, vehicle_id: int, mask) -> torch.Tensor:
        vp_feat, vp_adj, ev_feat, ev_adj = build_observation(state)
        mask_t = torch.tensor(mask, dtype=torch.bool)
        with torch.no_grad():
            log_probs, _ = self.net(vp_feat, vp_adj, ev_feat, ev_adj,
                                    torch.tensor(vehicle_id), mask_t)
        return log_probs

    def predict(self, state, vehicle_id: int, mask, greedy: bool = True) -> Action:
        log_probs = self.action_distribution(state, vehicle_id, mask)
        if greedy:
            return Action(int(log_probs.argmax().item()))
        probs = torch.exp(log_probs)
        idx = torch.multinomial(probs, 1, generator=self.generator)
        return Action(int(idx.item()))

    def as_policy(self, greedy: bool = True):
        def policy(state, vehicle_id, mask):
            return self.predict(state, vehicle_id, mask, greedy=greedy)
        return policy

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------

    def fit(self, episodes: int, simulator: Simulator | None = None,
            progress=None):
        """Train for `episodes` full-day episodes, one PPO update per episode."""
        sim = simulator or Simulator()
        config = self.ppo_config()
        for _ in range(episodes):
            episode_seed = self.seed * 1_000_003 + self.episodes_trained
            buffer, episode_reward = self._collect_episode(sim, episode_seed)
            stats = ppo_update(self.net, self.optimizer, self.vp_adj, self.ev_adj,
                               buffer, config, self.generator)
            self.episodes_trained += 1
            row = {"episode": self.episodes_trained, "reward": episode_reward,
                   **stats}
            self.history.append(row)
            if progress is not None:
                progress(row)
        return self

    def _collect_episode(self, sim: Simulator, seed: int):
        state = sim.reset(seed)
        buffer = RolloutBuffer()
        episode_reward = 0.0
        for _ in range(sim.sim.episode_steps):
            vid = sim.select_vehicle(state)
            if vid is None:
                sim.noop_step(state)
                continue
            mask = sim.action_mask(state, vid)
            vp_feat, vp_adj, ev_feat, ev_adj = build_observation(state)
            mask_t = torch.tensor(mask, dtype=torch.bool)
            with torch.no_grad():
                log_probs, value = self.net(vp_feat, vp_adj, ev_feat, ev_adj,
                                            torch.tensor(vid), mask_t)
                probs = torch.exp(log_probs)
                action = int(torch.multinomial(probs, 1,
                                               generator=self.generator).item())
            _, out = sim.step(state, vid, Action(action))
            reward = total_reward(out, sim.weights).total
            episode_reward += reward
            buffer.add(vp_feat, ev_feat, vid, mask_t, action,
                       float(log_probs[action].item()), float(value.item()),
                       reward, False)
        if len(buffer) > 0:
            buffer.dones[-1] = True
        return buffer, episode_reward

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        torch.save({
            "format_version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "params": self.get_params(),
            "episodes_trained": self.episodes_trained,
            "history": self.history,
            "state_dict": self.net.state_dict(),
            "optimizer_state": self.optimizer.state_dict(),
            "generator_state": self.generator.get_state(),
        }, path)

    @classmethod
    def load(cls, path: str | Path) -> "PpoAgent":
        payload = torch.load(path, weights_only=False)
        if payload.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"incompatible checkpoint version {payload.get('format_version')}")
        agent_cls = {"grl": GrlAgent, "mlp": MlpAgent}.get(payload["kind"])
        if agent_cls is None:
            raise ValueError(f"unknown agent kind {payload['kind']!r}")
        agent = agent_cls(**payload["params"])
        agent.net.load_state_dict(payload["state_dict"])
        agent.optimizer.load_state_dict(payload["optimizer_state"])
        agent.generator.set_state(payload["generator_state"])
        agent.episodes_trained = payload["episodes_trained"]
        agent.history = payload["history"]
        return agent

    def write_history(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["episode", "reward",
                                                    "policy_loss", "value_loss",
                                                    "entropy", "clip_fraction"])
            writer.writeheader()
            writer.writerows(self.history)


class GrlAgent(PpoAgent):
    """PPO over the two-GCN graph extractor."""

    kind = "grl"

    def _build_net(self, layout: VertiportGraph):
        return GraphActorCritic(VertiportGraph.FEATURE_DIM, VehicleGraph.FEATURE_DIM,
                                hidden_dim=self.hidden_dim)


class MlpAgent(PpoAgent):
    """PPO over the flat concatenated-feature extractor (the non-graph baseline)."""

    kind = "mlp"

    def _build_net(self, layout: VertiportGraph):
        return FlatActorCritic(len(layout.nodes), VertiportGraph.FEATURE_DIM,
                               VehicleGraph.FEATURE_DIM, hidden_dim=self.hidden_dim)


def _dummy_vehicle(i: int):
    from ..domain import StatusKind, VehicleNode
    return VehicleNode(i, StatusKind.GROUNDED)
