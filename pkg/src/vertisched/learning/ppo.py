"""Clipped-surrogate PPO: rollout buffer, GAE, and the update step."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..config import PpoConfig


@dataclass
class RolloutBuffer:
    """Decision-step transitions collected from full-day episodes."""

    vp_feats: list = field(default_factory=list)
    ev_feats: list = field(default_factory=list)
    vehicle_ids: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)

    def add(self, vp_feat, ev_feat, vehicle_id, mask, action, log_prob,
            value, reward, done) -> None:
        self.vp_feats.append(vp_feat)
        self.ev_feats.append(ev_feat)
        self.vehicle_ids.append(vehicle_id)
        self.masks.append(mask)
        self.actions.append(action)
        self.log_probs.append(log_prob)
        self.values.append(value)
        self.rewards.append(reward)
        self.dones.append(done)

    def __len__(self) -> int:
        return len(self.actions)


def compute_gae(rewards: list[float], values: list[float], dones: list[bool],
                discount: float, gae_lambda: float) -> tuple[torch.Tensor, torch.Tensor]:
    """Generalized advantage estimation; episodes bootstrap to zero value."""
    n = len(rewards)
    advantages = torch.zeros(n, dtype=torch.float32)
    last_adv = 0.0
    for t in reversed(range(n)):
        terminal = dones[t] or t == n - 1
        next_value = 0.0 if terminal else values[t + 1]
        nonterminal = 0.0 if terminal else 1.0
        delta = rewards[t] + discount * next_value - values[t]
        last_adv = delta + discount * gae_lambda * nonterminal * last_adv
        advantages[t] = last_adv
    returns = advantages + torch.tensor(values, dtype=torch.float32)
    return advantages, returns


def ppo_loss(net, batch, config: PpoConfig):
    """Clipped policy loss + value regression + entropy bonus for one batch."""
    vp_feat, vp_adj, ev_feat, ev_adj, vehicle_ids, masks, actions, \
        old_log_probs, advantages, returns = batch
    log_probs, values = net(vp_feat, vp_adj, ev_feat, ev_adj, vehicle_ids, masks)
    taken = log_probs.gather(-1, actions.unsqueeze(-1)).squeeze(-1)
    ratio = torch.exp(taken - old_log_probs)
    clipped = torch.clamp(ratio, 1.0 - config.clip_ratio, 1.0 + config.clip_ratio)
    policy_loss = -torch.min(ratio * advantages, clipped * advantages).mean()
    value_loss = torch.nn.functional.mse_loss(values, returns)
    probs = torch.exp(log_probs)
    entropy = -(probs * torch.where(masks, log_probs, torch.zeros_like(log_probs)))
    entropy = entropy.sum(dim=-1).mean()
    loss = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy
    clip_fraction = ((ratio - 1.0).abs() > config.clip_ratio).float().mean()
    return loss, policy_loss, value_loss, entropy, clip_fraction


def ppo_update(net, optimizer, vp_adj, ev_adj, buffer: RolloutBuffer,
               config: PpoConfig, generator: torch.Generator) -> dict:
    """Run the clipped-surrogate update over the buffer; returns mean stats."""
    if len(buffer) == 0:
        raise ValueError("rollout buffer is empty")
    vp_feat = torch.stack(buffer.vp_feats)
    ev_feat = torch.stack(buffer.ev_feats)
    vehicle_ids = torch.tensor(buffer.vehicle_ids, dtype=torch.long)
    masks = torch.stack(buffer.masks)
    actions = torch.tensor(buffer.actions, dtype=torch.long)
    old_log_probs = torch.tensor(buffer.log_probs, dtype=torch.float32)
    advantages, returns = compute_gae(buffer.rewards, buffer.values, buffer.dones,
                                      config.discount, config.gae_lambda)
    if advantages.numel() > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    n = len(buffer)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "clip_fraction": 0.0}
    batches = 0
    for _ in range(config.epochs):
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, config.minibatch_size):
            idx = order[start:start + config.minibatch_size]
            batch = (vp_feat[idx], vp_adj, ev_feat[idx], ev_adj,
                     vehicle_ids[idx], masks[idx], actions[idx],
                     old_log_probs[idx], advantages[idx], returns[idx])
            loss, policy_loss, value_loss, entropy, clip_fraction = \
                ppo_loss(net, batch, config)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite PPO loss on minibatch of size {len(idx)}: "
                    f"policy={policy_loss.item()} value={value_loss.item()}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            stats["policy_loss"] += policy_loss.item()
            stats["value_loss"] += value_loss.item()
            stats["entropy"] += entropy.item()
            stats["clip_fraction"] += clip_fraction.item()
            batches += 1
    return {k: v / batches for k, v in stats.items()}
