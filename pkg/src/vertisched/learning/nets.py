"""Actor-critic networks: GCN feature extraction over the two state graphs,
or a flat MLP extractor over the concatenated feature matrices.

The GCN propagation rule is LeakyReLU(A_hat @ X @ W + b) with the symmetric
normalization A_hat = D^{-1/2} (A + I) D^{-1/2}.  The policy head is a
four-layer Tanh MLP ending in a masked log-softmax over the 11 actions; the
value head is a LeakyReLU MLP producing a scalar.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..domain import NUM_ACTIONS, NUM_VEHICLES, VehicleGraph, VertiportGraph

LEAKY_SLOPE = 0.1
MASKED_LOGIT = -1e9  # stands in for -inf; underflows to exactly zero probability


def normalized_adjacency(adjacency: np.ndarray) -> torch.Tensor:
    """Symmetric GCN normalization with self-loops added."""
    a = np.asarray(adjacency, dtype=np.float64)
    if a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.allclose(a, a.T):
        raise ValueError("adjacency must be symmetric")
    a_hat = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    norm = a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]
    return torch.tensor(norm, dtype=torch.float32)


class GcnLayer(nn.Module):
    """One graph convolution: LeakyReLU(A_hat X W + b)."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.linear = nn.Linear(in_dim, out_dim)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)

    def forward(self, features: torch.Tensor, a_hat: torch.Tensor) -> torch.Tensor:
        if features.shape[-2] != a_hat.shape[0]:
            raise ValueError("feature rows must match the node count")
        return self.act(a_hat @ self.linear(features))


class GcnEncoder(nn.Module):
    """Two-layer GCN producing per-node embeddings."""

    def __init__(self, in_dim: int, hidden_dim: int):
        super().__init__()
        self.layer1 = GcnLayer(in_dim, hidden_dim)
        self.layer2 = GcnLayer(hidden_dim, hidden_dim)

    def forward(self, features: torch.Tensor, a_hat: torch.Tensor) -> torch.Tensor:
        return self.layer2(self.layer1(features, a_hat), a_hat)


def masked_log_softmax(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Log-softmax with infeasible entries forced to zero probability."""
    if not bool(mask.any(dim=-1).all()):
        raise ValueError("mask must have at least one feasible action")
    filled = torch.where(mask, logits, torch.full_like(logits, MASKED_LOGIT))
    return torch.log_softmax(filled, dim=-1)


def _mlp(dims: list[int], activation: type[nn.Module], **act_kwargs) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(dims) - 1):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            layers.append(activation(**act_kwargs))
    return nn.Sequential(*layers)


def _init_orthogonal(module: nn.Module, policy_head: nn.Sequential) -> None:
    for m in module.modules():
        if isinstance(m, nn.Linear):
            nn.init.orthogonal_(m.weight, gain=np.sqrt(2.0))
            nn.init.zeros_(m.bias)
    # small final policy layer keeps the initial distribution near uniform
    final = [m for m in policy_head.modules() if isinstance(m, nn.Linear)][-1]
    nn.init.orthogonal_(final.weight, gain=0.01)


class GraphActorCritic(nn.Module):
    """GCN extractor over both graphs, fused into policy and value heads.

    Fusion: mean-pooled vertiport embedding, mean-pooled vehicle embedding
    and the selected vehicle's embedding, concatenated.
    """

    def __init__(self, vp_dim: int, ev_dim: int, hidden_dim: int = 64):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.vp_encoder = GcnEncoder(vp_dim, hidden_dim)
        self.ev_encoder = GcnEncoder(ev_dim, hidden_dim)
        fused = 3 * hidden_dim
        self.policy_head = _mlp([fused, hidden_dim, hidden_dim, hidden_dim, NUM_ACTIONS],
                                nn.Tanh)
        self.value_head = _mlp([fused, hidden_dim, hidden_dim, 1],
                               nn.LeakyReLU, negative_slope=LEAKY_SLOPE)
        _init_orthogonal(self, self.policy_head)

    def fuse(self, vp_feat: torch.Tensor, vp_adj: torch.Tensor,
             ev_feat: torch.Tensor, ev_adj: torch.Tensor,
             vehicle_id: torch.Tensor) -> torch.Tensor:
        vp_emb = self.vp_encoder(vp_feat, vp_adj)
        ev_emb = self.ev_encoder(ev_feat, ev_adj)
        batched = vp_feat.dim() == 3
        if not batched:
            vp_emb, ev_emb = vp_emb.unsqueeze(0), ev_emb.unsqueeze(0)
            vehicle_id = vehicle_id.reshape(1)
        selected = ev_emb[torch.arange(ev_emb.shape[0]), vehicle_id]
        fused = torch.cat([vp_emb.mean(dim=1), ev_emb.mean(dim=1), selected], dim=-1)
        return fused if batched else fused.squeeze(0)

    def forward(self, vp_feat, vp_adj, ev_feat, ev_adj, vehicle_id, mask):
        fused = self.fuse(vp_feat, vp_adj, ev_feat, ev_adj, vehicle_id)
        log_probs = masked_log_softmax(self.policy_head(fused), mask)
        value = self.value_head(fused).squeeze(-1)
        return log_probs, value


class FlatActorCritic(nn.Module):
    """MLP extractor over the flattened, concatenated feature matrices.

    Input dimension is fixed by the graph layouts:
    12 * vertiport-feature-dim + 4 * vehicle-feature-dim.
    """

    def __init__(self, vp_nodes: int, vp_dim: int, ev_dim: int, hidden_dim: int = 64):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.input_dim = vp_nodes * vp_dim + NUM_VEHICLES * ev_dim
        self.extractor = _mlp([self.input_dim, hidden_dim, 3 * hidden_dim],
                              nn.LeakyReLU, negative_slope=LEAKY_SLOPE)
        fused = 3 * hidden_dim
        self.policy_head = _mlp([fused, hidden_dim, hidden_dim, hidden_dim, NUM_ACTIONS],
                                nn.Tanh)
        self.value_head = _mlp([fused, hidden_dim, hidden_dim, 1],
                               nn.LeakyReLU, negative_slope=LEAKY_SLOPE)
        _init_orthogonal(self, self.policy_head)

    def fuse(self, vp_feat, vp_adj, ev_feat, ev_adj, vehicle_id):
        flat = torch.cat([vp_feat.flatten(-2), ev_feat.flatten(-2)], dim=-1)
        return self.extractor(flat)

    def forward(self, vp_feat, vp_adj, ev_feat, ev_adj, vehicle_id, mask):
        fused = self.fuse(vp_feat, vp_adj, ev_feat, ev_adj, vehicle_id)
        log_probs = masked_log_softmax(self.policy_head(fused), mask)
        value = self.value_head(fused).squeeze(-1)
        return log_probs, value


def gcn_forward(layer: GcnLayer, features: np.ndarray,
                adjacency: np.ndarray) -> np.ndarray:
    """Convenience single-layer forward on numpy inputs."""
    a_hat = normalized_adjacency(adjacency)
    x = torch.tensor(np.asarray(features), dtype=torch.float32)
    with torch.no_grad():
        return layer(x, a_hat).numpy()


def build_observation(state, torchify: bool = True):
    """Extract (vp_feat, vp_adj_hat, ev_feat, ev_adj_hat) from a SimState."""
    vp: VertiportGraph = state.vertiport
    ev: VehicleGraph = state.vehicles
    vp_feat = vp.feature_matrix()
    ev_feat = ev.feature_matrix(vp, state.clock, state.schedules)
    if not torchify:
        return vp_feat, vp.adjacency, ev_feat, ev.adjacency
    return (torch.tensor(vp_feat, dtype=torch.float32),
            normalized_adjacency(vp.adjacency),
            torch.tensor(ev_feat, dtype=torch.float32),
            normalized_adjacency(ev.adjacency))
