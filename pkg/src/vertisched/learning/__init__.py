from .agents import GrlAgent, MlpAgent, PpoAgent
from .nets import (
    FlatActorCritic,
    GcnEncoder,
    GcnLayer,
    GraphActorCritic,
    build_observation,
    gcn_forward,
    masked_log_softmax,
    normalized_adjacency,
)
from .ppo import RolloutBuffer, compute_gae, ppo_loss, ppo_update

__all__ = [
    "GrlAgent", "MlpAgent", "PpoAgent",
    "FlatActorCritic", "GcnEncoder", "GcnLayer", "GraphActorCritic",
    "build_observation", "gcn_forward", "masked_log_softmax",
    "normalized_adjacency",
    "RolloutBuffer", "compute_gae", "ppo_loss", "ppo_update",
]
