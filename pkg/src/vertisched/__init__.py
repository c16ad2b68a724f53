"""vertisched: a deterministic vertiport schedule-management simulator with
graph-reinforcement-learning and queue-based baseline policies."""

from .config import (
    AppConfig,
    ExperimentConfig,
    LayoutConfig,
    PpoConfig,
    RewardWeights,
    SimConfig,
    load_config,
)
from .conflict import ConflictQuery, ConflictResult, min_separation, pairwise_conflicts
from .domain import (
    Action,
    NUM_ACTIONS,
    NUM_VEHICLES,
    Schedule,
    StatusKind,
    VehicleGraph,
    VehicleNode,
    VertiportGraph,
    build_canonical_layout,
    feasible_mask,
)
from .rewards import EventOutcome, RewardBreakdown, total_reward
from .simulator import EpisodeSummary, Simulator, StepOutcome, write_event_log
from .baselines import FcfsPolicy, RandomPolicy

__version__ = "0.1.0"

__all__ = [
    "AppConfig", "ExperimentConfig", "LayoutConfig", "PpoConfig",
    "RewardWeights", "SimConfig", "load_config",
    "ConflictQuery", "ConflictResult", "min_separation", "pairwise_conflicts",
    "Action", "NUM_ACTIONS", "NUM_VEHICLES", "Schedule", "StatusKind",
    "VehicleGraph", "VehicleNode", "VertiportGraph", "build_canonical_layout",
    "feasible_mask",
    "EventOutcome", "RewardBreakdown", "total_reward",
    "EpisodeSummary", "Simulator", "StepOutcome", "write_event_log",
    "FcfsPolicy", "RandomPolicy",
    "__version__",
]
