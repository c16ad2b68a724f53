"""Configuration dataclasses and the key/value config-file loader.

All tunables live here so that experiments are reproducible from a single
INI-style file.  Every dataclass mirrors one section of that file; missing
sections or keys fall back to the documented defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class LayoutConfig:
    """Geometry of the canonical 12-node vertiport layout (meters)."""

    port_spacing: float = 10.0        # normal ports sit at (+/-spacing, 0)
    battery_offset: float = 10.0      # battery port sits at (0, offset)
    hover_radius: float = 25.0        # hover spots on this ring
    destination_radius: float = 250.0  # destinations on this ring

    def validate(self) -> None:
        if self.port_spacing <= 0 or self.battery_offset <= 0:
            raise ValueError("port spacing and battery offset must be positive")
        if self.hover_radius <= 0 or self.destination_radius <= 0:
            raise ValueError("radii must be positive")
        if self.hover_radius >= self.destination_radius:
            raise ValueError("hover radius must be smaller than destination radius")


@dataclass
class SimConfig:
    """Kinematics, battery dynamics and decision cadence of the simulator."""

    cruise_speed: float = 50.0        # meters per simulated minute
    capture_radius: float = 5.0       # landing capture distance, meters
    collision_threshold: float = 3.0  # minimum separation, meters
    conflict_horizon: float = 10.0    # CPA lookahead window, minutes
    charge_rate: float = 10.0         # percent regained per step on the battery port
    hover_drain: float = 0.5          # percent per step while hovering / holding airborne
    idle_drain: float = 0.25          # percent per step while idling on the ground
    battery_per_meter: float = 0.02   # percent per meter cruised (1% per full-speed step)
    decision_cooldown: int = 3        # steps before an idle vehicle is offered again
    episode_steps: int = 1440         # one simulated day at one-minute steps


@dataclass
class RewardWeights:
    """Non-negative weights for the five reward coefficients.

    Defaults satisfy the required ordering: safety > delay > takeoff >
    landing > battery (w5 > w4 > w1 > w2 > w3).
    """

    w1: float = 1.1   # takeoff coefficient
    w2: float = 1.0   # landing coefficient
    w3: float = 0.8   # battery coefficient
    w4: float = 1.2   # delay coefficient
    w5: float = 2.2   # safety coefficient

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3", "w4", "w5"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4, self.w5)


@dataclass
class PpoConfig:
    """PPO hyperparameters.  Learning rate follows the pinned Adam setting."""

    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 256
    learning_rate: float = 1e-5
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    hidden_dim: int = 64

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must be in (0, 1)")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.epochs < 1 or self.minibatch_size < 1:
            raise ValueError("epochs and minibatch_size must be >= 1")


@dataclass
class ExperimentConfig:
    """Episode counts and seed bookkeeping for the CLI harness."""

    episodes: int = 200          # training episodes
    eval_episodes: int = 50      # evaluation episodes per policy
    train_seed: int = 0
    eval_seed_start: int = 10_000
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be >= 1")

    def eval_seeds(self) -> list[int]:
        return list(range(self.eval_seed_start, self.eval_seed_start + self.eval_episodes))


@dataclass
class AppConfig:
    """Everything the harness needs, grouped by concern."""

    layout: LayoutConfig = field(default_factory=LayoutConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    rewards: RewardWeights = field(default_factory=RewardWeights)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)


_SECTIONS = {
    "layout": (LayoutConfig, "layout"),
    "simulator": (SimConfig, "sim"),
    "rewards": (RewardWeights, "rewards"),
    "ppo": (PpoConfig, "ppo"),
    "experiment": (ExperimentConfig, "experiment"),
}


def _coerce(value: str, typ: type):
    if typ is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return typ(value)


def load_config(path: str | Path) -> AppConfig:
    """Load an INI config file; unknown keys raise, missing keys default."""
    parser = configparser.ConfigParser()
    text = Path(path).read_text()
    parser.read_string(text)

    cfg = AppConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        cls, attr = _SECTIONS[section]
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in parser.items(section):
            if key not in fields:
                raise ValueError(f"unknown key '{key}' in section [{section}]")
            ftype = {f.name: f for f in dataclasses.fields(cls)}[key].type
            pytype = {"float": float, "int": int, "str": str, "bool": bool}.get(str(ftype), str)
            kwargs[key] = _coerce(raw, pytype)
        setattr(cfg, attr, cls(**kwargs))
    cfg.layout.validate()
    return cfg


def default_config_text() -> str:
    """Render the built-in defaults as a config file, for documentation."""
    cfg = AppConfig()
    lines = []
    for section, (cls, attr) in _SECTIONS.items():
        lines.append(f"[{section}]")
        for f in dataclasses.fields(cls):
            lines.append(f"{f.name} = {getattr(getattr(cfg, attr), f.name)}")
        lines.append("")
    return "\n".join(lines)
