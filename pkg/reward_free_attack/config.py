"""
Configuration dataclasses for games, training, the reward-free pipeline and evaluation.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

import hashlib
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from reward_free_attack import const
from reward_free_attack.errors import RewardFreeAttackError

_LOG = logging.getLogger(__name__)


class ConfigError(RewardFreeAttackError):
    """Invalid configuration values."""

    def __init__(self, message: str, code: str = "invalid-config"):
        super().__init__(message, code)


@dataclass(frozen=True)
class GameConfig:
    """Rule set and board dimensions of a turn-based game.

    ``max_moves`` of 0 means the default cap of ``4 * rows * cols``.
    """

    rules: str = const.RULES_CONNECT_K
    rows: int = 4
    cols: int = 4
    k: int = 3
    pawn_rows: int = 1
    max_moves: int = 0

    def __post_init__(self):
        if self.max_moves == 0:
            object.__setattr__(self, "max_moves", const.MAX_MOVES_FACTOR * self.rows * self.cols)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def validate(self) -> "GameConfig":
        """Check the invariants of the configuration; return self."""
        if self.rules not in const.RULE_CODES:
            raise ConfigError(f"Unknown rule set {self.rules!r}")
        if self.rows < 2 or self.cols < 2:
            raise ConfigError(f"Board must be at least 2x2, got {self.rows}x{self.cols}")
        if self.rows > 255 or self.cols > 255:
            raise ConfigError("Board dimensions above 255 are not supported")
        if self.rules == const.RULES_CONNECT_K and not 1 <= self.k <= max(self.rows, self.cols):
            raise ConfigError(f"k={self.k} must be in [1, {max(self.rows, self.cols)}]")
        if self.rules == const.RULES_BREAKTHROUGH and not 1 <= self.pawn_rows < math.ceil(self.rows / 2):
            raise ConfigError(f"pawn_rows={self.pawn_rows} must be in [1, {math.ceil(self.rows / 2)})")
        if self.max_moves < self.rows * self.cols:
            raise ConfigError(f"max_moves={self.max_moves} is below rows*cols={self.rows * self.cols}")
        return self

    @property
    def name(self) -> str:
        if self.rules == const.RULES_CONNECT_K:
            return f"{self.rules}-{self.rows}x{self.cols}-k{self.k}"
        return f"{self.rules}-{self.rows}x{self.cols}-p{self.pawn_rows}"


def game_from_preset(preset: str, **overrides: Any) -> GameConfig:
    """Build a GameConfig from a named preset with optional field overrides."""
    if preset not in const.GAME_PRESETS:
        raise ConfigError(f"Unknown game {preset!r}; choose one of {sorted(const.GAME_PRESETS)}")
    values = dict(const.GAME_PRESETS[preset])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return GameConfig(**values).validate()


@dataclass
class TrainConfig:
    """Tabular Q-learning hyperparameters.

    With ``opening_moves`` > 0 each episode starts like a swap-in evaluation
    game: the opponent plays its own policy and the agent's seat moves
    uniformly at random until ply ``2 * opening_moves``.
    """

    learning_rate: float = const.DEFAULT_LEARNING_RATE
    gamma: float = const.DEFAULT_GAMMA
    epsilon_start: float = const.DEFAULT_EPSILON_START
    epsilon_end: float = const.DEFAULT_EPSILON_END
    epsilon_decay_episodes: int = const.DEFAULT_EPSILON_DECAY_EPISODES
    episodes: int = const.DEFAULT_EPISODES
    seed: int = 0
    player: int = const.P1
    checkpoint_every: int = const.DEFAULT_CHECKPOINT_EVERY
    opening_moves: int = 0

    def validate(self) -> "TrainConfig":
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate={self.learning_rate} must be in (0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma={self.gamma} must be in (0, 1)")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ConfigError("epsilons must satisfy 0 <= epsilon_end <= epsilon_start <= 1")
        if self.epsilon_decay_episodes < 1 or self.episodes < 1:
            raise ConfigError("episodes and epsilon_decay_episodes must be positive")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be positive")
        if self.opening_moves < 0:
            raise ConfigError("opening_moves must be nonnegative")
        if self.player not in (const.P1, const.P2):
            raise ConfigError(f"player={self.player} is not a player id")
        return self

    def epsilon_at(self, episode: int) -> float:
        """Linearly decayed exploration rate for a zero-based episode index."""
        frac = min(1.0, episode / self.epsilon_decay_episodes)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass
class PipelineConfig:
    """Parameters of the explore -> rollout -> plan pipeline."""

    explore_episodes: int = const.DEFAULT_EXPLORE_EPISODES
    rollout_transitions: int = const.DEFAULT_ROLLOUT_TRANSITIONS
    victim_action_target: int = const.DEFAULT_VICTIM_ACTION_TARGET
    renyi_order: float = const.DEFAULT_RENYI_ORDER
    unobserved_penalty: float = const.DEFAULT_UNOBSERVED_PENALTY
    plan_epochs: int = const.DEFAULT_PLAN_EPOCHS
    plan_lr: float = const.DEFAULT_PLAN_LR
    plan_gamma: float = const.ENTROPY_GAMMA
    convergence_epsilon: float = const.DEFAULT_CONVERGENCE_EPSILON
    seed: int = 0
    explore_lr: float = const.DEFAULT_LEARNING_RATE
    explore_gamma: float = const.ENTROPY_GAMMA
    explore_epsilon_start: float = const.DEFAULT_EPSILON_START
    explore_epsilon_end: float = const.DEFAULT_EPSILON_END
    rollout_epsilon: float = const.DEFAULT_ROLLOUT_EPSILON
    victim_behavior: str = "softmax"
    victim_epsilon: float = const.DEFAULT_EPSILON_END
    attacker_player: int = const.P2
    plan_reward: str = "empirical-victim-entropy"
    jobs: int = 1

    def validate(self) -> "PipelineConfig":
        positive = {
            "explore_episodes": self.explore_episodes,
            "rollout_transitions": self.rollout_transitions,
            "victim_action_target": self.victim_action_target,
            "renyi_order": self.renyi_order,
            "plan_epochs": self.plan_epochs,
            "convergence_epsilon": self.convergence_epsilon,
            "jobs": self.jobs,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"{name}={value} must be positive")
        for name, value in (("plan_lr", self.plan_lr), ("explore_lr", self.explore_lr)):
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name}={value} must be in (0, 1]")
        for name, value in (("plan_gamma", self.plan_gamma), ("explore_gamma", self.explore_gamma)):
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name}={value} must be in (0, 1)")
        if not 0.0 <= self.rollout_epsilon <= 1.0:
            raise ConfigError(f"rollout_epsilon={self.rollout_epsilon} must be in [0, 1]")
        if self.victim_behavior not in const.VICTIM_BEHAVIORS:
            raise ConfigError(f"victim_behavior must be one of {const.VICTIM_BEHAVIORS}")
        if self.plan_reward not in const.PLAN_REWARDS:
            raise ConfigError(f"plan_reward must be one of {const.PLAN_REWARDS}")
        if self.attacker_player not in (const.P1, const.P2):
            raise ConfigError(f"attacker_player={self.attacker_player} is not a player id")
        return self

    def explore_train_config(self) -> TrainConfig:
        """Q-learning settings used by the exploration phase."""
        return TrainConfig(
            learning_rate=self.explore_lr,
            gamma=self.explore_gamma,
            epsilon_start=self.explore_epsilon_start,
            epsilon_end=self.explore_epsilon_end,
            epsilon_decay_episodes=max(1, self.explore_episodes // 2),
            episodes=self.explore_episodes,
            seed=self.seed,
            player=self.attacker_player,
        ).validate()


@dataclass
class EvalConfig:
    """Swap-in evaluation protocol settings."""

    opening_moves: int = const.DEFAULT_OPENING_MOVES
    n_games: int = const.DEFAULT_EVAL_GAMES
    seed: int = 0
    max_retries: int = const.DEFAULT_MAX_OPENING_RETRIES
    victim_player: int = const.P1
    jobs: int = 1

    def validate(self) -> "EvalConfig":
        if self.opening_moves < 0:
            raise ConfigError("opening_moves must be nonnegative")
        if self.n_games < 1:
            raise ConfigError("n_games must be at least 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be nonnegative")
        if self.victim_player not in (const.P1, const.P2):
            raise ConfigError(f"victim_player={self.victim_player} is not a player id")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        return self

    @property
    def attacker_player(self) -> int:
        return const.P2 if self.victim_player == const.P1 else const.P1


@dataclass
class SampleBoundParams:
    """Inputs of the reward-free trajectory-count bound."""

    horizon: int
    n_states: int
    n_actions: int
    epsilon: float
    failure_prob: float
    renyi_alpha: float
    constant: float = 1.0

    def validate(self) -> "SampleBoundParams":
        if self.horizon < 1 or self.n_states < 1 or self.n_actions < 1:
            raise ConfigError("horizon, n_states and n_actions must be positive", "invalid-params")
        if self.epsilon <= 0.0 or self.constant <= 0.0:
            raise ConfigError("epsilon and constant must be positive", "invalid-params")
        if not 0.0 < self.failure_prob < 1.0:
            raise ConfigError("failure_prob must be in (0, 1)", "invalid-params")
        if not 0.0 < self.renyi_alpha < 1.0:
            raise ConfigError("renyi_alpha must be in (0, 1)", "invalid-params")
        if self.n_states * self.n_actions * self.horizon <= self.failure_prob * self.epsilon:
            raise ConfigError("log argument S*A*H/(p*eps) must exceed 1", "invalid-params")
        return self

    @property
    def beta(self) -> float:
        return self.renyi_alpha / (2.0 * (1.0 - self.renyi_alpha))


def as_key_values(obj: Any, prefix: str = "") -> list[str]:
    """Render a dataclass or mapping (recursively) as sorted ``key=value`` lines."""
    lines: list[str] = []
    if isinstance(obj, Mapping):
        items = [(str(k), obj[k]) for k in obj]
    else:
        items = [(f.name, getattr(obj, f.name)) for f in fields(obj)]
    for key, value in items:
        name = f"{prefix}{key}"
        if hasattr(value, "__dataclass_fields__"):
            lines.extend(as_key_values(value, prefix=f"{name}."))
        elif isinstance(value, dict):
            lines.extend(f"{name}.{k}={value[k]!r}" for k in sorted(value))
        else:
            lines.append(f"{name}={value!r}")
    return sorted(lines)


def config_digest(obj: Any) -> str:
    """SHA-256 hex digest of the canonical key=value rendering."""
    payload = "\n".join(as_key_values(obj)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def load_key_value_file(path: str | Path) -> dict[str, str]:
    """Read a ``key = value`` configuration file; keys use underscores."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    _LOG.debug("Loaded %d config values from %s", len(values), path)
    return values
