"""
Tabular Q-learning agents, policy views over Q-tables and attacker reward adapters.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import numpy as np
from scipy.special import softmax

from reward_free_attack import const
from reward_free_attack.config import GameConfig, TrainConfig
from reward_free_attack.entropy import ActionCountTable, EntropyKind, ProbVector, table_entropy
from reward_free_attack.errors import RewardFreeAttackError
from reward_free_attack.game import ActionId, Game, GameState, StateKey, as_game
from reward_free_attack.seeding import make_rng

_LOG = logging.getLogger(__name__)


class AgentError(RewardFreeAttackError):
    """Agent, policy or reward adapter error."""


class QTable:
    """Action values keyed by state key and action id; absent entries read as 0."""

    def __init__(self, values: dict[StateKey, dict[ActionId, float]] | None = None):
        self.values: dict[StateKey, dict[ActionId, float]] = values if values is not None else {}

    def get(self, key: StateKey, action: ActionId) -> float:
        """Stored value, or 0 for an absent state or action."""
        row = self.values.get(key)
        if row is None:
            return 0.0
        return row.get(action, 0.0)

    def set(self, key: StateKey, action: ActionId, value: float) -> None:
        """Store a finite value; NaN and infinities raise ``nonfinite-input``."""
        if not math.isfinite(value):
            raise AgentError(f"Refusing non-finite value {value!r} for action {action}", "nonfinite-input")
        self.values.setdefault(key, {})[action] = value

    def row(self, key: StateKey, actions: Sequence[ActionId]) -> list[float]:
        """Values of ``actions`` at ``key`` in the order given."""
        stored = self.values.get(key, {})
        return [stored.get(a, 0.0) for a in actions]

    def action_values(self, state: GameState) -> list[float]:
        return self.row(state.key, state.legal)

    def items(self) -> Iterator[tuple[StateKey, ActionId, float]]:
        for key in sorted(self.values):
            row = self.values[key]
            for action in sorted(row):
                yield key, action, row[action]

    def __len__(self) -> int:
        return sum(len(row) for row in self.values.values())

    def __contains__(self, key: StateKey) -> bool:
        return key in self.values

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return list(self.items()) == list(other.items())

    def __repr__(self) -> str:
        return f"QTable(states={len(self.values)}, entries={len(self)})"


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the maximum, lowest index on ties."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def _require_moves(state: GameState) -> tuple[ActionId, ...]:
    if not state.legal:
        raise AgentError(f"No action to choose in a terminal state (move {state.move_count})", "terminal-state")
    return state.legal


def greedy_action(q: QTable, state: GameState) -> ActionId:
    """Highest-valued legal action, lowest action id on ties."""
    legal = _require_moves(state)
    return legal[argmax_lowest(q.row(state.key, legal))]


def epsilon_greedy_action(q: QTable, state: GameState, epsilon: float, rng: np.random.Generator) -> ActionId:
    """Uniform legal action with probability ``epsilon``, else greedy.

    Draws one uniform float from ``rng``; when it falls below ``epsilon``
    draws one more integer to pick the random action.
    """
    legal = _require_moves(state)
    if not 0.0 <= epsilon <= 1.0:
        raise AgentError(f"epsilon={epsilon} outside [0, 1]", "invalid-params")
    if rng.random() < epsilon:
        return legal[int(rng.integers(len(legal)))]
    return legal[argmax_lowest(q.row(state.key, legal))]


def softmax_policy(q: QTable, state: GameState) -> ProbVector:
    """Softmax (temperature 1) of the legal action values."""
    legal = _require_moves(state)
    return softmax(np.asarray(q.row(state.key, legal), dtype=np.float64))


def state_value(q: QTable, state: GameState) -> float:
    """Max legal action value; 0 for terminal states."""
    if not state.legal:
        return 0.0
    return max(q.row(state.key, state.legal))


class Policy(Protocol):
    """Chooses an action for the mover of a non-terminal state."""

    def __call__(self, state: GameState, rng: np.random.Generator) -> ActionId: ...


def uniform_random_policy(state: GameState, rng: np.random.Generator) -> ActionId:
    legal = _require_moves(state)
    return legal[int(rng.integers(len(legal)))]


class GreedyPolicy:
    """Greedy view of a Q-table; never touches the rng."""

    def __init__(self, q: QTable):
        self.q = q

    def __call__(self, state: GameState, rng: np.random.Generator) -> ActionId:
        return greedy_action(self.q, state)


class EpsilonGreedyPolicy:
    """Fixed-epsilon view of a Q-table; see :func:`epsilon_greedy_action` for the rng draws."""

    def __init__(self, q: QTable, epsilon: float):
        self.q = q
        self.epsilon = epsilon

    def __call__(self, state: GameState, rng: np.random.Generator) -> ActionId:
        return epsilon_greedy_action(self.q, state, self.epsilon, rng)


class SoftmaxPolicy:
    """Samples from the softmax of the action values."""

    def __init__(self, q: QTable):
        self.q = q

    def __call__(self, state: GameState, rng: np.random.Generator) -> ActionId:
        probs = softmax_policy(self.q, state)
        return state.legal[int(rng.choice(len(probs), p=probs))]


def behavior_policy(q: QTable, behavior: str, epsilon: float = const.DEFAULT_EPSILON_END) -> Policy:
    """Policy a frozen agent follows while being observed."""
    if behavior == "softmax":
        return SoftmaxPolicy(q)
    if behavior == "greedy":
        return GreedyPolicy(q)
    if behavior == "epsilon":
        return EpsilonGreedyPolicy(q, epsilon)
    raise AgentError(f"Unknown behavior {behavior!r}", "invalid-params")


class RewardKind(str, Enum):
    GAME = "game"
    ANTAGONISTIC_VALUE = "antagonistic-value"
    MOVE_MAXIMIZER = "move-max"
    VICTIM_ENTROPY = "victim-entropy"
    EMPIRICAL_VICTIM_ENTROPY = "empirical-victim-entropy"
    RANDOM = "random"
    CONSTANT = "constant"


_ENTROPY_KINDS = (RewardKind.VICTIM_ENTROPY, RewardKind.EMPIRICAL_VICTIM_ENTROPY)


@dataclass(frozen=True, eq=False)
class RewardSpec:
    """Which signal an attacker learns from.

    ``victim_state`` picks the state the victim-based kinds read: ``faced``
    (after the attacker's move, victim to move), ``next`` (the attacker's
    next decision state) or ``current`` (the attacker's decision state).
    """

    kind: RewardKind = RewardKind.GAME
    victim: QTable | None = None
    counts: ActionCountTable | None = None
    order: float = const.DEFAULT_RENYI_ORDER
    unobserved_penalty: float = const.DEFAULT_UNOBSERVED_PENALTY
    seed: int = 0
    value: float = 0.0
    victim_state: str = "faced"

    @classmethod
    def game_reward(cls) -> "RewardSpec":
        return cls(RewardKind.GAME)

    @classmethod
    def antagonistic_value(cls, victim: QTable | None, victim_state: str = "faced") -> "RewardSpec":
        return cls(RewardKind.ANTAGONISTIC_VALUE, victim=victim, victim_state=victim_state)

    @classmethod
    def move_maximizer(cls) -> "RewardSpec":
        return cls(RewardKind.MOVE_MAXIMIZER)

    @classmethod
    def victim_entropy(
        cls, victim: QTable | None, order: float = const.DEFAULT_RENYI_ORDER, victim_state: str = "faced"
    ) -> "RewardSpec":
        return cls(RewardKind.VICTIM_ENTROPY, victim=victim, order=order, victim_state=victim_state)

    @classmethod
    def empirical_victim_entropy(
        cls,
        counts: ActionCountTable | None,
        order: float = const.DEFAULT_RENYI_ORDER,
        unobserved_penalty: float = const.DEFAULT_UNOBSERVED_PENALTY,
        victim_state: str = "faced",
    ) -> "RewardSpec":
        return cls(
            RewardKind.EMPIRICAL_VICTIM_ENTROPY,
            counts=counts,
            order=order,
            unobserved_penalty=unobserved_penalty,
            victim_state=victim_state,
        )

    @classmethod
    def random_reward(cls, seed: int) -> "RewardSpec":
        return cls(RewardKind.RANDOM, seed=seed)

    @classmethod
    def constant(cls, value: float = 0.0) -> "RewardSpec":
        return cls(RewardKind.CONSTANT, value=value)

    @property
    def default_gamma(self) -> float:
        return const.ENTROPY_GAMMA if self.kind in _ENTROPY_KINDS else const.DEFAULT_GAMMA

    def validate(self) -> "RewardSpec":
        if self.kind in (RewardKind.ANTAGONISTIC_VALUE, RewardKind.VICTIM_ENTROPY) and self.victim is None:
            raise AgentError(f"Reward {self.kind.value} needs the victim's Q-table", "missing-victim-table")
        if self.kind is RewardKind.EMPIRICAL_VICTIM_ENTROPY and self.counts is None:
            raise AgentError(f"Reward {self.kind.value} needs a victim action count table", "missing-victim-table")
        if self.kind in _ENTROPY_KINDS and not self.order > 0.0:
            raise AgentError(f"Entropy order must be positive, got {self.order}", "invalid-params")
        if self.victim_state not in const.VICTIM_STATES:
            raise AgentError(f"victim_state must be one of {const.VICTIM_STATES}", "invalid-params")
        return self


def antagonist_reward(
    spec: RewardSpec,
    s_t: GameState,
    s_victim_faces: GameState,
    s_next: GameState,
    terminal: bool,
    game_reward: int,
    move_count: int,
    rng: np.random.Generator,
) -> float:
    """Reward of one attacker step under ``spec``.

    ``game_reward`` is only consulted by the game-reward kind; ``move_count``
    is the number of moves the attacker has made so far, this one included.
    """
    spec.validate()
    kind = spec.kind
    if kind is RewardKind.GAME:
        return float(game_reward)
    if kind is RewardKind.CONSTANT:
        return spec.value
    if kind is RewardKind.MOVE_MAXIMIZER:
        return float(move_count)
    if kind is RewardKind.RANDOM:
        return float(rng.integers(-1, 2))

    if spec.victim_state == "faced":
        state = s_victim_faces
    elif spec.victim_state == "next":
        state = s_next
    else:
        state = s_t

    if kind is RewardKind.ANTAGONISTIC_VALUE:
        return -state_value(spec.victim, state)  # type: ignore[arg-type]
    if state.terminal:
        return 0.0
    entropy_kind = EntropyKind.of_order(spec.order)
    if kind is RewardKind.VICTIM_ENTROPY:
        return entropy_kind(softmax_policy(spec.victim, state))  # type: ignore[arg-type]
    counts: ActionCountTable = spec.counts  # type: ignore[assignment]
    if counts.observations(state.key) == 0:
        return spec.unobserved_penalty
    return table_entropy(counts, state.key, entropy_kind)


def td_update(
    q: QTable, s: StateKey, a: ActionId, reward: float, next_value: float, lr: float, gamma: float
) -> QTable:
    """Move Q(s, a) a fraction ``lr`` toward ``reward + gamma * next_value``."""
    if not 0.0 < lr <= 1.0 or not 0.0 < gamma < 1.0:
        raise AgentError(f"Need lr in (0, 1] and gamma in (0, 1), got lr={lr}, gamma={gamma}", "invalid-params")
    if not math.isfinite(reward) or not math.isfinite(next_value):
        raise AgentError(f"Non-finite reward {reward!r} or next value {next_value!r}", "nonfinite-input")
    target = reward + gamma * next_value
    q.set(s, a, (1.0 - lr) * q.get(s, a) + lr * target)
    return q


def q_update(
    q: QTable,
    s: StateKey,
    a: ActionId,
    reward: float,
    s_next: GameState,
    terminal: bool,
    lr: float,
    gamma: float,
) -> QTable:
    """One tabular Q-learning backup; the target is ``reward`` alone when terminal."""
    next_value = 0.0 if terminal else state_value(q, s_next)
    return td_update(q, s, a, reward, next_value, lr, gamma)


def train_q_agent(
    game: GameConfig | Game,
    opponent: Policy,
    reward_spec: RewardSpec,
    cfg: TrainConfig,
    rng: np.random.Generator,
    on_checkpoint: Callable[[int, QTable], None] | None = None,
) -> QTable:
    """Train a Q-table for ``cfg.player`` against a fixed opponent.

    An agent transition runs from one of its decision states to the next
    (or to the end of the game), spanning the opponent's reply. Episodes
    whose random opening ends the game teach nothing.
    """
    game = as_game(game)
    cfg.validate()
    reward_spec.validate()
    reward_rng = make_rng(reward_spec.seed, "reward") if reward_spec.kind is RewardKind.RANDOM else rng
    q = QTable()

    _LOG.info(
        "Training %s as %s with %s rewards for %d episodes",
        game.config.name,
        const.PLAYER_NAMES[cfg.player],
        reward_spec.kind.value,
        cfg.episodes,
    )
    for episode in range(cfg.episodes):
        _train_episode(game, q, opponent, reward_spec, cfg, cfg.epsilon_at(episode), rng, reward_rng)
        if on_checkpoint is not None and (episode + 1) % cfg.checkpoint_every == 0:
            _LOG.debug("Checkpoint at episode %d: %r", episode + 1, q)
            on_checkpoint(episode + 1, q)
    _LOG.info("Training finished: %r", q)
    return q


def _train_episode(
    game: Game,
    q: QTable,
    opponent: Policy,
    spec: RewardSpec,
    cfg: TrainConfig,
    epsilon: float,
    rng: np.random.Generator,
    reward_rng: np.random.Generator,
) -> None:
    player = cfg.player
    read_game_reward = spec.kind is RewardKind.GAME
    state = game.new_game()
    while not state.terminal and state.move_count < 2 * cfg.opening_moves:
        policy = uniform_random_policy if state.mover == player else opponent
        state = game.apply_action(state, policy(state, rng)).next
    if not state.terminal and state.mover != player:
        state = game.apply_action(state, opponent(state, rng)).next

    agent_moves = 0
    while not state.terminal:
        action = epsilon_greedy_action(q, state, epsilon, rng)
        step = game.apply_action(state, action)
        agent_moves += 1
        faced = step.next
        final = step if step.terminal else game.apply_action(faced, opponent(faced, rng))
        s_next = final.next
        terminal = final.terminal
        game_reward = final.reward_for(player) if read_game_reward and terminal else 0
        reward = antagonist_reward(spec, state, faced, s_next, terminal, game_reward, agent_moves, reward_rng)
        q_update(q, state.key, action, reward, s_next, terminal, cfg.learning_rate, cfg.gamma)
        state = s_next
