"""
Reward-free attack pipeline: explore with self-entropy, roll out against the
victim while counting its actions, then plan offline on the victim's
empirical entropy. Also the victim-entropy estimator and the sample bound.

No function in this module reads environment rewards.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from reward_free_attack import const
from reward_free_attack.agents import (
    EpsilonGreedyPolicy,
    Policy,
    QTable,
    behavior_policy,
    epsilon_greedy_action,
    q_update,
    softmax_policy,
    td_update,
)
from reward_free_attack.config import GameConfig, PipelineConfig, SampleBoundParams
from reward_free_attack.entropy import (
    ActionCountTable,
    EntropyKind,
    EntropyTable,
    entropy_table_distance,
    record_victim_action,
    table_entropy,
)
from reward_free_attack.errors import RewardFreeAttackError
from reward_free_attack.game import ActionId, Game, GameState, StateKey, StepResult, as_game
from reward_free_attack.seeding import derive_seed

_LOG = logging.getLogger(__name__)

_STALL_LIMIT = 1000


class PipelineError(RewardFreeAttackError):
    """Error in one of the reward-free phases."""


@dataclass(frozen=True)
class Transition:
    """One attacker step, from a decision state to the next one (or the end).

    ``faced`` is the state the victim faced after the attacker's action, None
    when that action ended the game. No reward is stored.
    """

    s: StateKey
    a: ActionId
    s_next: StateKey
    terminal: bool
    faced: StateKey | None = None


@dataclass
class TrajectoryDataset:
    """Ordered transitions; ``boundaries`` holds the start index of each trajectory."""

    transitions: list[Transition] = field(default_factory=list)
    boundaries: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.transitions)

    def add_trajectory(self, trajectory: list[Transition]) -> None:
        if not trajectory:
            return
        self.boundaries.append(len(self.transitions))
        self.transitions.extend(trajectory)

    def extend(self, other: "TrajectoryDataset") -> "TrajectoryDataset":
        offset = len(self.transitions)
        self.boundaries.extend(b + offset for b in other.boundaries)
        self.transitions.extend(other.transitions)
        return self

    def trajectories(self) -> Iterator[list[Transition]]:
        ends = self.boundaries[1:] + [len(self.transitions)]
        for start, end in zip(self.boundaries, ends):
            yield self.transitions[start:end]

    def validate(self) -> "TrajectoryDataset":
        if self.transitions and (not self.boundaries or self.boundaries[0] != 0):
            raise PipelineError("Trajectory boundaries must start at index 0", "invalid-dataset")
        if any(b >= e for b, e in zip(self.boundaries, self.boundaries[1:])):
            raise PipelineError("Trajectory boundaries must be strictly increasing", "invalid-dataset")
        if self.boundaries and self.boundaries[-1] >= len(self.transitions):
            raise PipelineError("Trajectory boundary past the end of the dataset", "invalid-dataset")
        return self


@dataclass(frozen=True)
class AttackerStep:
    """A fully materialized attacker transition."""

    state: GameState
    action: ActionId
    faced: GameState
    next: GameState

    @property
    def terminal(self) -> bool:
        return self.next.terminal

    def transition(self) -> Transition:
        faced = None if self.faced.terminal else self.faced.key
        return Transition(self.state.key, self.action, self.next.key, self.next.terminal, faced)


def exploration_reward(q: QTable, state: GameState, kind: EntropyKind) -> float:
    """Entropy of the attacker's own softmax policy at ``state``; 0 when terminal."""
    if state.terminal:
        return 0.0
    return kind(softmax_policy(q, state))


def explore_phase(
    game: GameConfig | Game,
    victim: QTable,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    on_episode: Callable[[int, int], None] | None = None,
) -> QTable:
    """Train the explorer on its own Renyi policy entropy against the frozen victim.

    The reward is recomputed from the live table at every step. ``on_episode``
    receives the episode number and the game length in moves.
    """
    game = as_game(game)
    cfg.validate()
    train_cfg = cfg.explore_train_config()
    victim_policy = behavior_policy(victim, cfg.victim_behavior, cfg.victim_epsilon)
    kind = EntropyKind.of_order(cfg.renyi_order)
    attacker = cfg.attacker_player
    q = QTable()

    _LOG.info("Exploration: %d episodes on %s with %s self-entropy", cfg.explore_episodes, game.config.name, kind)
    lengths: list[int] = []
    for episode in range(cfg.explore_episodes):
        epsilon = train_cfg.epsilon_at(episode)
        state = game.new_game()
        if state.mover != attacker:
            state = game.apply_action(state, victim_policy(state, rng)).next
        while not state.terminal:
            reward = exploration_reward(q, state, kind)
            action = epsilon_greedy_action(q, state, epsilon, rng)
            step = game.apply_action(state, action)
            final = step if step.terminal else game.apply_action(step.next, victim_policy(step.next, rng))
            q_update(q, state.key, action, reward, final.next, final.terminal, train_cfg.learning_rate, train_cfg.gamma)
            state = final.next
        lengths.append(state.move_count)
        if on_episode is not None:
            on_episode(episode + 1, state.move_count)

    tenth = max(1, len(lengths) // 10)
    _LOG.info(
        "Exploration finished: mean moves %.2f in the first tenth, %.2f in the last tenth",
        float(np.mean(lengths[:tenth])),
        float(np.mean(lengths[-tenth:])),
    )
    return q


def _victim_move(
    game: Game, state: GameState, victim: Policy, counts: ActionCountTable, rng: np.random.Generator
) -> StepResult:
    action = victim(state, rng)
    record_victim_action(counts, state.key, state.legal.index(action), len(state.legal))
    return game.apply_action(state, action)


def _rollout_worker(
    game: Game,
    explorer: Policy,
    victim: Policy,
    attacker: int,
    n_transitions: int,
    n_victim_actions: int,
    rng: np.random.Generator,
) -> tuple[TrajectoryDataset, ActionCountTable]:
    dataset = TrajectoryDataset()
    counts = ActionCountTable()
    stalled = 0
    while len(dataset) < n_transitions or counts.total_observations < n_victim_actions:
        collect = len(dataset) < n_transitions
        before = (len(dataset), counts.total_observations)
        trajectory: list[Transition] = []
        state = game.new_game()
        while not state.terminal:
            if state.mover != attacker:
                state = _victim_move(game, state, victim, counts, rng).next
                continue
            action = explorer(state, rng)
            step = game.apply_action(state, action)
            if step.terminal:
                s_next, faced = step.next, None
            else:
                faced = step.next.key
                s_next = _victim_move(game, step.next, victim, counts, rng).next
            if collect:
                trajectory.append(Transition(state.key, action, s_next.key, s_next.terminal, faced))
            state = s_next
        dataset.add_trajectory(trajectory)

        if (len(dataset), counts.total_observations) == before:
            stalled += 1
            if stalled >= _STALL_LIMIT:
                raise PipelineError(
                    f"Rollout made no progress in {_STALL_LIMIT} episodes on {game.config.name}",
                    "rollout-stalled",
                )
        else:
            stalled = 0
    return dataset, counts


def rollout_phase(
    game: GameConfig | Game,
    explorer: QTable,
    victim: QTable,
    cfg: PipelineConfig,
    rng: np.random.Generator,
) -> tuple[TrajectoryDataset, ActionCountTable]:
    """Play the explorer against the frozen victim, recording attacker transitions
    and counting victim actions keyed by the state the victim faced.

    Work is split into ``cfg.jobs`` shards with their own streams; shards are
    merged in shard order. The output depends on the seed and the shard count
    only. Shards run on threads, which keeps them in one process but gives no
    speedup for this pure-Python work.
    """
    game = as_game(game)
    cfg.validate()
    explorer_policy = EpsilonGreedyPolicy(explorer, cfg.rollout_epsilon)
    victim_policy = behavior_policy(victim, cfg.victim_behavior, cfg.victim_epsilon)
    jobs = cfg.jobs
    shard_seeds = [int(s) for s in rng.integers(0, 2**63, size=jobs)]
    per_transitions = math.ceil(cfg.rollout_transitions / jobs)
    per_actions = math.ceil(cfg.victim_action_target / jobs)

    _LOG.info(
        "Rollout: >= %d transitions and >= %d victim actions in %d shard(s)",
        cfg.rollout_transitions,
        cfg.victim_action_target,
        jobs,
    )

    def run_shard(seed: int) -> tuple[TrajectoryDataset, ActionCountTable]:
        return _rollout_worker(
            game,
            explorer_policy,
            victim_policy,
            cfg.attacker_player,
            per_transitions,
            per_actions,
            np.random.default_rng(seed),
        )

    if jobs == 1:
        shards = [run_shard(shard_seeds[0])]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            shards = list(pool.map(run_shard, shard_seeds))

    dataset = TrajectoryDataset()
    counts = ActionCountTable()
    for shard_data, shard_counts in shards:
        dataset.extend(shard_data)
        counts.merge(shard_counts)
    _LOG.info(
        "Rollout finished: %d transitions in %d trajectories, %d victim actions over %d states",
        len(dataset),
        len(dataset.boundaries),
        counts.total_observations,
        len(counts),
    )
    return dataset.validate(), counts


def planning_reward(counts: ActionCountTable, key: StateKey, cfg: PipelineConfig) -> float:
    """Renyi entropy of the victim's empirical policy at ``key``, or the
    unobserved penalty when the victim was never seen acting there."""
    if counts.observations(key) == 0:
        return cfg.unobserved_penalty
    return table_entropy(counts, key, EntropyKind.of_order(cfg.renyi_order))


def transition_reward(counts: ActionCountTable, transition: Transition, cfg: PipelineConfig) -> float:
    """Planning reward of one stored transition, read at its victim-faced state."""
    if transition.faced is None:
        return 0.0
    if cfg.plan_reward == "random":
        # a fixed random reward function over states, drawn from {-1, 0, 1}
        return float(derive_seed(cfg.seed, "plan-random", transition.faced.hex()) % 3 - 1)
    return planning_reward(counts, transition.faced, cfg)


def supported_actions(dataset: TrajectoryDataset) -> dict[StateKey, list[ActionId]]:
    """Actions present in the dataset for each source state, sorted."""
    support: dict[StateKey, set[ActionId]] = {}
    for t in dataset.transitions:
        support.setdefault(t.s, set()).add(t.a)
    return {key: sorted(actions) for key, actions in support.items()}


def plan_phase(
    dataset: TrajectoryDataset,
    counts: ActionCountTable,
    cfg: PipelineConfig,
    rng: np.random.Generator,
) -> QTable:
    """Batch Q-learning over the fixed dataset with the empirical-entropy reward.

    Backups bootstrap from the best action present in the dataset at the next
    state (0 when the dataset has none there). No game is consulted.
    """
    if not dataset.transitions:
        raise PipelineError("Cannot plan on an empty dataset", "empty-dataset")
    cfg.validate()
    transitions = dataset.transitions
    rewards = [transition_reward(counts, t, cfg) for t in transitions]
    support = supported_actions(dataset)
    q = QTable()

    _LOG.info("Planning: %d epochs over %d transitions (%d states)", cfg.plan_epochs, len(transitions), len(support))
    for epoch in range(cfg.plan_epochs):
        for i in rng.permutation(len(transitions)):
            t = transitions[i]
            next_value = 0.0
            if not t.terminal and t.s_next in support:
                next_value = max(q.row(t.s_next, support[t.s_next]))
            td_update(q, t.s, t.a, rewards[i], next_value, cfg.plan_lr, cfg.plan_gamma)
        _LOG.debug("Planning epoch %d done", epoch + 1)
    return q


def run_pipeline(
    game: GameConfig | Game,
    victim: QTable,
    cfg: PipelineConfig,
    rng: np.random.Generator,
) -> tuple[QTable, TrajectoryDataset, ActionCountTable, QTable]:
    """Explore, roll out and plan; returns (explorer, dataset, counts, attacker)."""
    explorer = explore_phase(game, victim, cfg, rng)
    dataset, counts = rollout_phase(game, explorer, victim, cfg, rng)
    attacker = plan_phase(dataset, counts, cfg, rng)
    return explorer, dataset, counts, attacker


def enumerate_transitions(
    game: GameConfig | Game,
    victim: Policy,
    attacker_player: int = const.P2,
    cap: int = const.DEFAULT_STATE_CAP,
) -> list[AttackerStep]:
    """Every attacker transition reachable against a deterministic victim.

    The victim policy is called with a fixed generator and must not depend on it.
    """
    game = as_game(game)
    rng = np.random.default_rng(0)
    start = game.new_game()
    if start.mover != attacker_player:
        start = game.apply_action(start, victim(start, rng)).next
    steps: list[AttackerStep] = []
    seen: set[StateKey] = set()
    frontier = [start]
    while frontier:
        state = frontier.pop()
        if state.terminal or state.key in seen:
            continue
        seen.add(state.key)
        if len(seen) > cap:
            raise PipelineError(f"More than {cap} attacker states in {game.config.name}", "state-space-cap-exceeded")
        for action in state.legal:
            faced = game.apply_action(state, action).next
            nxt = faced if faced.terminal else game.apply_action(faced, victim(faced, rng)).next
            steps.append(AttackerStep(state, action, faced, nxt))
            frontier.append(nxt)
    steps.sort(key=lambda s: (s.state.key, s.action))
    return steps


def dataset_from_steps(steps: list[AttackerStep]) -> TrajectoryDataset:
    """Pack enumerated steps into a single-segment dataset."""
    dataset = TrajectoryDataset()
    dataset.add_trajectory([s.transition() for s in steps])
    return dataset


def learn_victim_entropy(
    game: GameConfig | Game,
    victim: Policy,
    explorer: Policy,
    epsilon: float,
    rng: np.random.Generator,
    kind: EntropyKind = EntropyKind.shannon(),
    attacker_player: int = const.P2,
    counts: ActionCountTable | None = None,
    min_episodes: int = 1,
    max_episodes: int = const.DEFAULT_ENTROPY_EPISODE_BUDGET,
    on_episode: Callable[[int, ActionCountTable], None] | None = None,
) -> EntropyTable:
    """Estimate the victim's entropy at every state it faces until the tables settle.

    ``h0`` holds the entropies as of the previous episode boundary and ``h1``
    the current ones. Each victim action is counted and h1 of its state is
    recomputed from the counts. At the end of an episode the distance between
    the tables is taken over the states seen so far, then h0 catches up with
    h1. A state first seen during the episode enters the distance with h0 = 0
    and h1 = ``epsilon``, so an episode that discovers a state never ends the
    loop. Episodes repeat until the distance drops below ``epsilon`` (and at
    least ``min_episodes`` ran).
    """
    if not epsilon > 0.0:
        raise PipelineError(f"epsilon must be positive, got {epsilon}", "invalid-params")
    if min_episodes < 1 or max_episodes < min_episodes:
        raise PipelineError("Need 1 <= min_episodes <= max_episodes", "invalid-params")
    game = as_game(game)
    counts = counts if counts is not None else ActionCountTable()
    h0 = EntropyTable()
    h1 = EntropyTable()

    for episode in range(1, max_episodes + 1):
        touched: list[StateKey] = []
        fresh: set[StateKey] = set()
        state = game.new_game()
        while not state.terminal:
            if state.mover == attacker_player:
                state = game.apply_action(state, explorer(state, rng)).next
                continue
            key = state.key
            if key not in h1:
                fresh.add(key)
                h0[key] = 0.0
            touched.append(key)
            state = _victim_move(game, state, victim, counts, rng).next
            h1[key] = table_entropy(counts, key, kind)
        if on_episode is not None:
            on_episode(episode, counts)

        # states outside ``touched`` already agree in both tables
        previous = EntropyTable({k: h0[k] for k in touched})
        current = EntropyTable({k: epsilon if k in fresh else h1[k] for k in touched})
        distance = entropy_table_distance(previous, current)
        for key in touched:
            h0[key] = h1[key]
        if episode >= min_episodes and distance < epsilon:
            _LOG.info(
                "Victim entropy settled after %d episodes: %d states, distance %.3g",
                episode,
                len(h1),
                distance,
            )
            return h1
    raise PipelineError(f"Victim entropy did not settle within {max_episodes} episodes", "non-terminating-budget")


def sample_bound(params: SampleBoundParams) -> float:
    """Number of exploration trajectories sufficient for 3-epsilon-optimal planning:

    c * (H^2 S A / eps)^(2 (beta + 1)) * (H / A) * ln(S A H / (p eps)),
    beta = alpha / (2 (1 - alpha)).
    """
    params.validate()
    h, s, a = params.horizon, params.n_states, params.n_actions
    base = h * h * s * a / params.epsilon
    exponent = 2.0 * (params.beta + 1.0)
    return params.constant * base**exponent * (h / a) * math.log(s * a * h / (params.failure_prob * params.epsilon))
