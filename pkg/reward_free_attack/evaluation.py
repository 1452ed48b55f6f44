"""
Match play, swap-in evaluation, the minimax value-iteration oracle and the
steps-to-win check on its values.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from reward_free_attack import const
from reward_free_attack.agents import (
    GreedyPolicy,
    Policy,
    QTable,
    argmax_lowest,
    uniform_random_policy,
)
from reward_free_attack.config import EvalConfig, GameConfig, PipelineConfig
from reward_free_attack.entropy import ActionCountTable
from reward_free_attack.errors import RewardFreeAttackError
from reward_free_attack.game import ActionId, Game, GameState, StateKey, as_game, opponent_of
from reward_free_attack.pipeline import TrajectoryDataset, supported_actions, transition_reward
from reward_free_attack.seeding import make_rng

_LOG = logging.getLogger(__name__)

_MAX_SWEEPS = 10_000


class EvaluationError(RewardFreeAttackError):
    """Evaluation or oracle failure."""


class Winner(str, Enum):
    P1 = "p1"
    P2 = "p2"
    DRAW = "draw"

    @classmethod
    def of(cls, outcome: int) -> "Winner":
        if outcome == const.P1:
            return cls.P1
        if outcome == const.P2:
            return cls.P2
        return cls.DRAW

    @property
    def player(self) -> int | None:
        return const.PLAYERS_BY_NAME.get(self.value)


@dataclass(frozen=True)
class MatchRecord:
    """Result of one game. ``swap_ply`` is the ply at which the attacker took
    over (0 if it played from the start); ``retries`` counts openings that
    ended the game before the swap. ``swapped`` is False when every opening
    did, and the record is then the last of those games."""

    winner: Winner
    moves: int
    swap_ply: int = 0
    retries: int = 0
    seed: int = 0
    swapped: bool = True


@dataclass(frozen=True)
class MetricsSummary:
    n_games: int
    win_rate: float
    draw_rate: float
    loss_rate: float
    mean_moves: float
    std_moves: float
    mean_retries: float = 0.0
    unswapped_rate: float = 0.0


@dataclass
class _StateGraph:
    states: dict[StateKey, GameState]
    order: list[StateKey]
    # (action, successor key, terminal payoff for the solving player)
    edges: dict[StateKey, list[tuple[ActionId, StateKey, float]]]


@dataclass
class ValueMap:
    """Minimax values and greedy actions from ``player``'s point of view."""

    values: dict[StateKey, float]
    policy: dict[StateKey, ActionId]
    player: int = const.P1
    gamma: float = const.DEFAULT_GAMMA
    graph: _StateGraph | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class TheoremCheck:
    key: StateKey
    steps: int
    log_value: float
    passed: bool


def _as_policy(agent: QTable | Policy | None) -> Policy:
    if agent is None:
        return uniform_random_policy
    if isinstance(agent, QTable):
        return GreedyPolicy(agent)
    return agent


def play_match(
    game: GameConfig | Game,
    p1_policy: Policy,
    p2_policy: Policy,
    rng: np.random.Generator,
    start: GameState | None = None,
) -> MatchRecord:
    """Play to the end; the move cap makes every game finite."""
    game = as_game(game)
    state = start if start is not None else game.new_game()
    policies = {const.P1: p1_policy, const.P2: p2_policy}
    while not state.terminal:
        state = game.apply_action(state, policies[state.mover](state, rng)).next
    assert state.outcome is not None
    return MatchRecord(winner=Winner.of(state.outcome), moves=state.move_count)


def _swap_in_match(game: Game, victim: Policy, attacker: Policy, cfg: EvalConfig, seed: int) -> MatchRecord:
    swap_ply = 2 * cfg.opening_moves
    for attempt in range(cfg.max_retries + 1):
        rng = make_rng(seed, attempt)
        state = game.new_game()
        while not state.terminal and state.move_count < swap_ply:
            policy = victim if state.mover == cfg.victim_player else uniform_random_policy
            state = game.apply_action(state, policy(state, rng)).next
        if state.terminal:
            continue
        if cfg.victim_player == const.P1:
            record = play_match(game, victim, attacker, rng, start=state)
        else:
            record = play_match(game, attacker, victim, rng, start=state)
        return MatchRecord(record.winner, record.moves, swap_ply=swap_ply, retries=attempt, seed=seed)
    assert state.outcome is not None
    return MatchRecord(
        Winner.of(state.outcome),
        state.move_count,
        swap_ply=swap_ply,
        retries=cfg.max_retries + 1,
        seed=seed,
        swapped=False,
    )


def evaluate_swap_in(
    game: GameConfig | Game,
    victim: QTable,
    attacker: QTable | Policy | None,
    cfg: EvalConfig,
    rng: np.random.Generator,
) -> list[MatchRecord]:
    """Run the swap-in protocol ``cfg.n_games`` times.

    The greedy victim first plays ``cfg.opening_moves`` moves against a
    uniform-random opponent, then the attacker (greedy if given as a table,
    uniform random if None) takes the opponent's seat until the end. An
    opening that ends the game is replayed with a fresh stream, at most
    ``cfg.max_retries`` times; after that the game is kept unswapped.
    Every game draws its own seed up front, so records are identical and in
    game order whatever ``cfg.jobs`` is. Games then run on that many threads.
    """
    game = as_game(game)
    cfg.validate()
    victim_policy = GreedyPolicy(victim)
    attacker_policy = _as_policy(attacker)
    seeds = [int(s) for s in rng.integers(0, 2**63, size=cfg.n_games)]

    def run(seed: int) -> MatchRecord:
        return _swap_in_match(game, victim_policy, attacker_policy, cfg, seed)

    if cfg.jobs == 1:
        records = [run(seed) for seed in seeds]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(run, seeds))
    retries = sum(r.retries for r in records)
    if retries:
        _LOG.warning("%d openings ended before the swap and were replayed", retries)
    unswapped = sum(1 for r in records if not r.swapped)
    if unswapped:
        _LOG.warning(
            "%d of %d games never reached the swap at ply %d", unswapped, len(records), 2 * cfg.opening_moves
        )
    return records


def summarize(records: Sequence[MatchRecord], attacker_player: int) -> MetricsSummary:
    """Attacker win/draw/loss rates and the mean and sample std of game length.

    Unswapped games count like the others; ``unswapped_rate`` reports their share.
    """
    if not records:
        raise EvaluationError("No match records to summarize", "empty-records")
    n = len(records)
    wins = sum(1 for r in records if r.winner.player == attacker_player)
    draws = sum(1 for r in records if r.winner == Winner.DRAW)
    moves = np.array([r.moves for r in records], dtype=np.float64)
    return MetricsSummary(
        n_games=n,
        win_rate=wins / n,
        draw_rate=draws / n,
        loss_rate=(n - wins - draws) / n,
        mean_moves=float(moves.mean()),
        std_moves=float(moves.std(ddof=1)) if n > 1 else 0.0,
        mean_retries=sum(r.retries for r in records) / n,
        unswapped_rate=sum(1 for r in records if not r.swapped) / n,
    )


def _enumerate(game: Game, player: int, cap: int) -> _StateGraph:
    start = game.new_game()
    states = {start.key: start}
    order = [start.key]
    edges: dict[StateKey, list[tuple[ActionId, StateKey, float]]] = {}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        out = []
        for action in state.legal:
            nxt = game.apply_action(state, action).next
            payoff = 0.0
            if nxt.outcome == player:
                payoff = 1.0
            elif nxt.outcome == opponent_of(player):
                payoff = -1.0
            out.append((action, nxt.key, payoff))
            if nxt.key not in states:
                states[nxt.key] = nxt
                order.append(nxt.key)
                if len(states) > cap:
                    raise EvaluationError(
                        f"{game.config.name} has more than {cap} reachable states", "state-space-cap-exceeded"
                    )
                queue.append(nxt)
        edges[state.key] = out
    _LOG.debug("Enumerated %d states of %s", len(states), game.config.name)
    return _StateGraph(states, order, edges)


def _backup(graph: _StateGraph, values: dict[StateKey, float], key: StateKey, gamma: float) -> list[float]:
    return [gamma * (payoff + values[nxt]) for _, nxt, payoff in graph.edges[key]]


def _sweep(graph: _StateGraph, values: dict[StateKey, float], player: int, gamma: float) -> float:
    change = 0.0
    for key in reversed(graph.order):
        if not graph.edges[key]:
            continue
        backups = _backup(graph, values, key, gamma)
        new = max(backups) if graph.states[key].mover == player else min(backups)
        change = max(change, abs(new - values[key]))
        values[key] = new
    return change


def value_iteration(
    game: GameConfig | Game,
    gamma: float,
    tol: float = const.DEFAULT_VI_TOLERANCE,
    player: int = const.P1,
    cap: int = const.DEFAULT_STATE_CAP,
) -> ValueMap:
    """Minimax values with a discount per ply; terminal states are worth 0 and
    the +1/-1/0 result is received on entering them.

    Sweeps run over the reachable states in reverse breadth-first order until
    no value moves by ``tol`` or more. Greedy actions break ties by lowest id;
    the opponent's entries minimize.
    """
    if not 0.0 < gamma < 1.0:
        raise EvaluationError(f"gamma={gamma} must be in (0, 1)", "invalid-params")
    if not tol > 0.0:
        raise EvaluationError(f"tol={tol} must be positive", "invalid-params")
    game = as_game(game)
    graph = _enumerate(game, player, cap)
    values = {key: 0.0 for key in graph.order}
    for sweep in range(1, _MAX_SWEEPS + 1):
        if _sweep(graph, values, player, gamma) < tol:
            break
    else:
        raise EvaluationError(f"Value iteration did not converge in {_MAX_SWEEPS} sweeps", "no-convergence")
    _LOG.info("Value iteration on %s: %d states, %d sweeps", game.config.name, len(values), sweep)

    policy: dict[StateKey, ActionId] = {}
    for key, out in graph.edges.items():
        if not out:
            continue
        backups = _backup(graph, values, key, gamma)
        if graph.states[key].mover != player:
            backups = [-b for b in backups]
        policy[key] = out[argmax_lowest(backups)][0]
    return ValueMap(values=values, policy=policy, player=player, gamma=gamma, graph=graph)


def bellman_residual(game: GameConfig | Game, value_map: ValueMap, gamma: float | None = None) -> float:
    """Largest change one more minimax sweep would make to ``value_map``."""
    gamma = value_map.gamma if gamma is None else gamma
    graph = value_map.graph or _enumerate(as_game(game), value_map.player, const.DEFAULT_STATE_CAP)
    values = dict(value_map.values)
    return _sweep(graph, values, value_map.player, gamma)


def verify_theorem_one(
    game: GameConfig | Game,
    gamma: float,
    player: int = const.P1,
    tolerance: float = const.THEOREM_ONE_TOLERANCE,
) -> list[TheoremCheck]:
    """Check that the optimal value is gamma to the number of plies to the win.

    Every state the ``player`` wins under optimal play (value > 0) is played
    out with the oracle's greedy actions for both sides; the plies counted
    must equal log_gamma of its value.
    """
    value_map = value_iteration(game, gamma, player=player)
    graph = value_map.graph
    assert graph is not None
    game = as_game(game)
    checks = []
    for key in sorted(value_map.values):
        value = value_map.values[key]
        if value <= 0.0:
            continue
        state = graph.states[key]
        steps = 0
        while not state.terminal:
            state = game.apply_action(state, value_map.policy[state.key]).next
            steps += 1
        log_value = math.log(value) / math.log(gamma)
        passed = state.outcome == player and abs(steps - log_value) <= tolerance
        checks.append(TheoremCheck(key, steps, log_value, passed))
    failed = sum(1 for c in checks if not c.passed)
    if failed:
        _LOG.error("%d of %d winning states fail the steps-to-win check", failed, len(checks))
    else:
        _LOG.info("All %d winning states pass the steps-to-win check", len(checks))
    return checks


def solve_dataset_mdp(
    dataset: TrajectoryDataset,
    counts: ActionCountTable,
    cfg: PipelineConfig,
    tol: float = const.DEFAULT_VI_TOLERANCE,
) -> QTable:
    """Exact Q-values of the MDP the dataset defines, under the planning reward.

    Successors of a (state, action) pair are weighted by how often the
    dataset holds them; bootstraps use actions the dataset has at the next
    state.
    """
    if not dataset.transitions:
        raise EvaluationError("Cannot solve an empty dataset", "empty-dataset")
    support = supported_actions(dataset)
    grouped: dict[tuple[StateKey, ActionId], list[tuple[float, StateKey, bool]]] = {}
    for t in dataset.transitions:
        grouped.setdefault((t.s, t.a), []).append((transition_reward(counts, t, cfg), t.s_next, t.terminal))

    q = QTable()
    gamma = cfg.plan_gamma
    for _ in range(_MAX_SWEEPS):
        change = 0.0
        for (s, a), outcomes in sorted(grouped.items()):
            targets = []
            for reward, s_next, terminal in outcomes:
                next_value = 0.0
                if not terminal and s_next in support:
                    next_value = max(q.row(s_next, support[s_next]))
                targets.append(reward + gamma * next_value)
            new = math.fsum(targets) / len(targets)
            change = max(change, abs(new - q.get(s, a)))
            q.set(s, a, new)
        if change < tol:
            return q
    raise EvaluationError(f"Dataset MDP did not converge in {_MAX_SWEEPS} sweeps", "no-convergence")
