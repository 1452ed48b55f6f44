import math
from functools import lru_cache

import numpy as np
import pytest

from reward_free_attack import const
from reward_free_attack.agents import GreedyPolicy, QTable, RewardSpec, train_q_agent, uniform_random_policy
from reward_free_attack.config import EvalConfig, GameConfig, TrainConfig, game_from_preset
from reward_free_attack.evaluation import (
    EvaluationError,
    MatchRecord,
    Winner,
    bellman_residual,
    evaluate_swap_in,
    play_match,
    summarize,
    value_iteration,
    verify_theorem_one,
)
from reward_free_attack.game import apply_action, new_game
from reward_free_attack.seeding import make_rng


class OraclePolicy:
    def __init__(self, value_map):
        self.value_map = value_map

    def __call__(self, state, rng):
        return self.value_map.policy[state.key]


def exact_result(state) -> int:
    """Undiscounted minimax result for p1: 1 win, 0 draw, -1 loss."""

    @lru_cache(maxsize=None)
    def solve(s) -> int:
        if s.terminal:
            return {const.P1: 1, const.P2: -1}.get(s.outcome, 0)
        results = [solve(apply_action(s, a).next) for a in s.legal]
        return max(results) if s.mover == const.P1 else min(results)

    return solve(state)


def test_random_matches_terminate_and_repeat(connect4):
    for seed in range(100):
        record = play_match(connect4, uniform_random_policy, uniform_random_policy, np.random.default_rng(seed))
        assert 1 <= record.moves <= connect4.max_moves
        again = play_match(connect4, uniform_random_policy, uniform_random_policy, np.random.default_rng(seed))
        assert again == record


def test_value_iteration_matches_exact_minimax(connect3):
    value_map = value_iteration(connect3, 0.9)
    start = new_game(connect3)
    v = value_map.values[start.key]
    assert int(np.sign(v)) == exact_result(start)
    assert bellman_residual(connect3, value_map) <= 1e-12


def test_optimal_player_never_does_worse_than_game_value(connect3):
    value_map = value_iteration(connect3, 0.9)
    v = value_map.values[new_game(connect3).key]
    rng = np.random.default_rng(8)
    for _ in range(200):
        record = play_match(connect3, OraclePolicy(value_map), uniform_random_policy, rng)
        if v > 0:
            assert record.winner is Winner.P1
        elif v == 0:
            assert record.winner is not Winner.P2


def test_terminal_states_are_worth_zero(connect3):
    value_map = value_iteration(connect3, 0.9)
    graph = value_map.graph
    terminal = [key for key, state in graph.states.items() if state.terminal]
    assert terminal
    assert all(value_map.values[key] == 0.0 for key in terminal)
    assert all(key not in value_map.policy for key in terminal)


def test_value_iteration_state_cap(connect4):
    with pytest.raises(EvaluationError) as err:
        value_iteration(connect4, 0.9, cap=10)
    assert err.value.code == "state-space-cap-exceeded"


@pytest.mark.parametrize("preset_fixture", ["connect3", "breakthrough3"])
@pytest.mark.parametrize("gamma", [0.5, 0.9, 0.99])
def test_steps_to_win_match_log_values(request, preset_fixture, gamma):
    game = request.getfixturevalue(preset_fixture)
    checks = verify_theorem_one(game, gamma)
    assert checks
    assert all(c.passed for c in checks)
    assert all(c.steps >= 1 for c in checks)


def test_one_move_from_a_win_is_worth_gamma(connect3):
    value_map = value_iteration(connect3, 0.9)
    checks = verify_theorem_one(connect3, 0.9)
    one_step = [c for c in checks if c.steps == 1]
    assert one_step
    assert all(value_map.values[c.key] == 0.9 for c in one_step)
    assert math.log(0.81) / math.log(0.9) == pytest.approx(2.0, abs=1e-9)


def test_losing_states_are_not_checked(connect3):
    value_map = value_iteration(connect3, 0.9)
    checked = {c.key for c in verify_theorem_one(connect3, 0.9)}
    losing = {key for key, v in value_map.values.items() if v < 0}
    assert losing
    assert not checked & losing


def test_swap_in_counts_and_reproducibility(connect4):
    cfg = EvalConfig(n_games=100, opening_moves=2)
    a = evaluate_swap_in(connect4, QTable(), None, cfg, np.random.default_rng(3))
    b = evaluate_swap_in(connect4, QTable(), None, cfg, np.random.default_rng(3))
    assert len(a) == 100
    assert a == b
    assert all(r.swap_ply == 4 for r in a)


def test_swap_to_random_is_the_random_baseline(connect4):
    cfg = EvalConfig(n_games=50, opening_moves=3)
    baseline = evaluate_swap_in(connect4, QTable(), None, cfg, np.random.default_rng(5))
    swapped = evaluate_swap_in(connect4, QTable(), uniform_random_policy, cfg, np.random.default_rng(5))
    assert swapped == baseline


def test_zero_opening_is_a_plain_match_series(connect4):
    cfg = EvalConfig(n_games=20, opening_moves=0)
    records = evaluate_swap_in(connect4, QTable(), QTable(), cfg, np.random.default_rng(1))
    assert all(r.swap_ply == 0 and r.retries == 0 for r in records)
    # two greedy players over empty tables always replay the same game
    assert len({(r.winner, r.moves) for r in records}) == 1


def test_parallel_evaluation_keeps_order(connect4):
    serial = evaluate_swap_in(connect4, QTable(), None, EvalConfig(n_games=30), np.random.default_rng(9))
    parallel = evaluate_swap_in(connect4, QTable(), None, EvalConfig(n_games=30, jobs=3), np.random.default_rng(9))
    assert parallel == serial


def test_victim_as_second_player(connect4):
    cfg = EvalConfig(n_games=10, victim_player=const.P2)
    assert cfg.attacker_player == const.P1
    records = evaluate_swap_in(connect4, QTable(), None, cfg, np.random.default_rng(2))
    assert len(records) == 10


def test_games_ending_in_the_opening_are_kept_unswapped():
    config = GameConfig(rules=const.RULES_CONNECT_K, rows=2, cols=2, k=2)
    cfg = EvalConfig(n_games=3, opening_moves=10, max_retries=3)
    records = evaluate_swap_in(config, QTable(), None, cfg, np.random.default_rng(0))
    assert len(records) == 3
    assert all(not r.swapped and r.retries == 4 and r.swap_ply == 20 for r in records)
    assert all(r.winner is not Winner.DRAW and r.moves <= 4 for r in records)
    summary = summarize(records, cfg.attacker_player)
    assert summary.unswapped_rate == 1.0
    assert summary.n_games == 3


def test_default_opening_on_default_game_still_yields_records(connect4):
    victim = QTable()
    records = evaluate_swap_in(connect4, victim, None, EvalConfig(n_games=20, max_retries=2), np.random.default_rng(5))
    assert len(records) == 20
    assert all(r.swap_ply == 10 for r in records)
    assert all(r.swapped == (r.retries <= 2) for r in records)


def test_summarize():
    wins = [MatchRecord(Winner.P2, 10) for _ in range(4)]
    summary = summarize(wins, const.P2)
    assert summary.win_rate == 1.0
    assert summary.mean_moves == 10.0
    assert summary.std_moves == 0.0

    mixed = summarize([MatchRecord(Winner.P1, 8), MatchRecord(Winner.DRAW, 12)], const.P2)
    assert mixed.mean_moves == 10.0
    assert mixed.std_moves == pytest.approx(2 * math.sqrt(2))
    assert mixed.win_rate == 0.0
    assert mixed.draw_rate == 0.5
    assert mixed.loss_rate == 0.5

    assert summarize([MatchRecord(Winner.P1, 7)], const.P1).std_moves == 0.0
    with pytest.raises(EvaluationError) as err:
        summarize([], const.P2)
    assert err.value.code == "empty-records"


@pytest.mark.slow
def test_victim_entropy_attacker_drags_out_breakthrough_games():
    game = game_from_preset("breakthrough-variant")
    victim_cfg = TrainConfig(episodes=20_000, seed=7)
    victim = train_q_agent(game, uniform_random_policy, RewardSpec.game_reward(), victim_cfg, make_rng(7, "victim"))

    attacker_cfg = TrainConfig(
        learning_rate=1.0,
        gamma=0.9,
        episodes=20_000,
        epsilon_decay_episodes=15_000,
        seed=7,
        player=const.P2,
        opening_moves=1,
    )
    attacker = train_q_agent(
        game, GreedyPolicy(victim), RewardSpec.victim_entropy(victim), attacker_cfg, make_rng(7, "attacker")
    )

    cfg = EvalConfig(opening_moves=1, n_games=1000, seed=7)
    trained = summarize(evaluate_swap_in(game, victim, attacker, cfg, make_rng(7, "evaluate")), const.P2)
    baseline = summarize(evaluate_swap_in(game, victim, None, cfg, make_rng(7, "evaluate")), const.P2)
    assert trained.mean_moves >= 1.25 * baseline.mean_moves
