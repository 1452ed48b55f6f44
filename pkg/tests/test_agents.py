import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reward_free_attack import const
from reward_free_attack.agents import (
    AgentError,
    GreedyPolicy,
    QTable,
    RewardKind,
    RewardSpec,
    antagonist_reward,
    argmax_lowest,
    behavior_policy,
    epsilon_greedy_action,
    q_update,
    greedy_action,
    softmax_policy,
    state_value,
    td_update,
    train_q_agent,
    uniform_random_policy,
)
from reward_free_attack.config import ConfigError, GameConfig, TrainConfig
from reward_free_attack.entropy import ActionCountTable, record_victim_action
from reward_free_attack.evaluation import play_match, summarize
from reward_free_attack.game import RewardAuditGame, apply_action, new_game


@pytest.fixture
def pair_game() -> GameConfig:
    """Two columns, so non-terminal states have at most two actions."""
    return GameConfig(rules=const.RULES_CONNECT_K, rows=2, cols=2, k=2)


def test_qtable_defaults_and_finiteness():
    q = QTable()
    assert q.get(b"s", 3) == 0.0
    q.set(b"s", 3, 1.5)
    assert q.row(b"s", [1, 3]) == [0.0, 1.5]
    assert len(q) == 1 and b"s" in q
    with pytest.raises(AgentError) as err:
        q.set(b"s", 1, float("nan"))
    assert err.value.code == "nonfinite-input"


def test_argmax_prefers_lowest_index():
    assert argmax_lowest([1.0, 3.0, 3.0]) == 1
    assert argmax_lowest([0.0, 0.0]) == 0


def test_greedy_and_epsilon_greedy(connect3, rng):
    state = new_game(connect3)
    q = QTable()
    assert greedy_action(q, state) == 0
    q.set(state.key, 2, 0.5)
    assert greedy_action(q, state) == 2
    assert epsilon_greedy_action(q, state, 0.0, rng) == 2
    picks = {epsilon_greedy_action(q, state, 1.0, rng) for _ in range(200)}
    assert picks == {0, 1, 2}
    with pytest.raises(AgentError) as err:
        epsilon_greedy_action(q, state, 1.5, rng)
    assert err.value.code == "invalid-params"


def test_terminal_state_has_no_action(connect3, rng):
    state = new_game(connect3)
    for action in (0, 1, 0, 1, 0):
        state = apply_action(state, action).next
    assert state.terminal
    with pytest.raises(AgentError) as err:
        greedy_action(QTable(), state)
    assert err.value.code == "terminal-state"
    assert state_value(QTable(), state) == 0.0


def test_softmax_of_equal_values_is_uniform(connect3):
    probs = softmax_policy(QTable(), new_game(connect3))
    assert probs.tolist() == pytest.approx([1 / 3] * 3)


def test_behavior_policies(connect3, rng):
    state = new_game(connect3)
    q = QTable({state.key: {1: 5.0}})
    assert behavior_policy(q, "greedy")(state, rng) == 1
    assert behavior_policy(q, "epsilon", 0.0)(state, rng) == 1
    assert behavior_policy(q, "softmax")(state, rng) in (0, 1, 2)
    with pytest.raises(AgentError):
        behavior_policy(q, "bogus")


def test_td_update_exact_with_unit_learning_rate():
    q = QTable()
    td_update(q, b"s", 0, 1.0, 0.5, 1.0, 0.9)
    assert q.get(b"s", 0) == pytest.approx(1.45)
    td_update(q, b"s", 0, 0.0, 0.0, 0.5, 0.9)
    assert q.get(b"s", 0) == pytest.approx(0.725)


@pytest.mark.parametrize(
    "reward, next_value, lr, gamma, code",
    [
        (1.0, 0.0, 0.0, 0.9, "invalid-params"),
        (1.0, 0.0, 0.5, 1.0, "invalid-params"),
        (float("inf"), 0.0, 0.5, 0.9, "nonfinite-input"),
        (0.0, float("nan"), 0.5, 0.9, "nonfinite-input"),
    ],
)
def test_td_update_rejects_bad_inputs(reward, next_value, lr, gamma, code):
    with pytest.raises(AgentError) as err:
        td_update(QTable(), b"s", 0, reward, next_value, lr, gamma)
    assert err.value.code == code


def _attacker_step(config):
    s_t = new_game(config)
    faced = apply_action(s_t, 0).next
    return s_t, faced, faced


def test_victim_entropy_reward_of_uniform_pair(pair_game, rng):
    s_t, faced, s_next = _attacker_step(pair_game)
    assert len(faced.legal) == 2
    spec = RewardSpec.victim_entropy(QTable(), order=0.5)
    reward = antagonist_reward(spec, s_t, faced, s_next, False, 0, 1, rng)
    assert reward == pytest.approx(math.log(2))


def test_reward_adapters(connect3, rng):
    s_t, faced, s_next = _attacker_step(connect3)
    victim = QTable({faced.key: {0: 0.2, 1: 0.7}})
    assert antagonist_reward(RewardSpec.game_reward(), s_t, faced, s_next, True, 1, 3, rng) == 1.0
    assert antagonist_reward(RewardSpec.move_maximizer(), s_t, faced, s_next, False, 0, 3, rng) == 3.0
    assert antagonist_reward(RewardSpec.constant(0.25), s_t, faced, s_next, False, 0, 1, rng) == 0.25
    assert antagonist_reward(RewardSpec.antagonistic_value(victim), s_t, faced, s_next, False, 0, 1, rng) == -0.7
    assert antagonist_reward(RewardSpec.random_reward(5), s_t, faced, s_next, False, 0, 1, rng) in (-1.0, 0.0, 1.0)


def test_empirical_entropy_reward(connect3, rng):
    s_t, faced, s_next = _attacker_step(connect3)
    counts = ActionCountTable()
    spec = RewardSpec.empirical_victim_entropy(counts, order=0.5, unobserved_penalty=-1.0)
    assert antagonist_reward(spec, s_t, faced, s_next, False, 0, 1, rng) == -1.0
    record_victim_action(counts, faced.key, 0, 3)
    record_victim_action(counts, faced.key, 2, 3)
    assert antagonist_reward(spec, s_t, faced, s_next, False, 0, 1, rng) == pytest.approx(math.log(2))


def test_entropy_rewards_vanish_at_terminal_states(connect3, rng):
    state = new_game(connect3)
    for action in (0, 1, 0, 1):
        state = apply_action(state, action).next
    final = apply_action(state, 0).next
    assert final.terminal
    spec = RewardSpec.victim_entropy(QTable())
    assert antagonist_reward(spec, state, final, final, True, 0, 3, rng) == 0.0


def test_missing_victim_table():
    with pytest.raises(AgentError) as err:
        RewardSpec.antagonistic_value(None).validate()
    assert err.value.code == "missing-victim-table"
    with pytest.raises(AgentError) as err:
        RewardSpec.empirical_victim_entropy(None).validate()
    assert err.value.code == "missing-victim-table"
    assert RewardSpec.victim_entropy(QTable()).default_gamma == const.ENTROPY_GAMMA
    assert RewardSpec.game_reward().kind is RewardKind.GAME


def test_training_is_deterministic(connect3):
    cfg = TrainConfig(episodes=200, epsilon_decay_episodes=100, seed=1)
    a = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(1))
    b = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(1))
    assert a == b
    assert len(a) > 0


def test_only_game_reward_reads_environment_rewards(connect3):
    cfg = TrainConfig(episodes=50, epsilon_decay_episodes=25)
    game = RewardAuditGame(connect3)
    train_q_agent(game, uniform_random_policy, RewardSpec.move_maximizer(), cfg, np.random.default_rng(0))
    assert game.steps > 0
    assert game.reward_reads == 0
    train_q_agent(game, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(0))
    assert game.reward_reads > 0


def test_checkpoints_are_reported(connect3):
    cfg = TrainConfig(episodes=100, epsilon_decay_episodes=50, checkpoint_every=25)
    seen = []
    train_q_agent(
        connect3,
        uniform_random_policy,
        RewardSpec.game_reward(),
        cfg,
        np.random.default_rng(0),
        on_checkpoint=lambda episode, q: seen.append(episode),
    )
    assert seen == [25, 50, 75, 100]


def test_second_player_agent_learns_its_own_states(connect3):
    cfg = TrainConfig(episodes=50, epsilon_decay_episodes=25, player=const.P2)
    q = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(0))
    assert all(key[4] == const.P2 for key, _, _ in q.items())


def test_full_exploration_is_uniform(connect3):
    state = new_game(connect3)
    q = QTable({state.key: {0: 9.0}})
    rng = np.random.default_rng(17)
    picks = np.array([epsilon_greedy_action(q, state, 1.0, rng) for _ in range(100_000)])
    for action in state.legal:
        assert abs(np.mean(picks == action) - 1 / 3) <= 0.01


def test_softmax_of_a_pair(pair_game):
    state = new_game(pair_game)
    assert state.legal == (0, 1)
    probs = softmax_policy(QTable({state.key: {0: 1.0, 1: 0.0}}), state)
    assert probs[0] == pytest.approx(0.731059, abs=1e-6)
    shifted = softmax_policy(QTable({state.key: {0: 1000.0, 1: 999.0}}), state)
    assert shifted.tolist() == pytest.approx(probs.tolist(), abs=1e-12)


@given(
    values=st.lists(st.integers(-100, 100), min_size=3, max_size=3),
    shift=st.integers(-1000, 1000),
    scale=st.integers(1, 50),
)
def test_greedy_action_ignores_shift_and_scale(values, shift, scale):
    state = new_game(GameConfig(rules=const.RULES_CONNECT_K, rows=3, cols=3, k=3))
    base = QTable({state.key: dict(enumerate(map(float, values)))})
    moved = QTable({state.key: {a: float(scale * v + shift) for a, v in enumerate(values)}})
    assert greedy_action(moved, state) == greedy_action(base, state)


@given(
    old=st.floats(-10, 10),
    reward=st.floats(-1, 1),
    next_value=st.floats(-10, 10),
    lr=st.floats(0.01, 1.0),
    gamma=st.floats(0.01, 0.99),
)
def test_td_update_contracts_toward_its_target(old, reward, next_value, lr, gamma):
    q = QTable({b"s": {0: old}})
    target = reward + gamma * next_value
    td_update(q, b"s", 0, reward, next_value, lr, gamma)
    assert abs(q.get(b"s", 0) - target) == pytest.approx((1 - lr) * abs(old - target), abs=1e-9)


def _agent_moves(config):
    """Every p1 decision against the lowest-action opponent, as (state, action, result after the reply)."""
    opponent = GreedyPolicy(QTable())
    start = new_game(config)
    frontier, seen, moves = [start], {start.key}, []
    while frontier:
        state = frontier.pop()
        for action in state.legal:
            step = apply_action(state, action)
            final = step if step.terminal else apply_action(step.next, opponent(step.next, None))
            moves.append((state, action, final))
            if not final.terminal and final.next.key not in seen:
                seen.add(final.next.key)
                frontier.append(final.next)
    return moves


def test_unit_rate_sweeps_reach_the_fixed_point(connect3):
    gamma = 0.9
    moves = _agent_moves(connect3)
    options = {}
    for state, action, final in moves:
        options.setdefault(state.key, []).append(final)
    exact = {}

    def target(final):
        return final.reward_p1 + (0.0 if final.terminal else gamma * value(final.next.key))

    def value(key):
        if key not in exact:
            exact[key] = max(target(final) for final in options[key])
        return exact[key]

    q = QTable()
    for _ in range(1000):
        before = list(q.items())
        for state, action, final in moves:
            q_update(q, state.key, action, final.reward_p1, final.next, final.terminal, 1.0, gamma)
        if list(q.items()) == before:
            break
    for state, action, final in moves:
        assert abs(q.get(state.key, action) - target(final)) <= 1e-8


def test_constant_zero_reward_leaves_every_value_at_default(connect3):
    cfg = TrainConfig(episodes=300, seed=4)
    q = train_q_agent(connect3, uniform_random_policy, RewardSpec.constant(0.0), cfg, np.random.default_rng(4))
    assert len(q) > 0
    assert all(value == 0.0 for _, _, value in q.items())


def test_training_opening_starts_past_the_empty_board(connect3):
    cfg = TrainConfig(episodes=300, seed=3, opening_moves=1)
    q = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(3))
    assert len(q) > 0
    assert new_game(connect3).key not in q
    # key layout: five header bytes, then one byte per cell
    assert all(sum(1 for cell in key[5:] if cell) >= 2 for key, _, _ in q.items())

    plain_cfg = TrainConfig(episodes=300, seed=3)
    rng = np.random.default_rng(3)
    plain = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), plain_cfg, rng)
    assert new_game(connect3).key in plain
    with pytest.raises(ConfigError):
        TrainConfig(opening_moves=-1).validate()


@pytest.mark.slow
def test_trained_victim_beats_random_play(connect3):
    cfg = TrainConfig(episodes=20_000, seed=11)
    q = train_q_agent(connect3, uniform_random_policy, RewardSpec.game_reward(), cfg, np.random.default_rng(11))
    rng = np.random.default_rng(99)
    records = [play_match(connect3, GreedyPolicy(q), uniform_random_policy, rng) for _ in range(1000)]
    assert summarize(records, const.P1).win_rate >= 0.8
