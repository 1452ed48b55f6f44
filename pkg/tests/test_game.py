import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reward_free_attack import const
from reward_free_attack.agents import uniform_random_policy
from reward_free_attack.config import ConfigError, GameConfig, game_from_preset
from reward_free_attack.game import (
    Game,
    GameError,
    GameState,
    RewardAuditGame,
    action_space_size,
    apply_action,
    canonical_key,
    legal_actions,
    new_game,
)


def play(state, *actions):
    for action in actions:
        state = apply_action(state, action).next
    return state


def test_new_connect_game(connect4):
    state = new_game(connect4)
    assert state.mover == const.P1
    assert legal_actions(state) == [0, 1, 2, 3]
    assert not state.terminal
    key = canonical_key(state)
    assert len(key) == 5 + 16
    assert key[:5] == bytes([const.KEY_FORMAT_VERSION, 1, 4, 4, const.P1])
    assert action_space_size(connect4) == 4


def test_vertical_line_wins(connect4):
    state = play(new_game(connect4), 0, 1, 0, 1)
    step = apply_action(state, 0)
    assert step.terminal
    assert step.next.outcome == const.P1
    assert step.reward_p1 == 1 and step.reward_p2 == -1
    assert step.reward_for(const.P2) == -1
    assert legal_actions(step.next) == []


def test_nonterminal_step_has_zero_rewards(connect4):
    step = apply_action(new_game(connect4), 2)
    assert not step.terminal
    assert step.reward_p1 == 0 and step.reward_p2 == 0
    assert step.next.mover == const.P2
    assert step.next.cell(0, 2) == const.P1


def test_full_board_is_a_draw():
    config = GameConfig(rules=const.RULES_CONNECT_K, rows=2, cols=3, k=3)
    state = play(new_game(config), 0, 1, 2, 0, 1)
    step = apply_action(state, 2)
    assert step.terminal
    assert step.next.outcome == 0
    assert step.reward_p1 == 0 and step.reward_p2 == 0


def test_full_column_is_illegal(connect3):
    state = play(new_game(connect3), 0, 0, 0)
    assert 0 not in legal_actions(state)
    with pytest.raises(GameError) as err:
        apply_action(state, 0)
    assert err.value.code == "illegal-action"


def test_transpositions_share_a_key(connect4):
    a = play(new_game(connect4), 0, 1, 2)
    b = play(new_game(connect4), 2, 1, 0)
    assert canonical_key(a) == canonical_key(b)
    assert canonical_key(a) != canonical_key(play(new_game(connect4), 0, 1, 3))


def test_breakthrough_moves_and_captures(breakthrough3):
    state = new_game(breakthrough3)
    assert state.pieces(const.P1) == 3 and state.pieces(const.P2) == 3
    assert legal_actions(state) == [1, 2, 3, 4, 5, 6, 7]

    state = play(state, 4)
    # straight moves never capture
    assert legal_actions(state) == [19, 20, 21, 23, 24, 25]

    state = play(state, 20)
    assert state.pieces(const.P1) == 2
    state = play(state, 2, 25)
    step = apply_action(state, 12)
    assert step.terminal
    assert step.next.outcome == const.P1
    assert step.next.move_count == 5


def test_breakthrough_wins_when_opponent_cannot_move():
    config = GameConfig(rules=const.RULES_BREAKTHROUGH, rows=4, cols=4, pawn_rows=1)
    board = [const.EMPTY] * 16
    board[4] = const.P1
    board[9] = const.P2
    state = GameState(config=config, board=tuple(board), mover=const.P1, move_count=6)
    step = apply_action(state, 14)
    assert step.next.pieces(const.P2) == 0
    assert step.terminal
    assert step.next.outcome == const.P1


@pytest.mark.parametrize(
    "overrides",
    [{"rows": 1}, {"k": 5}, {"max_moves": 3}],
)
def test_invalid_connect_configs(overrides):
    with pytest.raises(ConfigError):
        game_from_preset("connect-k", **overrides)


def test_invalid_pawn_rows():
    with pytest.raises(ConfigError):
        game_from_preset("breakthrough-variant", pawn_rows=2)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), preset=st.sampled_from(sorted(const.GAME_PRESETS)))
def test_random_games_terminate(seed, preset):
    config = game_from_preset(preset)
    rng = np.random.default_rng(seed)
    state = new_game(config)
    while not state.terminal:
        legal = legal_actions(state)
        assert legal == sorted(legal)
        state = apply_action(state, uniform_random_policy(state, rng)).next
    assert state.move_count <= config.max_moves
    assert legal_actions(state) == []


def test_game_object_wraps_functions(connect3):
    game = Game(connect3)
    state = game.new_game()
    assert game.legal_actions(state) == [0, 1, 2]
    assert game.canonical_key(state) == state.key
    assert game.action_space_size == 3


def test_audit_game_counts_reward_reads(connect3):
    game = RewardAuditGame(connect3)
    state = game.new_game()
    step = game.apply_action(state, 0)
    assert step.next.mover == const.P2
    assert game.reward_reads == 0
    step.reward_for(const.P1)
    assert game.reward_reads == 1
    assert game.steps == 1


def test_keys_are_injective_over_the_whole_connect_three_game(connect3):
    start = new_game(connect3)
    positions = {start.key: (start.board, start.mover)}
    frontier = [start]
    while frontier:
        state = frontier.pop()
        for action in state.legal:
            child = apply_action(state, action).next
            position = (child.board, child.mover)
            if child.key in positions:
                assert positions[child.key] == position
                continue
            positions[child.key] = position
            frontier.append(child)
    assert len(set(positions.values())) == len(positions)
    assert len({len(key) for key in positions}) == 1


def test_breakthrough_start_has_ten_moves():
    state = new_game(game_from_preset("breakthrough-variant"))
    # corner pawns have two moves, middle pawns three
    assert len(legal_actions(state)) == 10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), preset=st.sampled_from(sorted(const.GAME_PRESETS)))
def test_rewards_are_zero_sum(seed, preset):
    rng = np.random.default_rng(seed)
    state = new_game(game_from_preset(preset))
    while not state.terminal:
        step = apply_action(state, uniform_random_policy(state, rng))
        assert step.reward_p1 + step.reward_p2 == 0
        if not step.terminal:
            assert step.reward_p1 == 0
        state = step.next
    assert step.reward_p1 == {const.P1: 1, const.P2: -1}.get(state.outcome, 0)
