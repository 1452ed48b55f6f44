"""
Deterministic, turn-based, zero-sum board games with rewards only at the end.

Two rule sets are available:

* ``connect-k``: pieces drop to the lowest empty cell of a column; ``k`` in a
  row (any direction) wins, a full board is a draw. Action id = column.
* ``breakthrough-variant``: pawns step one row forward, straight onto an empty
  cell or diagonally onto an empty or enemy cell (capture only diagonally).
  Reaching the far row, capturing every enemy pawn or leaving the opponent
  without a legal move wins. Action id = ``from_cell * 3 + direction`` with
  direction 0 = toward column - 1, 1 = straight, 2 = toward column + 1.

Row 0 is p1's home row. Cells are numbered row-major (``row * cols + col``).
A game that reaches ``max_moves`` moves without a result is a draw.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from functools import cached_property

from reward_free_attack import const
from reward_free_attack.config import GameConfig
from reward_free_attack.errors import RewardFreeAttackError

_LOG = logging.getLogger(__name__)

StateKey = bytes
ActionId = int

_KEY_HEADER = struct.Struct("<BBBBB")
_LINE_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))


class GameError(RewardFreeAttackError):
    """Illegal move on a game state."""


def opponent_of(player: int) -> int:
    return const.P2 if player == const.P1 else const.P1


@dataclass(frozen=True)
class GameState:
    """Immutable board position.

    ``outcome`` is None while the game runs, 0 for a draw, otherwise the
    winning player id.
    """

    config: GameConfig
    board: tuple[int, ...]
    mover: int
    move_count: int = 0
    outcome: int | None = None

    @property
    def terminal(self) -> bool:
        return self.outcome is not None

    @cached_property
    def legal(self) -> tuple[ActionId, ...]:
        if self.outcome is not None:
            return ()
        return _moves(self.config, self.board, self.mover)

    @cached_property
    def key(self) -> StateKey:
        header = _KEY_HEADER.pack(
            const.KEY_FORMAT_VERSION,
            const.RULE_CODES[self.config.rules],
            self.config.rows,
            self.config.cols,
            self.mover,
        )
        return header + bytes(self.board)

    def cell(self, row: int, col: int) -> int:
        return self.board[row * self.config.cols + col]

    def pieces(self, player: int) -> int:
        return sum(1 for v in self.board if v == player)


@dataclass(frozen=True)
class StepResult:
    """Outcome of one move. Rewards are zero unless the move ended the game."""

    next: GameState
    terminal: bool
    reward_p1: int = 0
    reward_p2: int = 0

    def reward_for(self, player: int) -> int:
        return self.reward_p1 if player == const.P1 else self.reward_p2


def action_space_size(config: GameConfig) -> int:
    """Size of the dense action enumeration of a rule set."""
    if config.rules == const.RULES_CONNECT_K:
        return config.cols
    return config.n_cells * len(const.BREAKTHROUGH_DIRECTIONS)


def new_game(config: GameConfig) -> GameState:
    """Canonical start position with p1 to move."""
    config.validate()
    board = [const.EMPTY] * config.n_cells
    if config.rules == const.RULES_BREAKTHROUGH:
        for row in range(config.pawn_rows):
            for col in range(config.cols):
                board[row * config.cols + col] = const.P1
                board[(config.rows - 1 - row) * config.cols + col] = const.P2
    return GameState(config=config, board=tuple(board), mover=const.P1)


def legal_actions(state: GameState) -> list[ActionId]:
    """Legal action ids sorted ascending; empty exactly when the state is terminal."""
    return list(state.legal)


def apply_action(state: GameState, action: ActionId) -> StepResult:
    """Play ``action`` for the mover and return the successor."""
    if action not in state.legal:
        raise GameError(
            f"Action {action} is not legal for {const.PLAYER_NAMES.get(state.mover)} "
            f"at move {state.move_count} of {state.config.name}",
            "illegal-action",
        )
    config = state.config
    board = list(state.board)
    if config.rules == const.RULES_CONNECT_K:
        won = _drop_piece(config, board, action, state.mover)
    else:
        won = _advance_pawn(config, board, action, state.mover)

    move_count = state.move_count + 1
    mover = opponent_of(state.mover)
    outcome: int | None = None
    if won:
        outcome = state.mover
    elif config.rules == const.RULES_CONNECT_K and move_count == config.n_cells:
        outcome = 0
    elif config.rules == const.RULES_BREAKTHROUGH and not _moves(config, tuple(board), mover):
        # opponent eliminated or blocked
        outcome = state.mover
    elif move_count >= config.max_moves:
        outcome = 0

    next_state = GameState(config=config, board=tuple(board), mover=mover, move_count=move_count, outcome=outcome)
    if outcome is None:
        return StepResult(next=next_state, terminal=False)
    reward_p1 = 0 if outcome == 0 else (1 if outcome == const.P1 else -1)
    return StepResult(next=next_state, terminal=True, reward_p1=reward_p1, reward_p2=-reward_p1)


def canonical_key(state: GameState) -> StateKey:
    """Stable fixed-width byte encoding of a state.

    Layout (little-endian, one byte each): key format version, rule code,
    rows, cols, mover; then one byte per cell in row-major order.
    """
    return state.key


def _moves(config: GameConfig, board: tuple[int, ...], player: int) -> tuple[ActionId, ...]:
    if config.rules == const.RULES_CONNECT_K:
        top = (config.rows - 1) * config.cols
        return tuple(col for col in range(config.cols) if board[top + col] == const.EMPTY)

    cols = config.cols
    forward = 1 if player == const.P1 else -1
    enemy = opponent_of(player)
    actions = []
    for cell, owner in enumerate(board):
        if owner != player:
            continue
        row, col = divmod(cell, cols)
        to_row = row + forward
        if not 0 <= to_row < config.rows:
            continue
        for direction, dcol in enumerate(const.BREAKTHROUGH_DIRECTIONS):
            to_col = col + dcol
            if not 0 <= to_col < cols:
                continue
            target = board[to_row * cols + to_col]
            if target == const.EMPTY or (dcol != 0 and target == enemy):
                actions.append(cell * len(const.BREAKTHROUGH_DIRECTIONS) + direction)
    return tuple(actions)


def _drop_piece(config: GameConfig, board: list[int], col: int, player: int) -> bool:
    """Drop a piece into ``col``; True if it completes k in a row."""
    cols = config.cols
    row = next(r for r in range(config.rows) if board[r * cols + col] == const.EMPTY)
    board[row * cols + col] = player
    for drow, dcol in _LINE_DIRECTIONS:
        run = 1
        for sign in (1, -1):
            r, c = row + sign * drow, col + sign * dcol
            while 0 <= r < config.rows and 0 <= c < cols and board[r * cols + c] == player:
                run += 1
                r, c = r + sign * drow, c + sign * dcol
        if run >= config.k:
            return True
    return False


def _advance_pawn(config: GameConfig, board: list[int], action: ActionId, player: int) -> bool:
    """Move a pawn; True if it reached the far row."""
    cell, direction = divmod(action, len(const.BREAKTHROUGH_DIRECTIONS))
    row, col = divmod(cell, config.cols)
    to_row = row + (1 if player == const.P1 else -1)
    to_col = col + const.BREAKTHROUGH_DIRECTIONS[direction]
    board[cell] = const.EMPTY
    board[to_row * config.cols + to_col] = player
    far_row = config.rows - 1 if player == const.P1 else 0
    return to_row == far_row


class Game:
    """A rule set bound to one configuration."""

    def __init__(self, config: GameConfig):
        self.config = config.validate()

    def new_game(self) -> GameState:
        """Start position of this configuration."""
        return new_game(self.config)

    def legal_actions(self, state: GameState) -> list[ActionId]:
        """Sorted legal actions; empty for terminal states."""
        return legal_actions(state)

    def apply_action(self, state: GameState, action: ActionId) -> StepResult:
        """Successor of ``state``; raises ``illegal-action`` for a move not in ``state.legal``."""
        return apply_action(state, action)

    def canonical_key(self, state: GameState) -> StateKey:
        """Byte key of ``state``, see :func:`canonical_key`."""
        return canonical_key(state)

    @property
    def action_space_size(self) -> int:
        """Width of the dense action id range."""
        return action_space_size(self.config)


class _AuditedStepResult:
    """StepResult view that reports every reward read to its game."""

    __slots__ = ("_step", "_game")

    def __init__(self, step: StepResult, game: "RewardAuditGame"):
        self._step = step
        self._game = game

    @property
    def next(self) -> GameState:
        return self._step.next

    @property
    def terminal(self) -> bool:
        return self._step.terminal

    @property
    def reward_p1(self) -> int:
        self._game.reward_reads += 1
        return self._step.reward_p1

    @property
    def reward_p2(self) -> int:
        self._game.reward_reads += 1
        return self._step.reward_p2

    def reward_for(self, player: int) -> int:
        return self.reward_p1 if player == const.P1 else self.reward_p2


class RewardAuditGame(Game):
    """Game whose step results count reads of the environment rewards."""

    def __init__(self, config: GameConfig):
        super().__init__(config)
        self.reward_reads = 0
        self.steps = 0

    def apply_action(self, state: GameState, action: ActionId) -> StepResult:
        self.steps += 1
        return _AuditedStepResult(apply_action(state, action), self)  # type: ignore[return-value]


def as_game(game: GameConfig | Game) -> Game:
    """Accept either a configuration or a Game."""
    if isinstance(game, Game):
        return game
    return Game(game)
