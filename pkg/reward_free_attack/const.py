"""
Constants and defaults for the reward-free attack laboratory.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

VERSION = "0.1.0"

EMPTY = 0
P1 = 1
P2 = 2

PLAYER_NAMES = {P1: "p1", P2: "p2"}
PLAYERS_BY_NAME = {"p1": P1, "p2": P2}

RULES_CONNECT_K = "connect-k"
RULES_BREAKTHROUGH = "breakthrough-variant"
RULE_CODES = {RULES_CONNECT_K: 1, RULES_BREAKTHROUGH: 2}

# breakthrough directions, indexed by the low part of an action id
BREAKTHROUGH_DIRECTIONS = (-1, 0, 1)

KEY_FORMAT_VERSION = 1
FILE_FORMAT_VERSION = 1
FILE_HEADER_PREFIX = "# reward-free-attack"

MAX_MOVES_FACTOR = 4

GAME_PRESETS: dict[str, dict[str, int | str]] = {
    "connect-k": {"rules": RULES_CONNECT_K, "rows": 4, "cols": 4, "k": 3},
    "connect-k-3x3": {"rules": RULES_CONNECT_K, "rows": 3, "cols": 3, "k": 3},
    "breakthrough-variant": {"rules": RULES_BREAKTHROUGH, "rows": 4, "cols": 4, "pawn_rows": 1},
    "breakthrough-variant-3x3": {"rules": RULES_BREAKTHROUGH, "rows": 3, "cols": 3, "pawn_rows": 1},
}

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_GAMMA = 0.9
ENTROPY_GAMMA = 0.5
DEFAULT_EPSILON_START = 1.0
DEFAULT_EPSILON_END = 0.05
DEFAULT_EPSILON_DECAY_EPISODES = 10_000
DEFAULT_EPISODES = 20_000
DEFAULT_CHECKPOINT_EVERY = 500

DEFAULT_RENYI_ORDER = 0.5
DEFAULT_UNOBSERVED_PENALTY = -1.0
DEFAULT_ROLLOUT_EPSILON = 0.05
DEFAULT_ROLLOUT_TRANSITIONS = 100_000
DEFAULT_VICTIM_ACTION_TARGET = 1_000_000
DEFAULT_EXPLORE_EPISODES = 20_000
DEFAULT_PLAN_EPOCHS = 50
DEFAULT_PLAN_LR = 0.1
DEFAULT_CONVERGENCE_EPSILON = 0.01
DEFAULT_ENTROPY_EPISODE_BUDGET = 1_000_000

DEFAULT_OPENING_MOVES = 5
DEFAULT_EVAL_GAMES = 100
DEFAULT_MAX_OPENING_RETRIES = 100
DEFAULT_STATE_CAP = 500_000
DEFAULT_VI_TOLERANCE = 1e-12
THEOREM_ONE_TOLERANCE = 1e-9

VICTIM_STATES = ("faced", "next", "current")
VICTIM_BEHAVIORS = ("softmax", "greedy", "epsilon")
PLAN_REWARDS = ("empirical-victim-entropy", "random")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
