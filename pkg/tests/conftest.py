"""Shared fixtures."""

import numpy as np
import pytest

from reward_free_attack import const
from reward_free_attack.config import GameConfig, PipelineConfig, game_from_preset


@pytest.fixture
def connect3() -> GameConfig:
    """Connect-k on a 3x3 board with k=3."""
    return game_from_preset("connect-k-3x3")


@pytest.fixture
def connect4() -> GameConfig:
    return game_from_preset("connect-k")


@pytest.fixture
def breakthrough3() -> GameConfig:
    return game_from_preset("breakthrough-variant-3x3")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_pipeline() -> PipelineConfig:
    return PipelineConfig(
        explore_episodes=200,
        rollout_transitions=300,
        victim_action_target=300,
        plan_epochs=5,
        seed=3,
        attacker_player=const.P2,
    ).validate()
