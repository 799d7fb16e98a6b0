import os

import pytest

from models.game import P1, P2, RANDOM, GameStructure, Objective, load_game
from utils.generators import gen_random_game

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')

BOTH_OBJECTIVES = [Objective.discounted(0.7), Objective.average()]


def data_path(name):
    return os.path.join(DATA_DIR, name)


def random_corpus(count, seed=0, max_states=8):
    """Seeded small games: 1..max_states states, out-degree at most 3."""
    games = []
    for i in range(count):
        n = 1 + (seed + i) % max_states
        games.append(gen_random_game(n, out_degree=3, p1_frac=0.4, p2_frac=0.35, seed=seed * 1000 + i))
    return games


@pytest.fixture
def demo_game():
    return load_game(data_path('demo_game.json'))


@pytest.fixture
def self_loop():
    return GameStructure(['v0'], [P1], [[0]], [1.0], 0)


@pytest.fixture
def two_cycle():
    return GameStructure(['u', 'w'], [P1, P1], [[1], [0]], [0.0, 1.0], 0)


@pytest.fixture
def small_game():
    """Player 1 picks between a sure 0.4 and a coin flip that player 2 can spoil."""
    names = ['s', 'safe', 'coin', 'opp', 'good', 'bad']
    owner = [P1, P1, RANDOM, P2, P1, P1]
    succ = [[1, 2], [1], [3, 4], [4, 5], [4], [5]]
    reward = [0.0, 0.4, 0.0, 0.0, 1.0, 0.0]
    weight = {(2, 3): 0.5, (2, 4): 0.5}
    return GameStructure(names, owner, succ, reward, 0, weight)
