import numpy as np
import pytest

from conftest import BOTH_OBJECTIVES, random_corpus
from models.game import P1, P2, RANDOM, GameStructure, MemorylessStrategy, Objective, restrict
from models.solver import (MAX, MIN, brute_force_values, chain_value, game_solve, game_values, mdp_solve,
                           player2_values, recurrent_classes, strategy_value, transition_matrix, value_iteration)
from utils.errors import GameError, GuardError
from utils.generators import gen_random_game


def sinks_game(owner0, rewards=(0.2, 0.9)):
    return GameStructure(['v0', 'lo', 'hi'], [owner0, P1, P1], [[1, 2], [1], [2]], [0.0] + list(rewards), 0)


@pytest.fixture
def choice_game():
    """v0 picks between a player-2 state and a fair coin over the sinks 0.3 and 0.8."""
    names = ['v0', 'v1', 'v2', 'low', 'high']
    owner = [P1, P2, RANDOM, P1, P1]
    succ = [[1, 2], [3, 4], [3, 4], [3], [4]]
    reward = [0.0, 0.0, 0.0, 0.3, 0.8]
    return GameStructure(names, owner, succ, reward, 0, {(2, 3): 0.5, (2, 4): 0.5})


def test_geometric_self_loop(self_loop):
    values = chain_value(self_loop, Objective.discounted(0.5))
    assert abs(values[0] - 2.0) <= 1e-12


def test_period_two_cycle_average(two_cycle):
    values = chain_value(two_cycle, Objective.average())
    assert values[0] == pytest.approx(0.5, abs=1e-12)
    assert values[1] == pytest.approx(0.5, abs=1e-12)


def test_coin_into_sinks_discounted():
    game = GameStructure(['v0', 'zero', 'one'], [RANDOM, P1, P1], [[1, 2], [1], [2]], [0.0, 0.0, 1.0], 0,
                         {(0, 1): 0.5, (0, 2): 0.5})
    assert chain_value(game, Objective.discounted(0.5))[0] == pytest.approx(0.5, abs=1e-12)


def test_chain_value_needs_a_chain():
    with pytest.raises(GameError):
        chain_value(sinks_game(P1), Objective.average())


def test_recurrent_classes_of_absorbing_chain():
    P = np.array([[0.0, 0.5, 0.5], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    classes = [list(c) for c in recurrent_classes(P)]
    assert sorted(classes) == [[1], [2]]


def test_multichain_transient_gain():
    game = GameStructure(['t', 'a', 'b', 'c'], [RANDOM, P1, P1, P1], [[1, 2], [1], [3], [2]],
                         [5.0, 1.0, 0.0, 1.0], 0, {(0, 1): 0.25, (0, 2): 0.75})
    values = chain_value(game, Objective.average())
    assert values[1] == pytest.approx(1.0)
    assert values[2] == pytest.approx(0.5)
    assert values[0] == pytest.approx(0.25 * 1.0 + 0.75 * 0.5)


def test_mdp_solve_max_and_min():
    game = sinks_game(P1)
    values, policy = mdp_solve(game, Objective.discounted(0.5), sense=MAX)
    assert values[0] == pytest.approx(0.9)
    assert policy[0] == 2
    values, policy = mdp_solve(game, Objective.discounted(0.5), sense=MIN)
    assert values[0] == pytest.approx(0.2)
    assert policy[0] == 1


def test_mdp_solve_for_player_two():
    game = sinks_game(P2)
    values, policy = mdp_solve(game, Objective.average(), optimize_for=2, sense=MIN)
    assert values[0] == pytest.approx(0.2)
    assert policy.player == 2 and policy[0] == 1


def test_mdp_solve_refuses_two_live_players(choice_game):
    with pytest.raises(GameError, match='two live players'):
        mdp_solve(choice_game, Objective.average())


def test_mdp_solve_values_never_decrease():
    game = gen_random_game(7, out_degree=3, p1_frac=0.6, p2_frac=0.0, seed=11)
    for objective in BOTH_OBJECTIVES:
        seen = []
        mdp_solve(game, objective, on_round=lambda rnd, values: seen.append(values))
        for before, after in zip(seen, seen[1:]):
            assert np.all(after >= before - 1e-9)


def test_mdp_solve_matches_enumeration():
    for seed in range(30):
        game = gen_random_game(1 + seed % 7, out_degree=3, p1_frac=0.6, p2_frac=0.0, seed=100 + seed)
        for objective in BOTH_OBJECTIVES:
            values, _ = mdp_solve(game, objective)
            oracle = brute_force_values(game, objective)
            np.testing.assert_allclose(values.values, oracle.values, atol=1e-6)


def test_example_value(choice_game):
    values, opt1, opt2 = game_values(choice_game, Objective.average())
    assert values[0] == pytest.approx(0.55, abs=1e-9)
    assert values[1] == pytest.approx(0.3, abs=1e-9)
    assert opt1[0] == 2
    assert opt2[1] == 3


def test_game_solve_against_goal(choice_game):
    result = game_solve(choice_game, Objective.average(), 0.5)
    assert result.winner == 1
    assert result.strategy.player == 1 and result.strategy[0] == 2

    result = game_solve(choice_game, Objective.average(), 0.6)
    assert result.winner == 2
    assert result.strategy.player == 2 and result.strategy[1] == 3
    fixed, _ = strategy_value(choice_game, Objective.average(), result.strategy)
    assert fixed[0] < 0.6

    assert game_solve(choice_game, Objective.average(), 0.55).boundary
    assert game_solve(choice_game, Objective.average(), -10.0).winner == 1


def test_transition_system_matches_mdp_solve():
    game = gen_random_game(6, out_degree=3, p1_frac=1.0, p2_frac=0.0, seed=5)
    for objective in BOTH_OBJECTIVES:
        values, _, _ = game_values(game, objective)
        reference, _ = mdp_solve(game, objective)
        np.testing.assert_allclose(values.values, reference.values, atol=1e-9)


def test_value_iteration_contracts():
    game = gen_random_game(8, seed=21)
    beta = 0.8
    _, deltas = value_iteration(game, beta)
    for before, after in zip(deltas, deltas[1:]):
        assert after <= beta * before + 1e-12


def test_brute_force_guard():
    n = 16
    game = GameStructure(['s%d' % v for v in range(n)], [P1] * n, [[0, 1, 2, 3]] * n, [0.0] * n, 0)
    with pytest.raises(GuardError):
        brute_force_values(game, Objective.average(), limit=10 ** 7)


def test_brute_force_on_a_chain_matches_chain_value(two_cycle):
    for objective in BOTH_OBJECTIVES:
        np.testing.assert_allclose(brute_force_values(two_cycle, objective).values,
                                   chain_value(two_cycle, objective).values, atol=1e-12)


@pytest.mark.parametrize('objective', BOTH_OBJECTIVES, ids=['discounted', 'average'])
def test_determinacy_and_oracle_on_random_games(objective):
    for game in random_corpus(200, seed=1):
        val1, opt1, opt2 = game_values(game, objective)
        val2 = player2_values(game, objective)
        np.testing.assert_allclose(val1.values + val2.values, 0.0, atol=1e-6)
        np.testing.assert_allclose(val1.values, brute_force_values(game, objective).values, atol=1e-6)

        # both strategies certify the values against exact best responses
        lower, _ = strategy_value(game, objective, opt1)
        upper, _ = strategy_value(game, objective, opt2)
        np.testing.assert_allclose(lower.values, val1.values, atol=1e-6)
        np.testing.assert_allclose(upper.values, val1.values, atol=1e-6)


def test_restricted_game_reproduces_values(small_game):
    objective = Objective.average()
    val1, opt1, _ = game_values(small_game, objective)
    assert val1[0] == pytest.approx(0.5)
    values, _ = mdp_solve(restrict(small_game, opt1), objective, optimize_for=2, sense=MIN)
    np.testing.assert_allclose(values.values, val1.values, atol=1e-6)


def test_strategy_value_rejects_wrong_domain(small_game):
    with pytest.raises(GameError):
        strategy_value(small_game, Objective.average(), MemorylessStrategy(1, {0: 1}))


def test_transition_matrix_rows_sum_to_one(small_game):
    choice = {0: 2, 1: 1, 3: 5, 4: 4, 5: 5}
    P = transition_matrix(small_game, choice)
    np.testing.assert_allclose(P.sum(axis=1), 1.0)


@pytest.mark.parametrize('objective', BOTH_OBJECTIVES, ids=['discounted', 'average'])
def test_policy_iteration_rounds_bounded_by_policy_count(objective):
    for seed in range(60):
        game = gen_random_game(1 + seed % 8, out_degree=3, p1_frac=0.6, p2_frac=0.0, seed=300 + seed)
        policies = 1
        for v in game.states_of(P1):
            policies *= len(set(game.succ[v]))
        rounds = []
        mdp_solve(game, objective, on_round=lambda rnd, values: rounds.append(rnd))
        assert 1 <= len(rounds) <= policies + 1
        assert rounds == list(range(len(rounds)))
