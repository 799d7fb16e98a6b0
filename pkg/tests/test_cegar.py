import pytest

from conftest import BOTH_OBJECTIVES, random_corpus
from models import cegar
from models.abstraction import StatePartition, build_abstraction, initial_abstraction
from models.game import P1, P2, GameStructure, MemorylessStrategy, Objective
from models.solver import game_solve, game_values, strategy_value
from utils.errors import SolverError


def test_focus_p2_keeps_states_that_follow_the_spoiler():
    game = GameStructure(['a', 'b', 'w', 'u'], [P2, P2, P1, P1], [[2], [3], [2], [3]], [0.0, 0.0, 1.0, 0.0], 0)
    abstraction = build_abstraction(game, StatePartition([[0, 1], [2], [3]]))
    w_block = abstraction.block_of[2]
    assert cegar.focus_p2(abstraction, 0, MemorylessStrategy(2, {0: w_block})) == frozenset([0])


def test_focus_p1_finds_profitable_moves():
    game = GameStructure(['a', 'b', 'w', 'u'], [P1, P1, P1, P1], [[2, 3], [3], [2], [3]], [0.0, 0.0, 1.0, 0.0], 0)
    abstraction = build_abstraction(game, StatePartition([[0, 1], [2], [3]]))
    val1, _, _ = game_values(abstraction.abstract_game, Objective.average())
    assert val1[0] == pytest.approx(0.0)
    assert cegar.focus_p1(abstraction, 0, val1) == frozenset([0])
    assert cegar.focus_p1(abstraction, 2, val1) == frozenset()


def test_value_focus():
    game = GameStructure(['a', 'b', 'c', 'z'], [P1, P1, P1, P1], [[3], [3], [3], [3]], [0.1, 0.3, 0.1, 0.0], 0)
    abstraction = build_abstraction(game, StatePartition([[0, 1, 2], [3]]))
    assert cegar.value_focus(abstraction, 0) == frozenset([0, 2])
    uniform = build_abstraction(game, StatePartition([[0, 2], [1], [3]]))
    assert cegar.value_focus(uniform, 0) == frozenset([0, 2])


def test_cegar_step_on_singletons_is_genuine(small_game):
    abstraction = build_abstraction(small_game, StatePartition([[v] for v in range(small_game.n_states)]))
    result = game_solve(abstraction.abstract_game, Objective.average(), 0.9)
    outcome = cegar.cegar_step(abstraction, result.opt2, result.val1)
    assert outcome.verdict == cegar.GENUINE


def test_cegar_step_is_deterministic(demo_game):
    abstraction = build_abstraction(demo_game, initial_abstraction(demo_game))
    result = game_solve(abstraction.abstract_game, Objective.average(), 0.5)
    first = cegar.cegar_step(abstraction, result.opt2, result.val1)
    second = cegar.cegar_step(abstraction, result.opt2, result.val1)
    assert first.verdict == second.verdict == cegar.SPURIOUS
    assert (first.split_block, first.operator) == (second.split_block, second.operator)
    assert first.refined.partition == second.refined.partition
    assert len(first.refined) == len(abstraction) + 1


def test_demo_storyline(demo_game):
    objective = Objective.average()
    outcome = cegar.counterexample_guided_plan(demo_game, objective, 0.5)
    assert outcome.verdict == cegar.FEASIBLE
    assert outcome.refinements == 2

    trace = outcome.trace
    assert [r.abstract_states for r in trace] == [6, 7, 8]
    assert [r.split_operator for r in trace] == [cegar.VALUE_FOCUS, cegar.FOCUS_P2, None]
    assert trace[0].split_block_members == ['m', 'a', 'a1', 'a2']
    assert trace[1].split_block_members == ['x', 'y', 'z']
    for record, expected in zip(trace, [0.15, 0.25, 0.6]):
        assert record.abstract_val1_v0 == pytest.approx(expected, abs=1e-6)
    assert [r.winner for r in trace] == [2, 2, 1]
    assert all(r.repairs == 0 for r in trace)
    assert len(outcome.abstraction) < demo_game.n_states

    values, _ = strategy_value(demo_game, objective, outcome.plan)
    assert values[demo_game.initial] >= 0.5 - 1e-6


def test_goal_above_every_reward_is_infeasible(demo_game):
    objective = Objective.average()
    outcome = cegar.counterexample_guided_plan(demo_game, objective, 1.5)
    assert outcome.verdict == cegar.INFEASIBLE
    values, _ = strategy_value(demo_game, objective, outcome.concrete_spoiler)
    assert values[demo_game.initial] < 1.5


def test_iteration_cap_raises(demo_game):
    with pytest.raises(SolverError):
        cegar.counterexample_guided_plan(demo_game, Objective.average(), 0.5, max_iters=1)


def test_on_iteration_sees_every_record(demo_game):
    seen = []
    outcome = cegar.counterexample_guided_plan(demo_game, Objective.average(), 0.5, on_iteration=seen.append)
    assert seen == outcome.trace


@pytest.mark.parametrize('objective', BOTH_OBJECTIVES, ids=['discounted', 'average'])
def test_verdicts_on_random_games(objective):
    for i, game in enumerate(random_corpus(200, seed=7)):
        v0, _, _ = game_values(game, objective)
        target = v0[game.initial]
        for p in (target - 0.05, target + 0.05):
            outcome = cegar.counterexample_guided_plan(game, objective, p)
            expected = cegar.FEASIBLE if target >= p else cegar.INFEASIBLE
            assert outcome.verdict == expected, 'game %d, p=%r' % (i, p)

            if outcome.verdict == cegar.FEASIBLE:
                values, _ = strategy_value(game, objective, outcome.plan)
                assert values[game.initial] >= p - 1e-6
            else:
                values, _ = strategy_value(game, objective, outcome.concrete_spoiler)
                assert values[game.initial] < p + 1e-6

            initial_blocks = len(build_abstraction(game, initial_abstraction(game)))
            assert outcome.refinements <= game.n_states - initial_blocks
            assert len(outcome.trace) <= game.n_states + 1
            for before, after in zip(outcome.trace, outcome.trace[1:]):
                grown = after.abstract_states - before.abstract_states
                assert grown >= 1
                if after.repairs == 0 and before.repairs == 0:
                    assert grown == 1
                assert (before.split_operator, before.split_block_members) != \
                    (after.split_operator, after.split_block_members)


@pytest.mark.parametrize('objective', BOTH_OBJECTIVES, ids=['discounted', 'average'])
def test_focus_p1_is_empty_on_singleton_abstractions(objective):
    for game in random_corpus(200, seed=9):
        abstraction = build_abstraction(game, StatePartition([[v] for v in range(game.n_states)]))
        val1, _, _ = game_values(abstraction.abstract_game, objective)
        for block in abstraction.abstract_game.states_of(P1):
            assert cegar.focus_p1(abstraction, block, val1, objective) == frozenset()


def test_discounted_focus_p1_compares_one_step_continuations():
    # the block earns 1 now and only reaches u; w is worth less than the block but a one-step detour pays
    game = GameStructure(['a', 'b', 'w', 'u'], [P1, P1, P1, P1], [[2, 3], [3], [2], [3]], [1.0, 1.0, 0.4, 0.0], 0)
    abstraction = build_abstraction(game, StatePartition([[0, 1], [2], [3]]))
    objective = Objective.discounted(0.5)
    val1, _, _ = game_values(abstraction.abstract_game, objective)
    w_block = abstraction.block_of[2]
    assert val1[0] == pytest.approx(1.0)
    assert val1[w_block] == pytest.approx(0.8)
    assert cegar.focus_p1(abstraction, 0, val1, objective) == frozenset([0])
    assert cegar.focus_p1(abstraction, 0, val1) == frozenset()
