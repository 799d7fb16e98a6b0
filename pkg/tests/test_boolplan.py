import itertools

import pytest
from hypothesis import given, settings, strategies as st

from boolsys.boolplan import (FEASIBLE, INFEASIBLE, UNREACHABLE, abstract_action, abstract_reach, bmc_formula,
                              boolean_cegar_plan, check_trace, explicit_reach)
from boolsys.formula import (BOTTOM, TOP, BooleanSystem, atom, conj, disj, evaluate, format_boolean_system,
                             format_formula, iff, implies, load_boolean_system, negate, parse_boolean_system, step_atom)
from boolsys.satcore import core_keys, minimize_core, solve, to_cnf
from conftest import data_path
from utils.errors import GuardError, ParseError
from utils.generators import gen_boolean_system

FLIP = "props: p\ninit: !p\ngoal: p\naction flip: p' <-> !p"


def test_parse_flip():
    system = parse_boolean_system(FLIP)
    assert system.props == ('p',)
    assert system.action_names == ['flip']
    assert system.action('flip') == iff(atom('p', primed=True), negate(atom('p')))
    assert load_boolean_system(data_path('flip.bp')) == system


def test_primed_goal_is_rejected():
    with pytest.raises(ParseError) as info:
        parse_boolean_system("props: p\ninit: !p\ngoal: p'\naction flip: p' <-> !p")
    assert info.value.line == 3 and info.value.col == 8


@pytest.mark.parametrize('text, message', [
    ("props: p\ninit: q\ngoal: p\naction a: p'", 'unknown proposition'),
    ("props: p\ninit: p\ngoal: p\naction a: p'\naction a: !p'", 'defined twice'),
    ("props: p p\ninit: p\ngoal: p\naction a: p'", 'declared twice'),
    ("props: p\ninit: p &\ngoal: p\naction a: p'", 'unexpected'),
    ("props: p\ninit: frame\ngoal: p\naction a: p'", 'only allowed in action'),
    ("props: p\ninit: p\ngoal: p", "expected 'action'"),
    ("props: p\ninit: p $ p\ngoal: p\naction a: p'", 'unexpected character'),
    ("props: true\ninit: p\ngoal: p\naction a: p'", 'at least one proposition'),
])
def test_parse_errors(text, message):
    with pytest.raises(ParseError, match=message):
        parse_boolean_system(text)


def test_precedence_and_associativity():
    system = parse_boolean_system("props: a b c\ninit: a | b & !c\ngoal: a -> b -> c\n"
                                  "action x: a <-> b <-> c  # trailing comment\n")
    a, b, c = atom('a'), atom('b'), atom('c')
    assert system.init == disj(a, conj(b, negate(c)))
    assert system.goal == implies(a, implies(b, c))
    assert system.action('x') == iff(iff(a, b), c)


def test_frame_sugar():
    system = parse_boolean_system("props: p q r\ninit: true\ngoal: false\n"
                                  "action a: p' & frame except {p, r}\naction b: frame")
    q_kept = iff(atom('q', primed=True), atom('q'))
    assert system.action('a') == conj(atom('p', primed=True), q_kept)
    assert system.action('b') == conj(iff(atom('p', primed=True), atom('p')), q_kept,
                                      iff(atom('r', primed=True), atom('r')))
    assert system.init == TOP and system.goal == BOTTOM


def test_system_constructor_checks():
    with pytest.raises(ValueError):
        BooleanSystem(['p'], atom('p', primed=True), atom('p'), [('a', atom('p', primed=True))])
    with pytest.raises(ValueError):
        BooleanSystem(['p'], atom('q'), atom('p'), [('a', atom('p', primed=True))])
    system = parse_boolean_system(FLIP)
    with pytest.raises(ValueError):
        system.action('flop')


PROPS = ['p', 'q', 'r']


def formulas(primed):
    leaves = st.sampled_from(PROPS).map(atom) | st.sampled_from([TOP, BOTTOM])
    if primed:
        leaves = leaves | st.sampled_from(PROPS).map(lambda p: atom(p, primed=True))

    def extend(children):
        pairs = st.tuples(children, children)
        return (children.map(negate)
                | st.lists(children, min_size=2, max_size=4).map(lambda xs: conj(*xs))
                | st.lists(children, min_size=2, max_size=4).map(lambda xs: disj(*xs))
                | pairs.map(lambda ab: implies(*ab))
                | pairs.map(lambda ab: iff(*ab)))
    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(formulas(False), formulas(False), st.lists(formulas(True), min_size=1, max_size=3))
def test_print_parse_round_trip(init, goal, actions):
    system = BooleanSystem(PROPS, init, goal, [('a%d' % i, f) for i, f in enumerate(actions)])
    text = format_boolean_system(system)
    assert parse_boolean_system(text) == system
    assert format_boolean_system(parse_boolean_system(text)) == text


def test_abstract_action_projections():
    toggle = iff(atom('p', primed=True), negate(atom('p')))
    assert abstract_action(toggle, ['p']) == frozenset([((0,), (1,)), ((1,), (0,))])
    assert abstract_action(toggle, []) == frozenset([((), ())])
    assert abstract_action(conj(atom('p', primed=True), negate(atom('p', primed=True))), []) == frozenset()


def test_abstract_action_on_all_props_is_concrete():
    system = gen_boolean_system(4, 3, seed=2)
    props = list(system.props)
    for name, action in system.actions:
        relation = abstract_action(action, props)
        for s in itertools.product([0, 1], repeat=len(props)):
            for t in itertools.product([0, 1], repeat=len(props)):
                env = dict(((p, 0), bool(b)) for p, b in zip(props, s))
                env.update(((p, 1), bool(b)) for p, b in zip(props, t))
                assert ((s, t) in relation) == bool(evaluate(action, env))


def test_projection_guard():
    props = ['x%d' % i for i in range(13)]
    with pytest.raises(GuardError):
        abstract_action(atom('x0', primed=True), props)
    big = BooleanSystem(['x%d' % i for i in range(17)], TOP, TOP, [('a', TOP)])
    with pytest.raises(GuardError):
        explicit_reach(big)


def test_empty_projection_collapses():
    system = parse_boolean_system(FLIP)
    plan = abstract_reach(system, [])
    assert plan != UNREACHABLE
    assert len(plan) == 0 and plan.states == ((),)


def test_unsatisfiable_goal_is_unreachable_everywhere():
    system = parse_boolean_system("props: p q\ninit: true\ngoal: p & !p\naction a: p' <-> q")
    for k in range(3):
        for props in itertools.combinations(system.props, k):
            assert abstract_reach(system, props) == UNREACHABLE
    assert boolean_cegar_plan(system).verdict == INFEASIBLE


def test_bmc_formula_shapes():
    system = parse_boolean_system(FLIP)
    assert bmc_formula(system, []) == conj(negate(step_atom('p', 1)), step_atom('p', 1))
    f = bmc_formula(system, ['flip'])
    assert format_formula(f, steps=True) == '!p@1 & (p@2 <-> !p@1) & p@2'
    outcome = solve(to_cnf(f))
    assert outcome.sat
    with pytest.raises(ValueError):
        bmc_formula(system, ['flop'])


def test_bmc_precondition_conflict_core():
    system = parse_boolean_system("props: p\ninit: !p\ngoal: p\naction go: p & p'")
    cnf = to_cnf(bmc_formula(system, ['go']))
    outcome = solve(cnf)
    assert not outcome.sat
    assert ('p', 1) in core_keys(cnf, minimize_core(cnf, outcome.core))


def test_flip_plan():
    system = load_boolean_system(data_path('flip.bp'))
    outcome = boolean_cegar_plan(system)
    assert outcome.verdict == FEASIBLE
    assert outcome.plan == ['flip']
    assert outcome.iterations <= 2
    assert outcome.states == [{'p': False}, {'p': True}]
    assert outcome.trace[0].verdict == 'SPURIOUS' and outcome.trace[0].core_props == ['p']


def test_explicit_reach_flip():
    system = parse_boolean_system(FLIP)
    assert explicit_reach(system) == (['flip'], [(0,), (1,)])
    stuck = parse_boolean_system("props: p\ninit: !p\ngoal: p\naction stay: p' <-> p")
    assert explicit_reach(stuck) is None


def _systems(count, seed, max_props=10):
    for i in range(count):
        n_props = 1 + (seed + i) % max_props
        n_actions = 1 + (seed * 7 + i) % 6
        yield gen_boolean_system(n_props, n_actions, seed=seed * 1000 + i)


def test_verdicts_match_explicit_search():
    for system in _systems(100, seed=3):
        reference = explicit_reach(system)
        outcome = boolean_cegar_plan(system)
        assert (outcome.verdict == FEASIBLE) == (reference is not None), format_boolean_system(system)
        assert outcome.iterations <= len(system.props) + 1
        sizes = [len(record.props) for record in outcome.trace]
        assert all(a < b for a, b in zip(sizes, sizes[1:]))
        if outcome.verdict == FEASIBLE:
            assert solve(to_cnf(bmc_formula(system, outcome.plan))).sat
            assert check_trace(system, outcome.plan, outcome.states)


def test_projection_soundness_and_exactness():
    for system in _systems(25, seed=5, max_props=5):
        reference = explicit_reach(system)
        for k in range(len(system.props) + 1):
            for props in itertools.combinations(system.props, k):
                result = abstract_reach(system, props)
                if result == UNREACHABLE:
                    assert reference is None
                else:
                    # an abstract plan is never longer than the shortest concrete one
                    assert reference is None or len(result) <= len(reference[0])
        full = abstract_reach(system, system.props)
        assert (full == UNREACHABLE) == (reference is None)
        if reference is not None:
            assert len(full) == len(reference[0])


@pytest.mark.parametrize('n_props', [8, 9, 10])
def test_every_projection_of_larger_systems_is_sound(n_props):
    system = gen_boolean_system(n_props, 2, seed=40 + n_props)
    reference = explicit_reach(system)
    shortest = None if reference is None else len(reference[0])
    for k in range(n_props + 1):
        for props in itertools.combinations(system.props, k):
            result = abstract_reach(system, props)
            if result == UNREACHABLE:
                assert reference is None, props
            elif shortest is not None:
                assert len(result) <= shortest, props
    full = abstract_reach(system, system.props)
    assert (full == UNREACHABLE) == (reference is None)
