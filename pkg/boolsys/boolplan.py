'''
Counterexample-guided planning for boolean systems.

The abstraction keeps a subset of the propositions and forgets the rest:
an abstract state is a bit tuple over the kept propositions (in declaration
order) and an abstract transition exists when some pair of concrete states
projecting onto it satisfies the action. An abstract plan found by
breadth-first search is checked on the concrete system with a step-indexed
formula; when that formula is unsatisfiable the propositions of its minimized
core join the abstraction and the search starts over.
'''

import logging
from collections import deque

import numpy as np

from boolsys.formula import conj, evaluate, rename
from boolsys.satcore import DpllSolver, core_keys, decode_model, minimize_core, solve, to_cnf
from utils.errors import GuardError
from utils.util import Pack

logger = logging.getLogger(__name__)

PROJECTION_GUARD = 12
EXPLICIT_GUARD = 16

UNREACHABLE = 'UNREACHABLE'
FEASIBLE = 'FEASIBLE'
INFEASIBLE = 'INFEASIBLE'


class AbstractPlan(object):
    def __init__(self, props, actions, states):
        self.props = tuple(props)
        self.actions = tuple(actions)
        # states[i] is the abstract state before actions[i]; one more state than actions
        self.states = tuple(states)

    def __len__(self):
        return len(self.actions)

    def __repr__(self):
        return 'AbstractPlan(%s over %s)' % (list(self.actions), list(self.props))


class BoolPlanOutcome(object):
    def __init__(self, verdict, trace, props, plan=None, states=None):
        self.verdict = verdict
        self.trace = trace
        # the kept propositions when the loop stopped
        self.props = tuple(props)
        self.plan = plan
        self.states = states

    @property
    def iterations(self):
        return len(self.trace)

    def __repr__(self):
        return 'BoolPlanOutcome(%s, %d iterations)' % (self.verdict, self.iterations)


def _check_guard(props, guard):
    if len(props) > guard:
        raise GuardError('%d abstraction propositions exceed the projection guard of %d' % (len(props), guard))


def _bindings(cnf, props, bits, index):
    return [cnf.index_of[(p, index)] if b else -cnf.index_of[(p, index)] for p, b in zip(props, bits)]


def _project(cnf, model, props, index):
    return tuple(int(model[cnf.index_of[(p, index)]]) for p in props)


class _Projection(object):
    """Projections of a formula's models onto props at the current (and next) step."""

    def __init__(self, formula, props, primed=False):
        self.props = tuple(props)
        keys = [(p, 0) for p in self.props]
        if primed:
            keys += [(p, 1) for p in self.props]
        self.cnf = to_cnf(formula, declare=keys)
        self.solver = DpllSolver(self.cnf.n_vars, self.cnf.clauses)

    def holds(self, state):
        return self.solver.solve(_bindings(self.cnf, self.props, state, 0)).sat

    def states(self):
        found = []
        while True:
            outcome = self.solver.solve()
            if not outcome.sat:
                return sorted(found)
            state = _project(self.cnf, outcome.model, self.props, 0)
            found.append(state)
            self.solver.add_clause([-lit for lit in _bindings(self.cnf, self.props, state, 0)])

    def images(self, state):
        current = _bindings(self.cnf, self.props, state, 0)
        found = []
        while True:
            outcome = self.solver.solve(current)
            if not outcome.sat:
                return sorted(found)
            image = _project(self.cnf, outcome.model, self.props, 1)
            found.append(image)
            blocking = current + _bindings(self.cnf, self.props, image, 1)
            self.solver.add_clause([-lit for lit in blocking])


def _ordered(system, props):
    unknown = set(props) - set(system.props)
    if unknown:
        raise ValueError('unknown propositions %s' % sorted(unknown))
    keep = set(props)
    return tuple(p for p in system.props if p in keep)


def abstract_action(action, props, guard=PROJECTION_GUARD):
    """
    The relation an action induces on bit tuples over props: (s, t) is related
    when action is satisfiable with props bound to s and primed props bound to t.
    """
    props = tuple(props)
    _check_guard(props, guard)
    # states() blocks what it finds, so images come from a second solver
    sources = _Projection(action, props, primed=True).states()
    projection = _Projection(action, props, primed=True)
    relation = set()
    for state in sources:
        for image in projection.images(state):
            relation.add((state, image))
    return frozenset(relation)


def abstract_reach(system, props, guard=PROJECTION_GUARD):
    """
    Breadth-first search over abstract states, expanding actions in declaration
    order and successors in increasing order. Returns a shortest AbstractPlan, or
    UNREACHABLE, which also proves the concrete goal unreachable.
    """
    props = _ordered(system, props)
    _check_guard(props, guard)
    goal = _Projection(system.goal, props)
    moves = [(name, _Projection(f, props, primed=True)) for name, f in system.actions]

    parent = {}
    queue = deque()
    for state in _Projection(system.init, props).states():
        parent[state] = None
        if goal.holds(state):
            return AbstractPlan(props, [], [state])
        queue.append(state)

    while queue:
        state = queue.popleft()
        for name, move in moves:
            for image in move.images(state):
                if image in parent:
                    continue
                parent[image] = (state, name)
                if goal.holds(image):
                    return _backtrack(props, parent, image)
                queue.append(image)
    logger.debug('abstract goal unreachable over %s (%d states explored)' % (list(props), len(parent)))
    return UNREACHABLE


def _backtrack(props, parent, state):
    states, actions = [state], []
    while parent[state] is not None:
        state, name = parent[state]
        states.append(state)
        actions.append(name)
    return AbstractPlan(props, actions[::-1], states[::-1])


def bmc_formula(system, plan):
    """Init at step 1, the i-th action from step i to i+1, goal at step len(plan) + 1."""
    n = len(plan)
    parts = [rename(system.init, lambda key: (key[0], 1))]
    for step, name in enumerate(plan, 1):
        parts.append(rename(system.action(name), lambda key, step=step: (key[0], step + key[1])))
    parts.append(rename(system.goal, lambda key: (key[0], n + 1)))
    return conj(*parts)


def decode_trace(system, cnf, model, n_states):
    """Concrete states x_1 .. x_n as dicts; propositions the formula never mentions read False."""
    values = decode_model(cnf, model)
    return [dict((p, bool(values.get((p, t), False))) for p in system.props) for t in range(1, n_states + 1)]


def _step_env(before, after):
    env = dict(((p, 0), v) for p, v in before.items())
    env.update(((p, 1), v) for p, v in after.items())
    return env


def check_trace(system, plan, states):
    if len(states) != len(plan) + 1:
        return False
    if not evaluate(system.init, _step_env(states[0], {})):
        return False
    for name, before, after in zip(plan, states, states[1:]):
        if not evaluate(system.action(name), _step_env(before, after)):
            return False
    return bool(evaluate(system.goal, _step_env(states[-1], {})))


def boolean_cegar_plan(system, guard=PROJECTION_GUARD, on_iteration=None):
    props = ()
    trace = []
    for it in range(1, len(system.props) + 2):
        abstract = abstract_reach(system, props, guard)
        record = Pack(iter=it, props=list(props), abstract_plan=None, verdict=None, core_props=None)
        trace.append(record)
        if abstract == UNREACHABLE:
            record.verdict = INFEASIBLE
            logger.info('iteration %d: goal unreachable over %s' % (it, list(props)))
            if on_iteration is not None:
                on_iteration(record)
            return BoolPlanOutcome(INFEASIBLE, trace, props)

        record.abstract_plan = list(abstract.actions)
        cnf = to_cnf(bmc_formula(system, abstract.actions))
        outcome = solve(cnf)
        if outcome.sat:
            states = decode_trace(system, cnf, outcome.model, len(abstract) + 1)
            assert check_trace(system, abstract.actions, states), \
                'decoded trace does not execute plan %s' % list(abstract.actions)
            record.verdict = FEASIBLE
            logger.info('iteration %d: plan %s is concretely feasible' % (it, list(abstract.actions)))
            if on_iteration is not None:
                on_iteration(record)
            return BoolPlanOutcome(FEASIBLE, trace, props, plan=list(abstract.actions), states=states)

        core = minimize_core(cnf, outcome.core)
        named = set(name for name, _ in core_keys(cnf, core))
        fresh = named - set(props)
        assert fresh, 'unsatisfiable core for plan %s mentions no proposition outside %s' % (
            list(abstract.actions), list(props))
        record.verdict = 'SPURIOUS'
        record.core_props = sorted(named)
        logger.info('iteration %d: plan %s is spurious, adding %s' % (it, list(abstract.actions), sorted(fresh)))
        if on_iteration is not None:
            on_iteration(record)
        props = _ordered(system, set(props) | named)
    raise AssertionError('refinement did not stop after %d iterations' % (len(system.props) + 1))


def _all_states(n):
    """All valuations as an (2**n, n) boolean array, first proposition most significant."""
    codes = np.arange(2 ** n)
    shifts = np.arange(n - 1, -1, -1)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(bool)


def explicit_reach(system, guard=EXPLICIT_GUARD, chunk=2 ** 22):
    """
    Breadth-first search over all concrete states with the same tie-breaking as
    abstract_reach. Returns (actions, states) for a shortest plan, states as bit
    tuples over system.props, or None when the goal is unreachable.
    """
    n = len(system.props)
    if n > guard:
        raise GuardError('%d propositions exceed the explicit search guard of %d' % (n, guard))
    bits = _all_states(n)
    total = len(bits)
    single = dict(((p, 0), bits[:, i]) for i, p in enumerate(system.props))
    init = np.broadcast_to(evaluate(system.init, single), (total,))
    goal = np.broadcast_to(evaluate(system.goal, single), (total,))

    parent = np.full(total, -1, dtype=np.int64)
    via = np.full(total, -1, dtype=np.int64)
    seen = np.zeros(total, dtype=bool)

    def unwind(code):
        codes, actions = [code], []
        while parent[code] >= 0:
            actions.append(system.actions[via[code]][0])
            code = parent[code]
            codes.append(code)
        return actions[::-1], [tuple(int(b) for b in bits[c]) for c in codes[::-1]]

    frontier = [int(c) for c in np.nonzero(init)[0]]
    seen[frontier] = True
    for code in frontier:
        if goal[code]:
            return unwind(code)

    rows = max(1, chunk // total)
    while frontier:
        following = []
        for start in range(0, len(frontier), rows):
            block = frontier[start:start + rows]
            env = {}
            for i, p in enumerate(system.props):
                env[(p, 0)] = bits[block, i][:, None]
                env[(p, 1)] = bits[:, i][None, :]
            steps = [np.broadcast_to(evaluate(f, env), (len(block), total)) for _, f in system.actions]
            for row, code in enumerate(block):
                for a, step in enumerate(steps):
                    for image in np.nonzero(step[row])[0]:
                        if seen[image]:
                            continue
                        seen[image] = True
                        parent[image], via[image] = code, a
                        if goal[image]:
                            return unwind(int(image))
                        following.append(int(image))
        frontier = following
    return None
