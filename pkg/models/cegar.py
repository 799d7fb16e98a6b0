'''
Counterexample-guided abstraction refinement for stochastic games.

The loop solves the abstract game, and when the abstract player 2 wins it
looks for the first block (lowest index) that the spoiling strategy does not
describe faithfully: player-2 focus (members that cannot follow the spoiler),
player-1 focus (members with a profitable concrete move) and value focus
(members earning more than the block minimum), tried in that order per block.
Exactly one split is performed per step and the abstraction is rebuilt.
'''

import logging

from models.abstraction import (build_abstraction, concretize_plan, concretize_spoiler, initial_abstraction,
                                split)
from models.game import P1, P2
from models.solver import GOAL_TOL, game_solve, strategy_value
from utils.errors import SolverError
from utils.util import Pack

logger = logging.getLogger(__name__)

FOCUS_P1 = 'FOCUS_P1'
FOCUS_P2 = 'FOCUS_P2'
VALUE_FOCUS = 'VALUE_FOCUS'
WITNESS = 'WITNESS'

SPURIOUS = 'SPURIOUS'
GENUINE = 'GENUINE'
FEASIBLE = 'FEASIBLE'
INFEASIBLE = 'INFEASIBLE'

FOCUS_MARGIN = 1e-9


class RefinementOutcome(object):
    def __init__(self, verdict, refined=None, split_block=None, split_members=None, operator=None,
                 concrete_spoiler=None, certified_value=None):
        self.verdict = verdict
        self.refined = refined
        self.split_block = split_block
        self.split_members = split_members
        self.operator = operator
        # only set by check_spoiler on a certified counterexample
        self.concrete_spoiler = concrete_spoiler
        self.certified_value = certified_value

    def __repr__(self):
        if self.verdict == GENUINE:
            return 'RefinementOutcome(GENUINE)'
        return 'RefinementOutcome(SPURIOUS, block=%d, operator=%s)' % (self.split_block, self.operator)


class PlanOutcome(object):
    def __init__(self, verdict, trace, abstraction, plan=None, abstract_plan=None, spoiler=None,
                 concrete_spoiler=None):
        self.verdict = verdict
        self.trace = trace
        self.abstraction = abstraction
        self.plan = plan
        self.abstract_plan = abstract_plan
        self.spoiler = spoiler
        self.concrete_spoiler = concrete_spoiler

    @property
    def refinements(self):
        return sum(1 for record in self.trace if record.split_operator is not None)

    def __repr__(self):
        return 'PlanOutcome(%s after %d refinements)' % (self.verdict, self.refinements)


def focus_p2(abstraction, block, f2_abstract):
    """Members of a P2 block that can actually move into the spoiler's target block."""
    game = abstraction.game
    block_of = abstraction.block_of
    target = f2_abstract[block]
    subset = frozenset(v for v in abstraction.members(block)
                       if any(block_of[w] == target for w in game.succ[v]))
    assert subset, 'abstract P2 edge %d -> %d has no concrete witness' % (block, target)
    return subset


def focus_p1(abstraction, block, val1_abstract, objective=None):
    """Members of a P1 block with a concrete move into a block worth strictly more."""
    game = abstraction.game
    block_of = abstraction.block_of
    own = val1_abstract[block]
    if objective is not None and objective.is_discounted:
        base = abstraction.abstract_game.reward[block]

        def gain(w):
            return base + objective.beta * val1_abstract[block_of[w]]
    else:
        def gain(w):
            return val1_abstract[block_of[w]]
    return frozenset(u for u in abstraction.members(block)
                     if any(gain(w) > own + FOCUS_MARGIN for w in game.succ[u]))


def value_focus(abstraction, block):
    game = abstraction.game
    floor = abstraction.abstract_game.reward[block]
    return frozenset(v for v in abstraction.members(block) if game.reward[v] == floor)


def _refine(abstraction, block, subset, operator):
    members = abstraction.members(block)
    refined = build_abstraction(abstraction.game, split(abstraction.partition, block, subset))
    logger.info('%s splits %s into %s' % (operator, abstraction.member_names(block),
                                          sorted(abstraction.game.name(v) for v in subset)))
    return RefinementOutcome(SPURIOUS, refined, block, members, operator)


def cegar_step(abstraction, f2_abstract, val1_abstract, objective=None):
    abstract_game = abstraction.abstract_game
    for block, members in enumerate(abstraction.partition.blocks):
        if len(members) == 1:
            continue
        owner = abstract_game.owner[block]
        if owner == P2:
            candidates = [(FOCUS_P2, lambda: focus_p2(abstraction, block, f2_abstract))]
        elif owner == P1:
            candidates = [(FOCUS_P1, lambda: focus_p1(abstraction, block, val1_abstract, objective))]
        else:
            candidates = []
        candidates.append((VALUE_FOCUS, lambda: value_focus(abstraction, block)))
        for operator, focus in candidates:
            subset = focus()
            if 0 < len(subset) < len(members):
                return _refine(abstraction, block, subset, operator)
    return RefinementOutcome(GENUINE)


def check_spoiler(abstraction, f2_abstract, objective, p, tol=GOAL_TOL):
    """
    Certifies a focus-stable spoiler on the concrete game. If player 1 can still
    reach p against it, splits the block of the first player-1 state whose best
    reply is not an abstract move.
    """
    game = abstraction.game
    block_of = abstraction.block_of
    spoiler = concretize_spoiler(abstraction, f2_abstract)
    values, reply = strategy_value(game, objective, spoiler)
    if values[game.initial] < p - tol:
        return RefinementOutcome(GENUINE, concrete_spoiler=spoiler, certified_value=values[game.initial])

    logger.info('spoiler fails its certificate: player 1 still reaches %.9g' % values[game.initial])
    abstract_succ = abstraction.abstract_game.succ
    for u in game.states_of(P1):
        block = block_of[u]
        members = abstraction.members(block)
        target = block_of[reply[u]]
        if len(members) == 1 or target in abstract_succ[block]:
            continue
        subset = frozenset(v for v in members if any(block_of[w] == target for w in game.succ[v]))
        if 0 < len(subset) < len(members):
            return _refine(abstraction, block, subset, WITNESS)
    for block, members in enumerate(abstraction.partition.blocks):
        if len(members) > 1:
            return _refine(abstraction, block, members[:1], WITNESS)
    logger.warning('singleton abstraction and the spoiler certificate still fails; reporting INFEASIBLE')
    return RefinementOutcome(GENUINE, concrete_spoiler=spoiler, certified_value=values[game.initial])


def counterexample_guided_plan(game, objective, p, max_iters=None, on_iteration=None):
    abstraction = build_abstraction(game, initial_abstraction(game))
    bound = game.n_states - len(abstraction) + 1
    trace = []
    for it in range(1, bound + 1):
        if max_iters is not None and it > max_iters:
            raise SolverError('no verdict within %d iterations' % max_iters)
        abstract_game = abstraction.abstract_game
        result = game_solve(abstract_game, objective, p)
        record = Pack(iter=it, abstract_states=abstract_game.n_states, winner=result.winner,
                      abstract_val1_v0=float(result.val1[abstract_game.initial]),
                      split_operator=None, split_block_members=None, repairs=0)
        trace.append(record)
        logger.info('iteration %d: %d abstract states, val1(v0)=%.9g, winner %d' % (
            it, abstract_game.n_states, record.abstract_val1_v0, result.winner))

        if result.winner == 1:
            if on_iteration is not None:
                on_iteration(record)
            plan = concretize_plan(abstraction, result.opt1)
            return PlanOutcome(FEASIBLE, trace, abstraction, plan=plan, abstract_plan=result.opt1)

        outcome = cegar_step(abstraction, result.opt2, result.val1, objective)
        if outcome.verdict == GENUINE:
            outcome = check_spoiler(abstraction, result.opt2, objective, p)
        if outcome.verdict == GENUINE:
            if on_iteration is not None:
                on_iteration(record)
            return PlanOutcome(INFEASIBLE, trace, abstraction, spoiler=result.opt2,
                               concrete_spoiler=outcome.concrete_spoiler)

        record.split_operator = outcome.operator
        record.split_block_members = [game.name(v) for v in outcome.split_members]
        record.repairs = len(outcome.refined.repairs)
        if on_iteration is not None:
            on_iteration(record)
        abstraction = outcome.refined
    raise AssertionError('refinement loop exceeded its bound of %d iterations' % bound)
