'''
Exact values and memoryless optimal strategies for stochastic games, MDPs and
Markov chains under the discounted and the average (Cesaro) objective.

Discounted games: Shapley value iteration, greedy extraction, then strategy
improvement with exact linear-solve evaluation. Average games: strategy
improvement for player 1 against exact multichain policy iteration for
player 2, switching on (gain, bias). Every answer of game_values is certified
by the best responses of both players before it is returned.
'''

import itertools
import logging

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from models.game import (P1, P2, RANDOM, OPPONENT, PLAYER_OWNER, MemorylessStrategy, ValueFunction,
                         is_chain, restrict, swap_players)
from utils.errors import GameError, GuardError, SolverError

logger = logging.getLogger(__name__)

EPSILON = 1e-9
GOAL_TOL = 1e-9
IMPROVE_TOL = 1e-10
CERTIFICATE_TOL = 1e-9
MAX_SWEEPS = 10 ** 6
MAX_ROUNDS = 10 ** 4
BRUTE_FORCE_LIMIT = 10 ** 7
DIRECT_SOLVE_LIMIT = 2000

MAX = 'max'
MIN = 'min'


class SolveResult(object):
    def __init__(self, winner, strategy, val1, opt1, opt2, boundary=False):
        self.winner = winner
        self.strategy = strategy
        self.val1 = val1
        self.opt1 = opt1
        self.opt2 = opt2
        # |val1(v0) - p| within the goal tolerance
        self.boundary = boundary

    def __repr__(self):
        return 'SolveResult(winner=%d, boundary=%s, val1=%r)' % (self.winner, self.boundary, self.val1)


def _exceeds(a, b):
    return a > b + IMPROVE_TOL * (1.0 + abs(b))


def _solve_linear(A, b):
    """Direct LU with partial pivoting; large systems get two refinement steps."""
    try:
        if A.shape[0] <= DIRECT_SOLVE_LIMIT:
            return scipy.linalg.solve(A, b)
        lu = scipy.linalg.lu_factor(A)
        x = scipy.linalg.lu_solve(lu, b)
        for _ in range(2):
            x = x + scipy.linalg.lu_solve(lu, b - A.dot(x))
        return x
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverError('singular linear system (%s)' % e)


def transition_matrix(game, choice=None):
    """Row-stochastic matrix of the chain obtained by fixing choice at player states."""
    n = game.n_states
    P = np.zeros((n, n))
    for v in range(n):
        if game.owner[v] == RANDOM:
            for w, p in game.distribution(v):
                P[v, w] += p
            continue
        if choice is not None and v in choice:
            w = choice[v]
        elif len(game.succ[v]) == 1:
            w = game.succ[v][0]
        else:
            raise GameError('not a Markov chain: state %r has %d successors' % (game.name(v), len(game.succ[v])))
        P[v, w] = 1.0
    return P


def recurrent_classes(P):
    """Bottom strongly connected components of the support graph of P."""
    n_comp, labels = connected_components(csr_matrix(P > 0), directed=True, connection='strong')
    src, dst = np.nonzero(P > 0)
    leaving = labels[src] != labels[dst]
    bottom = np.ones(n_comp, dtype=bool)
    bottom[labels[src[leaving]]] = False
    return [np.flatnonzero(labels == c) for c in np.flatnonzero(bottom)]


def _average_evaluate(P, r):
    n = len(r)
    gain = np.zeros(n)
    bias = np.zeros(n)
    recurrent = np.zeros(n, dtype=bool)
    for members in recurrent_classes(P):
        k = len(members)
        P_cc = P[np.ix_(members, members)]
        # stationary distribution: pi (P - I) = 0 with one equation replaced by sum(pi) = 1
        A = P_cc.T - np.eye(k)
        A[-1, :] = 1.0
        b = np.zeros(k)
        b[-1] = 1.0
        pi = _solve_linear(A, b)
        g = float(pi.dot(r[members]))
        gain[members] = g
        # bias: (I - P) h = r - g, pinned to zero at the lowest-indexed member
        B = np.eye(k) - P_cc
        c = r[members] - g
        B[0, :] = 0.0
        B[0, 0] = 1.0
        c[0] = 0.0
        bias[members] = _solve_linear(B, c)
        recurrent[members] = True

    transient = np.flatnonzero(~recurrent)
    if transient.size:
        rec = np.flatnonzero(recurrent)
        M = np.eye(transient.size) - P[np.ix_(transient, transient)]
        P_tr = P[np.ix_(transient, rec)]
        gain[transient] = _solve_linear(M, P_tr.dot(gain[rec]))
        bias[transient] = _solve_linear(M, r[transient] - gain[transient] + P_tr.dot(bias[rec]))
    return gain, bias


def evaluate_chain(P, r, objective):
    """(values, bias) of a Markov chain; bias is zero for the discounted objective."""
    if objective.is_discounted:
        n = len(r)
        return _solve_linear(np.eye(n) - objective.beta * P, r), np.zeros(n)
    return _average_evaluate(P, r)


def chain_value(game, objective):
    if not is_chain(game):
        raise GameError('not a Markov chain: fix both players before calling chain_value')
    values, _ = evaluate_chain(transition_matrix(game), game.reward_array(), objective)
    return ValueFunction(values)


def _improve_policy(options, choice, values, bias, objective):
    """Howard step in place: gain (or value) switches first, bias switches only without them."""
    changed = False
    for v in sorted(options):
        cur = choice[v]
        best = max(values[w] for w in options[v])
        if _exceeds(best, values[cur]):
            choice[v] = next(w for w in options[v] if not _exceeds(best, values[w]))
            changed = True
    if changed or objective.is_discounted:
        return changed

    for v in sorted(options):
        cur = choice[v]
        ties = [w for w in options[v] if not _exceeds(values[cur], values[w])]
        best = max(bias[w] for w in ties)
        if _exceeds(best, bias[cur]):
            choice[v] = next(w for w in ties if not _exceeds(best, bias[w]))
            changed = True
    return changed


def _policy_iteration(game, objective, owner, sign, choice=None, on_round=None, max_rounds=MAX_ROUNDS):
    """
    Maximizes sign * reward for the states of owner. Returns (values, bias, choice)
    in the sign-scaled reward, i.e. the caller multiplies by sign to undo it.
    """
    other = OPPONENT[owner]
    for v in range(game.n_states):
        if game.owner[v] == other and len(set(game.succ[v])) > 1:
            raise GameError('two live players present: %s state %r still has a choice' % (other, game.name(v)))

    r = sign * game.reward_array()
    options = dict((v, sorted(set(game.succ[v]))) for v in game.states_of(owner))
    if choice is None:
        choice = dict((v, opts[0]) for v, opts in options.items())
    else:
        choice = dict(choice)

    for rnd in range(max_rounds):
        values, bias = evaluate_chain(transition_matrix(game, choice), r, objective)
        if on_round is not None:
            on_round(rnd, sign * values)
        if not _improve_policy(options, choice, values, bias, objective):
            logger.debug('policy iteration for %s converged after %d rounds' % (owner, rnd + 1))
            return values, bias, choice
    raise SolverError('policy iteration exceeded %d rounds' % max_rounds)


def mdp_solve(game, objective, optimize_for=1, sense=MAX, on_round=None):
    """
    Optimal values and policy of the player optimize_for when the other player
    has no choice left. on_round(round, values) observes every evaluation.
    """
    if sense not in (MAX, MIN):
        raise ValueError('sense must be %r or %r' % (MAX, MIN))
    sign = 1.0 if sense == MAX else -1.0
    values, _, choice = _policy_iteration(game, objective, PLAYER_OWNER[optimize_for], sign, on_round=on_round)
    return ValueFunction(sign * values), MemorylessStrategy(optimize_for, choice)


def _respond(game, objective, strategy):
    """Fix strategy and let the opponent best-respond: (values, bias, counter-strategy)."""
    restricted = restrict(game, strategy)
    opponent = 3 - strategy.player
    # player 2 minimizes player 1's payoff
    sign = -1.0 if opponent == 2 else 1.0
    values, bias, choice = _policy_iteration(restricted, objective, PLAYER_OWNER[opponent], sign)
    return sign * values, sign * bias, MemorylessStrategy(opponent, choice)


def strategy_value(game, objective, strategy):
    """Player-1 payoff of strategy against an exact best response, and that response."""
    values, _, counter = _respond(game, objective, strategy)
    return ValueFunction(values), counter


def value_iteration(game, beta, epsilon=EPSILON, max_sweeps=MAX_SWEEPS):
    """
    Shapley iteration V <- r + beta * (max | min | expectation) V.
    Stops once the sup-norm change is at most epsilon * (1 - beta) / (2 * beta);
    returns the last iterate and the list of per-sweep changes.
    """
    n = game.n_states
    degrees = np.array([len(game.succ[v]) for v in range(n)])
    starts = np.concatenate(([0], np.cumsum(degrees)[:-1]))
    dst = np.array([w for v in range(n) for w in game.succ[v]], dtype=int)
    prob = np.array([game.weight.get((v, w), 0.0) if game.owner[v] == RANDOM else 0.0
                     for v in range(n) for w in game.succ[v]])
    is_p1 = np.array([o == P1 for o in game.owner])
    is_p2 = np.array([o == P2 for o in game.owner])
    r = game.reward_array()

    threshold = epsilon * (1.0 - beta) / (2.0 * beta)
    V = np.zeros(n)
    deltas = []
    for sweep in range(max_sweeps):
        succ_values = V[dst]
        backup = np.where(is_p1, np.maximum.reduceat(succ_values, starts),
                          np.where(is_p2, np.minimum.reduceat(succ_values, starts),
                                   np.add.reduceat(prob * succ_values, starts)))
        new = r + beta * backup
        delta = float(np.max(np.abs(new - V)))
        deltas.append(delta)
        V = new
        if delta <= threshold:
            logger.debug('value iteration converged after %d sweeps' % (sweep + 1))
            return V, deltas
    raise SolverError('value iteration exceeded %d sweeps' % max_sweeps)


def _improving_switch(options, f1, gain, bias, objective):
    # lowest-indexed state first, then lowest-indexed successor
    for v in sorted(options):
        cur = f1[v]
        for w in options[v]:
            if _exceeds(gain[w], gain[cur]):
                return v, w
    if objective.is_discounted:
        return None
    for v in sorted(options):
        cur = f1[v]
        for w in options[v]:
            if not _exceeds(gain[cur], gain[w]) and _exceeds(bias[w], bias[cur]):
                return v, w
    return None


def _certified(lower, upper):
    return np.max(np.abs(upper - lower), initial=0.0) <= CERTIFICATE_TOL * (1.0 + np.max(np.abs(lower), initial=0.0))


def _enumerate_player1(game, objective, limit=BRUTE_FORCE_LIMIT):
    p1_states = game.states_of(P1)
    options = [sorted(set(game.succ[v])) for v in p1_states]
    count = int(np.prod([len(o) for o in options], dtype=float))
    if count > limit:
        raise SolverError('strategy improvement failed its certificate and %d player-1 strategies '
                          'are too many to enumerate' % count)
    results = []
    for choices in itertools.product(*options):
        f1 = MemorylessStrategy(1, zip(p1_states, choices))
        values, _, f2 = _respond(game, objective, f1)
        results.append((f1, values, f2))
    best = np.max([values for _, values, _ in results], axis=0)
    for f1, values, f2 in results:
        if np.all(values >= best - CERTIFICATE_TOL * (1.0 + np.abs(best))):
            return values, f1, f2
    raise SolverError('no uniformly optimal player-1 strategy found by enumeration')


def game_values(game, objective, max_rounds=MAX_ROUNDS):
    """(val1, opt1, opt2) with memoryless optimal strategies for both players."""
    options = dict((v, sorted(set(game.succ[v]))) for v in game.states_of(P1))
    if objective.is_discounted:
        V, _ = value_iteration(game, objective.beta)
        f1 = {}
        for v, opts in options.items():
            best = max(V[w] for w in opts)
            f1[v] = next(w for w in opts if not _exceeds(best, V[w]))
    else:
        f1 = dict((v, opts[0]) for v, opts in options.items())

    for rnd in range(max_rounds):
        gain, bias, f2 = _respond(game, objective, MemorylessStrategy(1, f1))
        switch = _improving_switch(options, f1, gain, bias, objective)
        if switch is None:
            break
        v, w = switch
        logger.debug('round %d: player 1 switches %s -> %s' % (rnd, game.name(v), game.name(w)))
        f1[v] = w
    else:
        raise SolverError('strategy improvement exceeded %d rounds' % max_rounds)

    opt1 = MemorylessStrategy(1, f1)
    upper, _, _ = _respond(game, objective, f2)
    if not _certified(gain, upper):
        logger.warning('strategy improvement stopped without a certificate (gap %.3g); enumerating player-1 strategies'
                       % np.max(np.abs(upper - gain)))
        gain, opt1, f2 = _enumerate_player1(game, objective)
        upper, _, _ = _respond(game, objective, f2)
        if not _certified(gain, upper):
            raise SolverError('enumerated strategies fail the determinacy certificate')
    return ValueFunction(gain), opt1, f2


def player2_values(game, objective):
    """val2 from the symmetric solve: player 2 maximizing the negated reward."""
    values, _, _ = game_values(swap_players(game), objective)
    return values


def game_solve(game, objective, p, tol=GOAL_TOL):
    val1, opt1, opt2 = game_values(game, objective)
    v0 = val1[game.initial]
    winner = 1 if v0 >= p - tol else 2
    result = SolveResult(winner, opt1 if winner == 1 else opt2, val1, opt1, opt2, boundary=abs(v0 - p) <= tol)
    logger.debug('game_solve: val1(v0)=%.9g p=%.9g winner=%d' % (v0, p, winner))
    return result


def brute_force_values(game, objective, limit=BRUTE_FORCE_LIMIT):
    """Per-state max over player-1 strategies of the min over player-2 strategies."""
    p1_states = np.array(game.states_of(P1), dtype=int)
    p2_states = np.array(game.states_of(P2), dtype=int)
    options1 = [sorted(set(game.succ[v])) for v in p1_states]
    options2 = [sorted(set(game.succ[v])) for v in p2_states]
    count = np.prod([len(o) for o in options1 + options2], dtype=float)
    if count > limit:
        raise GuardError('brute force over %d strategy pairs exceeds the limit %d' % (count, limit))

    n = game.n_states
    r = game.reward_array()
    base = np.zeros((n, n))
    for v in game.states_of(RANDOM):
        for w, p in game.distribution(v):
            base[v, w] += p

    outer = np.full(n, -np.inf)
    for c1 in itertools.product(*options1):
        inner = np.full(n, np.inf)
        for c2 in itertools.product(*options2):
            P = base.copy()
            P[p1_states, np.array(c1, dtype=int)] = 1.0
            P[p2_states, np.array(c2, dtype=int)] = 1.0
            values, _ = evaluate_chain(P, r, objective)
            inner = np.minimum(inner, values)
        outer = np.maximum(outer, inner)
    return ValueFunction(outer)
