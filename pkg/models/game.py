'''
Perfect-information stochastic game structures.

A game is a directed graph whose states are owned by player 1, player 2 or
chance (RANDOM). States are identified by their integer index in file order,
names are aliases kept for I/O. Games are never mutated after construction;
restrict, swap_players and the abstraction builder return new objects.
'''

import json
import logging
import math
from collections import Counter

import numpy as np

from utils.errors import GameError

logger = logging.getLogger(__name__)

P1 = 'P1'
P2 = 'P2'
RANDOM = 'R'
OWNERS = (P1, P2, RANDOM)
PLAYER_OWNER = {1: P1, 2: P2}
OPPONENT = {P1: P2, P2: P1}

GAME = 'GAME'
MDP = 'MDP'
DETERMINISTIC_GAME = 'DETERMINISTIC_GAME'
TRANSITION_SYSTEM = 'TRANSITION_SYSTEM'

DISCOUNTED = 'discounted'
AVERAGE = 'average'

PROB_TOL = 1e-9


class Objective(object):
    def __init__(self, kind, beta=None):
        if kind == DISCOUNTED:
            if beta is None or not 0.0 < beta < 1.0:
                raise ValueError('discount factor must lie strictly inside (0, 1), got %r' % (beta,))
            beta = float(beta)
        elif kind == AVERAGE:
            beta = None
        else:
            raise ValueError('unknown objective %r' % (kind,))
        self.kind = kind
        self.beta = beta

    @classmethod
    def discounted(cls, beta):
        return cls(DISCOUNTED, beta)

    @classmethod
    def average(cls):
        return cls(AVERAGE)

    @property
    def is_discounted(self):
        return self.kind == DISCOUNTED

    def __eq__(self, other):
        return isinstance(other, Objective) and (self.kind, self.beta) == (other.kind, other.beta)

    def __hash__(self):
        return hash((self.kind, self.beta))

    def __repr__(self):
        if self.is_discounted:
            return 'Objective(discounted, beta=%g)' % self.beta
        return 'Objective(average)'


class GameStructure(object):
    """
    names[v], owner[v], reward[v] per state; succ[v] is the ordered successor
    tuple of v; weight maps (v, w) to a probability for edges leaving RANDOM states.
    """

    def __init__(self, names, owner, succ, reward, initial, weight=None):
        self.names = tuple(names)
        self.owner = tuple(owner)
        self.succ = tuple(tuple(int(w) for w in ws) for ws in succ)
        self.reward = tuple(float(r) for r in reward)
        self.initial = int(initial)
        self.weight = dict(weight or {})
        self._index = dict((name, i) for i, name in enumerate(self.names))

    @property
    def n_states(self):
        return len(self.names)

    def __len__(self):
        return len(self.names)

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise GameError('unknown state %r' % (name,))

    def name(self, v):
        if 0 <= v < len(self.names):
            return self.names[v]
        return '#%d' % v

    def states_of(self, owner):
        return [v for v in range(self.n_states) if self.owner[v] == owner]

    def edges(self):
        for v, ws in enumerate(self.succ):
            for w in ws:
                yield v, w

    def distribution(self, v):
        """(successor, probability) pairs of a RANDOM state."""
        return [(w, self.weight[(v, w)]) for w in self.succ[v]]

    def reward_array(self):
        return np.array(self.reward, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, GameStructure):
            return False
        return (self.names == other.names and self.owner == other.owner and self.succ == other.succ
                and self.reward == other.reward and self.initial == other.initial
                and self.weight == other.weight)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        counts = Counter(self.owner)
        return 'GameStructure(%d states: %d P1, %d P2, %d R; initial=%s)' % (
            self.n_states, counts[P1], counts[P2], counts[RANDOM], self.name(self.initial))


class MemorylessStrategy(object):
    """choice maps every state owned by the player to one of its successors."""

    def __init__(self, player, choice):
        if player not in PLAYER_OWNER:
            raise ValueError('player must be 1 or 2, got %r' % (player,))
        self.player = player
        self.choice = dict(choice)

    @property
    def owner(self):
        return PLAYER_OWNER[self.player]

    def __getitem__(self, v):
        return self.choice[v]

    def __len__(self):
        return len(self.choice)

    def items(self):
        return sorted(self.choice.items())

    def check(self, game):
        domain = set(game.states_of(self.owner))
        if set(self.choice) != domain:
            missing = sorted(domain - set(self.choice))
            extra = sorted(set(self.choice) - domain)
            raise GameError('strategy domain mismatch for player %d: missing %s, unexpected %s' % (
                self.player, [game.name(v) for v in missing], [game.name(v) for v in extra]))
        for v, w in self.choice.items():
            if w not in game.succ[v]:
                raise GameError('strategy chooses %s -> %s, which is not an edge' % (game.name(v), game.name(w)))

    def to_dict(self, game):
        return {'player': self.player,
                'choice': dict((game.name(v), game.name(w)) for v, w in self.items())}

    @classmethod
    def from_dict(cls, doc, game):
        try:
            choice = dict((game.index(v), game.index(w)) for v, w in doc['choice'].items())
            strategy = cls(int(doc['player']), choice)
        except (KeyError, TypeError, AttributeError) as e:
            raise GameError('malformed strategy document: %s' % e)
        strategy.check(game)
        return strategy

    def __eq__(self, other):
        return isinstance(other, MemorylessStrategy) and self.player == other.player and self.choice == other.choice

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'MemorylessStrategy(player=%d, %s)' % (self.player, self.items())


class ValueFunction(object):
    def __init__(self, values):
        self.values = np.array(values, dtype=float)

    def __getitem__(self, v):
        return float(self.values[v])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def to_dict(self, game):
        return dict((game.name(v), float(x)) for v, x in enumerate(self.values))

    def __repr__(self):
        return 'ValueFunction(%s)' % np.array2string(self.values, precision=6)


def validate(game):
    """Returns every structural violation as a readable string; [] means valid."""
    violations = []
    n = game.n_states
    if n == 0:
        return ['game has no states']
    for name, count in sorted(Counter(game.names).items()):
        if count > 1:
            violations.append('state name %r used %d times' % (name, count))
    if not 0 <= game.initial < n:
        violations.append('initial state %s is not a state' % game.name(game.initial))

    for v in range(n):
        label = game.name(v)
        owner = game.owner[v]
        if owner not in OWNERS:
            violations.append('state %r: unknown owner %r' % (label, owner))
        if not math.isfinite(game.reward[v]):
            violations.append('state %r: reward %r is not finite' % (label, game.reward[v]))
        succ = game.succ[v]
        if not succ:
            violations.append('state %r: dead state (no outgoing edge)' % label)
        for w, count in sorted(Counter(succ).items()):
            if count > 1:
                violations.append('edge %r -> %r: duplicate edge' % (label, game.name(w)))
            if not 0 <= w < n:
                violations.append('edge from %r: target %d is not a state' % (label, w))

        if owner == RANDOM:
            total, complete = 0.0, True
            for w in sorted(set(succ)):
                p = game.weight.get((v, w))
                if p is None:
                    complete = False
                    violations.append('edge %r -> %r: missing weight' % (label, game.name(w)))
                elif not 0.0 < p <= 1.0:
                    violations.append('edge %r -> %r: weight %.9g outside (0, 1]' % (label, game.name(w), p))
                else:
                    total += p
            if succ and complete and abs(total - 1.0) > PROB_TOL:
                violations.append('state %r: weights sum to %.9g != 1' % (label, total))
        else:
            for w in sorted(set(succ)):
                if (v, w) in game.weight:
                    violations.append('edge %r -> %r: weight on a non-random edge' % (label, game.name(w)))

    for (v, w) in sorted(game.weight):
        if not (0 <= v < n and w in game.succ[v]):
            violations.append('weight given for missing edge %s -> %s' % (game.name(v), game.name(w)))
    return violations


def live_players(game):
    """Players owning at least one state with a real choice."""
    return set(game.owner[v] for v in range(game.n_states)
               if game.owner[v] in (P1, P2) and len(set(game.succ[v])) > 1)


def classify(game):
    live = live_players(game)
    has_random = RANDOM in game.owner
    if len(live) == 2:
        return GAME if has_random else DETERMINISTIC_GAME
    return MDP if has_random else TRANSITION_SYSTEM


def restrict(game, strategy):
    """Keeps only the chosen edge at every state of strategy's player."""
    strategy.check(game)
    succ = list(game.succ)
    for v, w in strategy.choice.items():
        succ[v] = (w,)
    return GameStructure(game.names, game.owner, succ, game.reward, game.initial, game.weight)


def swap_players(game):
    """The same arena seen from player 2: owners exchanged, rewards negated."""
    owner = [OPPONENT.get(o, o) for o in game.owner]
    reward = [-r for r in game.reward]
    return GameStructure(game.names, owner, game.succ, reward, game.initial, game.weight)


def is_chain(game):
    return all(game.owner[v] == RANDOM or len(game.succ[v]) == 1 for v in range(game.n_states))


# JSON format
def game_to_dict(game):
    states = [{'name': game.names[v], 'owner': game.owner[v], 'reward': game.reward[v]}
              for v in range(game.n_states)]
    edges = []
    for v, w in game.edges():
        edge = {'from': game.name(v), 'to': game.name(w)}
        if (v, w) in game.weight:
            edge['weight'] = game.weight[(v, w)]
        edges.append(edge)
    return {'states': states, 'edges': edges, 'initial': game.name(game.initial)}


def game_from_dict(doc):
    try:
        states = doc['states']
        edges = doc['edges']
        initial = doc['initial']
    except (KeyError, TypeError):
        raise GameError('game document needs "states", "edges" and "initial"')

    names, owner, reward = [], [], []
    for i, state in enumerate(states):
        if not isinstance(state, dict) or 'name' not in state or 'owner' not in state:
            raise GameError('state entry %d needs "name" and "owner"' % i)
        names.append(str(state['name']))
        owner.append(state['owner'])
        try:
            reward.append(float(state.get('reward', 0.0)))
        except (TypeError, ValueError):
            raise GameError('state %r: reward is not a number' % state['name'])
    index = {}
    for i, name in enumerate(names):
        if name in index:
            raise GameError('duplicate state name %r' % name)
        index[name] = i

    succ = [[] for _ in names]
    weight = {}
    for i, edge in enumerate(edges):
        try:
            v, w = index[edge['from']], index[edge['to']]
        except KeyError as e:
            raise GameError('edge entry %d refers to unknown state %s' % (i, e))
        except TypeError:
            raise GameError('edge entry %d needs "from" and "to"' % i)
        succ[v].append(w)
        if 'weight' in edge:
            try:
                weight[(v, w)] = float(edge['weight'])
            except (TypeError, ValueError):
                raise GameError('edge entry %d: weight is not a number' % i)
    if initial not in index:
        raise GameError('initial state %r is not a state' % (initial,))
    return GameStructure(names, owner, succ, reward, index[initial], weight)


def dumps_game(game):
    return json.dumps(game_to_dict(game), indent=2) + '\n'


def loads_game(text, check=True):
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise GameError('game file is not valid JSON: %s' % e)
    game = game_from_dict(doc)
    if check:
        violations = validate(game)
        if violations:
            raise GameError('invalid game: ' + '; '.join(violations))
    return game


def load_game(path, check=True):
    with open(path, 'r') as f:
        game = loads_game(f.read(), check=check)
    logger.debug('loaded %r from %s' % (game, path))
    return game


def dump_game(game, path):
    with open(path, 'w') as f:
        f.write(dumps_game(game))


def canonicalize(text):
    return dumps_game(loads_game(text, check=False))
