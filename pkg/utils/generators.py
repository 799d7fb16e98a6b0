'''
Seeded instance generators: random games, gridworlds, random partitions and
random STRIPS-like boolean systems. Each generator owns a private
numpy RandomState, so its output depends on its arguments only.
'''

import logging

import numpy as np

from boolsys.formula import parse_boolean_system
from models.abstraction import StatePartition
from models.game import P1, P2, RANDOM, GameStructure

logger = logging.getLogger(__name__)

MOVES = (('stay', 0, 0), ('up', -1, 0), ('down', 1, 0), ('left', 0, -1), ('right', 0, 1))


def gen_random_game(n_states, out_degree=3, p1_frac=0.4, p2_frac=0.4, reward_range=(0.0, 1.0), seed=0):
    if n_states < 1:
        raise ValueError('a game needs at least one state, got %d' % n_states)
    if out_degree < 1:
        raise ValueError('out_degree must be at least 1, got %d' % out_degree)
    if not (0.0 <= p1_frac <= 1.0 and 0.0 <= p2_frac <= 1.0 and p1_frac + p2_frac <= 1.0):
        raise ValueError('owner fractions %r, %r must lie in [0, 1] and sum to at most 1' % (p1_frac, p2_frac))
    low, high = reward_range
    if low > high:
        raise ValueError('empty reward range %r' % (reward_range,))

    rng = np.random.RandomState(seed)
    names = ['s%d' % v for v in range(n_states)]
    owner, succ, reward, weight = [], [], [], {}
    for v in range(n_states):
        u = rng.rand()
        owner.append(P1 if u < p1_frac else (P2 if u < p1_frac + p2_frac else RANDOM))
        degree = min(rng.randint(0, out_degree + 1), n_states)
        targets = sorted(int(w) for w in rng.choice(n_states, size=degree, replace=False))
        if not targets:
            targets = [v]
        succ.append(targets)
        reward.append(round(float(rng.uniform(low, high)), 2))
        if owner[v] == RANDOM:
            mass = rng.rand(len(targets)) + 0.1
            mass = mass / mass.sum()
            for w, p in zip(targets, mass):
                weight[(v, w)] = float(p)
    return GameStructure(names, owner, succ, reward, 0, weight)


def gen_gridworld(width, height, slip_prob=0.0, adversary=False, seed=0):
    """
    A robot on a height x width grid, starting top-left, earning 1 per step on the
    bottom-right goal cell. With slip_prob > 0 every move passes through a chance
    state that sends slip_prob of the mass uniformly over the moves available at
    the cell. With adversary, seed-chosen cells are contested: leaving them passes
    through a player-2 state that may block the move.
    """
    if width < 1 or height < 1:
        raise ValueError('grid dimensions must be positive, got %dx%d' % (width, height))
    if not 0.0 <= slip_prob < 1.0:
        raise ValueError('slip probability must lie in [0, 1), got %r' % (slip_prob,))

    rng = np.random.RandomState(seed)
    start, goal = (0, 0), (height - 1, width - 1)
    cells = [(r, c) for r in range(height) for c in range(width)]
    contested = set()
    if adversary:
        eligible = [cell for cell in cells if cell not in (start, goal)]
        contested = set(cell for cell in eligible if rng.rand() < 0.5)
        if eligible and not contested:
            contested.add(eligible[rng.randint(len(eligible))])

    names, owner, reward, succ, weight = [], [], [], [], {}

    def add_state(name, kind, r):
        names.append(name)
        owner.append(kind)
        reward.append(r)
        succ.append([])
        return len(names) - 1

    cell_index = dict((cell, add_state('x%d_%d' % cell, P1, 1.0 if cell == goal else 0.0)) for cell in cells)

    for cell in cells:
        v = cell_index[cell]
        here = reward[v]
        moves = [(label, (cell[0] + dr, cell[1] + dc)) for label, dr, dc in MOVES
                 if 0 <= cell[0] + dr < height and 0 <= cell[1] + dc < width]
        for label, target in moves:
            entry = cell_index[target]
            if slip_prob > 0.0:
                entry = add_state('s%d_%d_%s' % (cell + (label,)), RANDOM, here)
                share = slip_prob / len(moves)
                mass = {}
                for _, other in moves:
                    w = cell_index[other]
                    mass[w] = mass.get(w, 0.0) + share
                mass[cell_index[target]] += 1.0 - slip_prob
                for w in sorted(mass):
                    succ[entry].append(w)
                    weight[(entry, w)] = mass[w]
            if cell in contested and label != 'stay':
                guard = add_state('a%d_%d_%s' % (cell + (label,)), P2, here)
                succ[guard] = [entry, v]
                entry = guard
            succ[v].append(entry)

    logger.debug('gridworld %dx%d: %d states, %d contested cells' % (height, width, len(names), len(contested)))
    return GameStructure(names, owner, succ, reward, cell_index[start], weight)


def gen_random_partition(game, seed=0):
    """A random owner-homogeneous partition; chance states stay singletons."""
    rng = np.random.RandomState(seed)
    blocks = [[v] for v in game.states_of(RANDOM)]
    for kind in (P1, P2):
        states = game.states_of(kind)
        if not states:
            continue
        k = rng.randint(1, len(states) + 1)
        labels = rng.randint(0, k, size=len(states))
        for label in range(k):
            group = [v for v, l in zip(states, labels) if l == label]
            if group:
                blocks.append(group)
    return StatePartition(blocks)


def _literal(rng, prop, primed=False):
    return ('!' if rng.rand() < 0.5 else '') + prop + ("'" if primed else '')


def gen_boolean_system_text(n_props=4, n_actions=3, seed=0):
    if n_props < 1 or n_actions < 1:
        raise ValueError('need at least one proposition and one action')
    rng = np.random.RandomState(seed)
    props = ['p%d' % i for i in range(n_props)]

    init = [_literal(rng, p) for p in props if rng.rand() < 0.7]
    goal_props = rng.choice(n_props, size=rng.randint(1, min(3, n_props) + 1), replace=False)
    goal = [_literal(rng, props[i]) for i in sorted(goal_props)]

    lines = ['props: ' + ' '.join(props),
             'init: ' + (' & '.join(init) if init else 'true'),
             'goal: ' + ' & '.join(goal)]
    for a in range(n_actions):
        pre = rng.choice(n_props, size=rng.randint(0, min(2, n_props) + 1), replace=False)
        eff = rng.choice(n_props, size=rng.randint(1, min(2, n_props) + 1), replace=False)
        changed = set(int(i) for i in eff)
        if rng.rand() < 0.2:
            # one proposition left unconstrained makes the action nondeterministic
            changed.add(int(rng.randint(n_props)))
        parts = [_literal(rng, props[i]) for i in sorted(pre)]
        parts += [_literal(rng, props[i], primed=True) for i in sorted(eff)]
        parts.append('frame except {%s}' % ', '.join(props[i] for i in sorted(changed)))
        lines.append('action a%d: %s' % (a, ' & '.join(parts)))
    return '\n'.join(lines) + '\n'


def gen_boolean_system(n_props=4, n_actions=3, seed=0):
    return parse_boolean_system(gen_boolean_system_text(n_props, n_actions, seed))
