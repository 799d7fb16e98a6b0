'''
Abstractions of games induced by partitions of the concrete state space.

Player 1 is weakened (an abstract P1 edge needs every member of the block to
have a move into the target block), player 2 and chance are strengthened
(some member suffices), random states stay singletons and every block earns
the smallest reward of its members. A plan that wins the abstract game
therefore wins the concrete one.
'''

import json
import logging

from models.game import (P1, P2, RANDOM, GameStructure, MemorylessStrategy, game_to_dict)
from utils.errors import GameError, PartitionError

logger = logging.getLogger(__name__)


class StatePartition(object):
    """Disjoint nonempty blocks, kept sorted by their smallest member."""

    def __init__(self, blocks):
        normalized = []
        for block in blocks:
            members = tuple(sorted(set(int(v) for v in block)))
            if not members:
                raise PartitionError('partition contains an empty block')
            normalized.append(members)
        normalized.sort()
        self.blocks = tuple(normalized)
        self.block_of = {}
        for i, members in enumerate(self.blocks):
            for v in members:
                if v in self.block_of:
                    raise PartitionError('state %d appears in more than one block' % v)
                self.block_of[v] = i

    def __len__(self):
        return len(self.blocks)

    def check(self, game):
        covered = set(self.block_of)
        missing = sorted(set(range(game.n_states)) - covered)
        if missing:
            raise PartitionError('partition does not cover %s' % [game.name(v) for v in missing])
        unknown = sorted(covered - set(range(game.n_states)))
        if unknown:
            raise PartitionError('partition mentions unknown states %s' % unknown)
        for members in self.blocks:
            owners = set(game.owner[v] for v in members)
            names = [game.name(v) for v in members]
            if len(owners) > 1:
                raise PartitionError('block %s mixes owners %s' % (names, sorted(owners)))
            if RANDOM in owners and len(members) > 1:
                raise PartitionError('random states must stay singletons, got block %s' % names)

    def __eq__(self, other):
        return isinstance(other, StatePartition) and self.blocks == other.blocks

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'StatePartition(%s)' % (list(self.blocks),)


class Abstraction(object):
    def __init__(self, game, partition, abstract_game, repairs=()):
        self.game = game
        self.partition = partition
        self.abstract_game = abstract_game
        # (original block, groups) for every dead-block repair applied while building
        self.repairs = tuple(repairs)

    @property
    def concretization(self):
        """Abstract state name -> names of the concrete states it stands for."""
        names = self.abstract_game.names
        return dict((names[i], self.member_names(i)) for i in range(len(self)))

    @property
    def block_of(self):
        return self.partition.block_of

    def __len__(self):
        return len(self.partition.blocks)

    def members(self, block):
        return self.partition.blocks[block]

    def member_names(self, block):
        return [self.game.name(v) for v in self.partition.blocks[block]]

    def __repr__(self):
        return 'Abstraction(%d blocks over %d states)' % (len(self), self.game.n_states)


def _successor_blocks(game, block_of, v):
    return frozenset(block_of[w] for w in game.succ[v])


def repair_dead_blocks(game, partition):
    """
    Splits player-1 blocks without a universal successor block, grouping members
    by their set of successor blocks, until every P1 block keeps an abstract edge.
    """
    repairs = []
    while True:
        for members in partition.blocks:
            if game.owner[members[0]] != P1 or len(members) == 1:
                continue
            signatures = [_successor_blocks(game, partition.block_of, v) for v in members]
            if frozenset.intersection(*signatures):
                continue
            groups = {}
            for v, signature in zip(members, signatures):
                groups.setdefault(signature, []).append(v)
            groups = sorted(tuple(g) for g in groups.values())
            logger.info('dead block %s repaired into %s' % (
                [game.name(v) for v in members], [[game.name(v) for v in g] for g in groups]))
            repairs.append((members, tuple(groups)))
            partition = StatePartition([b for b in partition.blocks if b != members] + groups)
            break
        else:
            return partition, repairs


def build_abstraction(game, partition):
    partition.check(game)
    partition, repairs = repair_dead_blocks(game, partition)
    block_of = partition.block_of

    names, owner, succ, reward, weight = [], [], [], [], {}
    for i, members in enumerate(partition.blocks):
        kind = game.owner[members[0]]
        names.append('B%d' % i)
        owner.append(kind)
        reward.append(min(game.reward[v] for v in members))
        if kind == RANDOM:
            mass = {}
            for w, p in game.distribution(members[0]):
                mass[block_of[w]] = mass.get(block_of[w], 0.0) + p
            targets = sorted(mass)
            for target in targets:
                weight[(i, target)] = mass[target]
        else:
            signatures = [_successor_blocks(game, block_of, v) for v in members]
            if kind == P1:
                targets = sorted(frozenset.intersection(*signatures))
            else:
                targets = sorted(frozenset.union(*signatures))
        succ.append(targets)

    abstract_game = GameStructure(names, owner, succ, reward, block_of[game.initial], weight)
    logger.debug('abstraction with %d blocks, %d repairs' % (len(partition), len(repairs)))
    return Abstraction(game, partition, abstract_game, repairs)


def initial_abstraction(game):
    """{v0}, the other P1 states, the other P2 states, random singletons; dead blocks repaired."""
    v0 = game.initial
    blocks = [[v0]]
    for kind in (P1, P2):
        rest = [v for v in game.states_of(kind) if v != v0]
        if rest:
            blocks.append(rest)
    blocks.extend([v] for v in game.states_of(RANDOM) if v != v0)
    partition, _ = repair_dead_blocks(game, StatePartition(blocks))
    return partition


def split(partition, block, subset):
    members = set(partition.blocks[block])
    subset = set(subset)
    if not subset or not subset < members:
        raise PartitionError('split of block %d needs a proper nonempty subset, got %s' % (block, sorted(subset)))
    rest = [b for i, b in enumerate(partition.blocks) if i != block]
    return StatePartition(rest + [members - subset, subset])


def _concretize(abstraction, strategy, owner):
    game = abstraction.game
    block_of = abstraction.block_of
    strategy.check(abstraction.abstract_game)
    choice = {}
    for v in game.states_of(owner):
        target = strategy[block_of[v]]
        candidates = [w for w in game.succ[v] if block_of[w] == target]
        if not candidates:
            raise GameError('state %r has no edge into abstract target %s' % (
                game.name(v), abstraction.member_names(target)))
        choice[v] = min(candidates)
    return choice


def concretize_plan(abstraction, f1_abstract):
    choice = _concretize(abstraction, f1_abstract, P1)
    return MemorylessStrategy(1, choice)


def concretize_spoiler(abstraction, f2_abstract):
    return MemorylessStrategy(2, _concretize(abstraction, f2_abstract, P2))


# partition and abstraction files
def partition_from_dict(doc, game):
    try:
        blocks = [[game.index(name) for name in block] for block in doc['blocks']]
    except (KeyError, TypeError):
        raise PartitionError('partition document needs a "blocks" list of name lists')
    partition = StatePartition(blocks)
    partition.check(game)
    return partition


def partition_to_dict(partition, game):
    return {'blocks': [[game.name(v) for v in members] for members in partition.blocks]}


def load_partition(path, game):
    with open(path, 'r') as f:
        try:
            doc = json.load(f)
        except ValueError as e:
            raise PartitionError('partition file is not valid JSON: %s' % e)
    return partition_from_dict(doc, game)


def abstraction_to_dict(abstraction):
    doc = game_to_dict(abstraction.abstract_game)
    doc['concretization'] = abstraction.concretization
    return doc
