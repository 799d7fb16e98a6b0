'''
Propositional formulas and the boolean-system text format.

A variable is a (name, index) pair. Inside a boolean system index 0 is the
current value and index 1 the primed (next-state) value; bounded model
checking reuses the index as the time step.

    props: p q
    init: !p & !q
    goal: p & q
    action set_p: p' & frame except {p}
'''

import functools
import re

import numpy as np

from utils.errors import ParseError

VAR = 'VAR'
NOT = 'NOT'
AND = 'AND'
OR = 'OR'
IMPLIES = 'IMPLIES'
IFF = 'IFF'
TRUE = 'TRUE'
FALSE = 'FALSE'

KEYWORDS = frozenset(['props', 'init', 'goal', 'action', 'true', 'false', 'frame', 'except'])


class Formula(object):
    __slots__ = ('op', 'args', 'var', '_hash')

    def __init__(self, op, args=(), var=None):
        self.op = op
        self.args = tuple(args)
        self.var = var
        self._hash = hash((op, self.args, var))

    def __eq__(self, other):
        return (isinstance(other, Formula) and self._hash == other._hash and self.op == other.op
                and self.var == other.var and self.args == other.args)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def variables(self):
        found = set()
        stack = [self]
        while stack:
            f = stack.pop()
            if f.op == VAR:
                found.add(f.var)
            stack.extend(f.args)
        return found

    def __repr__(self):
        return 'Formula(%s)' % format_formula(self, steps=self.op == VAR and self.var[1] > 1)


TOP = Formula(TRUE)
BOTTOM = Formula(FALSE)


def atom(name, primed=False):
    return Formula(VAR, var=(name, 1 if primed else 0))


def step_atom(name, step):
    return Formula(VAR, var=(name, step))


def negate(f):
    return Formula(NOT, (f,))


def conj(*args):
    if not args:
        raise ValueError('conjunction needs at least one argument')
    return Formula(AND, args)


def disj(*args):
    if not args:
        raise ValueError('disjunction needs at least one argument')
    return Formula(OR, args)


def implies(a, b):
    return Formula(IMPLIES, (a, b))


def iff(a, b):
    return Formula(IFF, (a, b))


def conjuncts(f):
    """Top-level conjuncts, nested conjunctions flattened, in left-to-right order."""
    if f.op != AND:
        return [f]
    out = []
    for arg in f.args:
        out.extend(conjuncts(arg))
    return out


def rename(f, fn):
    """Maps every variable key through fn."""
    if f.op == VAR:
        return Formula(VAR, var=fn(f.var))
    if not f.args:
        return f
    return Formula(f.op, [rename(a, fn) for a in f.args])


def evaluate(f, env):
    """env maps variable keys to booleans or to broadcastable numpy boolean arrays."""
    op = f.op
    if op == VAR:
        return env[f.var]
    if op == TRUE:
        return np.True_
    if op == FALSE:
        return np.False_
    values = [evaluate(a, env) for a in f.args]
    if op == NOT:
        return np.logical_not(values[0])
    if op == AND:
        return functools.reduce(np.logical_and, values)
    if op == OR:
        return functools.reduce(np.logical_or, values)
    if op == IMPLIES:
        return np.logical_or(np.logical_not(values[0]), values[1])
    if op == IFF:
        return np.equal(values[0], values[1])
    raise ValueError('unknown connective %r' % op)


def _wrap(f, steps):
    text = format_formula(f, steps)
    if f.op in (VAR, TRUE, FALSE, NOT):
        return text
    return '(' + text + ')'


def format_formula(f, steps=False):
    op = f.op
    if op == VAR:
        name, index = f.var
        if steps:
            return '%s@%d' % (name, index)
        return name + ("'" if index else '')
    if op == TRUE:
        return 'true'
    if op == FALSE:
        return 'false'
    if op == NOT:
        return '!' + _wrap(f.args[0], steps)
    if op in (AND, OR):
        glue = ' & ' if op == AND else ' | '
        return glue.join(_wrap(a, steps) for a in f.args)
    glue = ' -> ' if op == IMPLIES else ' <-> '
    return _wrap(f.args[0], steps) + glue + _wrap(f.args[1], steps)


class BooleanSystem(object):
    def __init__(self, props, init, goal, actions):
        self.props = tuple(props)
        self.init = init
        self.goal = goal
        self.actions = tuple((name, f) for name, f in actions)
        if len(set(self.props)) != len(self.props):
            raise ValueError('duplicate propositions in %s' % (self.props,))
        names = [name for name, _ in self.actions]
        if len(set(names)) != len(names):
            raise ValueError('duplicate action names in %s' % names)
        known = set(self.props)
        for label, f, max_index in [('init', init, 0), ('goal', goal, 0)] + [(n, a, 1) for n, a in self.actions]:
            for name, index in f.variables():
                if name not in known:
                    raise ValueError('%s mentions unknown proposition %r' % (label, name))
                if index > max_index:
                    raise ValueError('%s mentions primed proposition %r' % (label, name))
        self._actions = dict(self.actions)

    @property
    def action_names(self):
        return [name for name, _ in self.actions]

    def action(self, name):
        try:
            return self._actions[name]
        except KeyError:
            raise ValueError('unknown action %r' % (name,))

    def __eq__(self, other):
        return (isinstance(other, BooleanSystem) and self.props == other.props and self.init == other.init
                and self.goal == other.goal and self.actions == other.actions)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'BooleanSystem(%d props, %d actions)' % (len(self.props), len(self.actions))


def format_boolean_system(system):
    lines = ['props: ' + ' '.join(system.props),
             'init: ' + format_formula(system.init),
             'goal: ' + format_formula(system.goal)]
    for name, f in system.actions:
        lines.append('action %s: %s' % (name, format_formula(f)))
    return '\n'.join(lines) + '\n'


# parsing
_TOKEN = re.compile(r"""
    (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<op><->|->|[!&|()':{},])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<error>.)
""", re.VERBOSE)


def tokenize(text):
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == 'newline':
            line, line_start = line + 1, m.end()
        elif kind == 'error':
            raise ParseError('unexpected character %r' % m.group(), line, col)
        elif kind in ('op', 'ident'):
            tokens.append((kind, m.group(), line, col))
    tokens.append(('eof', '', line, len(text) - line_start + 1))
    return tokens


class _Parser(object):
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0
        self.props = []

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != 'eof':
            self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], tok[3])

    def at(self, text):
        return self.peek()[1] == text and self.peek()[0] != 'eof'

    def expect(self, text):
        tok = self.next()
        if tok[1] != text or tok[0] == 'eof':
            raise self.error('expected %r, found %r' % (text, tok[1] or 'end of input'), tok)
        return tok

    def ident(self):
        tok = self.next()
        if tok[0] != 'ident' or tok[1] in KEYWORDS:
            raise self.error('expected an identifier, found %r' % (tok[1] or 'end of input'), tok)
        return tok

    def system(self):
        self.expect('props')
        self.expect(':')
        while self.peek()[0] == 'ident' and self.peek()[1] not in KEYWORDS:
            tok = self.next()
            if tok[1] in self.props:
                raise self.error('proposition %r declared twice' % tok[1], tok)
            self.props.append(tok[1])
        if not self.props:
            raise self.error('expected at least one proposition')
        self.expect('init')
        self.expect(':')
        init = self.formula(primed=False)
        self.expect('goal')
        self.expect(':')
        goal = self.formula(primed=False)
        actions, seen = [], set()
        while self.at('action'):
            self.next()
            tok = self.ident()
            if tok[1] in seen:
                raise self.error('action %r defined twice' % tok[1], tok)
            seen.add(tok[1])
            self.expect(':')
            actions.append((tok[1], self.formula(primed=True)))
        if not actions:
            raise self.error("expected 'action'")
        tok = self.peek()
        if tok[0] != 'eof':
            raise self.error('unexpected %r' % tok[1], tok)
        return BooleanSystem(self.props, init, goal, actions)

    def formula(self, primed):
        left = self.implication(primed)
        while self.at('<->'):
            self.next()
            left = iff(left, self.implication(primed))
        return left

    def implication(self, primed):
        left = self.disjunction(primed)
        if self.at('->'):
            self.next()
            return implies(left, self.implication(primed))
        return left

    def disjunction(self, primed):
        items = [self.conjunction(primed)]
        while self.at('|'):
            self.next()
            items.append(self.conjunction(primed))
        return items[0] if len(items) == 1 else disj(*items)

    def conjunction(self, primed):
        items = [self.literal(primed)]
        while self.at('&'):
            self.next()
            items.append(self.literal(primed))
        return items[0] if len(items) == 1 else conj(*items)

    def literal(self, primed):
        tok = self.next()
        kind, text = tok[0], tok[1]
        if text == '!' and kind == 'op':
            return negate(self.literal(primed))
        if text == '(' and kind == 'op':
            f = self.formula(primed)
            self.expect(')')
            return f
        if kind == 'ident' and text == 'true':
            return TOP
        if kind == 'ident' and text == 'false':
            return BOTTOM
        if kind == 'ident' and text == 'frame':
            if not primed:
                raise self.error('frame is only allowed in action formulas', tok)
            return self.frame()
        if kind == 'ident' and text not in KEYWORDS:
            if text not in self.props:
                raise self.error('unknown proposition %r' % text, tok)
            if self.at("'"):
                prime = self.next()
                if not primed:
                    raise self.error("primed variable %s' is not allowed here" % text, prime)
                return atom(text, primed=True)
            return atom(text)
        raise self.error('unexpected %r' % (text or 'end of input'), tok)

    def frame(self):
        changed = set()
        if self.at('except'):
            self.next()
            self.expect('{')
            if not self.at('}'):
                while True:
                    tok = self.ident()
                    if tok[1] not in self.props:
                        raise self.error('unknown proposition %r' % tok[1], tok)
                    changed.add(tok[1])
                    if not self.at(','):
                        break
                    self.next()
            self.expect('}')
        kept = [iff(atom(p, primed=True), atom(p)) for p in self.props if p not in changed]
        if not kept:
            return TOP
        return kept[0] if len(kept) == 1 else conj(*kept)


def parse_boolean_system(text):
    return _Parser(text).system()


def load_boolean_system(path):
    with open(path, 'r') as f:
        return parse_boolean_system(f.read())
