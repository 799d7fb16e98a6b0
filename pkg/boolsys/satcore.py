'''
A small satisfiability engine: Tseitin conversion, DPLL and deletion cores.

Variables are numbered from 1 and literals are signed integers, as in DIMACS.
Every original variable keeps its (name, index) origin so callers can map a
model or an unsatisfiable core back to propositions.
'''

import logging

from boolsys.formula import AND, FALSE, IFF, IMPLIES, NOT, OR, TRUE, VAR, conjuncts

logger = logging.getLogger(__name__)


class CnfInstance(object):
    def __init__(self, origins=(), clauses=(), groups=None):
        # origins[v - 1] is the (name, index) key of variable v, None for auxiliaries
        self.origins = list(origins)
        self.index_of = dict((key, v + 1) for v, key in enumerate(self.origins) if key is not None)
        self.clauses = [tuple(c) for c in clauses]
        self.groups = list(groups) if groups is not None else [0] * len(self.clauses)
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > len(self.origins):
                    raise ValueError('literal %d references an undeclared variable' % lit)

    @property
    def n_vars(self):
        return len(self.origins)

    def declare(self, key=None):
        self.origins.append(key)
        if key is not None:
            self.index_of[key] = len(self.origins)
        return len(self.origins)

    def add_clause(self, lits, group=0):
        clause = []
        for lit in lits:
            if lit not in clause:
                clause.append(lit)
        self.clauses.append(tuple(clause))
        self.groups.append(group)
        return len(self.clauses) - 1

    def variables_of(self, clause_ids):
        return set(abs(lit) for i in clause_ids for lit in self.clauses[i])

    def __repr__(self):
        return 'CnfInstance(%d vars, %d clauses)' % (self.n_vars, len(self.clauses))


class SatOutcome(object):
    def __init__(self, sat, model=None, core=None):
        self.sat = sat
        # variable number -> bool, total over the instance
        self.model = model
        self.core = core

    def __bool__(self):
        return self.sat

    __nonzero__ = __bool__

    def __repr__(self):
        if self.sat:
            return 'SatOutcome(SAT)'
        return 'SatOutcome(UNSAT, %d core clauses)' % len(self.core)


class _Encoder(object):
    def __init__(self, cnf):
        self.cnf = cnf
        self.group = 0
        self.memo = {}

    def start_group(self, group):
        # auxiliaries are never shared between groups
        self.group = group
        self.memo = {}

    def true_var(self):
        if TRUE not in self.memo:
            t = self.cnf.declare()
            self.cnf.add_clause([t], self.group)
            self.memo[TRUE] = t
        return self.memo[TRUE]

    def literal(self, f):
        op = f.op
        if op == VAR:
            return self.cnf.index_of[f.var]
        if op == TRUE:
            return self.true_var()
        if op == FALSE:
            return -self.true_var()
        if op == NOT:
            return -self.literal(f.args[0])
        if f in self.memo:
            return self.memo[f]
        lits = [self.literal(a) for a in f.args]
        x = self.cnf.declare()
        add = lambda c: self.cnf.add_clause(c, self.group)
        if op == AND:
            for l in lits:
                add([-x, l])
            add([x] + [-l for l in lits])
        elif op == OR:
            add([-x] + lits)
            for l in lits:
                add([x, -l])
        elif op == IMPLIES:
            a, b = lits
            add([-x, -a, b])
            add([x, a])
            add([x, -b])
        elif op == IFF:
            a, b = lits
            add([-x, -a, b])
            add([-x, a, -b])
            add([x, a, b])
            add([x, -a, -b])
        else:
            raise ValueError('unknown connective %r' % op)
        self.memo[f] = x
        return x

    def clause_literals(self, f):
        """Literals of a flat disjunction of literals, or None."""
        items = f.args if f.op == OR else (f,)
        lits = []
        for g in items:
            if g.op == VAR:
                lits.append(self.cnf.index_of[g.var])
            elif g.op == NOT and g.args[0].op == VAR:
                lits.append(-self.cnf.index_of[g.args[0].var])
            else:
                return None
        return lits

    def emit(self, f):
        if f.op == TRUE:
            return
        lits = self.clause_literals(f)
        if lits is None:
            lits = [self.literal(f)]
        self.cnf.add_clause(lits, self.group)


def to_cnf(formula, declare=()):
    """
    Equisatisfiable CNF of formula. Original variables (plus any extra keys in
    declare) come first, sorted by (index, name); each top-level conjunct gets
    its own clause-origin group.
    """
    keys = set(formula.variables()) | set(declare)
    cnf = CnfInstance(sorted(keys, key=lambda k: (k[1], k[0])))
    encoder = _Encoder(cnf)
    for group, part in enumerate(conjuncts(formula)):
        encoder.start_group(group)
        encoder.emit(part)
    return cnf


class DpllSolver(object):
    """
    Chronological-backtracking DPLL with unit propagation. Branches on the
    lowest-numbered unassigned variable, trying false first. Clauses can be
    added between calls to solve.
    """

    def __init__(self, n_vars, clauses=()):
        self.n_vars = n_vars
        self.clauses = []
        self.occurrences = {}
        for clause in clauses:
            self.add_clause(clause)

    def add_clause(self, lits):
        cid = len(self.clauses)
        clause = tuple(lits)
        for lit in clause:
            if lit == 0 or abs(lit) > self.n_vars:
                raise ValueError('literal %d out of range for %d variables' % (lit, self.n_vars))
            self.occurrences.setdefault(lit, []).append(cid)
        self.clauses.append(clause)
        return cid

    def _status(self, clause, value):
        """(satisfied, number of unassigned literals, last unassigned literal)"""
        free, last = 0, 0
        for lit in clause:
            v = value[abs(lit)]
            if v == 0:
                free += 1
                last = lit
            elif (v > 0) == (lit > 0):
                return True, 0, 0
        return False, free, last

    def solve(self, assumptions=()):
        value = [0] * (self.n_vars + 1)
        trail = []

        def assign(lit):
            value[abs(lit)] = 1 if lit > 0 else -1
            trail.append(lit)

        def propagate(start):
            i = start
            while i < len(trail):
                falsified = -trail[i]
                for cid in self.occurrences.get(falsified, ()):
                    sat, free, last = self._status(self.clauses[cid], value)
                    if sat:
                        continue
                    if free == 0:
                        return False
                    if free == 1:
                        assign(last)
                i += 1
            return True

        unsat = SatOutcome(False, core=frozenset(range(len(self.clauses))))
        for lit in assumptions:
            v = value[abs(lit)]
            if v == 0:
                assign(lit)
            elif (v > 0) != (lit > 0):
                return unsat
        for clause in self.clauses:
            sat, free, last = self._status(clause, value)
            if sat:
                continue
            if free == 0:
                return unsat
            if free == 1:
                assign(last)
        if not propagate(0):
            return unsat

        decisions = []  # (trail mark, literal, flipped)
        while True:
            branch = next((v for v in range(1, self.n_vars + 1) if value[v] == 0), None)
            if branch is None:
                model = dict((v, value[v] > 0) for v in range(1, self.n_vars + 1))
                return SatOutcome(True, model=model)
            mark = len(trail)
            decisions.append((mark, -branch, False))
            assign(-branch)
            ok = propagate(mark)
            while not ok:
                while decisions and decisions[-1][2]:
                    decisions.pop()
                if not decisions:
                    return unsat
                mark, lit, _ = decisions.pop()
                for undone in trail[mark:]:
                    value[abs(undone)] = 0
                del trail[mark:]
                decisions.append((mark, -lit, True))
                assign(-lit)
                ok = propagate(mark)


def solve(cnf, assumptions=()):
    outcome = DpllSolver(cnf.n_vars, cnf.clauses).solve(assumptions)
    logger.debug('%s -> %s' % (cnf, outcome))
    return outcome


def _subset_sat(cnf, clause_ids):
    return DpllSolver(cnf.n_vars, [cnf.clauses[i] for i in clause_ids]).solve().sat


def minimize_core(cnf, core):
    """
    Deletion-based shrinking of an unsatisfiable clause set: whole clause-origin
    groups first, then single clauses in index order. No clause of the result
    can be dropped without making it satisfiable.
    """
    core = sorted(core)
    if _subset_sat(cnf, core):
        raise ValueError('minimize_core needs an unsatisfiable core')
    for group in sorted(set(cnf.groups[i] for i in core)):
        trial = [i for i in core if cnf.groups[i] != group]
        if not _subset_sat(cnf, trial):
            core = trial
    for cid in list(core):
        trial = [i for i in core if i != cid]
        if not _subset_sat(cnf, trial):
            core = trial
    logger.debug('core minimized to %d clauses' % len(core))
    return frozenset(core)


def decode_model(cnf, model):
    """Values of the original variables, keyed by (name, index)."""
    return dict((key, model[v + 1]) for v, key in enumerate(cnf.origins) if key is not None)


def core_keys(cnf, core):
    """Original (name, index) keys mentioned by the clauses of core."""
    return set(cnf.origins[v - 1] for v in cnf.variables_of(core) if cnf.origins[v - 1] is not None)


# DIMACS
def to_dimacs(cnf):
    lines = []
    for v, key in enumerate(cnf.origins):
        if key is not None:
            lines.append('c var %d %s@%d' % (v + 1, key[0], key[1]))
    lines.append('p cnf %d %d' % (cnf.n_vars, len(cnf.clauses)))
    for clause in cnf.clauses:
        lines.append(' '.join(str(lit) for lit in clause) + ' 0')
    return '\n'.join(lines) + '\n'


def from_dimacs(text):
    origins, clauses, pending = None, [], []
    names = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        if fields[0] == 'c':
            if len(fields) == 4 and fields[1] == 'var' and '@' in fields[3]:
                name, _, index = fields[3].rpartition('@')
                names[int(fields[2])] = (name, int(index))
            continue
        if fields[0] == 'p':
            if len(fields) != 4 or fields[1] != 'cnf':
                raise ValueError('line %d: malformed header %r' % (lineno, line))
            origins = [names.get(v) for v in range(1, int(fields[2]) + 1)]
            continue
        if origins is None:
            raise ValueError('line %d: clause before the "p cnf" header' % lineno)
        for lit in (int(x) for x in fields):
            if lit == 0:
                clauses.append(pending)
                pending = []
            else:
                pending.append(lit)
    if origins is None:
        raise ValueError('missing "p cnf" header')
    if pending:
        clauses.append(pending)
    return CnfInstance(origins, clauses)
