'''
Exceptions shared by the game, planner and boolean-system packages.

Input problems derive from ValueError and map to exit code 2 in main.py,
solver failures derive from RuntimeError and map to exit code 3.
'''


class GameError(ValueError):
    """Malformed or invalid game structure, or a strategy that does not fit it."""
    pass


class PartitionError(GameError):
    """State partition that cannot induce an abstraction."""
    pass


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = '%d:%d: %s' % (line, col, message)
        super(ParseError, self).__init__(message)


class GuardError(ValueError):
    """Explicit enumeration would exceed its size guard."""
    pass


class SolverError(RuntimeError):
    """Iteration cap exceeded or an exact certificate failed."""
    pass
