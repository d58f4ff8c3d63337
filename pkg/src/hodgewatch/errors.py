"""Exception hierarchy shared by all modules."""


class HodgeWatchError(Exception):
    """Base class for data errors raised by hodgewatch."""


class ClosureViolation(HodgeWatchError):
    pass


class DuplicateSimplex(HodgeWatchError):
    pass


class NonPositiveWeight(HodgeWatchError):
    pass


class RankOutOfRange(HodgeWatchError):
    pass


class MissingWeights(HodgeWatchError):
    pass


class NotABijection(HodgeWatchError):
    pass


class ConvergenceFailure(HodgeWatchError):
    pass


class EmptyHistory(HodgeWatchError):
    pass


class AllZeroContext(HodgeWatchError):
    pass


class WindowTooSmall(HodgeWatchError):
    pass


class NodeSetMismatch(HodgeWatchError):
    pass


class MissingTriangleProbability(HodgeWatchError):
    pass


class UnknownSchedule(HodgeWatchError):
    pass


class ParseError(HodgeWatchError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NonContiguousTimesteps(ParseError):
    pass
