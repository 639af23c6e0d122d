"""Exception hierarchy shared by every module."""


class PlalabError(Exception):
    """Base class for all library errors."""


class GridTooCoarse(PlalabError):
    pass


class GridMismatch(PlalabError):
    pass


class DilationTooSmall(PlalabError):
    pass


class TargetUnreachable(PlalabError):
    pass


class InfeasibleRamp(PlalabError):
    pass


class InvalidEpsilon(PlalabError):
    pass


class InvalidParams(PlalabError):
    pass


class InvalidDelta(PlalabError):
    pass


class Infeasible(PlalabError):
    """Synthesis exhausted its degree budget without meeting the contract.

    ``largest_degree`` is the largest degree that was tried.
    """

    def __init__(self, message, largest_degree=None):
        super().__init__(message)
        self.largest_degree = largest_degree


# Constructors propagate synthesis failures under this name.
SynthFailed = Infeasible


class ClippingInfeasible(PlalabError):
    pass


class RoundInfeasible(PlalabError):
    """A decomposition round could not be completed.

    Carries the round number, the name of the failing clause and the partial
    report holding every round finished before the failure.
    """

    def __init__(self, message, round_index, clause, report=None):
        super().__init__(message)
        self.round_index = round_index
        self.clause = clause
        self.report = report


class ConfigError(PlalabError):
    pass
