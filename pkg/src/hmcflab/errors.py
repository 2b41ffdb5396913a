"""Exception hierarchy shared by the geometry, flow and audit layers."""


class HmcfError(Exception):
    """Base class for all library errors."""


class DomainError(HmcfError, ValueError):
    """An argument lies outside the domain of a function."""


class NumericalFailure(HmcfError):
    """A numerical construction could not be completed (CLI exit code 3)."""


class NonConvex(NumericalFailure):
    pass


class SingularMetric(NumericalFailure):
    pass


class NegativeRadius(NonConvex):
    pass


class StepCollapse(NumericalFailure):
    pass


class ReachExceeded(NumericalFailure):
    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class RootBracketFailure(NumericalFailure):
    pass


class InradExceedsRadius(HmcfError, ValueError):
    pass


class NotHConvex(HmcfError, ValueError):
    pass
