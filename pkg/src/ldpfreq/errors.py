"""Exception types raised across the library."""


class LdpError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveEpsilon(LdpError):
    """A privacy budget that must be strictly positive was not."""


class DomainTooSmall(LdpError):
    """A categorical domain with fewer than two values carries no information."""


class ValueOutOfDomain(LdpError):
    """An input value does not belong to the declared domain."""


class DegenerateChannel(LdpError):
    """A perturbation channel with p == q (or an empty log-ratio) cannot be inverted."""


class EmptyCollection(LdpError):
    """An estimator was asked to run on zero reports."""


class MalformedChannel(LdpError):
    """A probability table whose rows do not form distributions."""


class InfeasibleBudget(LdpError):
    """No valid second-round parameters exist for the requested budget pair."""


class DimensionMismatch(LdpError):
    """A value tuple does not match the attribute list."""


class ShapeMismatch(LdpError):
    """A report payload has the wrong shape for the declared protocol."""


class UnknownAttribute(LdpError):
    """A report referenced an attribute index outside the domain."""


class MissingParameters(LdpError):
    """Estimation was requested for an attribute with no registered parameters."""


class MalformedCsv(LdpError):
    """The input file could not be parsed as a CSV with a header row."""


class ConstantColumn(LdpError):
    """A dataset column with a single distinct value was rejected."""


class ZeroBaseline(LdpError):
    """Accuracy gain against a zero-MSE baseline is undefined."""
