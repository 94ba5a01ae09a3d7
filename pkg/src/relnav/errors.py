"""Exception types shared across the package."""


class RelnavError(Exception):
    """Base class for all package errors."""


class SchemaViolation(RelnavError):
    """A JSON document does not conform to its schema."""


class MissingTarget(RelnavError):
    """Prior document contains no node matching the requested target label."""


class DanglingEdge(RelnavError):
    """An edge references a node that does not exist."""


class UnknownEndpoint(RelnavError):
    """An edge insert names a node absent from the graph."""


class UnknownNode(RelnavError):
    """A node id lookup failed."""


class RangeViolation(RelnavError):
    """A numeric input fell outside its documented range."""


class ReasonerUnavailable(RelnavError):
    """The reasoning backend could not produce a reply."""


class ProtocolViolation(RelnavError):
    """A remote reasoner reply was malformed."""


class EmptyFrontierSet(RelnavError):
    """No frontier remains; exploration is exhausted."""


class Unreachable(RelnavError):
    """No traversable path exists between the requested points."""


class SteppedAfterStop(RelnavError):
    """An action was applied to an agent that already issued Stop."""


class ConfigInvalid(RelnavError):
    """A run configuration failed validation."""


class EmptyResults(RelnavError):
    """Metrics were requested over an empty result set."""
