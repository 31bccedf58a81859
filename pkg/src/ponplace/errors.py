"""Exception types shared across the package."""


class PonPlaceError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(PonPlaceError):
    """Topology or parameter record violates its invariants."""


class UnknownNode(PonPlaceError):
    """Address does not exist in the topology."""


class Unsatisfiable(PonPlaceError):
    """Workload generation request cannot be fulfilled."""


class ParseError(PonPlaceError):
    """Malformed input document (bad JSON, missing field, wrong type)."""


class ValidationError(PonPlaceError):
    """Structurally valid document whose contents violate a constraint."""


class OverCapacity(PonPlaceError):
    """A load argument exceeds the node capacity it is measured against."""


class TooLarge(PonPlaceError):
    """Instance exceeds the exhaustive-enumeration guard."""


class Infeasible(PonPlaceError):
    """No assignment satisfies the capacity constraints.

    ``violations`` holds the constraint violations that triggered the error
    when they are known (empty for a proven-by-search infeasibility).
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else []


class LimitExceeded(PonPlaceError):
    """Search hit its time or node limit before finding any feasible point.

    ``incumbent`` carries the best report found so far, if any.
    """

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class GaveUp(PonPlaceError):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts


class MixedSweep(PonPlaceError):
    """Summary requested over rows that do not come from a single sweep."""
