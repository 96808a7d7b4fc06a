"""Exception hierarchy.

Physics-gate failures derive from :class:`PhysicsGateError`; the CLI maps
those to exit status 1 and configuration problems to exit status 2.
"""


class ProbeReduceError(Exception):
    """Base class for all package errors."""


class InvalidGrid(ProbeReduceError, ValueError):
    pass


class ShapeMismatch(ProbeReduceError, ValueError):
    pass


class GridMismatch(ProbeReduceError, ValueError):
    pass


class NonPositiveFrequency(ProbeReduceError, ValueError):
    pass


class NonPositiveLapse(ProbeReduceError, ValueError):
    pass


class OutOfBox(ProbeReduceError, ValueError):
    pass


class UnknownLabel(ProbeReduceError, KeyError):
    pass


class BadPartition(ProbeReduceError, ValueError):
    pass


class DegenerateFit(ProbeReduceError, ValueError):
    pass


class ConvergenceFailure(ProbeReduceError, RuntimeError):
    pass


class PhysicsGateError(ProbeReduceError):
    """A run violated a physical admissibility gate."""


class NotConfining(PhysicsGateError, ValueError):
    pass


class NonPositive(PhysicsGateError, ValueError):
    """E^2 has a non-positive eigenvalue among the requested modes."""


class UncertaintyViolated(PhysicsGateError, RuntimeError):
    pass


class OverlapGateFailed(PhysicsGateError, ValueError):
    def __init__(self, message, max_overlap=None):
        super().__init__(message)
        self.max_overlap = max_overlap


class SchemaError(ProbeReduceError, ValueError):
    """Config validation failure; ``errors`` lists every violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{e['loc']}: {e['msg']}" for e in self.errors]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))
