class SimulationError(Exception):
    """Base class for errors raised while building or running an estimator."""


class NotPositiveSemidefinite(SimulationError, ValueError):
    pass


class ClassViolation(SimulationError, ValueError):
    """A trend leaves the mean/standard-deviation class it is declared in."""


class ZeroMixtureMass(SimulationError):
    """Every lattice value of a path lies where the mixture weight function is zero."""


class NonAbsolutelyContinuous(SimulationError):
    """The evaluated event occurred on a path the design measure cannot produce."""
