"""Exception hierarchy for the vll package."""


class VllError(Exception):
    """Base class for all vll errors."""


class InvalidConfigError(VllError):
    """A configuration value violates its contract (bad grid size, horizon, ...)."""


class InvalidArgumentError(VllError):
    """An operation argument is outside its admissible range."""


class DomainError(VllError):
    """A thermodynamic quantity was evaluated outside its domain (rho < 0, r <= 0)."""


class InvalidDataError(VllError):
    """Initial-data profile violates positivity or endpoint constraints."""


class InsufficientDataError(VllError):
    """Too few samples for the requested reduction (time integral needs >= 2)."""


class NumericalBlowupError(VllError):
    """Non-finite field value encountered; carries the simulation time."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


class StiffnessError(VllError):
    """Stable time step underflowed (dt < 1e-14)."""


class HorizonTooLongError(VllError):
    """Gradient monitor tripped before the requested horizon; names the trip time."""

    def __init__(self, message: str, trip_time: float):
        super().__init__(f"{message} (trip at t={trip_time:.6g})")
        self.trip_time = trip_time


class RangeError(VllError):
    """Requested time lies outside the stored horizon."""


class UnderResolvedLayerError(VllError):
    """Boundary-layer strip too thin for the grid (needs >= 2 cells)."""


class InvalidTestFunctionError(VllError):
    """Weak-form test function violates its compact-support requirement."""
