"""Exception types shared across the package."""


class ReebBranchError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ReebBranchError, ValueError):
    """An input lies outside the region where an operation is defined."""


class NumericError(ReebBranchError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class IntegrationError(NumericError):
    """The ODE integrator collapsed its step or failed to advance."""


class SectionTimeoutError(NumericError):
    """No section crossing was found within the time budget."""


class DegeneracyError(ReebBranchError, ValueError):
    """A geometric configuration is degenerate (tangential, on an axis...)."""


class DecompositionError(ReebBranchError):
    """Quasi-sector arcs could not be resolved into the expected count."""


class ConstructionError(ReebBranchError):
    """A curve or branch family failed its own consistency check."""


class SolverError(NumericError):
    """The congruence fiber solver did not converge."""


class ResolutionError(NumericError):
    """A discretized integer invariant did not round cleanly."""


class ProximityError(ReebBranchError, ValueError):
    """Two loops (or a loop and the projection pole) are too close."""
