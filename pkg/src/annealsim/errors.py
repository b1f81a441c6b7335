"""Exception hierarchy shared by all solver modules."""


class AnnealSimError(Exception):
    """Base class for every error raised by the package."""


class SchedulingError(AnnealSimError):
    """Schedule points are not strictly increasing in s."""


class FormatError(AnnealSimError):
    """Malformed input file or configuration."""


class RangeError(AnnealSimError):
    """A coordinate lies outside its admissible interval."""


class DomainError(AnnealSimError):
    """A physical parameter has an invalid value (e.g. nonpositive temperature)."""


class CapacityError(AnnealSimError):
    """Problem size exceeds the memory guard of the requested code path."""


class StiffnessError(AnnealSimError):
    """The adaptive integrator could not make progress."""


class IntegrationError(AnnealSimError):
    """The integrated trajectory violates a conservation check."""


class PhysicalityError(AnnealSimError):
    """A density matrix or population vector became unphysical."""


class QuadratureError(AnnealSimError):
    """Numerical quadrature failed to converge."""


class InsufficientData(AnnealSimError):
    """Not enough data points for the requested fit or search."""


class AlignmentError(AnnealSimError):
    """Two curves are sampled on different grids."""
