"""Exception hierarchy shared by all pcpfv modules."""


class PcpError(Exception):
    """Base class for all pcpfv errors."""


class DomainError(PcpError):
    """Inputs outside the physically meaningful domain."""


class ConvergenceError(PcpError):
    """An iterative solve failed to converge or to bracket a root."""


class InadmissibleError(PcpError):
    """A conserved state has no physically admissible primitive description."""


class WeightError(PcpError):
    """Convex-combination weights are negative or do not sum to one."""


class MatrixError(PcpError):
    """A matrix fails a required structural property (e.g. orthogonality)."""


class ConfigError(PcpError):
    """Invalid mesh/run configuration."""


class UnsupportedOrder(PcpError):
    """Quadrature order outside the supported range."""


class DegenerateCell(PcpError):
    """A mesh cell with nonpositive measure."""


class AverageInadmissible(PcpError):
    """A cell average fails the shrunken admissible set; limiting cannot proceed."""


class BracketError(PcpError):
    """A root bracket required by a limiter solve does not exist."""


class StepError(PcpError):
    """A time step failed; carries the offending cell index when known."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class ConstructionError(PcpError):
    """A randomized construction (e.g. DDF projection) failed."""


class UnknownPreset(PcpError):
    """Initial-condition preset name not recognized."""
