"""Exception types raised across the package."""


class QuasifracError(Exception):
    """Base class for all package errors."""


class CrackOffLattice(QuasifracError):
    """A crack edge or endpoint cannot be represented on the lattice."""


class MeshFailure(QuasifracError):
    """The slit mesh could not be built with the requested quality."""


class SolveFailure(QuasifracError):
    """The iterative linear solver did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SegmentNotOnMesh(QuasifracError):
    """A requested boundary or crack-face segment is not a chain of mesh edges."""


class PoolTooLarge(QuasifracError):
    """Exhaustive enumeration was requested over too many edges."""


class ConfigError(QuasifracError):
    """A scenario configuration failed validation.

    ``field`` names the offending entry so CLI users can find it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
