"""Exception hierarchy for the simulation toolkit."""


class PhotonFilterError(Exception):
    """Base class for all toolkit errors."""


class DepletedSourceError(PhotonFilterError):
    """The single-photon source has (numerically) fully emitted its photon."""


class NonRealInnovationError(PhotonFilterError):
    """The homodyne innovation gain K_t acquired a non-negligible imaginary part."""


class FilterDivergenceError(PhotonFilterError):
    """A filter state became NaN/inf or its jump intensity went strongly negative."""


class InvalidJumpError(PhotonFilterError):
    """A detection jump was requested while the jump intensity is (numerically) zero."""


class GridTooCoarseError(PhotonFilterError):
    """The time step cannot resolve the current jump intensity (nu * dt > 0.1)."""
