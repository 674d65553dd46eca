"""Exception types raised by the sdot package."""


class SdotError(Exception):
    """Base class for all sdot errors."""


class EmptyDomain(SdotError):
    """The clipping domain is empty or degenerate."""


class DimensionMismatch(SdotError):
    """Vector length does not match the number of target sites."""


class OutsideDomain(SdotError):
    """A query point lies outside the domain polygon."""


class SegmentOutsideDomain(SdotError):
    """A segment is not contained in the density mesh."""


class DisconnectedHessian(SdotError):
    """The adjacency graph of the Hessian is disconnected (zero second eigenvalue)."""


class NonZeroSumResidual(SdotError):
    """A Newton residual does not sum to zero."""


class TooLarge(SdotError):
    """Exact subset enumeration was requested for a graph that is too large."""


class TooShort(SdotError):
    """Not enough iterations for a convergence-rate analysis."""


class InvalidProfile(SdotError):
    """A radial density profile violates its shape constraints."""
