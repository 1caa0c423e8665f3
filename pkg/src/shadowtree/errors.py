"""Exception types shared across the package."""


class ShadowTreeError(Exception):
    """Base class for all shadowtree errors."""


class RejectsArbitrage(ShadowTreeError):
    """Market admits arbitrage (u <= 1 or d >= 1)."""


class RejectsDrift(ShadowTreeError):
    """p outside the admissible drift window (d/(1+d), 1/(1+d))."""


class RejectsRecombining(ShadowTreeError):
    """u and d do not satisfy u*d = 1 within tolerance."""


class DomainError(ShadowTreeError):
    """Evaluation outside the mathematical domain of a formula."""


class NoBracket(ShadowTreeError):
    """Root-finder could not establish a sign-changing bracket."""


class NoConvergence(ShadowTreeError):
    """Iteration budget exhausted before reaching tolerance."""


class NoAdmissibleRoot(ShadowTreeError):
    """Neither quadratic root lies in the admissible interval."""


class OffLattice(ShadowTreeError):
    """Price ratio is not a lattice point {d, 1, u, ..., u^k, u^(k+1)}."""


class BrokenInvariant(ShadowTreeError):
    """A structural invariant (e.g. phi0 = c*m*phi) failed on entry."""


class InadmissibleDelta(ShadowTreeError):
    """Time step too large: induced up-probability leaves (0, 1)."""


class IntractableSize(ShadowTreeError):
    """Requested horizon/grid exceeds the supported exhaustive size."""


class PrecisionWarning(UserWarning):
    """Richardson extrapolation levels disagree beyond tolerance."""
