"""Exception types shared across the package."""


class ZetalabError(Exception):
    """Base class for all package-specific errors."""


class InvalidBand(ZetalabError):
    """Band exponents violate r < k or the r >= -1 floor."""


class BandTooLarge(ZetalabError):
    """Band ceiling e^(2^k) exceeds the configured sieve ceiling."""


class InvalidRange(ZetalabError):
    """Degenerate or out-of-order numeric range."""


class DomainError(ZetalabError):
    """Argument outside the supported domain (e.g. h not in [0, 1])."""


class NonAscendingGrid(ZetalabError):
    """Evaluation grid is empty or not strictly ascending."""


class BoundViolated(ZetalabError):
    """Empirical second moment exceeded its variance bound (strict mode)."""


class StatCheckFailed(ZetalabError):
    """A Monte Carlo statistic fell outside its acceptance window (strict mode)."""
