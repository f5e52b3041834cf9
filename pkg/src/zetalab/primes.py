"""Prime enumeration in dyadic log-bands and exact prime moment sums.

A band (r, k) collects the primes p with 2^r < ln p <= 2^k.  Membership
is decided by comparing ln p in double precision against the exact
powers of two; no prime below the sieve ceiling has ln p exactly equal
to a power of two in double precision, so the convention is unambiguous
(ties at the upper bound would be included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import BandTooLarge, InvalidBand, InvalidRange

SIEVE_CEILING = 2 ** 40          # hard cap on e^(2^k); rejects k >= 5
SEGMENT_SIZE = 1 << 20           # segment length of the segmented sieve


@dataclass(frozen=True)
class DyadicBand:
    """Prime range e^(2^r) < p <= e^(2^k), with -1 <= r < k."""

    r: int
    k: int

    def __post_init__(self) -> None:
        if self.r < -1:
            raise InvalidBand(f"band exponent r must be >= -1, got r={self.r}")
        if self.k <= self.r:
            raise InvalidBand(f"band needs r < k, got r={self.r}, k={self.k}")

    @property
    def log_lower(self) -> float:
        return 2.0 ** self.r

    @property
    def log_upper(self) -> float:
        return 2.0 ** self.k

    def prime_ceiling(self) -> int:
        """Largest integer that can possibly lie in the band."""
        return int(math.floor(math.exp(self.log_upper)))


@dataclass(frozen=True, eq=False)
class PrimeBandList:
    """Ascending primes of one band with precomputed natural logs.

    Instances are immutable; derived evaluation tables attach lazily and
    are shared by every phase draw on the same list.
    """

    band: DyadicBand
    primes: np.ndarray
    logs: np.ndarray

    def __post_init__(self) -> None:
        primes = np.ascontiguousarray(self.primes, dtype=np.int64)
        logs = np.ascontiguousarray(self.logs, dtype=np.float64)
        if primes.shape != logs.shape or primes.ndim != 1:
            raise ValueError("primes and logs must be aligned 1-D arrays")
        primes.setflags(write=False)
        logs.setflags(write=False)
        object.__setattr__(self, "primes", primes)
        object.__setattr__(self, "logs", logs)

    def __len__(self) -> int:
        return int(self.primes.size)


def is_prime(n: int) -> bool:
    """Deterministic trial division; the independent cross-check oracle."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _simple_sieve(limit: int) -> np.ndarray:
    """Boolean Eratosthenes flags for 0..limit inclusive."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p:: p] = False
    return flags


def sieve_primes(limit: int) -> np.ndarray:
    """All primes <= limit, ascending, via a segmented sieve.

    Segments of SEGMENT_SIZE keep the working set cache-resident; base
    primes up to sqrt(limit) come from a plain sieve.
    """
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    root = math.isqrt(limit)
    base = np.flatnonzero(_simple_sieve(root)).astype(np.int64)
    chunks = [base]
    lo = root + 1
    while lo <= limit:
        hi = min(lo + SEGMENT_SIZE, limit + 1)
        seg = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            start = max(p * p, ((lo + p - 1) // p) * p)
            if start < hi:
                seg[start - lo:: p] = False
        chunks.append(np.flatnonzero(seg).astype(np.int64) + lo)
        lo = hi
    return np.concatenate(chunks)


@lru_cache(maxsize=64)
def sieve_band(band: DyadicBand) -> PrimeBandList:
    """Exactly the primes p with 2^r < ln p <= 2^k, ascending.

    Raises BandTooLarge when e^(2^k) exceeds SIEVE_CEILING.  Results are
    cached per band so the sieve and its derived tables run once.
    """
    ceiling = math.exp(band.log_upper)
    if ceiling > SIEVE_CEILING:
        raise BandTooLarge(
            f"e^(2^{band.k}) = {ceiling:.4g} exceeds the sieve ceiling 2^40"
        )
    primes = sieve_primes(int(math.floor(ceiling)) + 1)
    logs = np.log(primes.astype(np.float64))
    mask = (logs > band.log_lower) & (logs <= band.log_upper)
    return PrimeBandList(band=band, primes=primes[mask], logs=logs[mask])


def prime_log_moment(primes: PrimeBandList, j: int) -> float:
    """Sum of (ln p)^j / p over the band, ascending primes.

    Accumulated with exactly-rounded summation (math.fsum), which is
    deterministic regardless of threading and strictly tighter than a
    compensated pass.
    """
    if j < 0:
        raise InvalidRange(f"moment order j must be >= 0, got {j}")
    if len(primes) == 0:
        return 0.0
    terms = primes.logs ** j / primes.primes.astype(np.float64)
    return math.fsum(terms)


def pnt_main_term(j: int, P: float, Q: float) -> float:
    """((ln Q)^j - (ln P)^j) / j, the smooth prediction for the band moment."""
    if j < 1:
        raise InvalidRange(f"main term needs j >= 1, got {j}")
    if P < 1.0 or Q <= P:
        raise InvalidRange(f"main term needs 1 <= P < Q, got P={P}, Q={Q}")
    return (math.log(Q) ** j - math.log(P) ** j) / j


@dataclass(frozen=True)
class DeviationRow:
    """One checkpoint pair: the exact moment sum vs its main term."""

    j: int
    P: float
    Q: float
    prime_sum: float
    main_term: float
    deviation: float


@dataclass(frozen=True)
class DeviationScan:
    """All checkpoint pairs of one scan, plus the worst deviation seen."""

    j: int
    rows: tuple[DeviationRow, ...]

    @property
    def max_deviation(self) -> float:
        return max((row.deviation for row in self.rows), default=0.0)


def pnt_deviation_scan(j: int, checkpoints: Sequence[float]) -> DeviationScan:
    """|moment sum - main term| for every checkpoint pair P < Q.

    The maximum over pairs is an empirical lower bound on the constant
    hiding in the main-term approximation; no value is assumed for it.
    """
    if j < 1:
        raise InvalidRange(f"deviation scan needs j >= 1, got {j}")
    pts = [float(c) for c in checkpoints]
    if any(c < 1.0 for c in pts):
        raise InvalidRange("checkpoints must all be >= 1")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise InvalidRange("checkpoints must be strictly ascending")
    if pts and pts[-1] > SIEVE_CEILING:
        raise BandTooLarge(
            f"checkpoint {pts[-1]:.4g} exceeds the sieve ceiling 2^40"
        )
    if len(pts) < 2:
        return DeviationScan(j=j, rows=())
    primes = sieve_primes(int(math.floor(pts[-1])))
    logs = np.log(primes.astype(np.float64))
    pfloat = primes.astype(np.float64)
    rows = []
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            P, Q = pts[a], pts[b]
            sel = (pfloat > P) & (pfloat <= Q)
            prime_sum = math.fsum(logs[sel] ** j / pfloat[sel])
            main = pnt_main_term(j, P, Q)
            rows.append(DeviationRow(j, P, Q, prime_sum, main, abs(prime_sum - main)))
    return DeviationScan(j=j, rows=tuple(rows))


def default_checkpoints(max_exponent: int = 4) -> list[float]:
    """The scan checkpoints e^(2^i) for i = 0..max_exponent."""
    return [math.exp(2.0 ** i) for i in range(max_exponent + 1)]
