"""Random phase sampling and evaluation of the band field and its derivatives.

Each band prime p carries an i.i.d. complex weight w_p (uniform on the
unit circle, or complex Gaussian with variance-1/2 components).  The
j-th derivative of the field is

    X^(j)(h) = sign_j * Part_j( sum_p (ln p)^j p^(-1/2) w_p e^(-i h ln p) )

with Part = Re and sign = (-1)^(j/2) for even j, Part = Im and
sign = (-1)^((j-1)/2) for odd j.  h ranges over [0, 1].

Three evaluation routes coexist on purpose:

* ``eval_derivative``      direct exactly-rounded sum over primes; the
                           oracle path everything else is tested against.
* ``eval_derivative_grid`` banded fast path on equispaced grids (with a
                           rotation-recurrence alternative kept for
                           cross-checks), pointwise fallback otherwise.
* ``FieldEvaluator``       bin/Taylor factorization of the exponential
                           sum: O(primes) setup per draw, O(bins) per
                           point afterwards, machine-precision accurate.
                           Powers the maximization and Monte Carlo code.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonAscendingGrid
from .primes import DyadicBand, PrimeBandList, sieve_band

TWO_PI = 2.0 * math.pi
MAX_DERIVATIVE_ORDER = 3         # desk-scale cap on the target order j

_RESYNC_INTERVAL = 1024          # recurrence re-anchors every this many steps
_EQUISPACED_ATOL = 1e-13

_BIN_WIDTH = 0.25                # frequency bin width of the evaluator
_SERIES_TERMS = 12               # Taylor terms; (width/2)^12/12! ~ 3e-20
_EVAL_BLOCK = 1 << 21            # points x bins cap per evaluation block
_MAX_EXTRA_ORDER = 6             # highest derivative order the evaluator serves
_TABLE_DEPTH = _SERIES_TERMS + _MAX_EXTRA_ORDER
_FACTORIALS = np.array([math.factorial(t) for t in range(_TABLE_DEPTH)], dtype=np.float64)

_MASK64 = 0xFFFFFFFFFFFFFFFF


class PhaseModel(enum.Enum):
    """Law of the per-prime random weight."""

    CIRCLE = "circle"        # w_p = e^(i theta), theta uniform on [0, 2pi)
    GAUSSIAN = "gaussian"    # w_p = W1 + i W2, W1, W2 ~ N(0, 1/2) independent


def derivative_sign(j: int) -> int:
    """(-1)^(j/2) for even j, (-1)^((j-1)/2) for odd j."""
    return -1 if (j // 2) % 2 else 1


def _check_order(j: int) -> None:
    if not isinstance(j, (int, np.integer)) or j < 0:
        raise DomainError(f"derivative order must be a non-negative integer, got {j!r}")


def _check_h(h: float) -> None:
    if not 0.0 <= h <= 1.0:
        raise DomainError(f"h must lie in [0, 1], got {h!r}")


def _slot(obj, name: str, factory):
    """Lazily attach derived data to a frozen carrier object."""
    try:
        return getattr(obj, name)
    except AttributeError:
        value = factory()
        object.__setattr__(obj, name, value)
        return value


@dataclass(frozen=True)
class FieldSpec:
    """One random function: band, derivative order, phase model."""

    band: DyadicBand
    j: int
    model: PhaseModel

    def __post_init__(self) -> None:
        if not 0 <= self.j <= MAX_DERIVATIVE_ORDER:
            raise DomainError(
                f"derivative order must be in 0..{MAX_DERIVATIVE_ORDER}, got {self.j}"
            )


@dataclass(frozen=True, eq=False)
class PhaseAssignment:
    """One random draw: per-prime complex weights plus the seed behind them.

    Immutable and safe to share across threads.  Regenerating from
    (seed, model, band) reproduces the weights bit-for-bit.
    """

    model: PhaseModel
    primes: PrimeBandList
    weights: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        weights = np.ascontiguousarray(self.weights, dtype=np.complex128)
        if weights.shape != (len(self.primes),):
            raise ValueError("need exactly one weight per band prime")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def band(self) -> DyadicBand:
        return self.primes.band

    def evaluator(self) -> "FieldEvaluator":
        """The banded series evaluator for this draw (built once, cached)."""
        return _slot(self, "_evaluator", lambda: FieldEvaluator(self))

    def to_record(self) -> bytes:
        """Binary record (model, band, seed); weights are never stored."""
        if self.primes is not sieve_band(self.band):
            raise ValueError("only canonical band prime lists are serializable")
        code = 0 if self.model is PhaseModel.CIRCLE else 1
        return _RECORD_MAGIC + struct.pack("<BbbQ", code, self.band.r, self.band.k, self.seed)

    @staticmethod
    def from_record(blob: bytes) -> "PhaseAssignment":
        """Regenerate a draw from its binary record, bit-for-bit."""
        if blob[:4] != _RECORD_MAGIC:
            raise ValueError("not a phase-assignment record")
        code, r, k, seed = struct.unpack("<BbbQ", blob[4:])
        model = PhaseModel.CIRCLE if code == 0 else PhaseModel.GAUSSIAN
        return sample_phases(model, sieve_band(DyadicBand(r, k)), seed)


_RECORD_MAGIC = b"ZLPA"


def sample_phases(model: PhaseModel, primes: PrimeBandList, seed: int) -> PhaseAssignment:
    """One weight per prime from a counter-based generator keyed by seed.

    Philox output at stream position i is a pure function of (seed, i),
    so the weight of prime index i never depends on draw order and
    differently seeded trials are independent streams.  Gaussian weights
    come from Box-Muller on two uniforms per prime, scaled to give each
    component variance 1/2.
    """
    seed = int(seed) & _MASK64
    gen = np.random.Generator(np.random.Philox(key=seed))
    n = len(primes)
    if model is PhaseModel.CIRCLE:
        theta = TWO_PI * gen.random(n)
        weights = np.exp(1j * theta)
    elif model is PhaseModel.GAUSSIAN:
        u = gen.random(2 * n)
        u1 = 1.0 - u[0::2]                   # in (0, 1]: keeps the log finite
        u2 = u[1::2]
        # sqrt(-2 ln u1)/sqrt(2) = sqrt(-ln u1) folds in the 1/2 variance
        weights = np.sqrt(-np.log(u1)) * np.exp(1j * (TWO_PI * u2))
    else:
        raise DomainError(f"unknown phase model {model!r}")
    return PhaseAssignment(model=model, primes=primes, weights=weights, seed=seed)


def _coefficients(plist: PrimeBandList, j: int) -> np.ndarray:
    """(ln p)^j / sqrt(p) per band prime, cached on the prime list."""
    cache = _slot(plist, "_coeff_cache", dict)
    if j not in cache:
        coeff = plist.logs ** j / np.sqrt(plist.primes.astype(np.float64))
        coeff.setflags(write=False)
        cache[j] = coeff
    return cache[j]


def eval_derivative(phases: PhaseAssignment, j: int, h: float) -> float:
    """Direct evaluation of X^(j)(h): exactly-rounded sum over primes.

    This is the oracle path; the grid and banded routes are tested
    against it.
    """
    _check_order(j)
    _check_h(h)
    plist = phases.primes
    if len(plist) == 0:
        return 0.0
    z = phases.weights * np.exp(-1j * (h * plist.logs))
    part = z.real if j % 2 == 0 else z.imag
    return derivative_sign(j) * math.fsum(_coefficients(plist, j) * part)


def _is_equispaced(grid: np.ndarray) -> bool:
    delta = (grid[-1] - grid[0]) / (grid.size - 1)
    lattice = grid[0] + delta * np.arange(grid.size)
    return bool(np.max(np.abs(grid - lattice)) <= _EQUISPACED_ATOL)


def eval_derivative_grid(phases: PhaseAssignment, j: int, grid,
                         _force_path: str | None = None) -> np.ndarray:
    """X^(j) on an ascending grid in [0, 1].

    Equispaced grids take the fast path: the banded series evaluator,
    whose value at a point does not depend on the rest of the grid (so
    refining a lattice can only add candidates, never perturb shared
    ones).  A rotation-recurrence alternative (each prime's phasor
    advances by e^(-i delta ln p) per step, re-anchored from scratch
    every 1024 steps to cap drift) is kept for cross-verification via
    ``_force_path="recurrence"``.  Anything non-equispaced falls back to
    the pointwise direct path and matches it exactly.  Fast-path values
    agree with the pointwise path to 1e-9 relative error (of the
    vector's max absolute value), with orders of magnitude to spare.
    """
    _check_order(j)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise NonAscendingGrid("grid must be a nonempty 1-D array")
    if np.any(np.diff(grid) <= 0.0):
        raise NonAscendingGrid("grid must be strictly ascending")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise DomainError("grid points must lie in [0, 1]")
    if grid.size == 1 or not _is_equispaced(grid):
        return np.array([eval_derivative(phases, j, float(h)) for h in grid])
    if _force_path == "recurrence":
        return _recurrence_grid(phases, j, grid)
    return phases.evaluator().derivative(j, grid)


def _recurrence_grid(phases: PhaseAssignment, j: int, grid: np.ndarray) -> np.ndarray:
    plist = phases.primes
    out = np.empty(grid.size)
    if len(plist) == 0:
        out[:] = 0.0
        return out
    sign = derivative_sign(j)
    even = j % 2 == 0
    anchored = _coefficients(plist, j) * phases.weights
    delta = (grid[-1] - grid[0]) / (grid.size - 1)
    rot = np.exp(-1j * (delta * plist.logs))
    z = np.empty_like(anchored)
    for m in range(grid.size):
        if m % _RESYNC_INTERVAL == 0:
            np.multiply(anchored, np.exp(-1j * (grid[m] * plist.logs)), out=z)
        else:
            np.multiply(z, rot, out=z)
        part = z.real if even else z.imag
        out[m] = sign * part.sum()
    return out


def exact_variance(primes: PrimeBandList, j: int) -> float:
    """Variance of X^(j)(h) for every h: sum over p of (ln p)^(2j) / (2p).

    Valid under both phase models; each prime contributes variance
    (ln p)^(2j)/(2p) whether its weight is unit-circle or complex
    Gaussian.
    """
    _check_order(j)
    cache = _slot(primes, "_variance_cache", dict)
    if j not in cache:
        if len(primes) == 0:
            cache[j] = 0.0
        else:
            terms = primes.logs ** (2 * j) / (2.0 * primes.primes.astype(np.float64))
            cache[j] = math.fsum(terms)
    return cache[j]


def variance_bound_rhs(band, j: int, alpha: float) -> float:
    """alpha^2 * 2^(-(j+2)k) * Var[X^(j+2)], the discrepancy variance bound.

    ``band`` may be a DyadicBand or an explicit PrimeBandList (test hook).
    """
    _check_order(j)
    if alpha < 0.0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    plist = sieve_band(band) if isinstance(band, DyadicBand) else band
    scale = 2.0 ** (-(j + 2) * plist.band.k)
    return alpha * alpha * scale * exact_variance(plist, j + 2)


# ---------------------------------------------------------------------------
# Banded series evaluator
# ---------------------------------------------------------------------------

class _BandTables:
    """Static per-band factorization tables shared by every phase draw."""

    __slots__ = ("n_bins", "centers", "starts", "counts", "powers")

    def __init__(self, plist: PrimeBandList, depth: int):
        logs = plist.logs
        lo, hi = float(logs[0]), float(logs[-1])
        n_bins = max(1, int(math.ceil((hi - lo) / _BIN_WIDTH)))
        edges = lo + (hi - lo) * np.arange(n_bins + 1) / n_bins
        # logs are ascending, so bins are contiguous index segments
        bin_idx = np.minimum(np.searchsorted(edges, logs, side="right") - 1, n_bins - 1)
        bin_idx = np.maximum(bin_idx, 0)
        self.n_bins = n_bins
        self.centers = 0.5 * (edges[:-1] + edges[1:])
        self.starts = np.searchsorted(bin_idx, np.arange(n_bins), side="left")
        self.counts = np.diff(np.append(self.starts, logs.size))
        dlog = logs - self.centers[bin_idx]
        powers = np.empty((depth, logs.size))
        powers[0] = 1.0 / np.sqrt(plist.primes.astype(np.float64))
        for t in range(1, depth):
            powers[t] = powers[t - 1] * dlog
        self.powers = powers


def _band_tables(plist: PrimeBandList) -> _BandTables:
    return _slot(plist, "_band_tables", lambda: _BandTables(plist, _TABLE_DEPTH))


def prepare_band(plist: PrimeBandList) -> None:
    """Build the shared static tables up front (e.g. before threading)."""
    if len(plist):
        _band_tables(plist)


class FieldEvaluator:
    """Per-draw evaluator for all derivative orders up to 6.

    Factorizes e^(-i h ln p) = e^(-i h c_b) e^(-i h d_p) over frequency
    bins of width 0.25 centered at c_b and expands the residual factor
    as a truncated Taylor series in (-i h d_p); with |d_p| <= 0.125 and
    h <= 1 the truncation sits near 3e-20 of the coefficient mass, far
    inside every equivalence contract.  Higher derivative orders come
    from the moment recursion A_{q+1}[t] = c_b A_q[t] + A_q[t+1].
    """

    def __init__(self, phases: PhaseAssignment):
        plist = phases.primes
        self._plist = plist
        self._empty = len(plist) == 0
        self._coef_cache: dict[int, np.ndarray] = {}
        if self._empty:
            return
        tab = _band_tables(plist)
        self._tab = tab
        base = np.empty((_TABLE_DEPTH, tab.n_bins), dtype=np.complex128)
        w = phases.weights
        for t in range(_TABLE_DEPTH):
            base[t] = np.add.reduceat(w * tab.powers[t], tab.starts)
        base[:, tab.counts == 0] = 0.0     # reduceat artifacts on empty bins
        self._moments: dict[int, np.ndarray] = {0: base}

    def _series_coefficients(self, q: int) -> np.ndarray:
        if q in self._coef_cache:
            return self._coef_cache[q]
        if q > _MAX_EXTRA_ORDER:
            raise DomainError(f"evaluator serves orders 0..{_MAX_EXTRA_ORDER}, got {q}")
        for step in range(1, q + 1):
            if step not in self._moments:
                prev = self._moments[step - 1]
                self._moments[step] = self._tab.centers[None, :] * prev[:-1] + prev[1:]
        coef = self._moments[q][:_SERIES_TERMS] / _FACTORIALS[:_SERIES_TERMS, None]
        self._coef_cache[q] = coef
        return coef

    def complex_sum(self, q: int, h: np.ndarray) -> np.ndarray:
        """sum_p (ln p)^q p^(-1/2) w_p e^(-i h ln p) for each h.

        Large point sets are processed in fixed-size blocks to cap the
        points x bins working set; blocking does not change any value.
        """
        h = np.atleast_1d(np.asarray(h, dtype=np.float64))
        if self._empty:
            return np.zeros(h.size, dtype=np.complex128)
        coef = self._series_coefficients(q)
        out = np.empty(h.size, dtype=np.complex128)
        block = max(1, _EVAL_BLOCK // self._tab.n_bins)
        for start in range(0, h.size, block):
            hb = h[start:start + block]
            u = (-1j) * hb
            value = np.broadcast_to(coef[-1], (hb.size, self._tab.n_bins)).copy()
            for t in range(_SERIES_TERMS - 2, -1, -1):
                value *= u[:, None]
                value += coef[t]
            value *= np.exp(-1j * np.outer(hb, self._tab.centers))
            out[start:start + block] = value.sum(axis=1)
        return out

    def derivative(self, q: int, h):
        """X^(q)(h) for scalar h or an array of h values."""
        _check_order(q)
        scalar = np.isscalar(h)
        s = self.complex_sum(q, h)
        part = s.real if q % 2 == 0 else s.imag
        out = derivative_sign(q) * part
        return float(out[0]) if scalar else out
