"""Discretization grids and maximization oracles for the band field.

The continuous-maximum oracle is a dense scan at resolution
2^(-k)/oversample followed by Newton iteration on the next derivative.
The field is a trigonometric polynomial with frequencies at most 2^k,
so consecutive critical points are at least about pi * 2^(-k) apart and
a 64-fold oversampled scan cannot skip the global basin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .field import PhaseAssignment, eval_derivative_grid, exact_variance

NEWTON_MAX_ITERS = 50
TOP_CANDIDATES = 5
DEFAULT_OVERSAMPLE = 64
DEFAULT_NEWTON_TOL = 1e-10       # residual target, relative to sd(X^(q+1))


class MaxMethod(enum.Enum):
    GRID_ONLY = "grid"
    REFINED = "refined"


@dataclass(frozen=True)
class DiscretizationGrid:
    """Lattice {alpha * 2^(-(j+2)k/2) * n : n >= 0} intersected with [0, 1].

    0 is always a point; 1 belongs only when it lies on the lattice.  A
    spacing above 1 collapses the grid to {0} and sets ``degenerate``.
    """

    j: int
    k: int
    alpha: float
    spacing: float
    points: np.ndarray
    degenerate: bool

    def __post_init__(self) -> None:
        points = np.ascontiguousarray(self.points, dtype=np.float64)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.size)


def discretization_grid(j: int, k: int, alpha: float) -> DiscretizationGrid:
    """Build the spacing-alpha*2^(-(j+2)k/2) lattice on [0, 1]."""
    if j < 0:
        raise DomainError(f"derivative order must be >= 0, got {j}")
    if k < 1:
        raise DomainError(f"scale k must be >= 1, got {k}")
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    spacing = alpha * 2.0 ** (-(j + 2) * k / 2.0)
    if spacing > 1.0:
        return DiscretizationGrid(j, k, alpha, spacing, np.zeros(1), True)
    n_max = int(math.floor(1.0 / spacing))
    # guard the boundary against floor() landing one ulp off
    while (n_max + 1) * spacing <= 1.0:
        n_max += 1
    while n_max * spacing > 1.0:
        n_max -= 1
    points = spacing * np.arange(n_max + 1, dtype=np.float64)
    return DiscretizationGrid(j, k, alpha, spacing, points, False)


@dataclass(frozen=True)
class MaxResult:
    """Location and value of one maximization, with refinement diagnostics.

    ``residual`` is |X^(q+1)| at the reported location of a maximized
    X^(q); refined interior maximizers drive it below the Newton
    tolerance, while endpoint maximizers generally do not.
    """

    location: float
    value: float
    method: MaxMethod
    newton_iters: int
    residual: float


def grid_max(phases: PhaseAssignment, j: int, grid: DiscretizationGrid) -> MaxResult:
    """Maximum of X^(j) over the lattice; ties resolve to the smallest h."""
    values = eval_derivative_grid(phases, j, grid.points)
    idx = int(np.argmax(values))       # first hit = smallest location
    return MaxResult(
        location=float(grid.points[idx]),
        value=float(values[idx]),
        method=MaxMethod.GRID_ONLY,
        newton_iters=0,
        residual=math.nan,
    )


def _newton_root(evaluator, q: int, h0: float, lo: float, hi: float,
                 step_cap: float, tol_abs: float):
    """Newton for X^(q+1) = 0 started at h0, confined to [lo, hi].

    Steps are clamped to ``step_cap`` so the iterate cannot leave the
    scan basin.  Returns (h, iters, converged).
    """
    h = h0
    g = evaluator.derivative(q + 1, h)
    g0 = abs(g)
    for iters in range(NEWTON_MAX_ITERS):
        if abs(g) <= tol_abs:
            return h, iters, True
        gp = evaluator.derivative(q + 2, h)
        if gp == 0.0 or not math.isfinite(gp):
            return h, iters, False
        step = -g / gp
        if abs(step) > step_cap:
            step = math.copysign(step_cap, step)
        h_new = min(max(h + step, lo), hi)
        if h_new == h:
            return h, iters, False         # pinned at an interval edge
        h = h_new
        g = evaluator.derivative(q + 1, h)
        if abs(g) > 10.0 * g0 + tol_abs:
            return h, iters + 1, False     # diverging; bail out
    return h, NEWTON_MAX_ITERS, abs(g) <= tol_abs


def _max_on_interval(phases: PhaseAssignment, q: int, lo: float, hi: float,
                     n_scan: int, tol: float, extra=()) -> MaxResult:
    """Scan-plus-Newton maximization of X^(q) over [lo, hi].

    Candidates are the best TOP_CANDIDATES scan points, the interval
    ends, and any ``extra`` locations.  Interior scan candidates get a
    Newton pass on X^(q+1); a refinement is kept only when it converged
    to a concave critical point without losing value.  Stalls fall back
    to the scanned value.  The winner is the largest value, ties going
    to the smallest location.
    """
    evaluator = phases.evaluator()
    scale = math.sqrt(exact_variance(phases.primes, q + 1))
    tol_abs = tol * scale if scale > 0.0 else tol
    hs = np.linspace(lo, hi, n_scan)
    vals = evaluator.derivative(q, hs)
    spacing = (hi - lo) / (n_scan - 1) if n_scan > 1 else max(hi - lo, 1.0)
    step_cap = 0.5 * spacing

    # (value, location, refined, iters); refined means converged interior max
    candidates: list[tuple[float, float, bool, int]] = []
    top = np.argsort(-vals, kind="stable")[:TOP_CANDIDATES]
    for idx in top:
        h0 = float(hs[idx])
        v0 = float(vals[idx])
        if lo < h0 < hi:
            h_ref, iters, converged = _newton_root(
                evaluator, q, h0, lo, hi, step_cap, tol_abs)
            if converged and lo < h_ref < hi:
                curvature = evaluator.derivative(q + 2, h_ref)
                v_ref = evaluator.derivative(q, h_ref)
                if curvature < 0.0 and v_ref >= v0 - tol_abs:
                    candidates.append((v_ref, h_ref, True, iters))
                    continue
            candidates.append((v0, h0, False, iters))
        else:
            candidates.append((v0, h0, False, 0))
    for h_fixed in (lo, hi, *extra):
        h_fixed = float(min(max(h_fixed, lo), hi))
        candidates.append((evaluator.derivative(q, h_fixed), h_fixed, False, 0))

    value, location, refined, iters = min(candidates, key=lambda c: (-c[0], c[1]))
    if refined or location in (0.0, 1.0):
        method = MaxMethod.REFINED
    else:
        method = MaxMethod.GRID_ONLY
    residual = abs(evaluator.derivative(q + 1, location))
    return MaxResult(location=location, value=value, method=method,
                     newton_iters=iters, residual=residual)


def continuous_max(phases: PhaseAssignment, j: int,
                   oversample: int = DEFAULT_OVERSAMPLE,
                   tol: float = DEFAULT_NEWTON_TOL) -> MaxResult:
    """Continuous-maximum oracle for X^(j) over [0, 1].

    Scans an equispaced grid of spacing 2^(-k)/oversample (resolving the
    top frequency 2^k) and Newton-refines the best candidates on
    X^(j+1) = 0 using X^(j+2).  A Newton stall falls back to the scanned
    value and is never fatal.
    """
    if oversample < 16:
        raise DomainError(f"oversample must be >= 16, got {oversample}")
    n_scan = (2 ** phases.band.k) * oversample + 1
    return _max_on_interval(phases, j, 0.0, 1.0, n_scan, tol)


def argmax_ball_max(phases: PhaseAssignment, j: int, h_star: float, radius: float,
                    oversample: int = DEFAULT_OVERSAMPLE,
                    tol: float = DEFAULT_NEWTON_TOL) -> MaxResult:
    """Maximum of X^(j+1) over the radius-ball around h_star, within [0, 1].

    Dense scan (at least 64 intervals, or the continuous-oracle
    resolution if that is finer over the ball) plus Newton; the center
    h_star is always evaluated, so a radius below the scan resolution
    still returns at least X^(j+1)(h_star).
    """
    if not radius > 0.0:
        raise DomainError(f"radius must be positive, got {radius}")
    if not 0.0 <= h_star <= 1.0:
        raise DomainError(f"h_star must lie in [0, 1], got {h_star}")
    lo = max(0.0, h_star - radius)
    hi = min(1.0, h_star + radius)
    resolution = 2.0 ** (-phases.band.k) / oversample
    n_scan = max(65, int(math.ceil((hi - lo) / resolution)) + 1)
    return _max_on_interval(phases, j + 1, lo, hi, n_scan, tol, extra=(h_star,))
