"""Monte Carlo harness: seeded trials, discrepancy tails, bound checks, sweeps.

Trial i of a run uses seed base_seed XOR i under the counter-based
generator, so trials are independent, reproducible, and identical no
matter how many workers execute them.  Negative discrepancies (oracle
noise, at most about 1e-12) are kept raw in the records and clamped to
zero in every statistic.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np
from scipy.stats import beta as _beta_dist

from .errors import BoundViolated, StatCheckFailed
from .extremum import argmax_ball_max, continuous_max, discretization_grid, grid_max
from .field import (
    PhaseAssignment,
    PhaseModel,
    eval_derivative,
    exact_variance,
    prepare_band,
    sample_phases,
    variance_bound_rhs,
)
from .primes import DyadicBand, PrimeBandList, prime_log_moment, sieve_band

_MASK64 = 0xFFFFFFFFFFFFFFFF

#: Documented record schema; column order is part of the file contract.
RECORD_COLUMNS = (
    "seed", "j", "k", "alpha", "model", "h_star", "max_cont", "max_grid",
    "discrepancy", "endpoint", "x_star", "dxjp1_at_xstar",
)
SUMMARY_COLUMNS = ("j", "k", "model", "alpha", "K", "n", "p_hat", "ci_low", "ci_high")
PNT_COLUMNS = ("j", "P", "Q", "sum", "main_term", "deviation")

#: Default desk-scale configuration grid (order 3 is supported but heavy).
DEFAULT_SUITE = tuple(
    (j, k, model)
    for j in (0, 1, 2)
    for k in (3, 4)
    for model in (PhaseModel.CIRCLE, PhaseModel.GAUSSIAN)
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one Monte Carlo run depends on."""

    band: DyadicBand
    j: int
    model: PhaseModel
    alpha: float
    K_list: tuple[float, ...] = (1.0,)
    n_trials: int = 200
    base_seed: int = 0
    oversample: int = 64

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if any(K <= 0.0 for K in self.K_list):
            raise ValueError(f"all K must be positive, got {self.K_list}")
        object.__setattr__(self, "K_list", tuple(float(K) for K in self.K_list))


@dataclass(frozen=True)
class TrialRecord:
    """One Monte Carlo trial: both maxima plus the ball diagnostics."""

    seed: int
    h_star: float
    max_cont: float
    max_grid: float
    discrepancy: float
    endpoint_flag: bool
    x_star: float
    deriv_at_x_star: float
    residual_at_h_star: float


@dataclass(frozen=True)
class TailEstimate:
    """Empirical tail probability with an exact binomial 95% interval."""

    K: float
    p_hat: float
    ci_low: float
    ci_high: float
    n: int


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Seed of trial i: base_seed XOR i, in 64 bits."""
    return (int(base_seed) ^ int(trial_index)) & _MASK64


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """One seeded trial; a pure function of (config, trial_index)."""
    plist = sieve_band(config.band)
    phases = sample_phases(config.model, plist, trial_seed(config.base_seed, trial_index))
    cont = continuous_max(phases, config.j, oversample=config.oversample)
    grid = discretization_grid(config.j, config.band.k, config.alpha)
    gmax = grid_max(phases, config.j, grid)
    ball = argmax_ball_max(phases, config.j, cont.location, grid.spacing,
                           oversample=config.oversample)
    return TrialRecord(
        seed=phases.seed,
        h_star=cont.location,
        max_cont=cont.value,
        max_grid=gmax.value,
        discrepancy=cont.value - gmax.value,
        endpoint_flag=cont.location in (0.0, 1.0),
        x_star=ball.location,
        deriv_at_x_star=ball.value,
        residual_at_h_star=cont.residual,
    )


def run_trials(config: ExperimentConfig, threads: int = 1) -> list[TrialRecord]:
    """All trials of a run; results are indexed by trial and therefore
    identical for any worker count."""
    prepare_band(sieve_band(config.band))    # build shared tables before forking work
    indices = range(config.n_trials)
    if threads <= 1:
        return [run_trial(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_trial(config, i), indices))


def clamped_discrepancies(records: Sequence[TrialRecord]) -> np.ndarray:
    """Discrepancies floored at zero; oracle noise only goes one way."""
    return np.maximum(np.array([r.discrepancy for r in records]), 0.0)


def clopper_pearson(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact (Clopper-Pearson) binomial confidence interval."""
    if n <= 0 or not 0 <= successes <= n:
        raise ValueError(f"need 0 <= successes <= n, got {successes}/{n}")
    tail = 0.5 * (1.0 - confidence)
    lo = 0.0 if successes == 0 else float(_beta_dist.ppf(tail, successes, n - successes + 1))
    hi = 1.0 if successes == n else float(_beta_dist.ppf(1.0 - tail, successes + 1, n - successes))
    return lo, hi


def estimate_tail(records: Sequence[TrialRecord], K: float) -> TailEstimate:
    """Empirical P(discrepancy > K) over the records.

    A negative K is the strictly-positive flag: it counts trials with
    discrepancy > 0.
    """
    if not records:
        raise ValueError("estimate_tail needs at least one record")
    threshold = max(0.0, float(K))
    exceed = int(np.count_nonzero(clamped_discrepancies(records) > threshold))
    lo, hi = clopper_pearson(exceed, len(records))
    return TailEstimate(K=float(K), p_hat=exceed / len(records),
                        ci_low=lo, ci_high=hi, n=len(records))


@dataclass(frozen=True)
class VarianceBoundReport:
    """Sample second moment of X^(j+1)(x*) against its exact upper bound."""

    n: int                       # interior trials entering the mean
    n_endpoint: int              # trials dropped for an endpoint maximizer
    lhs: float                   # mean |X^(j+1)(x*)|^2
    rhs: float                   # alpha^2 2^(-(j+2)k) Var[X^(j+2)]
    se_rel: float                # relative standard error of the mean
    limit: float                 # rhs * (1 + 3 se_rel)
    passed: bool
    pnt_upper: float             # main-term form of the rhs upper bound
    pnt_consistent: bool


def check_variance_bound(records: Sequence[TrialRecord], config: ExperimentConfig,
                         strict: bool = False) -> VarianceBoundReport:
    """Assert mean |X^(j+1)(x*)|^2 <= bound * (1 + 3 * relative SE).

    The mean runs over interior trials: the bound's derivation opens
    with the derivative vanishing at the maximizer, which fails when the
    maximizer sits on an endpoint of [0, 1], so endpoint trials are
    outside its premise (they are counted in ``n_endpoint``).

    Also cross-checks the bound itself against its main-term form: with
    m = 2(j+2) and D the observed deviation of the band moment from
    ((2^k)^m - (2^r)^m)/m, the bound equals
    alpha^2 2^(-(j+2)k) ((2^(mk) - 2^(mr))/(4(j+2)) + D/2) up to the
    sign of the deviation, hence never exceeds it.
    """
    if len(records) < 100:
        raise ValueError(f"bound check needs >= 100 records, got {len(records)}")
    interior = [r for r in records if not r.endpoint_flag]
    if not interior:
        raise ValueError("bound check needs at least one interior trial")
    y2 = np.array([r.deriv_at_x_star for r in interior]) ** 2
    n = y2.size
    lhs = float(np.mean(y2))
    se = float(np.std(y2, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    se_rel = se / lhs if lhs > 0.0 else 0.0
    rhs = variance_bound_rhs(config.band, config.j, config.alpha)
    limit = rhs * (1.0 + 3.0 * se_rel)
    passed = lhs <= limit

    m = 2 * (config.j + 2)
    moment = prime_log_moment(sieve_band(config.band), m)
    main = (2.0 ** (m * config.band.k) - 2.0 ** (m * config.band.r)) / m
    deviation = abs(moment - main)
    prefactor = config.alpha ** 2 * 2.0 ** (-(config.j + 2) * config.band.k)
    pnt_upper = prefactor * 0.5 * (main + deviation)
    pnt_consistent = rhs <= pnt_upper * (1.0 + 1e-12)

    report = VarianceBoundReport(n=n, n_endpoint=len(records) - n, lhs=lhs, rhs=rhs,
                                 se_rel=se_rel, limit=limit, passed=passed,
                                 pnt_upper=pnt_upper, pnt_consistent=pnt_consistent)
    if strict and not passed:
        raise BoundViolated(f"mean |X^(j+1)(x*)|^2 = {lhs!r} exceeds {limit!r}")
    return report


@dataclass(frozen=True)
class ChebyshevRow:
    t: float
    p_emp: float
    bound: float


@dataclass(frozen=True)
class ChebyshevReport:
    second_moment: float
    rows: tuple[ChebyshevRow, ...]
    passed: bool


def chebyshev_tail_check(records: Sequence[TrialRecord], n_points: int = 5) -> ChebyshevReport:
    """P(X^(j+1)(x*) > t) against the second-moment bound m2/t^2.

    Both sides are computed on the same sample, so the inequality holds
    pointwise; the 3-SE slack documents the estimator noise budget.
    """
    y = np.array([r.deriv_at_x_star for r in records])
    y2 = y ** 2
    m2 = float(np.mean(y2))
    if m2 <= 0.0:
        return ChebyshevReport(second_moment=m2, rows=(), passed=True)
    se_rel = float(np.std(y2, ddof=1)) / math.sqrt(y.size) / m2 if y.size > 1 else 0.0
    rms = math.sqrt(m2)
    multipliers = np.array([1.0, 1.5, 2.0, 3.0, 4.0])[:n_points]
    rows = []
    ok = True
    for t in rms * multipliers:
        p_emp = float(np.mean(y > t))
        bound = m2 / (t * t) * (1.0 + 3.0 * se_rel)
        rows.append(ChebyshevRow(t=float(t), p_emp=p_emp, bound=bound))
        ok = ok and p_emp <= bound
    return ChebyshevReport(second_moment=m2, rows=tuple(rows), passed=ok)


@dataclass(frozen=True)
class VarianceSuiteReport:
    """Monte Carlo mean/variance of X^(j)(h) against the exact variance."""

    n: int
    mean: float
    sample_var: float
    exact_var: float
    z_mean: float
    z_var: float
    passed: bool


def mc_variance_suite(band, j: int, model: PhaseModel, h: float, n_trials: int,
                      seed: int, strict: bool = False) -> VarianceSuiteReport:
    """Check |mean| <= 3 sd(mean) and |sample var - exact var| within
    3 * exact_var * sqrt(2/(n-1)).

    ``band`` may be a DyadicBand or an explicit PrimeBandList.  Values
    are evaluated on the direct oracle path.
    """
    if n_trials < 1000:
        raise ValueError(f"variance suite needs n_trials >= 1000, got {n_trials}")
    plist = sieve_band(band) if isinstance(band, DyadicBand) else band
    values = np.empty(n_trials)
    for i in range(n_trials):
        phases = sample_phases(model, plist, trial_seed(seed, i))
        values[i] = eval_derivative(phases, j, h)
    mean = float(np.mean(values))
    sample_var = float(np.var(values, ddof=1))
    exact = exact_variance(plist, j)
    z_mean = abs(mean) / math.sqrt(sample_var / n_trials) if sample_var > 0.0 else 0.0
    z_var = (abs(sample_var - exact) / (exact * math.sqrt(2.0 / (n_trials - 1)))
             if exact > 0.0 else 0.0)
    passed = z_mean <= 3.0 and z_var <= 3.0
    if strict and not passed:
        raise StatCheckFailed(
            f"variance suite failed: z_mean={z_mean:.3f}, z_var={z_var:.3f}")
    return VarianceSuiteReport(n=n_trials, mean=mean, sample_var=sample_var,
                               exact_var=exact, z_mean=z_mean, z_var=z_var,
                               passed=passed)


@dataclass(frozen=True)
class SweepRow:
    j: int
    k: int
    model: PhaseModel
    alpha: float
    K: float
    n: int
    p_hat: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class SweepResult:
    """Full factorial tail table plus monotonicity diagnostics.

    ``alpha_flags`` lists (K, alpha_small, alpha_big) triples where the
    tail failed to be nonincreasing as alpha shrinks even beyond CI
    overlap.  K-monotonicity needs no flag: for one alpha all K share
    the same records, so the tails are nested events and exactly
    nonincreasing.
    """

    rows: tuple[SweepRow, ...]
    alpha_flags: tuple[tuple[float, float, float], ...]


def sweep(j: int, k: int, model: PhaseModel, alpha_list: Sequence[float],
          K_list: Sequence[float], n_trials: int, base_seed: int,
          r: int = -1, oversample: int = 64, threads: int = 1) -> SweepResult:
    """Factorial (alpha, K) tail sweep on the band (r, k).

    Every alpha reuses the same base_seed, so alphas share phase draws
    (common random numbers) and dyadic alpha refinements compare
    trial-by-trial.
    """
    if not alpha_list or not K_list:
        raise ValueError("sweep needs nonempty alpha and K lists")
    rows: list[SweepRow] = []
    tails: dict[tuple[float, float], TailEstimate] = {}
    for alpha in alpha_list:
        config = ExperimentConfig(band=DyadicBand(r, k), j=j, model=model,
                                  alpha=float(alpha), K_list=tuple(K_list),
                                  n_trials=n_trials, base_seed=base_seed,
                                  oversample=oversample)
        records = run_trials(config, threads=threads)
        for K in K_list:
            est = estimate_tail(records, K)
            tails[(float(alpha), float(K))] = est
            rows.append(SweepRow(j=j, k=k, model=model, alpha=float(alpha),
                                 K=float(K), n=est.n, p_hat=est.p_hat,
                                 ci_low=est.ci_low, ci_high=est.ci_high))
    flags = []
    alphas = sorted(float(a) for a in alpha_list)
    for K in K_list:
        K = float(K)
        for a_small, a_big in zip(alphas, alphas[1:]):
            small, big = tails[(a_small, K)], tails[(a_big, K)]
            if small.p_hat > big.p_hat and small.ci_low > big.ci_high:
                flags.append((K, a_small, a_big))
    return SweepResult(rows=tuple(rows), alpha_flags=tuple(flags))


# ---------------------------------------------------------------------------
# Serialization: records CSV/JSONL, summary rows, deviation tables, config files
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, PhaseModel):
        return value.value
    return str(value)


def _record_row(record: TrialRecord, config: ExperimentConfig) -> list:
    return [record.seed, config.j, config.band.k, config.alpha, config.model.value,
            record.h_star, record.max_cont, record.max_grid, record.discrepancy,
            record.endpoint_flag, record.x_star, record.deriv_at_x_star]


def write_records(records: Sequence[TrialRecord], config: ExperimentConfig,
                  out: TextIO, fmt: str = "csv", header_comment: str | None = None) -> None:
    """Write one record per row under the documented column schema."""
    if header_comment:
        out.write(f"# {header_comment}\n")
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(v) for v in _record_row(rec, config)])
    elif fmt == "jsonl":
        for rec in records:
            row = dict(zip(RECORD_COLUMNS, _record_row(rec, config)))
            row["model"] = config.model.value
            row["endpoint"] = int(rec.endpoint_flag)
            out.write(json.dumps(row, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_summary(rows: Sequence[SweepRow], out: TextIO, fmt: str = "jsonl",
                  header_comment: str | None = None) -> None:
    """Write tail-estimate rows (one per (alpha, K) cell)."""
    if header_comment:
        out.write(f"# {header_comment}\n")
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in
                             (row.j, row.k, row.model, row.alpha, row.K,
                              row.n, row.p_hat, row.ci_low, row.ci_high)])
    elif fmt == "jsonl":
        for row in rows:
            obj = {"j": row.j, "k": row.k, "model": row.model.value,
                   "alpha": row.alpha, "K": row.K, "n": row.n,
                   "p_hat": row.p_hat, "ci_low": row.ci_low, "ci_high": row.ci_high}
            out.write(json.dumps(obj, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_deviation_rows(scans, out: TextIO, fmt: str = "csv",
                         header_comment: str | None = None) -> None:
    """Write deviation-scan rows (j, P, Q, prime_sum, main_term, deviation)."""
    if header_comment:
        out.write(f"# {header_comment}\n")
    rows = [row for scan in scans for row in scan.rows]
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(PNT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in
                             (row.j, row.P, row.Q, row.prime_sum, row.main_term,
                              row.deviation)])
    elif fmt == "jsonl":
        for row in rows:
            obj = {"j": row.j, "P": row.P, "Q": row.Q, "prime_sum": row.prime_sum,
                   "main_term": row.main_term, "deviation": row.deviation}
            out.write(json.dumps(obj, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


_CONFIG_KEYS = {"r": int, "k": int, "j": int, "model": str, "alpha": str,
                "K": str, "trials": int, "seed": int, "oversample": int}


def load_config(path) -> dict:
    """Parse a flat ``key = value`` experiment configuration file.

    Keys mirror the experiment flags: r, k, j, model, alpha, K, trials,
    seed, oversample.  alpha and K accept comma-separated lists; '#'
    starts a comment.
    """
    result: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in ("alpha", "K"):
            result[key] = [float(v) for v in value.split(",") if v.strip()]
        elif key == "model":
            result[key] = PhaseModel(value)
        else:
            result[key] = _CONFIG_KEYS[key](value)
    return result
