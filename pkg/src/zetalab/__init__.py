"""Simulation lab for a random Euler-product model of log|zeta|.

Prime weights on dyadic log-bands, field derivatives of all orders,
discretized maxima, and Monte Carlo verification of the discrepancy
tail, its variance bound, and the prime moment estimates behind it.
"""

__version__ = "0.1.0"

from .errors import (
    BandTooLarge,
    BoundViolated,
    DomainError,
    InvalidBand,
    InvalidRange,
    NonAscendingGrid,
    StatCheckFailed,
    ZetalabError,
)
from .experiments import (
    ExperimentConfig,
    SweepResult,
    TailEstimate,
    TrialRecord,
    check_variance_bound,
    chebyshev_tail_check,
    clopper_pearson,
    estimate_tail,
    load_config,
    mc_variance_suite,
    run_trial,
    run_trials,
    sweep,
    trial_seed,
)
from .extremum import (
    DiscretizationGrid,
    MaxMethod,
    MaxResult,
    argmax_ball_max,
    continuous_max,
    discretization_grid,
    grid_max,
)
from .field import (
    FieldEvaluator,
    FieldSpec,
    PhaseAssignment,
    PhaseModel,
    eval_derivative,
    eval_derivative_grid,
    exact_variance,
    sample_phases,
    variance_bound_rhs,
)
from .primes import (
    DyadicBand,
    PrimeBandList,
    default_checkpoints,
    is_prime,
    pnt_deviation_scan,
    pnt_main_term,
    prime_log_moment,
    sieve_band,
    sieve_primes,
)

__all__ = [name for name in dir() if not name.startswith("_")]
