"""Command-line interface: sieving, evaluation, maximization, experiments,
sweeps, and statistical checks, all reproducible from their flags.

Exit codes: 0 success, 1 validation error, 2 failed statistical
acceptance check (for the *-check subcommands in --assert mode).
Output is byte-identical across runs and across --threads values.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .errors import ZetalabError
from .experiments import (
    ExperimentConfig,
    check_variance_bound,
    estimate_tail,
    load_config,
    mc_variance_suite,
    run_trials,
    sweep,
    write_deviation_rows,
    write_records,
    write_summary,
)
from .extremum import argmax_ball_max, continuous_max, discretization_grid, grid_max
from .field import PhaseModel, eval_derivative, sample_phases
from .primes import DyadicBand, default_checkpoints, pnt_deviation_scan, sieve_band

_SIEVE_PRINT_LIMIT = 200     # bands larger than this print the count only


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on flag errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_band_flags(parser, default_r=-1, default_k=3):
    parser.add_argument("--r", type=int, default=default_r,
                        help="lower band exponent (default %(default)s)")
    parser.add_argument("--k", type=int, default=default_k,
                        help="upper band exponent (default %(default)s)")


def _add_common_flags(parser):
    parser.add_argument("--j", type=int, default=0,
                        help="derivative order (default %(default)s)")
    parser.add_argument("--model", choices=["circle", "gaussian"], default="circle",
                        help="phase model (default %(default)s)")
    parser.add_argument("--seed", type=int, default=0,
                        help="base seed (default %(default)s)")
    parser.add_argument("--oversample", type=int, default=64,
                        help="scan oversampling of the continuous oracle (default %(default)s)")


def _add_run_flags(parser, repeat_alpha: bool, default_k: int):
    # every flag a --config file may also set defaults to None here, so
    # the precedence is always: command line, then file, then built-in
    parser.add_argument("--r", type=int, default=None,
                        help="lower band exponent (default -1)")
    parser.add_argument("--k", type=int, default=None,
                        help=f"upper band exponent (default {default_k})")
    parser.add_argument("--j", type=int, default=None,
                        help="derivative order (default 0)")
    parser.add_argument("--model", choices=["circle", "gaussian"], default=None,
                        help="phase model (default circle)")
    parser.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    if repeat_alpha:
        parser.add_argument("--alpha", type=float, action="append", default=None,
                            help="grid coarseness; repeatable (default 0.5)")
    else:
        parser.add_argument("--alpha", type=float, default=None,
                            help="grid coarseness (default 0.5)")
    parser.add_argument("--oversample", type=int, default=None,
                        help="scan oversampling of the continuous oracle (default 64)")
    parser.add_argument("--K", type=float, action="append", default=None,
                        help="tail threshold; repeatable (default 1.0)")
    parser.add_argument("--trials", type=int, default=None,
                        help="number of Monte Carlo trials (default 200)")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: available cores)")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--out", default=None, help="write results to this file")


def build_parser() -> _Parser:
    parser = _Parser(prog="zetalab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"zetalab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sieve", help="list the primes of a dyadic log-band")
    _add_band_flags(p, default_k=1)
    p.add_argument("--out", default=None, help="write (prime, log) rows to this file")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.set_defaults(func=_cmd_sieve)

    p = sub.add_parser("eval", help="evaluate the field derivative at one point")
    _add_band_flags(p)
    _add_common_flags(p)
    p.add_argument("--h", type=float, required=True, help="evaluation point in [0, 1]")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("max", help="continuous vs grid maximum for one draw")
    _add_band_flags(p)
    _add_common_flags(p)
    p.add_argument("--alpha", type=float, default=0.5,
                   help="grid coarseness, spacing alpha*2^(-(j+2)k/2) (default %(default)s)")
    p.set_defaults(func=_cmd_max)

    p = sub.add_parser("experiment", help="run seeded trials and tail estimates")
    _add_run_flags(p, repeat_alpha=False, default_k=3)
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("sweep", help="factorial (alpha, K) tail sweep")
    _add_run_flags(p, repeat_alpha=True, default_k=4)
    p.add_argument("--format", choices=["csv", "jsonl"], default="jsonl")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("pnt-check", help="prime moment sums vs their main terms")
    p.add_argument("--j", type=int, default=1, help="moment order >= 1 (default %(default)s)")
    p.add_argument("--assert", dest="assert_mode", action="store_true",
                   help="exit 2 unless the deviation properties hold")
    p.add_argument("--out", default=None, help="write deviation rows to this file")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.set_defaults(func=_cmd_pnt_check)

    p = sub.add_parser("variance-check", help="Monte Carlo variance vs exact variance")
    _add_band_flags(p)
    _add_common_flags(p)
    p.add_argument("--h", type=float, default=0.37, help="evaluation point (default %(default)s)")
    p.add_argument("--trials", type=int, default=None,
                   help="number of trials; needs >= 1000 (default 200 is too small)")
    p.add_argument("--assert", dest="assert_mode", action="store_true",
                   help="exit 2 unless the statistics pass")
    p.set_defaults(func=_cmd_variance_check)

    return parser


def _header(command: str, pairs) -> str:
    """Provenance line for output files; excludes threads and paths so
    files stay byte-identical across worker counts."""
    body = " ".join(f"{key}={value}" for key, value in pairs)
    return f"zetalab {__version__} | {command} | {body}"


def _write_out(path: str, writer) -> None:
    with open(path, "w", newline="") as handle:
        writer(handle)


class _RunSettings:
    """Flag / config-file / built-in default resolution for run commands."""

    def __init__(self, args, default_k: int):
        file_config = load_config(args.config) if args.config else {}
        def pick(key, default):
            value = getattr(args, key, None)
            return value if value is not None else file_config.get(key, default)
        self.r = int(pick("r", -1))
        self.k = int(pick("k", default_k))
        self.j = int(pick("j", 0))
        self.model = PhaseModel(pick("model", "circle"))
        self.seed = int(pick("seed", 0))
        self.oversample = int(pick("oversample", 64))
        self.trials = int(pick("trials", 200))
        alpha = pick("alpha", None)
        self.alpha_list = [float(a) for a in (alpha if isinstance(alpha, list)
                                              else [alpha] if alpha is not None
                                              else [0.5])]
        K = pick("K", None)
        self.K_list = [float(v) for v in (K if isinstance(K, list)
                                          else [K] if K is not None else [1.0])]


def _cmd_sieve(args) -> int:
    plist = sieve_band(DyadicBand(args.r, args.k))
    print(f"band r={args.r} k={args.k}: {len(plist)} primes")
    if len(plist) <= _SIEVE_PRINT_LIMIT:
        print(" ".join(str(int(p)) for p in plist.primes))
    if args.out:
        header = _header("sieve", [("r", args.r), ("k", args.k), ("format", args.format)])
        def writer(handle):
            handle.write(f"# {header}\n")
            if args.format == "csv":
                handle.write("prime,log_prime\n")
                for p, lg in zip(plist.primes, plist.logs):
                    handle.write(f"{int(p)},{lg!r}\n")
            else:
                import json
                for p, lg in zip(plist.primes, plist.logs):
                    handle.write(json.dumps({"prime": int(p), "log_prime": lg}) + "\n")
        _write_out(args.out, writer)
    return 0


def _phases_from_args(args):
    plist = sieve_band(DyadicBand(args.r, args.k))
    return sample_phases(PhaseModel(args.model), plist, args.seed)


def _cmd_eval(args) -> int:
    phases = _phases_from_args(args)
    value = eval_derivative(phases, args.j, args.h)
    print(f"X^({args.j})({args.h!r}) = {value!r}")
    return 0


def _cmd_max(args) -> int:
    phases = _phases_from_args(args)
    cont = continuous_max(phases, args.j, oversample=args.oversample)
    grid = discretization_grid(args.j, args.k, args.alpha)
    gmax = grid_max(phases, args.j, grid)
    ball = argmax_ball_max(phases, args.j, cont.location, grid.spacing,
                           oversample=args.oversample)
    print(f"h_star={cont.location!r} max_cont={cont.value!r} "
          f"max_grid={gmax.value!r} discrepancy={cont.value - gmax.value!r}")
    print(f"x_star={ball.location!r} dxjp1_at_xstar={ball.value!r} "
          f"residual={cont.residual!r} method={cont.method.value}")
    return 0


def _cmd_experiment(args) -> int:
    settings = _RunSettings(args, default_k=3)
    config = ExperimentConfig(
        band=DyadicBand(settings.r, settings.k),
        j=settings.j,
        model=settings.model,
        alpha=settings.alpha_list[0],
        K_list=tuple(settings.K_list),
        n_trials=settings.trials,
        base_seed=settings.seed,
        oversample=settings.oversample,
    )
    records = run_trials(config, threads=args.threads)
    print(f"experiment r={config.band.r} k={config.band.k} j={config.j} "
          f"model={config.model.value} alpha={config.alpha!r} "
          f"trials={config.n_trials} seed={config.base_seed}")
    for K in config.K_list:
        est = estimate_tail(records, K)
        print(f"P(discrepancy > {K!r}) = {est.p_hat!r} "
              f"ci95=[{est.ci_low!r}, {est.ci_high!r}] n={est.n}")
    if config.n_trials >= 100:
        report = check_variance_bound(records, config)
        verdict = "PASS" if report.passed else "FAIL"
        print(f"variance bound: lhs={report.lhs!r} rhs={report.rhs!r} "
              f"limit={report.limit!r} n_interior={report.n} {verdict}")
    if args.out:
        header = _header("experiment", [
            ("r", config.band.r), ("k", config.band.k), ("j", config.j),
            ("model", config.model.value), ("alpha", repr(config.alpha)),
            ("K", ",".join(repr(K) for K in config.K_list)),
            ("trials", config.n_trials), ("seed", config.base_seed),
            ("oversample", config.oversample), ("format", args.format)])
        _write_out(args.out, lambda handle: write_records(
            records, config, handle, fmt=args.format, header_comment=header))
    return 0


def _cmd_sweep(args) -> int:
    settings = _RunSettings(args, default_k=4)
    result = sweep(j=settings.j, k=settings.k, model=settings.model,
                   alpha_list=settings.alpha_list, K_list=settings.K_list,
                   n_trials=settings.trials, base_seed=settings.seed,
                   r=settings.r, oversample=settings.oversample,
                   threads=args.threads)
    for row in result.rows:
        print(f"alpha={row.alpha!r} K={row.K!r} p_hat={row.p_hat!r} "
              f"ci95=[{row.ci_low!r}, {row.ci_high!r}] n={row.n}")
    for K, a_small, a_big in result.alpha_flags:
        print(f"FLAG: tail at alpha={a_small!r} above alpha={a_big!r} "
              f"beyond CI overlap at K={K!r}")
    if args.out:
        header = _header("sweep", [
            ("r", settings.r), ("k", settings.k), ("j", settings.j),
            ("model", settings.model.value),
            ("alpha", ",".join(repr(a) for a in settings.alpha_list)),
            ("K", ",".join(repr(K) for K in settings.K_list)),
            ("trials", settings.trials), ("seed", settings.seed),
            ("format", args.format)])
        _write_out(args.out, lambda handle: write_summary(
            result.rows, handle, fmt=args.format, header_comment=header))
    return 0


def _cmd_pnt_check(args) -> int:
    checkpoints = default_checkpoints()
    scan = pnt_deviation_scan(args.j, checkpoints)
    for row in scan.rows:
        print(f"j={row.j} P={row.P!r} Q={row.Q!r} sum={row.prime_sum!r} "
              f"main={row.main_term!r} deviation={row.deviation!r}")
    print(f"max deviation: {scan.max_deviation!r}")
    restricted = [row.deviation for row in scan.rows if row.P >= math.exp(4.0) - 1e-9]
    restricted_max = max(restricted, default=0.0)
    finite = all(math.isfinite(row.deviation) for row in scan.rows)
    concentrated = restricted_max <= scan.max_deviation
    print(f"restricted (P >= e^4) max deviation: {restricted_max!r}")
    if args.out:
        header = _header("pnt-check", [("j", args.j), ("format", args.format)])
        _write_out(args.out, lambda handle: write_deviation_rows(
            [scan], handle, fmt=args.format, header_comment=header))
    if args.assert_mode and not (finite and concentrated):
        print("pnt-check: FAIL")
        return 2
    print("pnt-check: PASS")
    return 0


def _cmd_variance_check(args) -> int:
    trials = args.trials if args.trials is not None else 200
    report = mc_variance_suite(DyadicBand(args.r, args.k), args.j,
                               PhaseModel(args.model), args.h, trials, args.seed)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"variance check r={args.r} k={args.k} j={args.j} model={args.model} "
          f"h={args.h!r} trials={trials} seed={args.seed}")
    print(f"mean={report.mean!r} sample_var={report.sample_var!r} "
          f"exact_var={report.exact_var!r} z_mean={report.z_mean!r} "
          f"z_var={report.z_var!r} {verdict}")
    if args.assert_mode and not report.passed:
        return 2
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (ZetalabError, ValueError, OSError) as exc:
        print(f"zetalab: error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())
