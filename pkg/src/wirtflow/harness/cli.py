"""Command-line entry point: ``wirtflow <command> ...``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical divergence,
4 pattern distribution not admissible (``check-moments`` only).
"""
from __future__ import annotations

import argparse
import os
import sys

from ..core import DivergenceError, RandomSource
from ..fileio import FormatError, write_cdpe, write_cvec, write_yobs
from ..initialization import SpectralConfig
from ..measurements import PATTERNS, observe, parse_atoms, pattern_moments
from ..solver import Schedule, SolverConfig, write_trace_csv
from .experiments import ExperimentSpec, fft_unit_calibration, make_ensemble, regularity_pass_rate, \
    run_image_recovery, run_success_sweep
from .export import dumps_json, export_results
from .images import ImageFormatError, ingest_image, write_image
from .signals import SignalModel, generate_signal

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DIVERGENCE, EXIT_NOT_ADMISSIBLE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    values = _float_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"pattern counts must be integers, got {text!r}")
    return tuple(int(v) for v in values)


def cmd_sweep(args):
    if args.model == "gaussian":
        sweep = args.ratios or (3.0, 4.0, 5.0, 6.0)
    else:
        sweep = args.patterns or (4, 6, 8)
    spec = ExperimentSpec(
        model=args.model,
        n=args.n,
        sweep=tuple(sweep),
        trials=args.trials,
        seed=args.seed,
        pattern=args.pattern,
        signal=SignalModel(args.signal),
        solver=SolverConfig(args.iters, Schedule.heuristic(args.tau0, args.mu_max), trace_every=args.iters),
        init=SpectralConfig(args.power_iters),
        threshold=args.threshold,
    )
    curve = run_success_sweep(spec)
    export_results(curve, args.out, args.format)
    for p in curve.points:
        print(f"{p.sweep_value:g}\t{p.successes}/{p.trials}\t{p.success_rate:.2f}")
    return EXIT_OK


def cmd_recover(args):
    problem = ingest_image(args.image)
    recovery = run_image_recovery(
        problem,
        L=args.patterns,
        pattern=args.pattern_dist,
        init=SpectralConfig(args.power_iters),
        solver=SolverConfig(args.iters, Schedule.heuristic(args.tau0, args.mu_max)),
        seed=args.seed,
        calibrate=args.calibrate,
    )
    if args.out_image:
        write_image(args.out_image, recovery.recovered)
    if args.out_trace:
        if len(recovery.results) == 1:
            write_trace_csv(args.out_trace, recovery.results[0].trace)
        else:
            root, ext = os.path.splitext(args.out_trace)
            for label, result in zip("rgb", recovery.results):
                write_trace_csv(f"{root}_{label}{ext or '.csv'}", result.trace)
    print(dumps_json(recovery.summary()), end="")
    return EXIT_OK


def cmd_make_data(args):
    gen = RandomSource(args.seed).generator()
    x = generate_signal(SignalModel(args.signal), args.n, gen)
    if args.model == "gaussian":
        value = args.m / args.n if args.m else 6.0
    else:
        value = args.patterns
    ensemble = make_ensemble(args.model, args.n, value, args.pattern_dist, gen)
    if args.model == "cdp" and not args.out_codes:
        raise UsageError("--out-codes is required for the cdp model")
    if args.model == "gaussian" and args.out_codes:
        raise UsageError("--out-codes only applies to the cdp model (Gaussian ensembles are regenerated from the seed)")
    y = observe(ensemble, x)
    write_cvec(args.out_signal, x)
    write_yobs(args.out_obs, y)
    if args.model == "cdp":
        write_cdpe(args.out_codes, ensemble.codes)
    print(f"n={ensemble.n} m={ensemble.m}")
    return EXIT_OK


def cmd_check_moments(args):
    if args.atoms:
        try:
            dist = parse_atoms(args.atoms)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        dist = PATTERNS[args.pattern or "octanary"]
    report = pattern_moments(dist)
    print(dumps_json({"name": dist.name, **report.as_dict()}), end="")
    return EXIT_OK if report.admissible else EXIT_NOT_ADMISSIBLE


def cmd_diagnose(args):
    beta = args.beta if args.beta is not None else 3 * args.n + 550
    stats = regularity_pass_rate(args.n, args.m or 20 * args.n, args.alpha, beta, args.samples, args.seed)
    print(dumps_json(stats), end="")
    return EXIT_OK


def cmd_calibrate(args):
    seconds = fft_unit_calibration(args.n, args.repetitions)
    print(f"{seconds:.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wirtflow", description="Wirtinger Flow phase retrieval experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="success-probability sweep")
    p.add_argument("--model", choices=("gaussian", "cdp"), default="gaussian")
    p.add_argument("--pattern", choices=sorted(PATTERNS), default="octanary")
    p.add_argument("--signal", choices=("gaussian", "lowpass"), default="gaussian")
    p.add_argument("--n", type=int, default=128)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ratios", type=_float_list, help="m/n values (Gaussian model)")
    group.add_argument("--patterns", type=_int_list, help="pattern counts L (CDP model)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=2500)
    p.add_argument("--power-iters", type=int, default=50)
    p.add_argument("--tau0", type=float, default=330.0)
    p.add_argument("--mu-max", type=float, default=0.2)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recover", help="recover a PGM/PPM image from coded diffraction patterns")
    p.add_argument("--image", required=True)
    p.add_argument("--patterns", type=int, default=20)
    p.add_argument("--pattern-dist", choices=sorted(PATTERNS), default="octanary")
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--power-iters", type=int, default=50)
    p.add_argument("--tau0", type=float, default=330.0)
    p.add_argument("--mu-max", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibrate", action="store_true", help="also time one FFT unit")
    p.add_argument("--out-image")
    p.add_argument("--out-trace")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("make-data", help="write a synthetic signal, its observations and CDP codes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--model", choices=("gaussian", "cdp"), default="gaussian")
    p.add_argument("--m", type=int, help="measurement count (Gaussian model; default 6n)")
    p.add_argument("--patterns", type=int, default=8, help="pattern count L (CDP model)")
    p.add_argument("--pattern-dist", choices=sorted(PATTERNS), default="octanary")
    p.add_argument("--signal", choices=("gaussian", "lowpass"), default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-signal", required=True)
    p.add_argument("--out-obs", required=True)
    p.add_argument("--out-codes")
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("check-moments", help="exact moments and admissibility of a pattern distribution")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pattern", choices=sorted(PATTERNS))
    group.add_argument("--atoms", help='custom table "re,im,prob;re,im,prob;..."')
    p.set_defaults(func=cmd_check_moments)

    p = sub.add_parser("diagnose", help="empirical regularity-condition pass rate")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--m", type=int, help="measurement count (default 20n)")
    p.add_argument("--alpha", type=float, default=30.0)
    p.add_argument("--beta", type=float, help="default 3n + 550")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("calibrate", help="time one FFT unit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--repetitions", type=int, default=200)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        if isinstance(exc, (ImageFormatError, FormatError)):
            print(f"wirtflow: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wirtflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"wirtflow: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"wirtflow: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
