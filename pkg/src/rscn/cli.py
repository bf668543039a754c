"""Command-line front end: ``rscn synth | csv | sweep``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(including any report cell that failed; the report is still written).
"""

import argparse
import sys

from .configurator import DEFAULT_SCOPES, ScnConfig
from .data import CsvSchema
from .exceptions import ContractViolation, DataError, NumericalFailure
from .harness import (ALGORITHMS, ExperimentSpec, emit_report, emit_sweep, robustness_sweep,
                      run_experiment)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default, which is our data-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_common(p, noise, mode, zeta="0,0.05,0.1,0.15,0.2,0.25,0.3"):
    g = p.add_argument_group("experiment")
    g.add_argument("--zeta", type=_floats, default=_floats(zeta), help="outlier fractions")
    g.add_argument("--noise-low", type=float, default=noise[0])
    g.add_argument("--noise-high", type=float, default=noise[1])
    g.add_argument("--mode", choices=("replace", "additive"), default=mode)
    g.add_argument("--algos", type=_names, default=ALGORITHMS, help="comma-separated learners")
    g.add_argument("--trials", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", default="-", help="report path (.csv or .json); '-' writes CSV to stdout")
    g.add_argument("--format", choices=("csv", "json"), default=None,
                   help="report format; inferred from --out when omitted")
    s = p.add_argument_group("stochastic configuration")
    s.add_argument("--l-max", type=int, default=100)
    s.add_argument("--epsilon", type=float, default=1e-6)
    s.add_argument("--p-max", type=int, default=100)
    s.add_argument("--scopes", type=_floats, default=DEFAULT_SCOPES)
    s.add_argument("--r0", type=float, default=0.9)
    s.add_argument("--i-max", type=int, default=5)
    s.add_argument("--warm-start", action="store_true")
    s.add_argument("--no-validation", action="store_true",
                   help="train RSC-KDE without the clean held-out split")
    b = p.add_argument_group("baselines")
    b.add_argument("--rvfl-lambda", type=_floats, default=(1.0,))
    b.add_argument("--rvfl-l", type=_ints, default=None)
    b.add_argument("--rvfl-ao-rounds", type=int, default=3)


def _add_synth_source(p):
    p.add_argument("--n-train", type=int, default=None,
                   help="generated training samples (600 synthetic, 300 case study)")
    p.add_argument("--n-test", type=int, default=None)


def _add_csv_source(p, required):
    p.add_argument("--data", required=required, help="comma-separated numeric file")
    p.add_argument("--inputs", type=_names, help="input columns (indices or header names)")
    p.add_argument("--outputs", type=_names, help="output columns (indices or header names)")
    p.add_argument("--header", action="store_true", help="first data line is a header")
    p.add_argument("--train-frac", type=float, default=0.75)


def build_parser():
    parser = _Parser(prog="rscn", description="Robust stochastic configuration network experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="one-dimensional synthetic benchmark")
    _add_synth_source(p)
    _add_common(p, (-0.2, 0.8), "replace")

    p = sub.add_parser("csv", help="benchmark data from a CSV file")
    _add_csv_source(p, required=True)
    _add_common(p, (-0.5, 0.5), "additive", zeta="0.1,0.15,0.2,0.25")

    p = sub.add_parser("sweep", help="RSC-KDE over a grid of node counts and AO rounds")
    p.add_argument("--l-grid", type=_ints, default=(10, 20, 30, 50, 80, 100))
    p.add_argument("--nu-grid", type=_ints, default=(2, 3, 5, 8, 10, 12))
    p.add_argument("--source", choices=("synthetic", "case_study"), default="case_study",
                   help="generated source used when --data is absent")
    _add_synth_source(p)
    _add_csv_source(p, required=False)
    _add_common(p, (-0.5, 0.5), "additive", zeta="0,0.1,0.3")
    return parser


def _spec(args):
    if args.command == "csv" or getattr(args, "data", None):
        if not args.inputs or not args.outputs:
            raise _UsageError("--inputs and --outputs are required with --data")
        source, extra = "csv", {
            "csv_path": args.data,
            "schema": CsvSchema(args.inputs, args.outputs, args.header),
            "train_fraction": args.train_frac,
        }
    else:
        source = "synthetic" if args.command == "synth" else args.source
        n = 600 if source == "synthetic" else 300
        extra = {"n_train": args.n_train or n, "n_test": args.n_test or n}
    l_grid = args.rvfl_l or ((150,) if source == "csv" else (50,) if source == "case_study" else (100,))
    scn = ScnConfig(l_max=args.l_max, epsilon=args.epsilon, p_max=args.p_max,
                    scopes=args.scopes, r0=args.r0)
    return ExperimentSpec(
        source=source, algorithms=args.algos, zeta_grid=args.zeta, lambda_grid=args.rvfl_lambda,
        l_grid=l_grid, trials=args.trials, seed_base=args.seed, scn=scn, i_max=args.i_max,
        warm_start=args.warm_start, use_validation=not args.no_validation,
        rvfl_ao_rounds=args.rvfl_ao_rounds, outlier_mode=args.mode,
        noise_range=(args.noise_low, args.noise_high), workers=args.workers, **extra,
    )


def _format(args):
    if args.format:
        return args.format
    return "json" if args.out.lower().endswith(".json") else "csv"


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        spec = _spec(args)
        fmt = _format(args)
        sink = sys.stdout if args.out == "-" else args.out
        if args.command == "sweep":
            emit_sweep(robustness_sweep(spec, args.l_grid, args.nu_grid), fmt, sink)
        else:
            report = run_experiment(spec)
            emit_report(report, fmt, sink)
            failed = [c for c in report.cells if c.status != "ok"]
            for c in failed:
                print(f"rscn: cell {c.algorithm} zeta={c.zeta} failed: {c.reason}", file=sys.stderr)
            if failed:
                return EXIT_NUMERIC
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"rscn: invalid settings: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"rscn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"rscn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
