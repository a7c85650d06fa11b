"""Command-line interface for cca-fuse."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import NoReturn

from cca_fuse import __version__
from cca_fuse.core.runner import EXIT_USAGE, Runner, RunnerOptions
from cca_fuse.core.simulate import SETTING_PRESETS
from cca_fuse.experiments.benchmark import BENCH_METHODS
from cca_fuse.experiments.fusion import BASELINES, FUSION_METHODS


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage code instead of 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"Error: {message}\n")


def _csv_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _add_pair_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", type=Path, required=True, metavar="CSV", help="X matrix")
    parser.add_argument("--y", type=Path, required=True, metavar="CSV", help="Y matrix")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = _Parser(
        prog="cca-fuse",
        description="Graph-regularized sparse CCA for two-modality feature fusion",
    )
    parser.add_argument(
        "-V",
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    parser.add_argument(
        "-c",
        "--config",
        type=Path,
        metavar="FILE",
        help="TOML or JSON config file",
    )
    parser.add_argument(
        "-j",
        "--threads",
        type=int,
        metavar="N",
        help="Worker threads (overrides CCA_FUSE_THREADS)",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="More logging (repeat for debug)",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log errors")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    simulate = commands.add_parser("simulate", help="Generate a synthetic paired dataset")
    simulate.add_argument("--n", type=int, default=1000, help="Samples (default: 1000)")
    simulate.add_argument("--p", type=int, default=100, help="X features (default: 100)")
    simulate.add_argument("--q", type=int, default=100, help="Y features (default: 100)")
    simulate.add_argument(
        "--l", type=int, default=5, help="Laplacian eigenvectors mixed into u (default: 5)"
    )
    simulate.add_argument("--sigma", type=float, default=0.5, help="Noise level (default: 0.5)")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", type=Path, required=True, metavar="DIR")

    bench = commands.add_parser("bench", help="Run the simulation benchmark")
    bench.add_argument(
        "--settings",
        choices=sorted(SETTING_PRESETS),
        default="default",
        help="Setting preset (default: default)",
    )
    bench.add_argument("--reps", type=int, default=25, help="Repetitions per setting")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument(
        "--methods",
        type=_csv_list,
        default=list(BENCH_METHODS),
        metavar="LIST",
        help=f"Comma-separated methods (default: {','.join(BENCH_METHODS)})",
    )
    bench.add_argument(
        "--full-grid",
        action="store_true",
        help="Tune each modality's parameters independently",
    )
    bench.add_argument("--out", type=Path, required=True, metavar="CSV")

    fit = commands.add_parser("fit", help="Fit a K-component embedding model")
    _add_pair_inputs(fit)
    fit.add_argument("--edges", type=Path, metavar="TSV", help="Prior X feature graph")
    fit.add_argument("--method", choices=FUSION_METHODS)
    fit.add_argument("--k", type=int, metavar="K", help="Number of components")
    fit.add_argument("--preprocess", choices=("none", "center", "zscore"))
    fit.add_argument("--out", type=Path, required=True, metavar="JSON")

    transform = commands.add_parser("transform", help="Embed samples with a fitted model")
    transform.add_argument("--model", type=Path, required=True, metavar="JSON")
    _add_pair_inputs(transform)
    transform.add_argument(
        "--preprocess",
        choices=("none", "center", "zscore"),
        help="Preprocessing applied before projection (default: none)",
    )
    transform.add_argument("--out", type=Path, required=True, metavar="CSV")

    predict = commands.add_parser("predict", help="Cross-validated classification")
    _add_pair_inputs(predict)
    predict.add_argument("--labels", type=Path, required=True, metavar="CSV")
    predict.add_argument("--edges", type=Path, metavar="TSV", help="Prior X feature graph")
    predict.add_argument("--method", choices=FUSION_METHODS)
    predict.add_argument("--k", type=int, metavar="K")
    predict.add_argument(
        "--baselines",
        type=_csv_list,
        metavar="LIST",
        help=f"Comma-separated baselines from {','.join(BASELINES)}",
    )
    predict.add_argument("--cv", choices=("kfold", "fixed"))
    predict.add_argument("--folds", type=int)
    predict.add_argument("--tune", action="store_true", help="Grid-search Θ per fold")
    predict.add_argument("--permutations", type=int, help="Label-permutation null runs")
    predict.add_argument("--preprocess", choices=("none", "center", "zscore"))
    predict.add_argument("--seed", type=int)
    predict.add_argument("--out-dir", dest="out", type=Path, metavar="DIR")

    validate = commands.add_parser("validate-graph", help="Check a graph Laplacian")
    source = validate.add_mutually_exclusive_group(required=True)
    source.add_argument("--edges", type=Path, metavar="TSV")
    source.add_argument("--data", type=Path, metavar="CSV", help="Build the graph from data")
    validate.add_argument(
        "--features-from",
        dest="features",
        type=Path,
        metavar="CSV",
        help="Matrix whose feature names define the nodes",
    )

    return parser.parse_args(argv)


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("cca_fuse").setLevel(level)


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    _configure_logging(args.verbose, args.quiet)

    options = RunnerOptions(command=args.command, config_path=args.config, threads=args.threads)
    for name, value in vars(args).items():
        if hasattr(options, name) and name not in ("command", "config", "threads"):
            setattr(options, name, value)

    return Runner(options).run()


if __name__ == "__main__":
    sys.exit(main())
