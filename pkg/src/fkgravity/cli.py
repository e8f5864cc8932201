"""Command line entry point: ``fkgravity {run,sweep,oracle,show-config}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

import argparse
import logging
import sys

from .config import BUNDLED, ConfigError, bundled_config_text, load_config
from .experiments import run_experiment, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("fkgravity")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _odd(text):
    value = int(text)
    if value < 1 or value % 2 == 0:
        raise argparse.ArgumentTypeError(f"must be an odd positive integer, got {text}")
    return value


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit integer, got {text}")
    return value


def _add_common(p):
    p.add_argument("--config", required=True, metavar="PATH",
                   help=f"config file, or a bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--seed", type=_u64, help="base seed (overrides estimator.seed)")
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--dt", type=float, help="time step in internal units")
    p.add_argument("--walks", type=int, help="walks per point")
    p.add_argument("--precision", choices=("single", "double"))
    p.add_argument("--bridge", choices=("on", "off"), help="Brownian-bridge exit test")
    p.add_argument("--smooth-window", type=_odd, metavar="ODD")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), help="per-point output format")
    p.add_argument("-q", "--quiet", action="store_true", help="only print errors")


def build_parser():
    parser = _Parser(prog="fkgravity", description="Monte Carlo gravitational potential solver.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run one experiment and write its report")
    _add_common(run)
    run.add_argument("--oracle-only", action="store_true", help="skip Monte Carlo; emit truth columns")
    sweep = sub.add_parser("sweep", help="time every (dt, N) pair of the config's sweep lists")
    _add_common(sweep)
    oracle = sub.add_parser("oracle", help="write the truth table for the config's layout")
    _add_common(oracle)
    show = sub.add_parser("show-config", help="print a bundled config")
    show.add_argument("name", choices=BUNDLED)
    return parser


def overrides_from_args(args):
    mapping = {
        "seed": "estimator.seed",
        "workers": "estimator.workers",
        "dt": "walker.dt",
        "walks": "estimator.n_walks",
        "precision": "estimator.precision",
        "smooth_window": "analysis.smooth_window",
        "out": "output.dir",
        "format": "output.format",
    }
    out = {key: getattr(args, attr) for attr, key in mapping.items() if getattr(args, attr) is not None}
    if args.bridge is not None:
        out["walker.bridge"] = args.bridge == "on"
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    if args.command == "show-config":
        sys.stdout.write(bundled_config_text(args.name))
        return EXIT_OK
    try:
        config = load_config(args.config, overrides_from_args(args))
    except ConfigError as exc:
        print(f"fkgravity: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "sweep":
            table = run_sweep(config)
            print(table.to_text(), end="")
        else:
            oracle_only = args.command == "oracle" or args.oracle_only

            def progress(done, total):
                log.info("point %d/%d", done, total)

            report = run_experiment(config, oracle_only=oracle_only, progress=progress)
            for key, value in report.summary.items():
                print(f"{key}: {value}")
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"fkgravity: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
