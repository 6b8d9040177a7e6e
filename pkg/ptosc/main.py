from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from ptosc import __version__
from ptosc.config import settings
from ptosc.errors import ConfigError, ExportError
from ptosc.services.report import RunConfig, render_report, write_output
from ptosc.services.suites import SUITES, cmd_export_contour

logger = logging.getLogger("ptosc")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=None, help="deformation parameter epsilon")
    p.add_argument("--allow-large-eps", action="store_true", help=f"accept |eps| > {settings.max_epsilon:g}")
    p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptosc", description="Verify the exact spectral claims of the deformed oscillator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("suite", choices=sorted(SUITES))
    _common_flags(verify)
    verify.add_argument("--n-max", type=int, default=None)
    verify.add_argument("--order", type=int, default=settings.bch_order, help="BCH order for the algebra suite")
    verify.add_argument("--tol", type=float, default=None, help="override the primary threshold of every check")
    verify.add_argument("--format", choices=("json", "csv", "text"), default="json")
    verify.add_argument("--seed", type=int, default=0, help="seed for randomized property sweeps")

    export = sub.add_parser("export", help="export data for plotting")
    export.add_argument("what", choices=("contour",))
    _common_flags(export)
    export.add_argument("--samples", type=int, default=1001)
    export.add_argument("--q-range", type=float, default=50.0)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields: dict[str, Any] = {"epsilon": args.eps, "allow_large_eps": args.allow_large_eps, "out": args.out}
    if args.command == "verify":
        fields.update(n_max=args.n_max, order=args.order, tol=args.tol, format=args.format, seed=args.seed)
    else:
        fields.update(samples=args.samples, q_range=args.q_range, format="csv")
    return RunConfig.build(**fields)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        cfg = _run_config(args)
        if args.command == "export":
            cmd_export_contour(cfg)
            return EXIT_OK
        report = SUITES[args.suite](cfg)
        write_output(render_report(report, cfg.format), cfg.out)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except ExportError as e:
        logger.error("%s", e)
        return EXIT_FAILED

    if not report.passed:
        for c in report.failures:
            logger.error("failed %s: %.3e > %.1e", c.name, c.measured, c.threshold)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
