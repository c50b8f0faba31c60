"""Command-line entry point.

Exit codes: 0 all asserted checks pass, 1 a check failed or assembly failed,
2 configuration error, 3 spectral-gap ambiguity.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from spencer_mirror.config import ConfigError, RunConfig
from spencer_mirror.lie_core import AlgebraError
from spencer_mirror.report import Report, cohomology, constants, mirror_report, verify_algebra
from spencer_mirror.spectral import GapAmbiguityError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GAP = 0, 1, 2, 3

VERBS = {
    "verify-algebra": verify_algebra,
    "mirror-report": mirror_report,
    "constants": constants,
    "cohomology": cohomology,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spencer-mirror", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--csv", help="also write the Hodge-number table as CSV")
        p.add_argument("--seed", type=int)
        p.add_argument("--subdivisions", type=int)
        p.add_argument("--lambda0", type=float, help="amplitude of the radial dual field")
        p.add_argument("--metric", choices=("constraint", "curvature", "unweighted"))
        p.add_argument("--max-sym-degree", type=int, dest="max_sym_degree")
        p.add_argument("--algebra", help="built-in algebra name or JSON file")
    return parser


def _config(args) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else RunConfig()
    return base.with_overrides(
        algebra=args.algebra, subdivisions=args.subdivisions, lambda0=args.lambda0,
        metric=args.metric, max_sym_degree=args.max_sym_degree, seed=args.seed,
        output=args.out, csv=args.csv,
    )


def _emit(report: Report, cfg: RunConfig):
    text = report.dumps()
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if cfg.csv and report.per_sign:
        Path(cfg.csv).write_text(report.h_table_csv(), encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        cfg.build_algebra()
    except (ConfigError, AlgebraError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = VERBS[args.verb](cfg)
    except GapAmbiguityError as exc:
        print(f"gap ambiguity: {exc}", file=sys.stderr)
        print(json.dumps({"spectrum_head": exc.spectrum_head}), file=sys.stderr)
        return EXIT_GAP
    except (ConfigError, AlgebraError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"assembly error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(report, cfg)
    failed = report.failures()
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
