"""Command-line entry point.

Usage::

    spxforest {segment|features|dataset|train|crosseval|diversity|ensemble|report}
              --config PATH [--method M] [--area A] [--jobs N] [--seed S]

Exit codes: 0 success, 1 runtime error, 2 usage error.  ``SPXFOREST_LOG``
sets the log level (e.g. ``INFO``).
"""

import argparse
import logging
import os
import sys

from .pipeline import STAGES, ConfigError, PipelineConfig, StaleArtifactError, StageError, run_stage
from .superpixel import METHODS


def build_parser():
    p = argparse.ArgumentParser(prog="spxforest", description=__doc__.split("\n\n")[0])
    p.add_argument("stage", choices=STAGES)
    p.add_argument("--config", required=True, help="pipeline config file (key = value)")
    p.add_argument("--method", action="append", help="restrict to a superpixel method (repeatable)")
    p.add_argument("--area", action="append", help="restrict to a study area (repeatable)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--seed", type=int, help="override the config seed")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    level = os.environ.get("SPXFOREST_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")

    if args.jobs < 1:
        parser.print_usage(sys.stderr)
        print("spxforest: error: --jobs must be >= 1", file=sys.stderr)
        return 2
    bad = [m for m in args.method or [] if m not in METHODS]
    if bad:
        parser.print_usage(sys.stderr)
        print(f"spxforest: error: unknown method {bad[0]!r}; choose from {', '.join(METHODS)}", file=sys.stderr)
        return 2
    if args.area and args.stage not in ("segment", "features"):
        print("spxforest: error: --area applies to segment and features only", file=sys.stderr)
        return 2
    if args.method and args.stage not in ("segment", "features", "train"):
        print("spxforest: error: --method applies to segment, features and train only", file=sys.stderr)
        return 2

    try:
        cfg = PipelineConfig.load(args.config, seed=args.seed)
    except ConfigError as e:
        print(f"spxforest: config error: {e}", file=sys.stderr)
        return 2
    try:
        run_stage(cfg, args.stage, methods=args.method, areas=args.area, jobs=args.jobs)
    except (StageError, StaleArtifactError) as e:
        print(f"spxforest: {args.stage}: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # module errors surface as diagnostics, not tracebacks
        logging.getLogger("spxforest").debug("stage failed", exc_info=True)
        print(f"spxforest: {args.stage}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
