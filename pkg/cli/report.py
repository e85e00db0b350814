"""
Aggregate run logs into a normalized-regret CSV.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.bench import expand_logs, report  # noqa: E402
from src.exceptions import MissingFileError  # noqa: E402
from cli.common import add_common_arguments, handle_cli_execution, setup_cli_logging  # noqa: E402


def configure_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("logs", nargs="+", help="Run-log files or glob patterns")
    parser.add_argument(
        "--out", type=Path, default=None, help="Also write the CSV to this file"
    )
    add_common_arguments(parser)


def cmd_report(args: argparse.Namespace) -> int:
    """Print (task, method, seed, trial, normalized_regret) rows plus cross-seed means."""
    logger = setup_cli_logging(args.log, args.verbose, args.quiet)

    def execute() -> int:
        paths = expand_logs(args.logs)
        if not paths:
            raise MissingFileError(f"No run logs match {' '.join(args.logs)}")
        logger.info(f"Aggregating {len(paths)} run log(s)")
        result = report(paths)
        sys.stdout.write(result.to_csv(args.out))
        if result.skipped:
            logger.warning(f"{result.skipped} corrupt log line(s) skipped")
        return 0

    return handle_cli_execution(execute, logger)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Aggregate run logs into normalized regret per trial",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s 'workspace/results/*.jsonl'
  %(prog)s 'workspace/results/rosenbrock_2d__*.jsonl' --out regret.csv -q
        """,
    )
    configure_parser(parser)
    return cmd_report(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
