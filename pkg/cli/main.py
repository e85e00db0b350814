"""
iclbo command-line entry point.

Subcommands:
    run           execute one seeded optimization run
    report        aggregate run logs into a normalized-regret CSV
    validate      check a run spec and/or operator config
    golden-regen  rewrite the golden prompt files
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from cli import golden_regen, report, run, validate  # noqa: E402
from src import __version__  # noqa: E402

COMMANDS = {
    "run": (run.configure_parser, run.cmd_run, "Run one seeded optimization experiment"),
    "report": (report.configure_parser, report.cmd_report, "Aggregate run logs into a CSV"),
    "validate": (validate.configure_parser, validate.cmd_validate, "Validate spec/config"),
    "golden-regen": (
        golden_regen.configure_parser,
        golden_regen.cmd_golden_regen,
        "Regenerate golden prompt files",
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iclbo",
        description="Bayesian optimization with in-context LLM surrogates and samplers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run --spec specs/rosenbrock_llambo.json
  %(prog)s report 'workspace/results/*.jsonl' > regret.csv
  %(prog)s validate --spec specs/rosenbrock_llambo.json --backend http
  %(prog)s golden-regen --check
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, (configure, handler, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        configure(sub)
        sub.set_defaults(handler=handler)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "handler", None) is None:
        parser.print_help()
        return 2
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
