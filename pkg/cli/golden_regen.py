"""
Regenerate the golden prompt files from the shared prompt fixture.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.exceptions import ConfigurationError  # noqa: E402
from src.prompts import golden_texts  # noqa: E402
from cli.common import add_common_arguments, handle_cli_execution, setup_cli_logging  # noqa: E402

DEFAULT_GOLDEN_DIR = _project_root / "tests" / "fixtures" / "prompts" / "v1"


def configure_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        type=Path,
        default=DEFAULT_GOLDEN_DIR,
        help=f"Directory for the .txt goldens (default: {DEFAULT_GOLDEN_DIR})",
    )
    parser.add_argument(
        "--check",
        action="store_true",
        help="Only compare; exit 1 if any golden differs from the current templates",
    )
    add_common_arguments(parser)


def cmd_golden_regen(args: argparse.Namespace) -> int:
    logger = setup_cli_logging(args.log, args.verbose, args.quiet)

    def execute() -> int:
        out_dir = Path(args.out)
        stale = []
        if not args.check:
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                raise ConfigurationError(f"Cannot create {out_dir}: {e}") from e
        for stem, text in sorted(golden_texts().items()):
            path = out_dir / f"{stem}.txt"
            content = text + "\n"
            current = path.read_text(encoding="utf-8") if path.is_file() else None
            if current == content:
                continue
            stale.append(stem)
            if not args.check:
                path.write_text(content, encoding="utf-8")
                logger.info(f"Wrote {path}")
        if args.check:
            if stale:
                logger.error(f"Stale goldens: {', '.join(stale)}")
                return 1
            logger.info("All goldens up to date")
            return 0
        logger.info(f"{len(stale)} golden file(s) updated in {out_dir}")
        return 0

    return handle_cli_execution(execute, logger)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Regenerate golden prompt files")
    configure_parser(parser)
    return cmd_golden_regen(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
