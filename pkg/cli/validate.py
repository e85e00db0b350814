"""
Validate a run spec and/or an operator config without running anything.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.bench import RunSpec  # noqa: E402
from src.exceptions import ValidationError  # noqa: E402
from src.objectives import registry  # noqa: E402
from cli.common import (  # noqa: E402
    add_common_arguments,
    add_config_arguments,
    handle_cli_execution,
    load_config,
    setup_cli_logging,
)


def configure_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", type=Path, default=None, help="JSON run spec to check")
    add_config_arguments(parser)
    add_common_arguments(parser)


def cmd_validate(args: argparse.Namespace) -> int:
    logger = setup_cli_logging(args.log, args.verbose, args.quiet)

    def execute() -> int:
        if args.spec is None and args.config is None and args.backend is None:
            raise ValidationError("Nothing to validate: give --spec and/or --config")
        cfg = load_config(args)
        logger.info(f"Config OK (backend {cfg.backend})")
        if args.spec is not None:
            spec = RunSpec.from_file(args.spec)
            objective = registry.resolve(spec.objective)
            logger.info(
                f"Spec OK: {objective.name} (d={objective.space.d}), method {spec.method}, "
                f"{spec.n_trials} trials, seed {spec.seed}"
            )
        print("OK")
        return 0

    return handle_cli_execution(execute, logger)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Validate a run spec and operator config")
    configure_parser(parser)
    return cmd_validate(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
