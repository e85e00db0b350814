"""
Run one seeded optimization experiment from a JSON run spec.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.bench import RunSpec, log_filename, run  # noqa: E402
from src.llm_client import LLMClient  # noqa: E402
from src.objectives import registry  # noqa: E402
from cli.common import (  # noqa: E402
    add_common_arguments,
    add_config_arguments,
    handle_cli_execution,
    load_config,
    setup_cli_logging,
)


def configure_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", type=Path, required=True, help="JSON run spec")
    parser.add_argument(
        "--seed-override", type=int, default=None, help="Replace the seed given in the spec"
    )
    add_config_arguments(parser)
    add_common_arguments(parser)


def cmd_run(args: argparse.Namespace) -> int:
    """Execute the run described by --spec; prints the final best score and regret."""
    logger = setup_cli_logging(args.log, args.verbose, args.quiet)

    def execute() -> int:
        cfg = load_config(args)
        spec = RunSpec.from_file(args.spec)
        if args.seed_override is not None:
            spec.seed = args.seed_override
            spec.validate()
        # fail on an unknown objective before any client exists
        registry.resolve(spec.objective)

        cfg.setup_directories()
        log_path = cfg.output_dir / log_filename(spec)
        client = LLMClient.from_config(cfg) if spec.needs_client else None
        try:
            result = run(
                spec,
                registry,
                client,
                log_path=log_path,
                deterministic_timing=cfg.deterministic_timing,
                show_progress=not args.quiet,
            )
        finally:
            if client is not None:
                client.close()

        logger.info(f"Run log written to {log_path}")
        print(f"best_score: {result.best_score:.10g}")
        print(f"normalized_regret: {result.final_regret:.10g}")
        return 0

    return handle_cli_execution(execute, logger)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Run one seeded optimization experiment",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s --spec specs/rosenbrock_llambo.json
  %(prog)s --spec specs/rosenbrock_llambo.json --backend http --config configs/openai.example.json
  %(prog)s --spec specs/rosenbrock_tpe.json --seed-override 3 --out ./results
        """,
    )
    configure_parser(parser)
    return cmd_run(parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
