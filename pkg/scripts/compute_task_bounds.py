#!/usr/bin/env python3
"""
Regenerate src/data/task_bounds.json by dense random search.

For each synthetic function and dimension the minimum is the known optimum
(0) and the maximum is the largest value over N uniform samples of the unit
cube, kept only when it exceeds the value already on file.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List

_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.objectives import SYNTHETIC_FUNCTIONS, estimate_bounds  # noqa: E402

logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
logger = logging.getLogger(__name__)

BOUNDS_FILE = _project_root / "src" / "data" / "task_bounds.json"


def main(argv: List[str] = None) -> int:
    parser = argparse.ArgumentParser(description="Recompute synthetic task bounds")
    parser.add_argument(
        "--dims", type=int, nargs="+", default=[2], help="Input dimensions (default: 2)"
    )
    parser.add_argument(
        "--samples", type=int, default=1_000_000, help="Random samples per task (default: 1e6)"
    )
    parser.add_argument("--seed", type=int, default=0, help="Sampling seed (default: 0)")
    parser.add_argument("--out", type=Path, default=BOUNDS_FILE, help="Bounds JSON to update")
    args = parser.parse_args(argv)

    current = json.loads(args.out.read_text(encoding="utf-8")) if args.out.is_file() else {}
    for name in SYNTHETIC_FUNCTIONS:
        for d in args.dims:
            key = f"{name}_{d}d"
            bounds = estimate_bounds(name, d, n=args.samples, seed=args.seed)
            previous = current.get(key, {}).get("s_star_max", float("-inf"))
            s_max = max(bounds.s_star_max, previous)
            current[key] = {"s_star_min": 0.0, "s_star_max": s_max}
            logger.info(f"{key}: max {s_max:.10g} (sampled {bounds.s_star_max:.10g})")

    args.out.write_text(
        json.dumps(dict(sorted(current.items())), indent=2) + "\n", encoding="utf-8"
    )
    logger.info(f"Wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
