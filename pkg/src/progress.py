"""
Progress reporting for optimization runs.

Shows trial count, best score so far and ETA on a single stderr line.
Output is suppressed outside a terminal.
"""

from __future__ import annotations

import sys
import time
from typing import Optional

from .utils import format_number


class TrialProgress:
    """
    Single-line progress display for a run of trials.

    Example:
        >>> progress = TrialProgress(total=25, desc="rosenbrock_2d/llambo")
        >>> progress.update(1, best=0.42)
        >>> progress.finish()
    """

    def __init__(self, total: int, desc: str = "Trials", width: int = 25, disable: bool = False):
        self.total = total
        self.desc = desc
        self.width = width
        self.start_time = time.monotonic()
        self.current = 0
        self.best: Optional[float] = None
        self.finished = False

        is_tty = hasattr(sys.stderr, "isatty") and sys.stderr.isatty()
        self.disable = disable or not is_tty

    def update(self, current: int, best: Optional[float] = None) -> None:
        """
        Move the display to the given trial.

        Args:
            current: Trials completed so far
            best: Best score so far, shown when given
        """
        # state is tracked even when output is off
        self.current = min(current, self.total)
        if best is not None:
            self.best = best

        if self.disable or self.finished:
            return

        sys.stderr.write(f"\r{self.render()}")
        sys.stderr.flush()

    def render(self) -> str:
        """Build the status line for the current state."""
        percent = (self.current / self.total) * 100 if self.total > 0 else 100.0
        elapsed = time.monotonic() - self.start_time

        filled = int(self.width * self.current / self.total) if self.total > 0 else self.width
        bar = "=" * filled + ">" if filled < self.width else "=" * self.width
        parts = [
            f"{self.desc}:",
            f"[{bar.ljust(self.width)}]",
            f"{percent:5.1f}%",
            f"({self.current}/{self.total})",
            f"| {self._format_time(elapsed)} elapsed",
        ]
        if 0 < self.current < self.total and elapsed > 0:
            remaining = (self.total - self.current) * elapsed / self.current
            parts.append(f"| ETA: {self._format_time(remaining)}")
        if self.best is not None:
            parts.append(f"| best {format_number(self.best)}")
        return " ".join(parts)

    def finish(self) -> None:
        """Complete the display and move to the next line."""
        self.current = self.total
        if self.disable or self.finished:
            self.finished = True
            return
        self.update(self.total)
        self.finished = True
        sys.stderr.write("\n")
        sys.stderr.flush()

    @staticmethod
    def _format_time(seconds: float) -> str:
        if seconds < 60:
            return f"{seconds:.1f}s"
        if seconds < 3600:
            return f"{int(seconds / 60)}m {int(seconds % 60)}s"
        return f"{int(seconds / 3600)}h {int((seconds % 3600) / 60)}m"

    def __enter__(self) -> "TrialProgress":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        if not self.finished:
            self.finish()
        return False
