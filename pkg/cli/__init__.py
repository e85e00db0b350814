"""
Command-line interface modules for iclbo.
"""

__all__ = ["common", "main", "run", "report", "validate", "golden_regen"]
