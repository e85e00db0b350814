"""
Maintenance scripts for iclbo (task-bound regeneration).
"""

