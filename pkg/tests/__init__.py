"""
Tests for the iclbo engine.
"""
