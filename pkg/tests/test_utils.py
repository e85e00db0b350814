"""
Tests for utils module.
"""

import math
import unittest

from src.utils import format_number, round_significant, stable_digest, substream


class TestUtils(unittest.TestCase):
    """Test cases for utility functions."""

    def test_format_number_drops_trailing_zeros(self):
        """Test format_number renders whole and short values compactly."""
        self.assertEqual(format_number(15.0), "15")
        self.assertEqual(format_number(0.5), "0.5")
        self.assertEqual(format_number(0.0), "0")
        self.assertEqual(format_number(-0.0), "0")

    def test_format_number_significant_digits(self):
        """Test format_number keeps six significant digits."""
        self.assertEqual(format_number(1 / 3), "0.333333")
        self.assertEqual(format_number(-2.718281828), "-2.71828")

    def test_format_number_scientific_outside_range(self):
        """Test format_number switches to scientific notation for extremes."""
        self.assertEqual(format_number(1e-5), "1e-05")
        self.assertEqual(format_number(1234567.0), "1.23457e+06")

    def test_format_number_non_finite(self):
        """Test format_number passes non-finite values through."""
        self.assertEqual(format_number(float("inf")), "inf")
        self.assertEqual(format_number(float("nan")), "nan")

    def test_round_significant(self):
        """Test round_significant."""
        self.assertEqual(round_significant(123456789.0), 123457000.0)
        self.assertEqual(round_significant(0.0), 0.0)
        self.assertTrue(math.isinf(round_significant(float("inf"))))

    def test_stable_digest_ignores_key_order(self):
        """Test stable_digest is independent of dict ordering."""
        a = stable_digest({"x": 1, "y": [1, 2]})
        b = stable_digest({"y": [1, 2], "x": 1})
        self.assertEqual(a, b)
        self.assertEqual(len(a), 64)
        self.assertNotEqual(a, stable_digest({"x": 2, "y": [1, 2]}))

    def test_substream_reproducible(self):
        """Test substream gives the same draws for the same seed and name."""
        a = substream(7, "init").random(5)
        b = substream(7, "init").random(5)
        self.assertEqual(a.tolist(), b.tolist())

    def test_substreams_independent(self):
        """Test differently named streams do not share draws."""
        init = substream(7, "init").random(5)
        shuffle = substream(7, "shuffle").random(5)
        other_seed = substream(8, "init").random(5)
        self.assertNotEqual(init.tolist(), shuffle.tolist())
        self.assertNotEqual(init.tolist(), other_seed.tolist())


if __name__ == "__main__":
    unittest.main()
