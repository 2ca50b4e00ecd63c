"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import unittest

import numpy as np

from common.errors import DomainError, ShapeError
from evaluation.metrics import (
    DB_FLOOR,
    confidence_half_width,
    from_db,
    nmse,
    nmse_ratio_of_means,
    nmse_ratios,
    sdr,
    to_db,
)


class TestNmse(unittest.TestCase):
    def setUp(self) -> None:
        rng = np.random.default_rng(0)
        self.h = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))

    def test_identities(self) -> None:
        self.assertEqual(nmse(self.h, self.h), 0.0)
        self.assertAlmostEqual(nmse(np.zeros_like(self.h), self.h), 1.0, delta=1e-12)
        self.assertAlmostEqual(nmse(2 * self.h, self.h), 1.0, delta=1e-12)
        self.assertEqual(to_db(nmse(self.h, self.h)), DB_FLOOR)

    def test_quadratic_scaling(self) -> None:
        for c in [0.5, 1.5 - 0.5j, -2.0]:
            self.assertAlmostEqual(nmse(c * self.h, self.h), abs(c - 1) ** 2, delta=1e-12)

    def test_mean_of_ratios_differs_from_ratio_of_means(self) -> None:
        h = np.array([[1.0, 0.0], [10.0, 0.0]])
        h_hat = np.array([[0.0, 0.0], [10.0, 0.0]])

        self.assertAlmostEqual(nmse(h_hat, h), 0.5)
        self.assertAlmostEqual(nmse_ratio_of_means(h_hat, h), 1 / 101)

    def test_single_vector(self) -> None:
        self.assertEqual(nmse_ratios(self.h[0], self.h[0]).shape, (1,))

    def test_zero_channel(self) -> None:
        with self.assertRaises(DomainError):
            nmse(self.h, np.zeros_like(self.h))

    def test_shape_mismatch(self) -> None:
        with self.assertRaises(ShapeError):
            nmse(self.h[:, :4], self.h)


class TestDecibel(unittest.TestCase):
    def test_round_trip(self) -> None:
        for value in [1e-11, 3.7e-5, 0.25, 1.0, 42.0]:
            self.assertAlmostEqual(from_db(to_db(value)) / value, 1.0, delta=1e-12)

    def test_floor(self) -> None:
        self.assertEqual(to_db(0.0), DB_FLOOR)
        self.assertEqual(to_db(1e-20), DB_FLOOR)
        self.assertEqual(to_db(1.0), 0.0)


class TestSdr(unittest.TestCase):
    def test_identities(self) -> None:
        u = np.array([1, 0, 1, 0])

        self.assertEqual(sdr(u, u), 1.0)
        self.assertEqual(sdr(1 - u, u), 0.0)
        self.assertEqual(sdr([1, 0, 0, 0], u), 0.75)

    def test_symmetry_and_permutation(self) -> None:
        rng = np.random.default_rng(1)

        for _ in range(50):
            a, b = rng.integers(0, 2, (2, 3, 16))
            order = rng.permutation(16)
            self.assertEqual(sdr(a, b), sdr(b, a))
            self.assertEqual(sdr(a[:, order], b[:, order]), sdr(a, b))

    def test_length_mismatch(self) -> None:
        with self.assertRaises(ShapeError):
            sdr([1, 0], [1, 0, 1])


class TestConfidence(unittest.TestCase):
    def test_normal_approximation(self) -> None:
        values = np.array([1.0, 2.0, 3.0, 4.0])

        self.assertAlmostEqual(confidence_half_width(values), 1.96 * np.std(values, ddof=1) / 2)
        self.assertEqual(confidence_half_width([5.0]), 0.0)
