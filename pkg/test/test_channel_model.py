"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
import unittest

import numpy as np

from channel.entity import ArrayConfig, UserGeometry
from channel.model import (
    channel_vector,
    expand_mask,
    far_field_steering_vector,
    generate_dataset,
    path_gain,
    sample_channel,
    sample_geometry,
    sample_vr_mask,
    steering_vector,
)
from common.errors import DomainError


class TestArrayConfig(unittest.TestCase):
    def test_half_wavelength_spacing(self) -> None:
        cfg = ArrayConfig()

        self.assertAlmostEqual(cfg.wavelength, 299792458.0 / 100e9)
        self.assertAlmostEqual(cfg.spacing, cfg.wavelength / 2)
        self.assertEqual(cfg.antennas_per_subarray, 8)

    def test_index_offsets_are_centered(self) -> None:
        offsets = ArrayConfig(antennas=4, subarrays=2).index_offsets

        np.testing.assert_array_equal(offsets, [-1.5, -0.5, 0.5, 1.5])

    def test_rejects_uneven_subarrays(self) -> None:
        with self.assertRaises(DomainError):
            ArrayConfig(antennas=10, subarrays=4)


class TestSteeringVector(unittest.TestCase):
    def test_unit_norm(self) -> None:
        cfg = ArrayConfig()
        rng = np.random.default_rng(0)

        for _ in range(1000):
            geo = sample_geometry(rng)
            self.assertAlmostEqual(np.linalg.norm(steering_vector(cfg, geo)), 1.0, delta=1e-12)

    def test_far_field_limit(self) -> None:
        cfg = ArrayConfig()

        for theta in [-0.8, -0.3, 0.0, 0.5]:
            near = steering_vector(cfg, UserGeometry(theta=theta, r=1e6 * cfg.wavelength))
            far = far_field_steering_vector(cfg, theta)
            self.assertLess(np.linalg.norm(near - far), 1e-3)

    def test_far_field_error_shrinks_with_distance(self) -> None:
        cfg = ArrayConfig()
        far = far_field_steering_vector(cfg, 0.4)

        errors = [
            np.linalg.norm(steering_vector(cfg, UserGeometry(theta=0.4, r=scale * cfg.wavelength)) - far)
            for scale in [1e3, 1e4, 1e5, 1e6]
        ]
        self.assertTrue(all(a > b for a, b in zip(errors, errors[1:])), errors)

    def test_broadside_center_user_sees_symmetric_phases(self) -> None:
        cfg = ArrayConfig(antennas=8, subarrays=2)
        a = steering_vector(cfg, UserGeometry(theta=0.0, r=5.0))

        np.testing.assert_allclose(a, a[::-1], atol=1e-12)

    def test_non_positive_distance(self) -> None:
        with self.assertRaises(DomainError):
            steering_vector(ArrayConfig(), UserGeometry(theta=0.1, r=0.0))


class TestChannel(unittest.TestCase):
    def test_path_gain_magnitude(self) -> None:
        cfg = ArrayConfig()
        r = 10.0

        expected = math.sqrt(cfg.antennas) * cfg.wavelength / (4 * math.pi * r)
        self.assertAlmostEqual(abs(path_gain(cfg, r)), expected, delta=1e-15)

    def test_exact_zeros_outside_visibility_region(self) -> None:
        cfg = ArrayConfig()
        u_sub = np.array([1, 0, 0, 1, 1, 0, 1, 0], dtype=float)
        sample = channel_vector(cfg, UserGeometry(0.2, 20.0), expand_mask(cfg, u_sub))

        self.assertTrue(np.all(sample.h[sample.u == 0] == 0))
        self.assertTrue(np.all(sample.h[sample.u == 1] != 0))
        np.testing.assert_array_equal(sample.u_sub, u_sub)

    def test_visible_energy_follows_path_gain(self) -> None:
        cfg = ArrayConfig()
        geo = UserGeometry(-0.4, 12.0)
        sample = channel_vector(cfg, geo, np.ones(cfg.antennas))

        self.assertAlmostEqual(np.linalg.norm(sample.h), abs(path_gain(cfg, geo.r)), delta=1e-15)

    def test_all_zero_mask_is_rejected(self) -> None:
        cfg = ArrayConfig()

        with self.assertRaises(DomainError):
            channel_vector(cfg, UserGeometry(0.0, 10.0), np.zeros(cfg.antennas))

    def test_mask_is_block_constant_and_never_empty(self) -> None:
        cfg = ArrayConfig()
        rng = np.random.default_rng(3)

        for _ in range(200):
            u_sub, u = sample_vr_mask(cfg, rng)
            self.assertTrue(u_sub.any())
            np.testing.assert_array_equal(u.reshape(cfg.subarrays, -1), np.repeat(u_sub[:, None], 8, axis=1))

    def test_sampled_geometry_stays_in_range(self) -> None:
        rng = np.random.default_rng(5)

        for _ in range(200):
            self.assertTrue(sample_geometry(rng).in_sampling_range)

    def test_mean_distance_is_the_interval_midpoint(self) -> None:
        rng = np.random.default_rng(8)
        distances = np.array([sample_geometry(rng).r for _ in range(100_000)])

        self.assertAlmostEqual(float(distances.mean()), 46.0, delta=1.0)
        self.assertTrue(np.all((distances > 4.0) & (distances < 88.0)))

    def test_subarray_visibility_rate(self) -> None:
        cfg = ArrayConfig()
        rng = np.random.default_rng(9)
        visible = np.stack([sample_vr_mask(cfg, rng)[0] for _ in range(10_000)])

        # fair coins conditioned on at least one visible subarray
        self.assertAlmostEqual(float(visible.mean()), 0.5 / (1 - 2.0**-8), delta=0.01)

    def test_multipath_mask_is_union(self) -> None:
        cfg = ArrayConfig(paths=3)
        sample = sample_channel(cfg, 17)

        self.assertEqual(len(sample.extra_paths), 2)
        union = sample.u_sub
        for component in sample.extra_paths:
            self.assertTrue(np.all(union >= component.u_sub))
        self.assertTrue(np.all(sample.h[sample.u == 0] == 0))


class TestGenerateDataset(unittest.TestCase):
    def test_same_seed_same_content(self) -> None:
        cfg = ArrayConfig(antennas=16, subarrays=4)
        first, second = generate_dataset(cfg, 10, 99), generate_dataset(cfg, 10, 99)

        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.h, b.h)
            np.testing.assert_array_equal(a.u, b.u)

    def test_sample_content_independent_of_count(self) -> None:
        cfg = ArrayConfig(antennas=16, subarrays=4)
        short, long = generate_dataset(cfg, 3, 99), generate_dataset(cfg, 8, 99)

        for a, b in zip(short, long):
            np.testing.assert_array_equal(a.h, b.h)

    def test_different_seed_different_content(self) -> None:
        cfg = ArrayConfig(antennas=16, subarrays=4)

        self.assertFalse(np.array_equal(generate_dataset(cfg, 1, 1)[0].h, generate_dataset(cfg, 1, 2)[0].h))

    def test_empty_dataset(self) -> None:
        with self.assertRaises(DomainError):
            generate_dataset(ArrayConfig(), 0, 1)
