"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
import os
import tempfile
import unittest

import numpy as np

from channel.entity import ArrayConfig, PilotConfig
from channel.model import generate_dataset
from common.errors import DomainError, ManifestError
from evaluation.baselines import MethodOutput, ls_blind_method, ls_oracle_method, oracle_method
from evaluation.entity import EvalResult, SweepAxis
from evaluation.metrics import DB_FLOOR
from evaluation.sweep import point_inputs, sweep_pilots, sweep_snr

ARRAY = ArrayConfig(antennas=16, subarrays=4, rf_chains=4)
PILOT = PilotConfig(pilots=8)


class TestSweepSnr(unittest.TestCase):
    def setUp(self) -> None:
        self.samples = generate_dataset(ARRAY, 12, 4)

    def test_oracle_sits_on_the_floor(self) -> None:
        truth = np.stack([s.h for s in self.samples])
        result = sweep_snr({"oracle": oracle_method(truth)}, ARRAY, self.samples, [0.0, 10.0], PILOT, batch_size=12)

        for row in result.rows:
            self.assertEqual(row.nmse_db, DB_FLOOR)
            self.assertEqual(row.sdr, 1.0)
            self.assertEqual(row.n_samples, 12)

    def test_noiseless_overdetermined_least_squares(self) -> None:
        result = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [math.inf], PILOT, batch_size=5)

        self.assertLess(result.rows[0].nmse_db, -100)
        self.assertTrue(math.isnan(result.rows[0].sdr))

    def test_higher_snr_helps(self) -> None:
        result = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [0.0, 20.0], PILOT, seed=3)

        self.assertLess(result.row(20.0, "ls").nmse_db, result.row(0.0, "ls").nmse_db - 10)

    def test_methods_see_identical_inputs(self) -> None:
        seen = {}

        def recorder(name):
            def method(y, A, u_true):
                seen.setdefault(name, []).append((y.copy(), A.copy()))
                return ls_blind_method(y, A, u_true)

            return method

        sweep_snr({"a": recorder("a"), "b": recorder("b")}, ARRAY, self.samples, [5.0], PILOT, batch_size=4)

        for (y_a, A_a), (y_b, A_b) in zip(seen["a"], seen["b"]):
            np.testing.assert_array_equal(y_a, y_b)
            np.testing.assert_array_equal(A_a, A_b)

    def test_checksums_are_reproducible(self) -> None:
        first = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [5.0], PILOT, seed=1)
        second = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [5.0], PILOT, seed=1)
        other = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [5.0], PILOT, seed=2)

        self.assertEqual(first.checksums, second.checksums)
        self.assertNotEqual(first.checksums, other.checksums)

    def test_failures_are_counted_and_excluded(self) -> None:
        def flaky(y, A, u_true):
            if len(y) > 1:
                raise DomainError("batch")
            if np.abs(y[0, 0]) > np.median(np.abs(point.y[:, 0])):
                raise DomainError("sample")
            return ls_blind_method(y, A, u_true)

        point = point_inputs(ARRAY, PILOT, self.samples, range(12), 10.0, 0)
        result = sweep_snr({"flaky": flaky}, ARRAY, self.samples, [10.0], PILOT, seed=0, batch_size=12)
        row = result.rows[0]

        self.assertEqual(row.failures + row.n_samples, 12)
        self.assertGreater(row.failures, 0)

    def test_non_finite_estimates_are_failures(self) -> None:
        def broken(y, A, u_true):
            return MethodOutput(h=np.full((len(y), ARRAY.antennas), np.nan, dtype=complex))

        row = sweep_snr({"broken": broken}, ARRAY, self.samples, [10.0], PILOT).rows[0]

        self.assertEqual(row.failures, 12)
        self.assertEqual(row.n_samples, 0)

    def test_excluded_samples_are_logged_as_warnings(self) -> None:
        def crashing(y, A, u_true):
            raise RuntimeError("solver blew up")

        with self.assertLogs("evaluation.sweep", level="WARNING") as logs:
            row = sweep_snr({"crashing": crashing}, ARRAY, self.samples, [10.0], PILOT, batch_size=4).rows[0]

        self.assertEqual(row.failures, 12)
        self.assertTrue(any("solver blew up" in line and line.startswith("WARNING") for line in logs.output))
        self.assertTrue(any("Excluding 4 sample(s)" in line for line in logs.output))

    def test_splits_see_different_inputs(self) -> None:
        test = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [5.0], PILOT, seed=1)
        val = sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [5.0], PILOT, seed=1, split="val")

        self.assertNotEqual(test.checksums, val.checksums)

    def test_empty_inputs(self) -> None:
        with self.assertRaises(DomainError):
            sweep_snr({"ls": ls_blind_method}, ARRAY, self.samples, [], PILOT)
        with self.assertRaises(DomainError):
            sweep_snr({}, ARRAY, self.samples, [0.0], PILOT)


class TestSweepPilots(unittest.TestCase):
    def test_genie_improves_with_pilots(self) -> None:
        samples = generate_dataset(ARRAY, 40, 8)
        result = sweep_pilots({"ls_oracle": ls_oracle_method}, ARRAY, samples, [4, 8, 16], 10.0, PILOT, seed=5)

        nmse = [row.nmse_db for row in result.series("ls_oracle")]
        self.assertEqual(result.axis, SweepAxis.PILOTS)
        self.assertEqual(result.points, [4.0, 8.0, 16.0])
        self.assertTrue(all(a > b for a, b in zip(nmse, nmse[1:])), nmse)


class TestResultsCsv(unittest.TestCase):
    def test_written_results_read_back(self) -> None:
        samples = generate_dataset(ARRAY, 6, 2)
        truth = np.stack([s.h for s in samples])
        result = sweep_snr(
            {"oracle": oracle_method(truth), "ls": ls_blind_method}, ARRAY, samples, [0.0, 10.0], PILOT
        )

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "snr.csv")
            result.to_csv(path, "beef", 3)
            with open(path) as stream:
                self.assertIn("config_hash: beef", stream.readline())
            restored = EvalResult.from_csv(path)

        self.assertEqual(restored.axis, SweepAxis.SNR)
        self.assertEqual(restored.methods, ["oracle", "ls"])
        self.assertEqual(restored.points, [0.0, 10.0])
        self.assertAlmostEqual(restored.row(10.0, "ls").nmse_db, result.row(10.0, "ls").nmse_db, places=4)
        self.assertTrue(math.isnan(restored.row(0.0, "ls").sdr))

    def test_malformed_csv(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.csv")
            with open(path, "w") as stream:
                stream.write("a,b,c\n1,2,3\n")

            with self.assertRaises(ManifestError):
                EvalResult.from_csv(path)
