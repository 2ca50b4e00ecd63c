"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import os
import tempfile
import unittest

from evaluation.entity import EvalResult, EvalRow, SweepAxis
from evaluation.plot import plot_result


def pilot_result() -> EvalResult:
    result = EvalResult(axis=SweepAxis.PILOTS)
    for p, offset in [(16, 0.0), (32, -3.0), (48, -5.0)]:
        result.rows.append(EvalRow(p, "dugc", -15.0 + offset, 0.3, 0.95, 0.01, 100))
        result.rows.append(EvalRow(p, "ls_oracle", -12.0 + offset, 0.2, float("nan"), float("nan"), 100))

    return result


class TestPlot(unittest.TestCase):
    def test_output_is_deterministic(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            first, second = os.path.join(tmp, "a.svg"), os.path.join(tmp, "b.svg")
            plot_result(pilot_result(), first)
            plot_result(pilot_result(), second)

            with open(first, "rb") as a, open(second, "rb") as b:
                self.assertEqual(a.read(), b.read())

    def test_labels_and_series(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "pilots.svg")
            plot_result(pilot_result(), path)

            with open(path) as stream:
                svg = stream.read()

        for text in ["NMSE (dB)", "SDR", "Number of pilots P", "dugc", "ls_oracle"]:
            self.assertIn(text, svg)

    def test_run_provenance_is_embedded(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, svg_path = os.path.join(tmp, "pilots.csv"), os.path.join(tmp, "pilots.svg")
            pilot_result().to_csv(csv_path, "c0ffee42", 2024)
            plot_result(EvalResult.from_csv(csv_path), svg_path)

            with open(svg_path) as stream:
                svg = stream.read()

        self.assertIn("config_hash: c0ffee42", svg)
        self.assertIn("master_seed: 2024", svg)
        self.assertIn("<dc:description>", svg)

    def test_results_without_provenance_have_no_title(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "pilots.svg")
            plot_result(pilot_result(), path)

            with open(path) as stream:
                self.assertNotIn("config_hash", stream.read())
