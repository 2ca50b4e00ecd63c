"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from tabulate import tabulate

from common.errors import DomainError, ManifestError
from common.io import atomic_write

RESULT_COLUMNS = ["sweep_var", "method", "nmse_db", "nmse_ci", "sdr", "sdr_ci", "n_samples", "failures"]


class SweepAxis(Enum):
    SNR = "snr_db"
    PILOTS = "pilots"

    @property
    def label(self) -> str:
        return "SNR (dB)" if self == SweepAxis.SNR else "Number of pilots P"


@dataclass(frozen=True)
class EvaluationConfig:
    methods: Tuple[str, ...] = ("dugc", "mdisr", "ls_oracle", "ls")
    snr_db: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    pilots: Tuple[int, ...] = (16, 24, 32, 40, 48)
    pilot_snr_db: float = 10.0
    sweep_seed: int = 101
    batch_size: int = 100
    samples: Optional[int] = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise DomainError(f"Evaluation batch size must be positive, got {self.batch_size}.")

        if self.samples is not None and self.samples < 1:
            raise DomainError(f"Evaluation sample count must be positive, got {self.samples}.")

        if any(p < 1 for p in self.pilots):
            raise DomainError(f"Pilot counts must be positive, got {list(self.pilots)}.")


@dataclass
class EvalRow:
    sweep_var: float
    method: str
    nmse_db: float
    nmse_ci: float
    sdr: float
    sdr_ci: float
    n_samples: int
    failures: int = 0

    def as_row(self) -> list:
        return [
            _format_number(self.sweep_var),
            self.method,
            f"{self.nmse_db:.4f}",
            f"{self.nmse_ci:.4f}",
            f"{self.sdr:.6f}",
            f"{self.sdr_ci:.6f}",
            self.n_samples,
            self.failures,
        ]


@dataclass
class EvalResult:
    """
    One row per (sweep point, method). NMSE is in dB with a dB half-width;
    SDR is NaN for methods without a VR output. A result read back from CSV
    carries the config hash and master seed of the run that produced it.
    """

    axis: SweepAxis
    rows: List[EvalRow] = field(default_factory=list)
    checksums: Dict[float, str] = field(default_factory=dict)
    config_hash: Optional[str] = None
    master_seed: Optional[int] = None

    @property
    def methods(self) -> List[str]:
        return list(dict.fromkeys(row.method for row in self.rows))

    @property
    def points(self) -> List[float]:
        return list(dict.fromkeys(row.sweep_var for row in self.rows))

    def series(self, method: str) -> List[EvalRow]:
        return [row for row in self.rows if row.method == method]

    def row(self, point: float, method: str) -> EvalRow:
        for row in self.rows:
            if row.sweep_var == point and row.method == method:
                return row

        raise KeyError((point, method))

    def to_csv(self, path: str, config_hash: str, master_seed: int) -> None:
        with atomic_write(path, "w") as stream:
            stream.write(f"# axis: {self.axis.value} config_hash: {config_hash} master_seed: {master_seed}\n")
            writer = csv.writer(stream)
            writer.writerow(RESULT_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_row())

    @classmethod
    def from_csv(cls, path: str) -> "EvalResult":
        axis = SweepAxis.SNR
        config_hash, master_seed = None, None
        with open(path, newline="") as stream:
            lines = []
            for line in stream:
                if line.startswith("#"):
                    if (found := _comment_field(line, "axis")) is not None:
                        axis = _parse_axis(found, path)
                    config_hash = _comment_field(line, "config_hash") or config_hash
                    if (seed := _comment_field(line, "master_seed")) is not None:
                        master_seed = _parse_seed(seed, path)
                    continue
                lines.append(line)

        reader = csv.reader(lines)
        if next(reader, None) != RESULT_COLUMNS:
            raise ManifestError(f"{path} is not a results CSV, expected columns {RESULT_COLUMNS}.")

        result = cls(axis=axis, config_hash=config_hash, master_seed=master_seed)
        for number, record in enumerate(reader, start=2):
            if not record:
                continue
            try:
                result.rows.append(
                    EvalRow(
                        sweep_var=float(record[0]),
                        method=record[1],
                        nmse_db=float(record[2]),
                        nmse_ci=float(record[3]),
                        sdr=float(record[4]),
                        sdr_ci=float(record[5]),
                        n_samples=int(record[6]),
                        failures=int(record[7]),
                    )
                )
            except (IndexError, ValueError):
                raise ManifestError(f"Malformed row {number} in {path}: {record}")

        if not result.rows:
            raise ManifestError(f"{path} holds no results.")

        return result

    def __str__(self) -> str:
        return tabulate(
            [row.as_row() for row in self.rows],
            headers=[self.axis.value] + RESULT_COLUMNS[1:],
            tablefmt="pretty",
        )


def _format_number(value: float) -> str:
    if math.isfinite(value) and float(value).is_integer():
        return str(int(value))

    return repr(float(value))


def _comment_field(line: str, key: str) -> Optional[str]:
    tokens = line.lstrip("#").split()
    for name, value in zip(tokens, tokens[1:]):
        if name == f"{key}:":
            return value

    return None


def _parse_axis(value: str, path: str) -> SweepAxis:
    try:
        return SweepAxis(value)
    except ValueError:
        raise ManifestError(f"Unknown sweep axis '{value}' in {path}.")


def _parse_seed(value: str, path: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ManifestError(f"{path} has a malformed master seed '{value}'.")


def unique_points(points: Sequence[float]) -> List[float]:
    return list(dict.fromkeys(points))
