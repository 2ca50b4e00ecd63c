"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import yaml
from tabulate import tabulate

from common.errors import VrNetError
from common.io import atomic_write
from evaluation.entity import EvalResult
from training.trainer import EpochRecord, smoothed_losses


class AcceptanceError(VrNetError):
    prefix = "Acceptance failed"


@dataclass(frozen=True)
class AcceptanceTargets:
    """
    Pass marks of the desk-scale run. NMSE values are in dB.
    """

    snr_db: float = 10.0
    nmse_db: float = -15.0
    ablation_margin_db: float = 2.0
    sdr: float = 0.9
    sdr_from_snr_db: float = 5.0
    smoothing_window: int = 5
    prune_nmse_loss_db: float = 4.0
    prune_sdr_loss: float = 0.02
    snr_gain_db: float = 1.0


@dataclass
class Criterion:
    name: str
    measured: float
    target: str
    passed: bool

    def __post_init__(self):
        # sweep rows carry numpy scalars, which the YAML dump rejects
        self.measured = float(self.measured)
        self.passed = bool(self.passed)

    def as_row(self) -> list:
        return [self.name, f"{self.measured:.4f}", self.target, "pass" if self.passed else "FAIL"]


@dataclass
class AcceptanceReport:
    config_hash: str
    master_seed: int
    criteria: List[Criterion] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.criteria) and all(c.passed for c in self.criteria)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.criteria if not c.passed]

    def write(self, path: str) -> None:
        data = {
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "passed": self.passed,
            "criteria": [asdict(c) for c in self.criteria],
        }
        with atomic_write(path, "w") as stream:
            yaml.safe_dump(data, stream, sort_keys=False)

    def __str__(self) -> str:
        return tabulate(
            [c.as_row() for c in self.criteria],
            headers=["criterion", "measured", "target", "result"],
            tablefmt="pretty",
            colalign=("left", "right", "left", "left"),
        )


def _at(result: EvalResult, point: float, method: str):
    try:
        return result.row(point, method)
    except KeyError:
        raise AcceptanceError(f"No '{method}' result at {point:g} in the {result.axis.value} sweep.")


def check_accuracy(
    snr: EvalResult, targets: AcceptanceTargets, method: str = "dugc", ablation: str = "mdisr"
) -> List[Criterion]:
    row = _at(snr, targets.snr_db, method)
    margin = _at(snr, targets.snr_db, ablation).nmse_db - row.nmse_db
    sdrs = [r.sdr for r in snr.series(method) if r.sweep_var >= targets.sdr_from_snr_db]
    worst_sdr = min(sdrs) if sdrs else float("nan")

    return [
        Criterion(
            f"{method} NMSE at {targets.snr_db:g} dB",
            row.nmse_db,
            f"<= {targets.nmse_db:g} dB",
            row.nmse_db <= targets.nmse_db,
        ),
        Criterion(
            f"{method} gain over {ablation} at {targets.snr_db:g} dB",
            margin,
            f">= {targets.ablation_margin_db:g} dB",
            margin >= targets.ablation_margin_db,
        ),
        Criterion(
            f"{method} worst SDR at >= {targets.sdr_from_snr_db:g} dB",
            worst_sdr,
            f">= {targets.sdr:g}",
            not math.isnan(worst_sdr) and worst_sdr >= targets.sdr,
        ),
    ]


def check_loss_trend(log: Sequence[EpochRecord], targets: AcceptanceTargets, name: str = "dugc") -> Criterion:
    """
    The moving average of the epoch loss never rises. The measured value is
    the largest rise between consecutive windows (<= 0 passes).
    """
    smoothed = smoothed_losses(log, targets.smoothing_window)
    if smoothed.size < 2:
        rise = float("nan")
    else:
        rise = float(max(b - a for a, b in zip(smoothed, smoothed[1:])))

    return Criterion(
        f"{name} smoothed loss (window {targets.smoothing_window}) rise",
        rise,
        "<= 0",
        not math.isnan(rise) and rise <= 0,
    )


def check_pruning(
    dense: EvalResult,
    pruned: EvalResult,
    targets: AcceptanceTargets,
    method: str = "dugc",
    pruned_method: Optional[str] = None,
) -> List[Criterion]:
    before = _at(dense, targets.snr_db, method)
    after = _at(pruned, targets.snr_db, pruned_method or method)
    nmse_loss = after.nmse_db - before.nmse_db
    sdr_loss = before.sdr - after.sdr

    return [
        Criterion(
            f"NMSE loss from pruning at {targets.snr_db:g} dB",
            nmse_loss,
            f"<= {targets.prune_nmse_loss_db:g} dB",
            nmse_loss <= targets.prune_nmse_loss_db,
        ),
        Criterion(
            f"SDR loss from pruning at {targets.snr_db:g} dB",
            sdr_loss,
            f"<= {targets.prune_sdr_loss:g}",
            not math.isnan(sdr_loss) and sdr_loss <= targets.prune_sdr_loss,
        ),
    ]


def check_sweep_trends(
    snr: EvalResult, pilots: Optional[EvalResult], targets: AcceptanceTargets, method: str = "dugc"
) -> List[Criterion]:
    """
    NMSE improves by at least `snr_gain_db` over the SNR sweep and never gets
    worse with more pilots beyond the confidence intervals.
    """
    series = snr.series(method)
    gain = series[0].nmse_db - series[-1].nmse_db if len(series) > 1 else float("nan")
    criteria = [
        Criterion(
            f"{method} NMSE gain over the SNR sweep",
            gain,
            f">= {targets.snr_gain_db:g} dB",
            not math.isnan(gain) and gain >= targets.snr_gain_db,
        )
    ]

    if pilots is not None:
        rows = pilots.series(method)
        worst = max(
            (b.nmse_db - a.nmse_db - (a.nmse_ci + b.nmse_ci) for a, b in zip(rows, rows[1:])),
            default=float("nan"),
        )
        criteria.append(
            Criterion(
                f"{method} NMSE rise with more pilots beyond the CIs",
                worst,
                "<= 0 dB",
                not math.isnan(worst) and worst <= 0,
            )
        )

    return criteria
