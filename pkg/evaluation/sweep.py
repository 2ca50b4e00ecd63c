"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from channel.entity import ArrayConfig, ChannelSample, PilotBlock, PilotConfig
from channel.measurement import observe_sample
from common.errors import DomainError, VrNetError
from common.io import bytes_checksum
from evaluation.baselines import Method, MethodOutput
from evaluation.entity import EvalResult, EvalRow, SweepAxis, unique_points
from evaluation.metrics import (
    confidence_half_width,
    nmse_db_half_width,
    nmse_ratio_of_means,
    nmse_ratios,
    sdr_per_sample,
    to_db,
)

logger = logging.getLogger(__name__)

FAILURES = (VrNetError, np.linalg.LinAlgError, RuntimeError, ValueError)


@dataclass
class PointInputs:
    h: np.ndarray
    u: np.ndarray
    y: np.ndarray
    A: np.ndarray

    @property
    def checksum(self) -> str:
        return bytes_checksum(*(np.ascontiguousarray(x).tobytes() for x in (self.h, self.u, self.y, self.A)))


@dataclass
class MethodTally:
    ratios: List[np.ndarray] = field(default_factory=list)
    estimates: List[np.ndarray] = field(default_factory=list)
    truths: List[np.ndarray] = field(default_factory=list)
    sdrs: List[np.ndarray] = field(default_factory=list)
    has_mask: bool = True
    failures: int = 0
    flagged: int = 0

    def add(self, output: MethodOutput, inputs: PointInputs, keep: np.ndarray) -> None:
        self.failures += int(np.count_nonzero(~keep))
        self.flagged += output.flagged
        if not np.any(keep):
            return

        self.ratios.append(nmse_ratios(output.h[keep], inputs.h[keep]))
        self.estimates.append(output.h[keep])
        self.truths.append(inputs.h[keep])
        if output.u is None:
            self.has_mask = False
        else:
            self.sdrs.append(sdr_per_sample(output.u[keep], inputs.u[keep]))

    def row(self, point: float, method: str) -> EvalRow:
        if not self.ratios:
            return EvalRow(point, method, float("nan"), float("nan"), float("nan"), float("nan"), 0, self.failures)

        ratios = np.concatenate(self.ratios)
        sdrs = np.concatenate(self.sdrs) if self.has_mask and self.sdrs else None
        logger.debug(
            f"{method} @ {point}: ratio-of-means NMSE "
            f"{to_db(nmse_ratio_of_means(np.concatenate(self.estimates), np.concatenate(self.truths))):.3f} dB"
        )
        if self.flagged:
            logger.warning(f"{method} @ {point}: {self.flagged} regularized solve(s)")

        return EvalRow(
            sweep_var=point,
            method=method,
            nmse_db=to_db(float(np.mean(ratios))),
            nmse_ci=nmse_db_half_width(ratios),
            sdr=float(np.mean(sdrs)) if sdrs is not None else float("nan"),
            sdr_ci=confidence_half_width(sdrs) if sdrs is not None else float("nan"),
            n_samples=int(ratios.size),
            failures=self.failures,
        )


def point_inputs(
    array_cfg: ArrayConfig,
    pcfg: PilotConfig,
    samples: Sequence[ChannelSample],
    indices: Sequence[int],
    snr_db: float,
    noise_key: int,
    split: str = "test",
) -> PointInputs:
    blocks: List[PilotBlock] = [
        observe_sample(array_cfg, pcfg, samples[i].h, i, snr_db, noise_key=noise_key, split=split) for i in indices
    ]

    return PointInputs(
        h=np.stack([samples[i].h for i in indices]),
        u=np.stack([samples[i].u for i in indices]),
        y=np.stack([b.y for b in blocks]),
        A=np.stack([b.A for b in blocks]),
    )


def _run_method(method: Method, inputs: PointInputs) -> Tuple[MethodOutput, np.ndarray]:
    """
    Runs a method on the whole batch, falling back to one sample at a time
    when the batch fails. Failed or non-finite samples are masked out.
    """
    try:
        output = method(inputs.y, inputs.A, inputs.u)
    except FAILURES as e:
        logger.debug(f"Batch failed ({e}), retrying per sample")
        output = None

    if output is None:
        estimates = np.full(inputs.h.shape, np.nan, dtype=np.complex128)
        masks: Optional[np.ndarray] = None
        flagged = 0
        for b in range(len(inputs.h)):
            try:
                single = method(inputs.y[b : b + 1], inputs.A[b : b + 1], inputs.u[b : b + 1])
            except FAILURES as e:
                logger.warning(f"Sample {b} excluded: {e}")
                continue

            estimates[b] = single.h[0]
            flagged += single.flagged
            if single.u is not None:
                masks = np.zeros(inputs.u.shape) if masks is None else masks
                masks[b] = single.u[0]

        output = MethodOutput(h=estimates, u=masks, flagged=flagged)

    keep = np.all(np.isfinite(output.h), axis=-1)
    if not np.all(keep):
        logger.warning(f"Excluding {int(np.count_nonzero(~keep))} sample(s) with failed or non-finite estimates")

    return output, keep


def evaluate_point(methods: Mapping[str, Method], batches: Sequence[PointInputs], point: float) -> List[EvalRow]:
    tallies: Dict[str, MethodTally] = {name: MethodTally() for name in methods}
    for inputs in batches:
        for name, method in methods.items():
            output, keep = _run_method(method, inputs)
            tallies[name].add(output, inputs, keep)

    return [tallies[name].row(point, name) for name in methods]


def _sweep(
    axis: SweepAxis,
    methods: Mapping[str, Method],
    array_cfg: ArrayConfig,
    samples: Sequence[ChannelSample],
    settings: Sequence[tuple],
    seed: int,
    batch_size: int,
    split: str,
) -> EvalResult:
    if not methods:
        raise DomainError("No methods to evaluate.")

    if not settings:
        raise DomainError(f"The {axis.value} sweep list is empty.")

    if not samples:
        raise DomainError("No samples to evaluate.")

    result = EvalResult(axis=axis)
    for point, pcfg, snr_db in settings:
        batches = [
            point_inputs(
                array_cfg, pcfg, samples, range(start, min(start + batch_size, len(samples))), snr_db, seed, split
            )
            for start in range(0, len(samples), batch_size)
        ]
        checksum = bytes_checksum(*(b.checksum.encode() for b in batches))
        result.checksums[point] = checksum
        logger.info(f"{axis.value}={point}: {len(samples)} samples, inputs {checksum[:16]}")

        result.rows.extend(evaluate_point(methods, batches, point))

    return result


def sweep_snr(
    methods: Mapping[str, Method],
    array_cfg: ArrayConfig,
    samples: Sequence[ChannelSample],
    snr_list: Sequence[float],
    pcfg: PilotConfig,
    seed: int = 0,
    batch_size: int = 100,
    split: str = "test",
) -> EvalResult:
    """
    Every method sees the same (h, A, noise) at each SNR point; the noise
    realization is also shared across points and only rescaled.
    """
    settings = [(float(snr), pcfg, float(snr)) for snr in unique_points(snr_list)]

    return _sweep(SweepAxis.SNR, methods, array_cfg, samples, settings, seed, batch_size, split)


def sweep_pilots(
    methods: Mapping[str, Method],
    array_cfg: ArrayConfig,
    samples: Sequence[ChannelSample],
    pilot_list: Sequence[int],
    snr_db: float,
    pcfg: PilotConfig,
    seed: int = 0,
    batch_size: int = 100,
    split: str = "test",
) -> EvalResult:
    """
    Pilot counts share combiner rows and noise slots, so a smaller P observes
    a prefix of a larger one.
    """
    settings = [(float(p), replace(pcfg, pilots=int(p)), float(snr_db)) for p in unique_points(pilot_list)]

    return _sweep(SweepAxis.PILOTS, methods, array_cfg, samples, settings, seed, batch_size, split)
