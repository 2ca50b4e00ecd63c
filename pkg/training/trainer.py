"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np
import torch
from torch import Tensor

from channel.entity import ArrayConfig, ChannelSample, PilotConfig
from channel.measurement import NoiseStream, observe_sample
from common.errors import DivergenceError, DomainError
from common.event import Event
from common.seed import rng_for
from evaluation.metrics import to_db
from network.vrnet import VrNet
from training.entity import TrainConfig
from training.loss import joint_loss
from training.pruning import PruneMask, apply_prune, count_params, prune_threshold

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "loss", "nmse_db", "sdr", "lr", "nonzero_params"]


@dataclass
class Batch:
    y: Tensor
    A: Tensor
    h: Tensor
    u: Tensor
    indices: np.ndarray


class PilotBatches:
    """
    Turns stored channels into minibatches of pilot observations. Each sample
    keeps its combiner across epochs; SNR (uniform in `snr_range`) and noise
    are redrawn every epoch from seeds derived from (seed, epoch, index). The
    noise comes from the training stream, disjoint from any evaluation noise.
    """

    def __init__(
        self,
        array_cfg: ArrayConfig,
        pilot_cfg: PilotConfig,
        samples: Sequence[ChannelSample],
        snr_range: Sequence[float],
        seed: int,
        dtype: torch.dtype = torch.complex64,
        split: str = "train",
    ) -> None:
        if len(samples) == 0:
            raise DomainError("Cannot train on an empty dataset.")

        self._array_cfg = array_cfg
        self._pilot_cfg = pilot_cfg
        self._samples = samples
        self._snr_range = snr_range
        self._seed = seed
        self._dtype = dtype
        self._split = split

    def __len__(self) -> int:
        return len(self._samples)

    def epoch(self, epoch: int, batch_size: int, shuffle: bool = True) -> Iterator[Batch]:
        order = np.arange(len(self._samples))
        if shuffle:
            order = rng_for(self._seed, 0, epoch).permutation(order)

        for start in range(0, len(order), batch_size):
            yield self.batch(order[start : start + batch_size], epoch)

    def batch(self, indices: np.ndarray, epoch: int) -> Batch:
        blocks = []
        for index in indices:
            snr_db = rng_for(self._seed, 1, epoch, int(index)).uniform(*self._snr_range)
            blocks.append(
                observe_sample(
                    self._array_cfg,
                    self._pilot_cfg,
                    self._samples[index].h,
                    int(index),
                    snr_db,
                    noise_key=epoch,
                    split=self._split,
                    stream=NoiseStream.TRAIN,
                )
            )

        real_dtype = torch.float64 if self._dtype == torch.complex128 else torch.float32

        return Batch(
            y=torch.from_numpy(np.stack([b.y for b in blocks])).to(self._dtype),
            A=torch.from_numpy(np.stack([b.A for b in blocks])).to(self._dtype),
            h=torch.from_numpy(np.stack([self._samples[i].h for i in indices])).to(self._dtype),
            u=torch.from_numpy(np.stack([self._samples[i].u for i in indices])).to(real_dtype),
            indices=np.asarray(indices),
        )


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    nmse_db: float
    sdr: float
    lr: float
    nonzero_params: int

    def as_row(self) -> list:
        return [self.epoch, f"{self.loss:.6g}", f"{self.nmse_db:.4f}", f"{self.sdr:.6f}", f"{self.lr:.3g}", self.nonzero_params]


@dataclass
class TrainingResult:
    model: VrNet
    mask: Optional[PruneMask]
    log: List[EpochRecord] = field(default_factory=list)


class TrainingLog:
    """
    Append-only CSV log, one row per epoch. A comment line carrying the config
    hash and master seed opens a new file.
    """

    def __init__(self, path: str, config_hash: str, master_seed: int) -> None:
        self._path = path
        if not os.path.exists(path):
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "w", newline="") as stream:
                stream.write(f"# config_hash: {config_hash} master_seed: {master_seed}\n")
                csv.writer(stream).writerow(LOG_COLUMNS)

    def __call__(self, record: EpochRecord, *_) -> None:
        with open(self._path, "a", newline="") as stream:
            csv.writer(stream).writerow(record.as_row())


def smoothed_losses(log: Sequence[EpochRecord], window: int = 5) -> np.ndarray:
    """
    Trailing moving average of the epoch losses over full windows only.
    """
    if window < 1:
        raise DomainError(f"Smoothing window must be positive, got {window}.")

    losses = np.array([record.loss for record in log], dtype=np.float64)
    if losses.size < window:
        return np.empty(0)

    return np.convolve(losses, np.ones(window) / window, mode="valid")


def epoch_learning_rate(cfg: TrainConfig, epoch: int, base: float) -> float:
    return base * cfg.lr_decay ** ((epoch - 1) // max(cfg.lr_decay_epochs, 1))


def make_optimizer(model: VrNet, cfg: TrainConfig) -> torch.optim.Optimizer:
    thresholds, others = [], []
    for name, parameter in model.named_parameters():
        (thresholds if name.endswith("threshold.zeta") else others).append(parameter)

    groups = [{"params": others, "lr": cfg.learning_rate, "base_lr": cfg.learning_rate}]
    if thresholds:
        groups.append({"params": thresholds, "lr": cfg.threshold_learning_rate, "base_lr": cfg.threshold_learning_rate})

    return torch.optim.Adam(groups)


def finetune_step(
    model: VrNet,
    mask: Optional[PruneMask],
    batch: Batch,
    optimizer: torch.optim.Optimizer,
    alpha: float,
    lr: Optional[float] = None,
):
    """
    One gradient update of the retained weights. Masked weights get no
    gradient and are re-zeroed after the step, so they stay exactly zero.
    """
    if lr is not None:
        for group in optimizer.param_groups:
            group["lr"] = lr

    if mask is not None:
        mask.apply(model)

    output = model(batch.y, batch.A)
    loss, metrics = joint_loss(output.h, batch.h, output.u, batch.u, alpha if model.has_vr_output else 0.0, output.u_logits)
    if not torch.isfinite(loss):
        raise DivergenceError(f"Non-finite loss {float(loss)} on samples {batch.indices[:8].tolist()}…")

    optimizer.zero_grad()
    loss.backward()
    if mask is not None:
        mask.mask_gradients(model)

    optimizer.step()
    if mask is not None:
        mask.apply(model)

    return float(loss.detach()), metrics


class Trainer:
    def __init__(self, model: VrNet, cfg: TrainConfig, batches: PilotBatches) -> None:
        self.model = model
        self.cfg = cfg
        self.batches = batches
        self.optimizer = make_optimizer(model, cfg)
        self.mask: Optional[PruneMask] = None

        # (record, trainer) after every epoch, (mask, trainer) after pruning
        self.on_epoch_end: Event = Event("trainer.on_epoch_end")
        self.on_prune: Event = Event("trainer.on_prune")

    def restore(self, optimizer_state: Optional[dict], mask: Optional[PruneMask]) -> None:
        if optimizer_state is not None:
            self.optimizer.load_state_dict(optimizer_state)
        self.mask = mask

    def prune(self, rho: float) -> PruneMask:
        q = prune_threshold(self.model, rho)
        self.mask = apply_prune(self.model, q)
        logger.info(f"Pruned at q={q:.4g}: sparsity {self.mask.sparsity:.3f}")
        self.on_prune(self.mask, self)

        return self.mask

    def run(self, epochs: int, start_epoch: int = 0, prune_at: Optional[int] = None) -> TrainingResult:
        torch.set_num_threads(self.cfg.threads)
        result = TrainingResult(model=self.model, mask=self.mask)

        for epoch in range(start_epoch + 1, epochs + 1):
            if prune_at is not None and epoch == prune_at and self.mask is None:
                self.prune(self.cfg.prune_rho)

            record = self._epoch(epoch)
            result.log.append(record)
            logger.info(
                f"epoch {record.epoch}: loss {record.loss:.4g}, NMSE {record.nmse_db:.2f} dB, "
                f"SDR {record.sdr:.4f}, lr {record.lr:.3g}, nonzero {record.nonzero_params}"
            )
            self.on_epoch_end(record, self)

        result.mask = self.mask
        return result

    def _epoch(self, epoch: int) -> EpochRecord:
        self.model.train()
        lr = epoch_learning_rate(self.cfg, epoch, self.cfg.learning_rate)
        for group in self.optimizer.param_groups:
            group["lr"] = epoch_learning_rate(self.cfg, epoch, group.get("base_lr", self.cfg.learning_rate))

        losses, nmses, sdrs, weights = [], [], [], []
        for batch in self.batches.epoch(epoch, self.cfg.batch_size):
            loss, metrics = finetune_step(self.model, self.mask, batch, self.optimizer, self.cfg.alpha)
            losses.append(loss)
            nmses.append(metrics.nmse)
            sdrs.append(metrics.sdr)
            weights.append(len(batch.indices))

        return EpochRecord(
            epoch=epoch,
            loss=float(np.average(losses, weights=weights)),
            nmse_db=to_db(float(np.average(nmses, weights=weights))),
            sdr=float(np.average(sdrs, weights=weights)) if not any(math.isnan(s) for s in sdrs) else float("nan"),
            lr=lr,
            nonzero_params=count_params(self.model, self.mask).nonzero,
        )


def train(
    model: VrNet, cfg: TrainConfig, batches: PilotBatches, epochs: Optional[int] = None
) -> TrainingResult:
    """
    Full schedule: `cfg.epochs` epochs end to end, pruned once at
    `cfg.prune_start_epoch` and fine-tuned under the mask afterwards.
    """
    trainer = Trainer(model, cfg, batches)
    return trainer.run(cfg.epochs if epochs is None else epochs, prune_at=cfg.prune_start_epoch if cfg.prunes else None)
