"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

from common.errors import DomainError


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization schedule. Pruning happens once at the start of
    `prune_start_epoch` (1-based); the remaining epochs fine-tune the masked
    network. `prune_start_epoch = None` disables pruning.
    """

    epochs: int = 40
    batch_size: int = 64
    learning_rate: float = 1e-3
    threshold_learning_rate: float = 1e-3
    lr_decay: float = 0.5
    lr_decay_epochs: int = 15
    alpha: float = 0.5
    prune_rho: float = 0.5
    prune_start_epoch: Optional[int] = 20
    finetune_epochs: int = 10
    snr_db: Tuple[float, float] = (0.0, 20.0)
    threads: int = 4
    seed: int = 11

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise DomainError("epochs must be >= 0 and batch_size >= 1.")

        if not 0 <= self.alpha <= 1:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}.")

        if not 0 <= self.prune_rho < 1:
            raise DomainError(f"prune_rho must lie in [0, 1), got {self.prune_rho}.")

        if self.prune_start_epoch is not None and not 1 <= self.prune_start_epoch <= self.epochs:
            raise DomainError(f"prune_start_epoch {self.prune_start_epoch} is outside 1..{self.epochs}.")

        if self.snr_db[0] > self.snr_db[1]:
            raise DomainError(f"Training SNR range {self.snr_db} is empty.")

    @property
    def prunes(self) -> bool:
        return self.prune_start_epoch is not None and self.prune_rho > 0
