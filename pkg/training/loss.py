"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
from torch import Tensor
from torch.nn import functional as F

from common.errors import DomainError


@dataclass
class LossMetrics:
    nmse: float
    bce: float
    sdr: float


def nmse_loss(h_hat: Tensor, h: Tensor) -> Tensor:
    """
    Mean over the batch of |h_hat - h|^2 / |h|^2.
    """
    energy = (h.abs() ** 2).sum(-1)
    if torch.any(energy == 0):
        raise DomainError("NMSE is undefined for an all-zero channel.")

    return (((h_hat - h).abs() ** 2).sum(-1) / energy).mean()


def joint_loss(
    h_hat: Tensor,
    h: Tensor,
    u_soft: Optional[Tensor],
    u_true: Tensor,
    alpha: float,
    u_logits: Optional[Tensor] = None,
) -> Tuple[Tensor, LossMetrics]:
    """
    (1 - alpha) NMSE + alpha BCE(u_soft, u_true). The VR term is the mean
    binary cross entropy of the soft mask (computed from the logits when
    given); the successful detection ratio is only reported.
    """
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}.")

    nmse = nmse_loss(h_hat, h)
    if u_soft is None:
        bce = torch.zeros((), dtype=nmse.dtype, device=nmse.device)
        sdr = float("nan")
    else:
        target = u_true.to(u_soft.dtype)
        if u_logits is not None:
            bce = F.binary_cross_entropy_with_logits(u_logits, target)
        else:
            bce = F.binary_cross_entropy(u_soft.clamp(1e-7, 1 - 1e-7), target)

        with torch.no_grad():
            sdr = float(((u_soft >= 0.5).to(target.dtype) == target).to(target.dtype).mean())

    loss = (1 - alpha) * nmse
    if alpha > 0 and u_soft is not None:
        loss = loss + alpha * bce

    return loss, LossMetrics(nmse=float(nmse.detach()), bce=float(bce.detach()), sdr=sdr)
