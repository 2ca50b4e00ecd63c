"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from dataclasses import dataclass

import torch
from torch import Tensor, nn
from torch.nn import functional as F

from common.errors import DomainError, ShapeError


def _inverse_softplus(value: float) -> float:
    return value + math.log(-math.expm1(-value))


class DunLayerParams(nn.Module):
    """
    Trainable step size gamma and penalty mu (kept positive through softplus)
    of one unfolded layer, plus the fixed VR penalty beta.
    """

    def __init__(self, gamma: float = 0.2, mu: float = 0.1, beta: float = 10.0) -> None:
        super().__init__()

        if beta < 0:
            raise DomainError(f"beta must not be negative, got {beta}.")

        self.gamma = nn.Parameter(torch.tensor(float(gamma)))
        self.mu_raw = nn.Parameter(torch.tensor(_inverse_softplus(mu)))
        self.register_buffer("beta", torch.tensor(float(beta)))

    @property
    def mu(self) -> Tensor:
        return F.softplus(self.mu_raw)


@dataclass
class LayerIterates:
    h_dun: Tensor
    h_gcn: Tensor
    u: Tensor
    z: Tensor


def _check_shapes(h: Tensor, y: Tensor, A: Tensor, z: Tensor) -> None:
    if A.shape[-1] != h.shape[-1] or A.shape[-2] != y.shape[-1] or z.shape != h.shape:
        raise ShapeError(f"Inconsistent shapes h={tuple(h.shape)}, y={tuple(y.shape)}, A={tuple(A.shape)}.")


def _apply(A: Tensor, h: Tensor) -> Tensor:
    return torch.einsum("...mn,...n->...m", A, h)


def _apply_adjoint(A: Tensor, r: Tensor) -> Tensor:
    return torch.einsum("...mn,...m->...n", A.conj(), r)


def weight_matrix_diag(u: Tensor, beta) -> Tensor:
    """
    Diagonal of W(u)^(1/2): w_i = sqrt(1 + beta (1 - u_i)).
    """
    return torch.sqrt(_weight_squared(u, beta))


def _weight_squared(u: Tensor, beta) -> Tensor:
    if torch.any((u < 0) | (u > 1)):
        raise DomainError("VR mask entries must lie in [0, 1].")

    return 1 + beta * (1 - u)


def vr_weighted_objective(h: Tensor, y: Tensor, A: Tensor, z: Tensor, u: Tensor, mu, beta) -> Tensor:
    """
    1/2 |y - A h|^2 + mu/2 |W(u)^(1/2) (h - z)|^2, reduced over the last axis.
    """
    _check_shapes(h, y, A, z)

    residual = y - _apply(A, h)
    penalty = _weight_squared(u, beta) * (h - z).abs() ** 2

    return 0.5 * (residual.abs() ** 2).sum(-1) + 0.5 * mu * penalty.sum(-1)


def _gradient_step(h: Tensor, y: Tensor, A: Tensor, z: Tensor, weight_squared: Tensor, gamma, mu) -> Tensor:
    # A^H (A h - y) + mu W (h - z); equals d/dRe(h) + j d/dIm(h) of the objective
    gradient = _apply_adjoint(A, _apply(A, h) - y) + mu * weight_squared * (h - z)
    return h - gamma * gradient


def dun_step(h: Tensor, y: Tensor, A: Tensor, z: Tensor, u: Tensor, params: DunLayerParams) -> Tensor:
    _check_shapes(h, y, A, z)
    return _gradient_step(h, y, A, z, _weight_squared(u, params.beta), params.gamma, params.mu)


def mdisr_step(h: Tensor, y: Tensor, A: Tensor, z: Tensor, params: DunLayerParams) -> Tensor:
    """
    Unweighted update (W = I) of the ablation network.
    """
    _check_shapes(h, y, A, z)
    return _gradient_step(h, y, A, z, torch.ones(h.shape, dtype=h.real.dtype, device=h.device), params.gamma, params.mu)


def init_estimate(y: Tensor, A: Tensor) -> Tensor:
    """
    Matched filter h0 = A^H y; the network starts with u0 = 1 and z0 = h0.
    """
    return _apply_adjoint(A, y)
