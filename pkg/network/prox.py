"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from typing import Optional

import torch
from torch import Tensor, nn
from torch.nn import functional as F

from common.errors import DomainError, ShapeError


def complex_to_channels(h: Tensor) -> Tensor:
    # (..., N) complex -> (..., 2, N) real
    return torch.stack([h.real, h.imag], dim=-2)


def channels_to_complex(x: Tensor) -> Tensor:
    return torch.complex(x[..., 0, :], x[..., 1, :])


def _conv(in_channels: int, out_channels: int, kernel_size: int) -> nn.Conv1d:
    return nn.Conv1d(in_channels, out_channels, kernel_size, padding=kernel_size // 2)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, kernel_size: int) -> None:
        super().__init__()

        self.conv1 = _conv(channels, channels, kernel_size)
        self.conv2 = _conv(channels, channels, kernel_size)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.conv2(F.relu(self.conv1(x)))


class GateNetwork(nn.Module):
    """
    Feature convolution -> two residual blocks -> feature convolution over the
    antenna axis. Input channels are [Re h, Im h, u] in that order.
    """

    INPUT_CHANNELS = 3

    def __init__(self, channels: int = 16, kernel_size: int = 3) -> None:
        super().__init__()

        self.conv_in = _conv(self.INPUT_CHANNELS, channels, kernel_size)
        self.blocks = nn.Sequential(ResidualBlock(channels, kernel_size), ResidualBlock(channels, kernel_size))
        self.conv_out = _conv(channels, 1, kernel_size)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv_out(self.blocks(F.relu(self.conv_in(x)))).squeeze(-2)


class ProxParams(nn.Module):
    """
    Learned proximal operator: Conv2(ReLU(Conv1(h * m))) with the CSI gate m.
    Without a gate it is the plain ResCNN of the ablation network.
    """

    def __init__(self, channels: int = 16, kernel_size: int = 3, gated: bool = True) -> None:
        super().__init__()

        if kernel_size % 2 != 1:
            raise DomainError(f"Kernel size must be odd, got {kernel_size}.")

        if channels < 2:
            raise DomainError(f"At least two feature channels are needed, got {channels}.")

        self.conv1 = _conv(2, channels, kernel_size)
        self.conv2 = _conv(channels, 2, kernel_size)
        self.gate = GateNetwork(channels, kernel_size) if gated else None

    def forward(self, h_gcn: Tensor, u: Tensor) -> Tensor:
        return prox_forward(h_gcn, u, self)


def _check(h: Tensor, u: Tensor) -> None:
    if h.shape != u.shape:
        raise ShapeError(f"Channel {tuple(h.shape)} and mask {tuple(u.shape)} differ in shape.")


def _batched(x: Tensor) -> Tensor:
    return x.unsqueeze(0) if x.dim() == 2 else x


def gate_forward(h_gcn: Tensor, u: Tensor, params: ProxParams) -> Tensor:
    """
    m = sigmoid(G([h || u])) in (0, 1) per antenna.
    """
    _check(h_gcn, u)
    if params.gate is None:
        raise ShapeError("This proximal network has no gate.")

    x = torch.cat([complex_to_channels(h_gcn), u.unsqueeze(-2)], dim=-2)
    m = torch.sigmoid(params.gate(_batched(x)))

    return m.reshape(u.shape)


def prox_forward(h_gcn: Tensor, u: Tensor, params: ProxParams, m: Optional[Tensor] = None) -> Tensor:
    """
    z = Conv2(ReLU(Conv1(h_gcn * m))). The gate value m multiplies both the real
    and the imaginary part of each antenna. An explicit `m` overrides the gate;
    without a gate network m = 1.
    """
    _check(h_gcn, u)
    if m is None and params.gate is not None:
        m = gate_forward(h_gcn, u, params)

    gated = h_gcn if m is None else h_gcn * m
    x = _batched(complex_to_channels(gated))
    z = params.conv2(F.relu(params.conv1(x)))

    return channels_to_complex(z).reshape(h_gcn.shape)
