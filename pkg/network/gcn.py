"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
from torch import Tensor, nn

from common.errors import DomainError, ShapeError

FEATURES = 4

# temperature of an all-zero channel, whose mean energy is zero
TAU_FLOOR = 1e-6


@dataclass
class VrMask:
    """
    Soft mask in (0, 1), its readout logits and the hard decision
    (u >= 0.5, ties go to visible).
    """

    u: Tensor
    logits: Tensor
    edges: Optional[Tensor] = None

    @property
    def u_hard(self) -> Tensor:
        return (self.u >= 0.5).to(self.u.dtype)


def build_node_features(h_dun: Tensor) -> Tensor:
    """
    (N+1) x 4 node features. Row 0 is the user node (zeros), row n holds
    [Re h_n, Im h_n, |h_n|, (n-1)/(N-1)] for antenna n.
    """
    antennas = h_dun.shape[-1]
    if antennas < 2:
        raise ShapeError(f"At least two antennas are needed for position features, got {antennas}.")

    real_dtype = h_dun.real.dtype
    position = torch.linspace(0, 1, antennas, dtype=real_dtype, device=h_dun.device).expand(h_dun.shape)
    antenna_rows = torch.stack([h_dun.real, h_dun.imag, h_dun.abs(), position], dim=-1)
    user_row = torch.zeros(*h_dun.shape[:-1], 1, FEATURES, dtype=real_dtype, device=h_dun.device)

    return torch.cat([user_row, antenna_rows], dim=-2)


def node_energies(features: Tensor) -> Tensor:
    return features[..., 1:, 2]


def init_threshold(features: Tensor) -> Tensor:
    """
    Mean antenna energy, the starting value of the edge threshold.
    """
    return node_energies(features).mean(-1)


def _star(weights: Tensor) -> Tensor:
    # symmetric user-antenna star from per-antenna edge weights
    nodes = weights.shape[-1] + 1
    G = torch.zeros(*weights.shape[:-1], nodes, nodes, dtype=weights.dtype, device=weights.device)
    G[..., 0, 1:] = weights
    G[..., 1:, 0] = weights
    return G


def build_adjacency(features: Tensor, zeta, tau) -> Tuple[Tensor, Tensor]:
    """
    Hard star adjacency (edge (0, n) iff e_n > zeta) and its sigmoid relaxation
    with temperature tau, through which zeta receives gradients.
    """
    tau = torch.as_tensor(tau, dtype=features.dtype, device=features.device)
    if not torch.all(tau > 0):
        raise DomainError(f"Edge temperature must be positive, got {tau}.")

    # per-sample thresholds and temperatures broadcast over the antennas
    zeta = torch.as_tensor(zeta, dtype=features.dtype, device=features.device)
    if zeta.dim() > 0:
        zeta = zeta.unsqueeze(-1)
    if tau.dim() > 0:
        tau = tau.unsqueeze(-1)

    energies = node_energies(features)
    soft = torch.sigmoid((energies - zeta) / tau)
    hard = (energies > zeta).to(features.dtype)

    return _star(soft), _star(hard)


def normalize_adjacency(G: Tensor) -> Tensor:
    """
    D^(-1/2) (G + I) D^(-1/2) with D the row sums of G + I.
    """
    eye = torch.eye(G.shape[-1], dtype=G.dtype, device=G.device)
    G_loop = G + eye
    inv_sqrt_degree = G_loop.sum(-1).rsqrt()

    return inv_sqrt_degree.unsqueeze(-1) * G_loop * inv_sqrt_degree.unsqueeze(-2)


def gcn_propagate(X: Tensor, G_bar: Tensor, weights: Sequence[Tensor]) -> Tensor:
    """
    X_l = tanh(G_bar X_(l-1) W_l) for the hidden layers, the last layer is linear.
    """
    if X.shape[-1] != FEATURES or G_bar.shape[-1] != X.shape[-2]:
        raise ShapeError(f"Features {tuple(X.shape)} do not fit adjacency {tuple(G_bar.shape)}.")

    for index, W in enumerate(weights):
        X = G_bar @ X @ W
        if index < len(weights) - 1:
            X = torch.tanh(X)

    return X


def vr_head(X_L: Tensor, W_out: Tensor) -> VrMask:
    logits = (X_L @ W_out).squeeze(-1)[..., 1:]
    return VrMask(u=torch.sigmoid(logits), logits=logits)


def extract_channel(X_L: Tensor) -> Tensor:
    return torch.complex(X_L[..., 1:, 0], X_L[..., 1:, 1])


class GcnWeights(nn.Module):
    """
    Propagation matrices W_GCN^(1..L) (4 x 4, no bias) and the 4 x 1 VR readout.
    Propagation matrices start near the identity so that the extracted channel
    initially follows the DUN estimate.
    """

    def __init__(self, layers: int = 2, init_noise: float = 0.01) -> None:
        super().__init__()

        if layers < 1:
            raise DomainError(f"At least one propagation layer is needed, got {layers}.")

        self.propagation = nn.ParameterList(
            [nn.Parameter(torch.eye(FEATURES) + init_noise * torch.randn(FEATURES, FEATURES)) for _ in range(layers)]
        )
        self.readout = nn.Parameter(0.1 * torch.randn(FEATURES, 1))


class EdgeThreshold(nn.Module):
    """
    Learnable edge threshold, held relative to the mean antenna energy of each
    sample: the rule compares e_n against zeta * zeta0 with zeta0 from
    init_threshold. zeta starts at 1, which is the mean-energy threshold, and
    the rule does not change when a channel is rescaled. The relaxation
    temperature is `tau_factor` * zeta0.
    """

    def __init__(self, tau_factor: float = 0.1, init: float = 1.0) -> None:
        super().__init__()

        if tau_factor <= 0:
            raise DomainError(f"tau_factor must be positive, got {tau_factor}.")

        self.tau_factor = tau_factor
        self.zeta = nn.Parameter(torch.tensor(float(init)))

    def forward(self, features: Tensor) -> Tuple[Tensor, Tensor]:
        zeta0 = init_threshold(features).detach()
        tau = (self.tau_factor * zeta0).clamp_min(TAU_FLOOR)

        return self.zeta * zeta0, tau


class GraphFeedback(nn.Module):
    """
    VR recognition on the user-antenna graph: h_DUN -> (h_GCN, VR mask).
    Weights and threshold are separate submodules so they can be shared across
    unfolded layers independently.
    """

    def __init__(self, weights: GcnWeights, threshold: EdgeThreshold) -> None:
        super().__init__()

        self.weights = weights
        self.threshold = threshold

    def forward(self, h_dun: Tensor) -> Tuple[Tensor, VrMask]:
        X = build_node_features(h_dun)
        zeta, tau = self.threshold(X)
        G_soft, G_hard = build_adjacency(X, zeta, tau)

        G = G_soft if self.training else G_hard
        X_L = gcn_propagate(X, normalize_adjacency(G), list(self.weights.propagation))

        mask = vr_head(X_L, self.weights.readout)
        mask.edges = G_hard[..., 0, 1:].sum(-1).detach()

        return extract_channel(X_L), mask
