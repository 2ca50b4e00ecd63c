"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

import torch
from torch import Tensor, nn

from common.errors import DomainError
from network.dun import DunLayerParams, LayerIterates, dun_step, init_estimate, mdisr_step
from network.gcn import EdgeThreshold, GcnWeights, GraphFeedback
from network.prox import ProxParams


class Variant(Enum):
    """
    dugc: VR-weighted DUN with GCN feedback and gated proximal network.
    mdisr: ablation without VR feedback (W = I, no GCN, ungated ResCNN).
    """

    DUGC = "dugc"
    MDISR = "mdisr"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ArchitectureConfig:
    variant: Variant = Variant.DUGC
    layers: int = 5
    gcn_layers: int = 2
    channels: int = 32
    kernel_size: int = 7
    beta: float = 10.0
    tau_factor: float = 0.1
    share_gcn: bool = False
    share_threshold: bool = False
    gamma_init: float = 0.2
    mu_init: float = 0.3

    def __post_init__(self):
        if self.layers < 1:
            raise DomainError(f"At least one unfolded layer is needed, got {self.layers}.")

        if self.tau_factor <= 0:
            raise DomainError(f"tau_factor must be positive, got {self.tau_factor}.")

    def for_ablation(self) -> "ArchitectureConfig":
        return replace(self, variant=Variant.MDISR, beta=0.0)


@dataclass
class VrNetOutput:
    h: Tensor
    u: Optional[Tensor]
    u_logits: Optional[Tensor]
    iterates: List[LayerIterates] = field(default_factory=list)
    edges: List[Tensor] = field(default_factory=list)

    @property
    def u_hard(self) -> Optional[Tensor]:
        return None if self.u is None else (self.u >= 0.5).to(self.u.dtype)


class UnfoldedLayer(nn.Module):
    def __init__(self, dun: DunLayerParams, prox: ProxParams, graph: Optional[GraphFeedback]) -> None:
        super().__init__()

        self.dun = dun
        self.prox = prox
        self.graph = graph


class VrNet(nn.Module):
    """
    T unfolded layers, each following h_DUN -> (h_GCN, u) -> z -> next h_DUN.
    Inputs are normalized by an observation-derived scale and the estimate is
    scaled back, so the layers always see unit-scale channels.
    """

    def __init__(self, arch: ArchitectureConfig) -> None:
        super().__init__()

        self.arch = arch
        feedback = arch.variant == Variant.DUGC
        beta = arch.beta if feedback else 0.0

        shared_weights = GcnWeights(arch.gcn_layers) if feedback and arch.share_gcn else None
        shared_threshold = EdgeThreshold(arch.tau_factor) if feedback and arch.share_threshold else None

        layers = []
        for _ in range(arch.layers):
            graph = None
            if feedback:
                graph = GraphFeedback(
                    shared_weights or GcnWeights(arch.gcn_layers),
                    shared_threshold or EdgeThreshold(arch.tau_factor),
                )

            layers.append(
                UnfoldedLayer(
                    dun=DunLayerParams(arch.gamma_init, arch.mu_init, beta),
                    prox=ProxParams(arch.channels, arch.kernel_size, gated=feedback),
                    graph=graph,
                )
            )

        self.layers = nn.ModuleList(layers)

    @property
    def has_vr_output(self) -> bool:
        return self.arch.variant == Variant.DUGC

    @staticmethod
    def observation_scale(y: Tensor, A: Tensor) -> Tensor:
        rows, antennas = A.shape[-2], A.shape[-1]
        norm = torch.linalg.vector_norm(y, dim=-1) * math.sqrt(antennas / rows)

        return norm.clamp_min(torch.finfo(norm.dtype).tiny).unsqueeze(-1)

    def forward(self, y: Tensor, A: Tensor, trace: bool = False) -> VrNetOutput:
        scale = self.observation_scale(y, A)
        y = y / scale

        h = init_estimate(y, A)
        output = VrNetOutput(h=h, u=None, u_logits=None)

        for layer in self.layers:
            if layer.graph is not None:
                h_gcn, mask = layer.graph(h)
                u, logits = mask.u, mask.logits
                z = layer.prox(h_gcn, u)
                h_next = dun_step(h, y, A, z, u, layer.dun)
                output.edges.append(mask.edges)
            else:
                h_gcn, u, logits = h, torch.ones_like(h.real), None
                z = layer.prox(h_gcn, u)
                h_next = mdisr_step(h, y, A, z, layer.dun)

            if trace:
                output.iterates.append(
                    LayerIterates(
                        h_dun=h.detach() * scale,
                        h_gcn=h_gcn.detach() * scale,
                        u=u.detach(),
                        z=z.detach() * scale,
                    )
                )

            h = h_next
            if self.has_vr_output:
                output.u, output.u_logits = u, logits

        output.h = h * scale

        return output
