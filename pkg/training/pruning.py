"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import torch
from tabulate import tabulate
from torch import Tensor, nn

from common.errors import DomainError, ShapeError
from network.gcn import GcnWeights

MODULE_GROUPS = ["dun", "gcn", "threshold", "gate", "prox"]


def prunable_parameters(model: nn.Module) -> "OrderedDict[str, nn.Parameter]":
    """
    Convolution kernels (proximal and gate networks) and GCN propagation
    matrices. Biases, step sizes, penalties, thresholds and the VR readout are
    never pruned.
    """
    prunable = OrderedDict()
    seen = set()

    for module_name, module in model.named_modules():
        if isinstance(module, nn.Conv1d):
            candidates = [(f"{module_name}.weight", module.weight)]
        elif isinstance(module, GcnWeights):
            candidates = [(f"{module_name}.propagation.{i}", p) for i, p in enumerate(module.propagation)]
        else:
            continue

        for name, parameter in candidates:
            # shared modules are listed once
            if id(parameter) not in seen:
                seen.add(id(parameter))
                prunable[name] = parameter

    return prunable


def prune_threshold(model: nn.Module, rho: float) -> float:
    """
    The rho-quantile (linear interpolation between order statistics) of the
    absolute values of all prunable weights, gathered across all layers.
    """
    if not 0 <= rho < 1:
        raise DomainError(f"Pruning rate must lie in [0, 1), got {rho}.")

    parameters = prunable_parameters(model)
    if not parameters:
        raise DomainError("The model has no prunable weights.")

    magnitudes = np.concatenate([p.detach().abs().flatten().cpu().double().numpy() for p in parameters.values()])

    return float(np.quantile(magnitudes, rho))


@dataclass
class PruneMask:
    """
    Binary keep-masks aligned to the prunable weights and the threshold q they
    were derived from.
    """

    masks: Dict[str, Tensor]
    threshold: float

    def apply(self, model: nn.Module) -> None:
        parameters = self._aligned(model)
        with torch.no_grad():
            for name, mask in self.masks.items():
                parameters[name].mul_(mask.to(parameters[name].dtype))

    def mask_gradients(self, model: nn.Module) -> None:
        parameters = self._aligned(model)
        for name, mask in self.masks.items():
            if (grad := parameters[name].grad) is not None:
                grad.mul_(mask.to(grad.dtype))

    @property
    def kept(self) -> int:
        return int(sum(int(m.sum()) for m in self.masks.values()))

    @property
    def total(self) -> int:
        return int(sum(m.numel() for m in self.masks.values()))

    @property
    def sparsity(self) -> float:
        return 1 - self.kept / max(self.total, 1)

    def _aligned(self, model: nn.Module) -> "OrderedDict[str, nn.Parameter]":
        parameters = prunable_parameters(model)
        if parameters.keys() != self.masks.keys():
            raise ShapeError("Prune mask does not match the model's prunable weights.")

        for name, mask in self.masks.items():
            if mask.shape != parameters[name].shape:
                raise ShapeError(f"Prune mask for '{name}' has shape {tuple(mask.shape)}.")

        return parameters

    @classmethod
    def keep_all(cls, model: nn.Module) -> "PruneMask":
        return cls({name: torch.ones_like(p, dtype=torch.bool) for name, p in prunable_parameters(model).items()}, 0.0)


def apply_prune(model: nn.Module, q: float) -> PruneMask:
    """
    Zero every prunable weight with |w| < q and return the keep-mask.
    """
    masks = {}
    with torch.no_grad():
        for name, parameter in prunable_parameters(model).items():
            keep = parameter.abs() >= q
            parameter.mul_(keep.to(parameter.dtype))
            masks[name] = keep.detach().clone()

    return PruneMask(masks=masks, threshold=float(q))


def module_group(name: str) -> str:
    if ".gate." in name:
        return "gate"
    if ".threshold." in name:
        return "threshold"
    if ".graph." in name:
        return "gcn"
    if ".prox." in name:
        return "prox"

    return "dun"


@dataclass
class CensusRow:
    module: str
    total: int = 0
    nonzero: int = 0
    prunable: int = 0


@dataclass
class ParameterCensus:
    rows: List[CensusRow] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(row.total for row in self.rows)

    @property
    def nonzero(self) -> int:
        return sum(row.nonzero for row in self.rows)

    def as_records(self) -> List[dict]:
        records = [row.__dict__.copy() for row in self.rows]
        records.append({"module": "total", "total": self.total, "nonzero": self.nonzero, "prunable": self.prunable})
        return records

    @property
    def prunable(self) -> int:
        return sum(row.prunable for row in self.rows)

    def __str__(self) -> str:
        return tabulate(
            [[r["module"], r["total"], r["nonzero"], r["prunable"]] for r in self.as_records()],
            headers=["module", "params", "nonzero", "prunable"],
            tablefmt="pretty",
            colalign=("left", "right", "right", "right"),
        )


def count_params(model: nn.Module, mask: Optional[PruneMask] = None) -> ParameterCensus:
    """
    Total, nonzero and prunable parameter counts per module group. Shared
    parameters are counted once. Nonzero counts honour `mask` when given.
    """
    rows = OrderedDict((group, CensusRow(group)) for group in MODULE_GROUPS)
    prunable = prunable_parameters(model)
    prunable_ids = {id(p) for p in prunable.values()}
    masked = {}
    if mask is not None:
        masked = {id(prunable[name]): m for name, m in mask.masks.items() if name in prunable}

    for name, parameter in model.named_parameters():
        row = rows[module_group(f".{name}")]
        row.total += parameter.numel()
        if id(parameter) in masked:
            row.nonzero += int((masked[id(parameter)] & (parameter.detach() != 0)).sum())
        else:
            row.nonzero += int((parameter.detach() != 0).sum())
        if id(parameter) in prunable_ids:
            row.prunable += parameter.numel()

    return ParameterCensus([row for row in rows.values() if row.total > 0])
