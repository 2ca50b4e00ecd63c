"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import io
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import torch
import yaml
from torch import nn

from common.errors import ManifestError
from common.io import atomic_write
from training.pruning import PruneMask, count_params

FORMAT_VERSION = "vrnet-checkpoint/1"


@dataclass
class Checkpoint:
    """
    Everything needed to rebuild and resume a network: the resolved config,
    named parameter arrays, the prune mask and the training position.
    """

    config: dict
    config_hash: str
    data_hash: str
    state: Dict[str, torch.Tensor]
    epoch: int = 0
    mask: Optional[PruneMask] = None
    optimizer_state: Optional[dict] = None
    torch_rng: Optional[torch.Tensor] = None
    manifest: dict = field(default_factory=dict)


def save_checkpoint(
    path: str,
    model: nn.Module,
    config: dict,
    config_hash: str,
    data_hash: str,
    epoch: int = 0,
    mask: Optional[PruneMask] = None,
    optimizer: Optional[torch.optim.Optimizer] = None,
) -> None:
    arrays = {}
    shapes = {}
    for name, value in model.state_dict().items():
        array = value.detach().cpu().numpy()
        shapes[name] = {"shape": list(array.shape), "dtype": str(array.dtype)}
        arrays[f"param/{name}"] = array.reshape(-1)

    if mask is not None:
        for name, keep in mask.masks.items():
            arrays[f"mask/{name}"] = keep.cpu().numpy().astype(np.uint8).reshape(-1)

    if optimizer is not None:
        buffer = io.BytesIO()
        torch.save(optimizer.state_dict(), buffer)
        arrays["optimizer"] = np.frombuffer(buffer.getvalue(), dtype=np.uint8)

    arrays["rng/torch"] = torch.get_rng_state().numpy()

    census = count_params(model, mask)
    manifest = {
        "format": FORMAT_VERSION,
        "config_hash": config_hash,
        "data_hash": data_hash,
        "master_seed": config.get("seed"),
        "epoch": epoch,
        "parameters": shapes,
        "prune": None if mask is None else {"threshold": mask.threshold, "sparsity": round(mask.sparsity, 6)},
        "census": {"total": census.total, "nonzero": census.nonzero},
        "config": config,
    }
    arrays["manifest"] = np.frombuffer(yaml.safe_dump(manifest, sort_keys=False).encode(), dtype=np.uint8)

    with atomic_write(path) as stream:
        np.savez(stream, **arrays)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with np.load(path, allow_pickle=False) as archive:
            files = {name: archive[name] for name in archive.files}
    except (OSError, ValueError) as err:
        raise ManifestError(f"Cannot read checkpoint '{path}': {err}")

    if "manifest" not in files:
        raise ManifestError(f"Checkpoint '{path}' has no manifest.")

    manifest = yaml.safe_load(files["manifest"].tobytes().decode())
    if manifest.get("format") != FORMAT_VERSION:
        raise ManifestError(f"Unsupported checkpoint format '{manifest.get('format')}'.")

    state = {}
    for name, meta in manifest["parameters"].items():
        if (flat := files.get(f"param/{name}")) is None:
            raise ManifestError(f"Checkpoint '{path}' misses parameter '{name}'.")
        state[name] = torch.from_numpy(flat.astype(meta["dtype"]).reshape(meta["shape"]).copy())

    mask = None
    if manifest.get("prune") is not None:
        masks = {}
        for key, flat in files.items():
            if key.startswith("mask/"):
                name = key[len("mask/") :]
                masks[name] = torch.from_numpy(flat.astype(bool).reshape(manifest["parameters"][name]["shape"]).copy())
        mask = PruneMask(masks=masks, threshold=float(manifest["prune"]["threshold"]))

    optimizer_state = None
    if "optimizer" in files:
        optimizer_state = torch.load(io.BytesIO(files["optimizer"].tobytes()), weights_only=True)

    return Checkpoint(
        config=manifest["config"],
        config_hash=manifest["config_hash"],
        data_hash=manifest["data_hash"],
        state=state,
        epoch=int(manifest["epoch"]),
        mask=mask,
        optimizer_state=optimizer_state,
        torch_rng=torch.from_numpy(files["rng/torch"].copy()) if "rng/torch" in files else None,
        manifest=manifest,
    )
