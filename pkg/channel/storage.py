"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from channel.entity import ArrayConfig, ChannelSample, PilotBlock, PilotConfig, UserGeometry
from channel.measurement import combiner_for_sample, observe_sample
from channel.model import expand_mask
from common.errors import ManifestError
from common.io import atomic_write, file_checksum

FORMAT_VERSION = "vrnet-dataset/1"


@dataclass
class DatasetManifest:
    split: str
    count: int
    seed: int
    config_hash: str
    array: dict
    fields: List[Tuple[str, int]]
    checksum: str
    observations: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "split": self.split,
            "count": self.count,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "array": self.array,
            "record": {"dtype": "<f4", "complex": "interleaved", "fields": [list(f) for f in self.fields]},
            "checksum": self.checksum,
            "observations": self.observations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        if data.get("format") != FORMAT_VERSION:
            raise ManifestError(f"Unsupported dataset format '{data.get('format')}'.")

        return cls(
            split=data["split"],
            count=int(data["count"]),
            seed=int(data["seed"]),
            config_hash=data["config_hash"],
            array=data["array"],
            fields=[(name, int(width)) for name, width in data["record"]["fields"]],
            checksum=data["checksum"],
            observations=data.get("observations"),
        )


class RecordFormat:
    """
    Flat little-endian float32 records. Complex values are stored as
    interleaved (real, imag) pairs with the antenna index varying fastest.
    """

    DTYPE = np.dtype("<f4")

    def __init__(self, cfg: ArrayConfig):
        self._cfg = cfg

    @property
    def channel_fields(self) -> List[Tuple[str, int]]:
        return [("h", 2 * self._cfg.antennas), ("u_sub", self._cfg.subarrays), ("theta", 1), ("r", 1), ("gamma", 2)]

    def observation_fields(self, pcfg: PilotConfig) -> List[Tuple[str, int]]:
        return [("y", 2 * pcfg.observations(self._cfg)), ("sigma2", 1)]

    @staticmethod
    def width(fields: Sequence[Tuple[str, int]]) -> int:
        return sum(width for _, width in fields)

    @staticmethod
    def interleave(values: np.ndarray) -> np.ndarray:
        return np.stack([values.real, values.imag], axis=-1).reshape(*values.shape[:-1], -1)

    @staticmethod
    def deinterleave(values: np.ndarray) -> np.ndarray:
        pairs = values.astype(np.float64).reshape(*values.shape[:-1], -1, 2)
        return pairs[..., 0] + 1j * pairs[..., 1]


class DatasetWriter(RecordFormat):
    def write_channels(self, path: str, split: str, samples: Sequence[ChannelSample], seed: int, config_hash: str):
        records = np.zeros((len(samples), self.width(self.channel_fields)), dtype=self.DTYPE)
        n, s = 2 * self._cfg.antennas, self._cfg.subarrays

        for index, sample in enumerate(samples):
            records[index, :n] = self.interleave(sample.h)
            records[index, n : n + s] = sample.u_sub
            records[index, n + s] = sample.geometry.theta
            records[index, n + s + 1] = sample.geometry.r
            records[index, n + s + 2 :] = [sample.gamma.real, sample.gamma.imag]

        with atomic_write(path) as stream:
            stream.write(records.tobytes())

        manifest = DatasetManifest(
            split=split,
            count=len(samples),
            seed=seed,
            config_hash=config_hash,
            array=_array_dict(self._cfg),
            fields=self.channel_fields,
            checksum=file_checksum(path),
        )
        self.write_manifest(path, manifest)

        return manifest

    def write_observations(
        self, path: str, manifest: DatasetManifest, samples: Sequence[ChannelSample], pcfg: PilotConfig
    ) -> DatasetManifest:
        """
        Append the pilot observations at the configured SNR as a sidecar record
        file. Combiners are not stored: they are regenerated from the seeds
        recorded in the manifest.
        """
        blocks = [
            observe_sample(self._cfg, pcfg, sample.h, index, pcfg.snr_db, split=manifest.split)
            for index, sample in enumerate(samples)
        ]

        records = np.zeros((len(samples), self.width(self.observation_fields(pcfg))), dtype=self.DTYPE)
        for index, block in enumerate(blocks):
            records[index, :-1] = self.interleave(block.y)
            records[index, -1] = block.sigma2

        obs_path = observation_path(path)
        with atomic_write(obs_path) as stream:
            stream.write(records.tobytes())

        manifest.observations = {
            "file": os.path.basename(obs_path),
            "pilots": pcfg.pilots,
            "snr_db": pcfg.snr_db,
            "combiner_policy": "fixed" if pcfg.fixed_combiner else "per-sample",
            "combiner_seed": pcfg.combiner_seed,
            "noise_seed": pcfg.noise_seed,
            "fields": [list(f) for f in self.observation_fields(pcfg)],
            "checksum": file_checksum(obs_path),
        }
        self.write_manifest(path, manifest)

        return manifest

    @staticmethod
    def write_manifest(path: str, manifest: DatasetManifest) -> None:
        with atomic_write(manifest_path(path), "w") as stream:
            yaml.safe_dump(manifest.to_dict(), stream, sort_keys=False)


class DatasetReader(RecordFormat):
    def read_manifest(self, path: str) -> DatasetManifest:
        try:
            with open(manifest_path(path), "r") as stream:
                manifest = DatasetManifest.from_dict(yaml.safe_load(stream))
        except (OSError, KeyError, TypeError) as err:
            raise ManifestError(f"Cannot read manifest of '{path}': {err}")

        if manifest.array != _array_dict(self._cfg):
            raise ManifestError(f"Dataset '{path}' was generated for array {manifest.array}.")

        return manifest

    def read_channels(self, path: str, config_hash: Optional[str] = None) -> List[ChannelSample]:
        manifest = self.read_manifest(path)
        if config_hash is not None and manifest.config_hash != config_hash:
            raise ManifestError(f"Dataset '{path}' was generated with a different configuration.")

        if file_checksum(path) != manifest.checksum:
            raise ManifestError(f"Checksum mismatch for '{path}'.")

        records = self._load(path, manifest.count, self.width(manifest.fields))
        n, s = 2 * self._cfg.antennas, self._cfg.subarrays

        samples = []
        for record in records:
            u_sub = record[n : n + s].astype(np.float64)
            u = expand_mask(self._cfg, u_sub)
            h = self.deinterleave(record[:n])
            h[u == 0] = 0
            samples.append(
                ChannelSample(
                    h=h,
                    u_sub=u_sub,
                    u=u,
                    geometry=UserGeometry(theta=float(record[n + s]), r=float(record[n + s + 1])),
                    gamma=complex(float(record[n + s + 2]), float(record[n + s + 3])),
                )
            )

        return samples

    def read_observations(self, path: str, pcfg: PilotConfig) -> List[PilotBlock]:
        manifest = self.read_manifest(path)
        if (obs := manifest.observations) is None:
            raise ManifestError(f"Dataset '{path}' has no observation records.")

        policy = "fixed" if pcfg.fixed_combiner else "per-sample"
        if obs["pilots"] != pcfg.pilots or obs["combiner_seed"] != pcfg.combiner_seed or obs["combiner_policy"] != policy:
            raise ManifestError(f"Observations in '{path}' were recorded with a different pilot setup.")

        obs_path = observation_path(path)
        if file_checksum(obs_path) != obs["checksum"]:
            raise ManifestError(f"Checksum mismatch for '{obs_path}'.")

        records = self._load(obs_path, manifest.count, self.width(self.observation_fields(pcfg)))

        return [
            PilotBlock(
                A=combiner_for_sample(self._cfg, pcfg, index, manifest.split),
                y=self.deinterleave(record[:-1]),
                sigma2=float(record[-1]),
            )
            for index, record in enumerate(records)
        ]

    def _load(self, path: str, count: int, width: int) -> np.ndarray:
        data = np.fromfile(path, dtype=self.DTYPE)
        if data.size != count * width:
            raise ManifestError(f"'{path}' holds {data.size} values, expected {count} records of {width}.")

        return data.reshape(count, width)


def manifest_path(path: str) -> str:
    return f"{path}.yaml"


def observation_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return f"{root}.obs.bin"


def split_path(directory: str, split: str) -> str:
    return os.path.join(directory, f"{split}.bin")


def _array_dict(cfg: ArrayConfig) -> dict:
    return {
        "antennas": cfg.antennas,
        "subarrays": cfg.subarrays,
        "rf_chains": cfg.rf_chains,
        "carrier_frequency": float(cfg.carrier_frequency),
        "paths": cfg.paths,
    }
