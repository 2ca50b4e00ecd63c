"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from common.errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0

# sampling ranges of the user geometry
THETA_LIMIT = math.sqrt(3) / 2
DISTANCE_RANGE = (4.0, 88.0)


@dataclass(frozen=True)
class ArrayConfig:
    """
    Static geometry of the base station ULA with its hybrid front end.
    """

    antennas: int = 64
    subarrays: int = 8
    rf_chains: int = 4
    carrier_frequency: float = 100e9
    paths: int = 1

    def __post_init__(self):
        for name in ["antennas", "subarrays", "rf_chains", "paths"]:
            if getattr(self, name) < 1:
                raise DomainError(f"'{name}' must be at least 1, got {getattr(self, name)}.")

        if self.antennas % self.subarrays != 0:
            raise DomainError(f"{self.subarrays} subarrays do not divide {self.antennas} antennas.")

        if self.rf_chains > self.antennas:
            raise DomainError(f"{self.rf_chains} RF chains exceed {self.antennas} antennas.")

        if self.carrier_frequency <= 0:
            raise DomainError("Carrier frequency must be positive.")

    @property
    def antennas_per_subarray(self) -> int:
        return self.antennas // self.subarrays

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def spacing(self) -> float:
        return self.wavelength / 2

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def index_offsets(self) -> np.ndarray:
        # delta_n = (2n - N - 1) / 2 for the 1-based antenna index n
        n = np.arange(1, self.antennas + 1, dtype=np.float64)
        return (2 * n - self.antennas - 1) / 2


@dataclass(frozen=True)
class UserGeometry:
    """
    Angle parameter theta (dimensionless, used directly inside the spherical
    distance term) and distance r in meters. Sampled geometries lie within
    THETA_LIMIT and DISTANCE_RANGE; hand-built ones only need r > 0.
    """

    theta: float
    r: float

    @property
    def in_sampling_range(self) -> bool:
        return -THETA_LIMIT < self.theta < THETA_LIMIT and DISTANCE_RANGE[0] < self.r < DISTANCE_RANGE[1]


@dataclass(frozen=True)
class PathComponent:
    geometry: UserGeometry
    gamma: complex
    u_sub: np.ndarray


@dataclass(frozen=True, eq=False)
class ChannelSample:
    """
    Ground truth of one user: channel h, subarray mask u_sub, antenna mask u,
    geometry and path gain of the dominant path. Further paths of a multipath
    sample are kept in `extra_paths`; u is then the union of all path masks.
    """

    h: np.ndarray
    u_sub: np.ndarray
    u: np.ndarray
    geometry: UserGeometry
    gamma: complex
    extra_paths: Tuple[PathComponent, ...] = field(default=())

    @property
    def antennas(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class PilotConfig:
    """
    Pilot schedule: P slots with x_p = 1, a target SNR and the seeds the
    combiners and the noise are drawn from.
    """

    pilots: int = 16
    snr_db: float = 10.0
    combiner_seed: int = 7
    noise_seed: int = 13
    fixed_combiner: bool = False

    def __post_init__(self):
        if self.pilots < 1:
            raise DomainError(f"At least one pilot slot is needed, got {self.pilots}.")

    def observations(self, cfg: ArrayConfig) -> int:
        return cfg.rf_chains * self.pilots


@dataclass(frozen=True, eq=False)
class PilotBlock:
    """
    Stacked combiner A (N_RF*P x N), stacked noisy observation y and the
    per-antenna noise variance that was used.
    """

    A: np.ndarray
    y: np.ndarray
    sigma2: float

    @property
    def observations(self) -> int:
        return self.y.shape[0]
