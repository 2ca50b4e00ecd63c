"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from typing import List, Tuple

import numpy as np

from channel.entity import (
    DISTANCE_RANGE,
    THETA_LIMIT,
    ArrayConfig,
    ChannelSample,
    PathComponent,
    UserGeometry,
)
from common.errors import DomainError
from common.seed import SeedLike, as_rng


def steering_vector(cfg: ArrayConfig, geo: UserGeometry) -> np.ndarray:
    """
    Near-field (spherical wave) array response, normalized to unit norm.
    """
    if not geo.r > 0:
        raise DomainError(f"Distance must be positive, got {geo.r}.")

    delta_d = cfg.index_offsets * cfg.spacing
    excess = delta_d**2 - 2 * geo.r * delta_d * geo.theta
    r_n_squared = geo.r**2 + excess
    if np.any(r_n_squared <= 0):
        raise DomainError(f"Geometry theta={geo.theta}, r={geo.r} puts the user onto the array.")

    # r_n - r written without cancellation for r >> aperture
    path_difference = excess / (np.sqrt(r_n_squared) + geo.r)

    return np.exp(-1j * cfg.wavenumber * path_difference) / math.sqrt(cfg.antennas)


def far_field_steering_vector(cfg: ArrayConfig, theta: float) -> np.ndarray:
    return np.exp(1j * cfg.wavenumber * cfg.index_offsets * cfg.spacing * theta) / math.sqrt(cfg.antennas)


def path_gain(cfg: ArrayConfig, r: float) -> complex:
    return complex(
        math.sqrt(cfg.antennas) * cfg.wavelength / (4 * math.pi * r) * np.exp(-2j * math.pi * r / cfg.wavelength)
    )


def sample_geometry(seed: SeedLike) -> UserGeometry:
    rng = as_rng(seed)

    # open intervals: uniform() is half open, redraw the (measure zero) lower edge
    while (theta := rng.uniform(-THETA_LIMIT, THETA_LIMIT)) == -THETA_LIMIT:
        pass
    while (r := rng.uniform(*DISTANCE_RANGE)) == DISTANCE_RANGE[0]:
        pass

    return UserGeometry(theta=float(theta), r=float(r))


def expand_mask(cfg: ArrayConfig, u_sub: np.ndarray) -> np.ndarray:
    return np.kron(u_sub, np.ones(cfg.antennas_per_subarray)).astype(np.float64)


def sample_vr_mask(cfg: ArrayConfig, seed: SeedLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Subarray mask with independent fair coin flips, redrawn until at least
    one subarray is visible, and its antenna-level expansion.
    """
    rng = as_rng(seed)

    while not (u_sub := rng.integers(0, 2, size=cfg.subarrays).astype(np.float64)).any():
        pass

    return u_sub, expand_mask(cfg, u_sub)


def channel_vector(cfg: ArrayConfig, geo: UserGeometry, u: np.ndarray) -> ChannelSample:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (cfg.antennas,):
        raise DomainError(f"Mask must have {cfg.antennas} entries, got shape {u.shape}.")

    if not u.any():
        raise DomainError("All-zero visibility mask, the sample must be redrawn.")

    gamma = path_gain(cfg, geo.r)
    h = gamma * steering_vector(cfg, geo) * u

    # exact zeros outside the visibility region
    h[u == 0] = 0

    return ChannelSample(
        h=h,
        u_sub=u[:: cfg.antennas_per_subarray].copy(),
        u=u,
        geometry=geo,
        gamma=gamma,
    )


def sample_channel(cfg: ArrayConfig, seed: SeedLike) -> ChannelSample:
    rng = as_rng(seed)
    components: List[PathComponent] = []

    for _ in range(cfg.paths):
        geometry = sample_geometry(rng)
        u_sub, _ = sample_vr_mask(cfg, rng)
        components.append(PathComponent(geometry=geometry, gamma=path_gain(cfg, geometry.r), u_sub=u_sub))

    dominant = components[0]
    sample = channel_vector(cfg, dominant.geometry, expand_mask(cfg, dominant.u_sub))
    if cfg.paths == 1:
        return sample

    h = sample.h.copy()
    u_sub = dominant.u_sub.copy()
    for component in components[1:]:
        h += channel_vector(cfg, component.geometry, expand_mask(cfg, component.u_sub)).h
        u_sub = np.maximum(u_sub, component.u_sub)

    return ChannelSample(
        h=h,
        u_sub=u_sub,
        u=expand_mask(cfg, u_sub),
        geometry=dominant.geometry,
        gamma=dominant.gamma,
        extra_paths=tuple(components[1:]),
    )


def generate_dataset(cfg: ArrayConfig, count: int, seed: int) -> List[ChannelSample]:
    """
    `count` independent samples. Sample i is drawn from its own seed sequence
    (seed, i), so content does not depend on generation order.
    """
    if count < 1:
        raise DomainError(f"A dataset needs at least one sample, got {count}.")

    return [sample_channel(cfg, np.random.SeedSequence(seed, spawn_key=(index,))) for index in range(count)]
