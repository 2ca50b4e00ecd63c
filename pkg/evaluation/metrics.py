"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from typing import Union

import numpy as np

from common.errors import DomainError, ShapeError

DB_FLOOR = -120.0
Z_95 = 1.96

ArrayLike = Union[np.ndarray, list]


def _pair(estimate: ArrayLike, truth: ArrayLike):
    estimate, truth = np.asarray(estimate), np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ShapeError(f"Estimate has shape {estimate.shape}, truth has {truth.shape}.")

    return np.atleast_2d(estimate), np.atleast_2d(truth)


def nmse_ratios(h_hat: ArrayLike, h: ArrayLike) -> np.ndarray:
    """
    Per-sample |h_hat - h|^2 / |h|^2 over the last axis.
    """
    h_hat, h = _pair(h_hat, h)
    energy = np.sum(np.abs(h) ** 2, axis=-1)
    if np.any(energy == 0):
        raise DomainError("NMSE is undefined for an all-zero channel.")

    return np.sum(np.abs(h_hat - h) ** 2, axis=-1) / energy


def nmse(h_hat: ArrayLike, h: ArrayLike) -> float:
    return float(np.mean(nmse_ratios(h_hat, h)))


def nmse_ratio_of_means(h_hat: ArrayLike, h: ArrayLike) -> float:
    h_hat, h = _pair(h_hat, h)
    energy = float(np.sum(np.abs(h) ** 2))
    if energy == 0:
        raise DomainError("NMSE is undefined for an all-zero channel.")

    return float(np.sum(np.abs(h_hat - h) ** 2)) / energy


def to_db(value: float, floor: float = DB_FLOOR) -> float:
    if not value > 0:
        return floor

    return max(10 * math.log10(value), floor)


def from_db(value_db: float) -> float:
    return 10 ** (value_db / 10)


def sdr_per_sample(u_hat: ArrayLike, u_true: ArrayLike) -> np.ndarray:
    u_hat, u_true = _pair(u_hat, u_true)
    if u_hat.shape[-1] == 0:
        raise ShapeError("Masks must not be empty.")

    return 1 - np.mean(u_hat.astype(bool) != u_true.astype(bool), axis=-1)


def sdr(u_hat: ArrayLike, u_true: ArrayLike) -> float:
    """
    1 - Hamming(u_hat, u_true) / length, averaged over the batch.
    """
    return float(np.mean(sdr_per_sample(u_hat, u_true)))


def confidence_half_width(values: ArrayLike) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0

    return Z_95 * float(np.std(values, ddof=1)) / math.sqrt(values.size)


def nmse_db_half_width(ratios: ArrayLike) -> float:
    """
    Upper dB half-width of the mean NMSE under the normal approximation.
    """
    ratios = np.asarray(ratios, dtype=float)
    mean = float(np.mean(ratios)) if ratios.size else 0.0
    if mean <= 0:
        return 0.0

    return 10 * math.log10(1 + confidence_half_width(ratios) / mean)
