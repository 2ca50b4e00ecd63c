"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
from enum import IntEnum

import numpy as np

from channel.entity import ArrayConfig, PilotBlock, PilotConfig
from common.errors import DomainError, ShapeError
from common.seed import SeedLike, as_rng, rng_for

SPLITS = ("train", "val", "test")


class NoiseStream(IntEnum):
    TRAIN = 1
    EVAL = 2


def make_combiner(cfg: ArrayConfig, pcfg: PilotConfig, seed: SeedLike) -> np.ndarray:
    """
    Row-stack of the P analog combiners A_p, each N_RF x N with random phase
    shifter settings of modulus 1/sqrt(N).
    """
    rng = as_rng(seed)
    phases = rng.uniform(0, 2 * math.pi, size=(pcfg.observations(cfg), cfg.antennas))

    return np.exp(1j * phases) / math.sqrt(cfg.antennas)


def split_key(split: str) -> int:
    try:
        return SPLITS.index(split)
    except ValueError:
        raise DomainError(f"Unknown split '{split}', expected one of {', '.join(SPLITS)}.")


def combiner_for_sample(cfg: ArrayConfig, pcfg: PilotConfig, index: int, split: str = "test") -> np.ndarray:
    """
    Combiner of sample `index` of `split`: redrawn per sample by default, shared
    by all samples of all splits with `fixed_combiner`. Rows are drawn in
    order, so the combiner for fewer pilots is a prefix of the one for more
    pilots.
    """
    if pcfg.fixed_combiner:
        return make_combiner(cfg, pcfg, rng_for(pcfg.combiner_seed, 0))

    return make_combiner(cfg, pcfg, rng_for(pcfg.combiner_seed, 1, split_key(split), index))


def observe(h: np.ndarray, A: np.ndarray, sigma2: float, noise_seed: SeedLike, rf_chains: int) -> PilotBlock:
    """
    Per slot p: y_p = A_p (h + n_p) with n_p ~ CN(0, sigma2 I_N) drawn at the
    antennas, stacked over all slots.
    """
    if sigma2 < 0:
        raise DomainError(f"Noise variance must not be negative, got {sigma2}.")

    rows, antennas = A.shape
    if h.shape != (antennas,):
        raise ShapeError(f"Channel of shape {h.shape} does not match combiner of shape {A.shape}.")

    if rows % rf_chains != 0:
        raise ShapeError(f"{rows} combiner rows are not a multiple of {rf_chains} RF chains.")

    y = A @ h
    if sigma2 > 0:
        pilots = rows // rf_chains
        rng = as_rng(noise_seed)
        # drawn slot by slot so that fewer pilots see a prefix of the same noise
        draws = rng.standard_normal((pilots, 2, antennas))
        noise = math.sqrt(sigma2 / 2) * (draws[:, 0] + 1j * draws[:, 1])
        y = y + np.einsum("prn,pn->pr", A.reshape(pilots, rf_chains, antennas), noise).reshape(rows)

    return PilotBlock(A=A, y=y, sigma2=float(sigma2))


def sigma2_for_snr(h: np.ndarray, A: np.ndarray, snr_db: float) -> float:
    """
    Noise variance for which the average received signal power per combined
    output, |A h|^2 / (N_RF P), sits `snr_db` above it. An infinite SNR is the
    noiseless sentinel and yields 0.
    """
    signal = A @ h
    if not np.any(signal):
        raise DomainError("Zero received signal, the SNR is undefined.")

    if math.isinf(snr_db) and snr_db > 0:
        return 0.0

    signal_power = float(np.vdot(signal, signal).real) / signal.shape[0]
    return signal_power / 10 ** (snr_db / 10)


def observe_sample(
    cfg: ArrayConfig,
    pcfg: PilotConfig,
    h: np.ndarray,
    index: int,
    snr_db: float,
    noise_key: int = 0,
    split: str = "test",
    stream: NoiseStream = NoiseStream.EVAL,
) -> PilotBlock:
    """
    Pilot block of sample `index` of `split` at `snr_db`. `noise_key` selects
    an independent noise realization within `stream` (the epoch for training,
    the sweep seed for evaluation). Training and evaluation never share noise.
    """
    A = combiner_for_sample(cfg, pcfg, index, split)
    sigma2 = sigma2_for_snr(h, A, snr_db)
    seed = rng_for(pcfg.noise_seed, int(stream), split_key(split), noise_key, index)

    return observe(h, A, sigma2, seed, cfg.rf_chains)
