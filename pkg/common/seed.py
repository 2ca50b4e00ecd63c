"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def derive_seed(master: int, *keys: int) -> int:
    """
    Stable 32 bit sub-seed for the given key path. The result only depends on
    `master` and `keys`, never on the order in which seeds are requested.
    """
    return int(np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys)).generate_state(1)[0])


def rng_for(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys)))


def as_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)
