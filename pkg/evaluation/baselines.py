"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import torch

from common.errors import DomainError, ShapeError
from network.vrnet import VrNet

logger = logging.getLogger(__name__)

RIDGE_FACTOR = 1e-3


@dataclass
class MethodOutput:
    h: np.ndarray
    u: Optional[np.ndarray] = None
    flagged: int = 0


# (y [B, M], A [B, M, N], u_true [B, N]) -> MethodOutput
Method = Callable[[np.ndarray, np.ndarray, np.ndarray], MethodOutput]


def baseline_ls_oracle(y: np.ndarray, A: np.ndarray, u_true: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Least squares restricted to the true VR support, zeros elsewhere. A
    rank-deficient restricted system falls back to a ridge solve and is
    flagged.
    """
    support = np.flatnonzero(np.asarray(u_true) > 0.5)
    if support.size == 0:
        raise DomainError("The VR support is empty.")

    if A.ndim != 2 or A.shape[0] != y.shape[0]:
        raise ShapeError(f"Combiner of shape {A.shape} does not match an observation of length {y.shape[0]}.")

    restricted = A[:, support]
    h_hat = np.zeros(A.shape[1], dtype=np.result_type(A, y))

    if np.linalg.matrix_rank(restricted) == support.size:
        h_hat[support] = np.linalg.lstsq(restricted, y, rcond=None)[0]
        return h_hat, False

    gram = restricted.conj().T @ restricted
    ridge = RIDGE_FACTOR * max(np.trace(gram).real / support.size, np.finfo(float).tiny)
    h_hat[support] = np.linalg.solve(gram + ridge * np.eye(support.size), restricted.conj().T @ y)

    return h_hat, True


def baseline_ls_blind(y: np.ndarray, A: np.ndarray) -> np.ndarray:
    """
    Minimum-norm least squares over all antennas.
    """
    return np.linalg.pinv(A) @ y


def ls_oracle_method(y: np.ndarray, A: np.ndarray, u_true: np.ndarray) -> MethodOutput:
    estimates, flagged = [], 0
    for y_b, A_b, u_b in zip(y, A, u_true):
        h_hat, regularized = baseline_ls_oracle(y_b, A_b, u_b)
        estimates.append(h_hat)
        flagged += regularized

    return MethodOutput(h=np.stack(estimates), u=None, flagged=flagged)


def ls_blind_method(y: np.ndarray, A: np.ndarray, u_true: np.ndarray) -> MethodOutput:
    return MethodOutput(h=np.stack([baseline_ls_blind(y_b, A_b) for y_b, A_b in zip(y, A)]))


def oracle_method(truth: np.ndarray) -> Method:
    """
    Returns the true channel, whatever the observation. Anchors the NMSE floor.
    """

    def method(y: np.ndarray, A: np.ndarray, u_true: np.ndarray) -> MethodOutput:
        return MethodOutput(h=truth.copy(), u=np.asarray(u_true).copy())

    return method


class NetworkMethod:
    def __init__(self, model: VrNet, dtype: torch.dtype = torch.complex64) -> None:
        self.model = model.eval()
        self.dtype = dtype

    def __call__(self, y: np.ndarray, A: np.ndarray, u_true: np.ndarray) -> MethodOutput:
        with torch.no_grad():
            output = self.model(torch.from_numpy(y).to(self.dtype), torch.from_numpy(A).to(self.dtype))

        h_hat = output.h.numpy().astype(np.complex128)
        u_hat = None if output.u is None else output.u_hard.numpy()

        return MethodOutput(h=h_hat, u=u_hat)


def baseline_mdisr(model: VrNet, y: np.ndarray, A: np.ndarray) -> np.ndarray:
    """
    Channel estimate of the ablation network (W = I, ungated ResCNN, no VR output).
    """
    if model.has_vr_output:
        raise DomainError("The ablation baseline needs a network built without VR feedback.")

    batched = y.ndim == 1
    y, A = (y[None], A[None]) if batched else (y, A)
    h_hat = NetworkMethod(model)(y, A, np.ones(A.shape[::2], dtype=np.float32)).h

    return h_hat[0] if batched else h_hat
