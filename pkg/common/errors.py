"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""


class VrNetError(Exception):
    prefix = "Error"

    def __init__(self, message: str) -> None:
        super().__init__(f"{self.prefix}: {message}")


class DomainError(VrNetError, ValueError):
    """
    Numerically invalid input, e.g. a non-positive distance, a negative noise
    variance or an all-zero channel.
    """

    prefix = "Domain error"


class ShapeError(VrNetError, ValueError):
    prefix = "Shape error"


class ManifestError(VrNetError):
    """
    Dataset or checkpoint metadata does not match the data or the config.
    """

    prefix = "Manifest error"


class DivergenceError(VrNetError):
    prefix = "Training diverged"
