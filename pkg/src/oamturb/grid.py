"""Square transverse sampling grid shared by every field operation.

Fourier transforms use the unitary ("ortho") pair so that the discrete
Parseval relation holds without extra factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class GridSpec:
    """Square grid of ``n`` x ``n`` cell-centred samples spanning ``width`` metres.

    Array axis 0 is ``y`` and axis 1 is ``x``. Frequency axes follow the
    unshifted DFT ordering returned by :func:`numpy.fft.fftfreq`.
    """

    n: int
    width: float
    dx: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dx", self.width / self.n)

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n / 2 + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.x

    @property
    def dk(self) -> float:
        """Angular spatial-frequency spacing (rad/m)."""
        return 2 * np.pi / self.width

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def ky(self) -> np.ndarray:
        return self.kx

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(X, Y)`` coordinate arrays of shape (n, n)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    @cached_property
    def r2(self) -> np.ndarray:
        X, Y = self.xy
        return X**2 + Y**2

    @cached_property
    def k2(self) -> np.ndarray:
        KX, KY = np.meshgrid(self.kx, self.ky, indexing="xy")
        return KX**2 + KY**2

    @property
    def cell_area(self) -> float:
        return self.dx * self.dx

    def fft(self, values: np.ndarray) -> np.ndarray:
        """Unitary forward 2-D DFT over the last two axes."""
        return sfft.fft2(values, axes=(-2, -1), norm="ortho")

    def ifft(self, values: np.ndarray) -> np.ndarray:
        """Unitary inverse 2-D DFT over the last two axes."""
        return sfft.ifft2(values, axes=(-2, -1), norm="ortho")


def make_grid(n: int, width: float) -> GridSpec:
    """Build a :class:`GridSpec`; ``n`` must be even and at least 2, ``width`` positive."""
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"grid size must be an integer, got {n!r}")
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"grid size must be even and >= 2, got {n}")
    if not width > 0:
        raise ValueError(f"grid width must be positive, got {width}")
    return GridSpec(n, float(width))
