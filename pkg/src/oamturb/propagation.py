"""Paraxial angular-spectrum propagation and the split-step phase-screen channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from oamturb.grid import GridSpec
from oamturb.modes import ComplexField
from oamturb.turbulence import PhaseScreen

PLACEMENTS = ("symmetric", "end")


@lru_cache(maxsize=64)
def transfer_function(grid: GridSpec, wavelength: float, dz: float) -> np.ndarray:
    """Fresnel transfer function ``exp(-i dz kappa^2 / (2k))`` in DFT ordering."""
    k = 2 * np.pi / wavelength
    H = np.exp(-1j * dz * grid.k2 / (2 * k))
    H.flags.writeable = False
    return H


@lru_cache(maxsize=8)
def edge_absorber(grid: GridSpec, order: int = 16, fraction: float = 0.45) -> np.ndarray:
    """Super-Gaussian amplitude window that damps the outer grid margin."""
    X, Y = grid.xy
    half = fraction * grid.width
    w = np.exp(-((X / half) ** order) - (Y / half) ** order)
    w.flags.writeable = False
    return w


def _propagate_values(values: np.ndarray, grid: GridSpec, wavelength: float, dz: float) -> np.ndarray:
    if dz == 0:
        return values
    return grid.ifft(grid.fft(values) * transfer_function(grid, wavelength, dz))


def fresnel_propagate(f: ComplexField, dz: float) -> ComplexField:
    """Vacuum propagation of ``f`` over ``dz`` metres."""
    if dz < 0:
        raise ValueError(f"dz must be non-negative, got {dz}")
    return f.replace(_propagate_values(f.values, f.grid, f.wavelength, dz), z=f.z + dz)


def _check_grid(f: ComplexField, s: PhaseScreen) -> None:
    if f.grid != s.grid:
        raise ValueError("field and screen live on different grids")


def apply_screen(f: ComplexField, s: PhaseScreen) -> ComplexField:
    _check_grid(f, s)
    return f.replace(f.values * np.exp(1j * s.phase))


@dataclass
class ChannelRealization:
    """One draw of the turbulent path: ordered screens over equal slabs.

    ``placement`` is ``"symmetric"`` (each screen mid-slab) or ``"end"``
    (each screen at the far end of its slab).
    """

    screens: Sequence[PhaseScreen]
    slab_length: float
    placement: str = "symmetric"
    absorber: bool = False
    _transmittance: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.screens:
            raise ValueError("a channel needs at least one screen")
        grid = self.screens[0].grid
        if any(s.grid != grid for s in self.screens):
            raise ValueError("all screens must share one grid")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if not self.slab_length > 0:
            raise ValueError("slab_length must be positive")

    @property
    def grid(self) -> GridSpec:
        return self.screens[0].grid

    @property
    def length(self) -> float:
        return self.slab_length * len(self.screens)

    @property
    def transmittance(self) -> np.ndarray:
        """Stacked ``exp(i phase)`` of every screen, computed once."""
        if self._transmittance is None:
            self._transmittance = np.exp(1j * np.stack([s.phase for s in self.screens]))
        return self._transmittance

    def steps(self) -> list[tuple[float, int | None]]:
        """Sequence of ``(distance, screen index applied afterwards)`` operations."""
        n, dz = len(self.screens), self.slab_length
        if self.placement == "symmetric":
            out = [(dz / 2, 0)] + [(dz, i) for i in range(1, n)] + [(dz / 2, None)]
        else:
            out = [(dz, i) for i in range(n)]
        return out

    def propagate(self, values: np.ndarray, wavelength: float) -> np.ndarray:
        """Run the split-step over the trailing two axes of ``values`` (batched)."""
        grid = self.grid
        T = self.transmittance
        window = edge_absorber(grid) if self.absorber else None
        for dz, idx in self.steps():
            values = _propagate_values(values, grid, wavelength, dz)
            if window is not None:
                values = values * window
            if idx is not None:
                values = values * T[idx]
        return values


def propagate_channel(f: ComplexField, ch: ChannelRealization) -> ComplexField:
    """Carry ``f`` from the transmitter plane through every slab of ``ch``."""
    if f.grid != ch.grid:
        raise ValueError("field and channel live on different grids")
    return f.replace(ch.propagate(f.values, f.wavelength), z=f.z + ch.length)
