"""Laguerre-Gauss modes, the Gaussian beacon, and the discrete overlap machinery.

Mode convention (the plane-wave carrier ``exp(ikz)`` is dropped everywhere)::

    LG_pl(r, phi, z) ~ (sqrt(2) r / w)^|l| L_p^|l|(2 r^2 / w^2) exp(-r^2 / w^2)
                       * exp(i l phi) * exp(i k r^2 / (2 R)) * exp(-i (2p + |l| + 1) psi)

with ``w``, ``R`` and the Gouy phase ``psi`` the vacuum Gaussian-beam parameters
of the waist ``w0`` at plane ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import eval_genlaguerre

from oamturb.grid import GridSpec


@dataclass(frozen=True)
class ModeIndex:
    p: int
    l: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"radial index must be >= 0, got {self.p}")


@dataclass
class ComplexField:
    """Complex scalar field sampled on ``grid`` at plane ``z``."""

    grid: GridSpec
    values: np.ndarray
    z: float
    wavelength: float

    def __post_init__(self):
        n = self.grid.n
        if self.values.shape != (n, n):
            raise ValueError(f"field shape {self.values.shape} does not match grid {n}x{n}")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    def power(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)

    def replace(self, values: np.ndarray, z: float | None = None) -> "ComplexField":
        return ComplexField(self.grid, values, self.z if z is None else z, self.wavelength)


class SamplingError(ValueError):
    """A mode is under-resolved by the grid or overflows it."""


def rayleigh_range(w0: float, wavelength: float) -> float:
    return math.pi * w0**2 / wavelength


def beam_radius(w0: float, wavelength: float, z: float) -> float:
    return w0 * math.sqrt(1 + (z / rayleigh_range(w0, wavelength)) ** 2)


def curvature_radius(w0: float, wavelength: float, z: float) -> float:
    """Wavefront radius of curvature; ``inf`` at the waist."""
    if z == 0:
        return math.inf
    zr = rayleigh_range(w0, wavelength)
    return z * (1 + (zr / z) ** 2)


def gouy_phase(w0: float, wavelength: float, z: float) -> float:
    return math.atan(z / rayleigh_range(w0, wavelength))


def lg_profile(x, y, mode: ModeIndex, w0: float, wavelength: float, z: float = 0.0):
    """Analytically normalised LG mode evaluated at arbitrary points ``(x, y)``."""
    p, l = mode.p, mode.l
    al = abs(l)
    w = beam_radius(w0, wavelength, z)
    R = curvature_radius(w0, wavelength, z)
    k = 2 * np.pi / wavelength
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x**2 + y**2
    rho2 = 2 * r2 / w**2
    norm = math.sqrt(2 * math.factorial(p) / (math.pi * math.factorial(p + al))) / w
    amp = norm * rho2 ** (al / 2) * eval_genlaguerre(p, al, rho2) * np.exp(-r2 / w**2)
    phase = l * np.arctan2(y, x) - (2 * p + al + 1) * gouy_phase(w0, wavelength, z)
    if math.isfinite(R):
        phase = phase + k * r2 / (2 * R)
    return amp * np.exp(1j * phase)


def check_sampling(grid: GridSpec, l: int, w: float) -> None:
    if w < 4 * grid.dx:
        raise SamplingError(
            f"beam radius {w:.4g} m is under-resolved: needs >= 4 samples (dx = {grid.dx:.4g} m)"
        )
    extent = w * math.sqrt(abs(l) + 1)
    if extent > grid.width / 4:
        raise SamplingError(
            f"mode extent w*sqrt(|l|+1) = {extent:.4g} m exceeds a quarter of the grid width ({grid.width / 4:.4g} m)"
        )


def lg_mode(grid: GridSpec, mode: ModeIndex, w0: float, wavelength: float, z: float = 0.0) -> ComplexField:
    """Sample ``LG_pl`` at plane ``z`` and normalise it to unit discrete power."""
    if not w0 > 0:
        raise ValueError(f"waist must be positive, got {w0}")
    check_sampling(grid, mode.l, beam_radius(w0, wavelength, z))
    X, Y = grid.xy
    values = lg_profile(X, Y, mode, w0, wavelength, z)
    values /= math.sqrt(np.sum(np.abs(values) ** 2) * grid.cell_area)
    return ComplexField(grid, values, z, wavelength)


def gaussian_beacon(grid: GridSpec, w_beacon: float, wavelength: float) -> ComplexField:
    """Fundamental Gaussian reference beam at its waist plane."""
    return lg_mode(grid, ModeIndex(0, 0), w_beacon, wavelength, 0.0)


def _check_same_grid(a: ComplexField, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """Discrete overlap ``sum(a * conj(b)) * dx^2``."""
    _check_same_grid(a, b)
    return complex(np.vdot(b.values, a.values) * a.grid.cell_area)


def aperture_mask(grid: GridSpec, diameter: float) -> np.ndarray:
    return grid.r2 <= (diameter / 2) ** 2


def apply_aperture(f: ComplexField, diameter: float) -> ComplexField:
    """Hard circular stop: zero everything outside ``diameter / 2``."""
    if not diameter >= 0:
        raise ValueError(f"aperture diameter must be non-negative, got {diameter}")
    return f.replace(np.where(aperture_mask(f.grid, diameter), f.values, 0))


@dataclass(frozen=True)
class ReceiverBasis:
    """Projection modes ``LG_{0,+l0}`` and ``LG_{0,-l0}`` at the receiver plane."""

    l0: int
    plus: ComplexField
    minus: ComplexField


def receiver_basis(grid: GridSpec, l0: int, w0: float, wavelength: float, z: float) -> ReceiverBasis:
    """Vacuum-evolved transmit modes at plane ``z``, used as the detection basis."""
    if l0 == 0:
        raise ValueError("l0 = 0 gives a degenerate encoding")
    return ReceiverBasis(
        abs(l0),
        lg_mode(grid, ModeIndex(0, abs(l0)), w0, wavelength, z),
        lg_mode(grid, ModeIndex(0, -abs(l0)), w0, wavelength, z),
    )


def save_field_table(path, f: ComplexField) -> None:
    """Write ``f`` as an n-row text table of interleaved real/imag pairs (row-major)."""
    n = f.grid.n
    table = np.empty((n, 2 * n))
    table[:, 0::2] = f.values.real
    table[:, 1::2] = f.values.imag
    np.savetxt(Path(path), table, fmt="%.17g")


def load_field_table(path, grid: GridSpec, z: float, wavelength: float) -> ComplexField:
    table = np.loadtxt(Path(path), ndmin=2)
    return ComplexField(grid, table[:, 0::2] + 1j * table[:, 1::2], z, wavelength)
