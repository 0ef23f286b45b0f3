"""Kolmogorov phase screens (FFT method plus subharmonics) and channel parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from oamturb.grid import GridSpec

# Phase PSD prefactor for the angular-frequency convention: var = int Phi d^2 kappa.
PHASE_PSD_CONST = 0.49
# Structure-function prefactor of the Kolmogorov law D(r) = 6.88 (r / r0)^(5/3).
STRUCTURE_CONST = 6.88


@dataclass(frozen=True)
class TurbulenceParams:
    cn2: float
    L: float
    wavelength: float
    n_screens: int = 4
    subharmonic_orders: int = 7

    def __post_init__(self):
        if self.cn2 < 0:
            raise ValueError(f"cn2 must be non-negative, got {self.cn2}")
        if not self.L > 0:
            raise ValueError(f"path length must be positive, got {self.L}")
        if self.n_screens < 1:
            raise ValueError(f"need at least one screen, got {self.n_screens}")
        if self.subharmonic_orders < 0:
            raise ValueError("subharmonic_orders must be >= 0")

    @property
    def slab_length(self) -> float:
        return self.L / self.n_screens

    @property
    def screen_r0(self) -> float:
        """Fried parameter of a single slab (``inf`` without turbulence)."""
        if self.cn2 == 0:
            return math.inf
        return fried_parameter(self.cn2, self.wavelength, self.slab_length)


@dataclass
class PhaseScreen:
    grid: GridSpec
    phase: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.phase.shape != (n, n):
            raise ValueError(f"screen shape {self.phase.shape} does not match grid {n}x{n}")
        if np.iscomplexobj(self.phase):
            raise TypeError("phase screens are real")


class NoTurbulence(ValueError):
    """Raised for ``cn2 == 0`` where the Fried parameter is infinite."""


def fried_parameter(cn2: float, wavelength: float, L: float) -> float:
    """Plane-wave Fried parameter ``(0.423 cn2 k^2 L)^(-3/5)``."""
    if cn2 == 0:
        raise NoTurbulence("cn2 = 0: Fried parameter is infinite")
    if not cn2 > 0 or not L > 0:
        raise ValueError(f"need cn2 > 0 and L > 0, got cn2={cn2}, L={L}")
    k = 2 * math.pi / wavelength
    return (0.423 * cn2 * k**2 * L) ** (-3 / 5)


def rytov_variance(cn2: float, wavelength: float, L: float) -> float:
    """Plane-wave Rytov variance ``1.23 cn2 k^(7/6) L^(11/6)``."""
    if cn2 < 0 or not L > 0:
        raise ValueError(f"need cn2 >= 0 and L > 0, got cn2={cn2}, L={L}")
    k = 2 * math.pi / wavelength
    return 1.23 * cn2 * k ** (7 / 6) * L ** (11 / 6)


def screen_count(cn2: float, wavelength: float, L: float, threshold: float = 0.5) -> int:
    """Smallest number of equal slabs whose individual Rytov variance is below ``threshold``."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    total = rytov_variance(cn2, wavelength, L)
    # sigma^2(L/n) = total * n^(-11/6); start from the closed-form estimate and fix rounding.
    n = max(1, math.ceil((total / threshold) ** (6 / 11)) - 1)
    while rytov_variance(cn2, wavelength, L / n) >= threshold:
        n += 1
    return n


def phase_psd(kappa: np.ndarray, r0: float) -> np.ndarray:
    """Kolmogorov phase PSD ``0.49 r0^(-5/3) kappa^(-11/3)`` (rad^2 m^2); zero at kappa = 0."""
    kappa = np.asarray(kappa, dtype=float)
    out = np.zeros_like(kappa)
    nz = kappa > 0
    out[nz] = PHASE_PSD_CONST * r0 ** (-5 / 3) * kappa[nz] ** (-11 / 3)
    return out


@cache
def ring_weights() -> tuple[float, float]:
    """Quadrature corrections for the eight cells around kappa = 0.

    Sampling the steep spectrum at a cell centre underweights the innermost
    ring. Each ring cell is rescaled by its kappa^2-weighted cell average, the
    weight that reproduces the cell's share of D(r) at separations well below
    the cell wavelength. Returns ``(edge, corner)`` factors for lattice offsets
    (1, 0) and (1, 1); they are scale-free and apply to every subharmonic level.
    """

    def factor(m, n):
        val, _ = integrate.dblquad(
            lambda y, x: (x * x + y * y) ** (-5 / 6), m - 0.5, m + 0.5, n - 0.5, n + 0.5, epsabs=1e-12
        )
        rr = m * m + n * n
        return val / rr ** (-5 / 6)

    return factor(1, 0), factor(1, 1)


def _ring_weight_array(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Per-cell variance multipliers for integer lattice offsets ``(m, n)``."""
    edge, corner = ring_weights()
    am, an = np.abs(m), np.abs(n)
    w = np.ones(np.broadcast(am, an).shape)
    w[(am + an == 1)] = edge
    w[(am == 1) & (an == 1)] = corner
    return w


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex Gaussian with unit variance ``E|c|^2 = 1``."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def phase_screen(
    grid: GridSpec, params: TurbulenceParams, slab_index: int, rng: np.random.Generator
) -> PhaseScreen:
    """Draw one Kolmogorov screen for slab ``slab_index`` of the channel.

    The slab Fried parameter uses ``L / n_screens``; subharmonics are added
    when ``params.subharmonic_orders > 0``.
    """
    if not 0 <= slab_index < params.n_screens:
        raise IndexError(f"slab_index {slab_index} outside [0, {params.n_screens})")
    if params.cn2 == 0:
        return PhaseScreen(grid, np.zeros((grid.n, grid.n)))
    idx = np.rint(np.fft.fftfreq(grid.n) * grid.n).astype(int)
    m, n = np.meshgrid(idx, idx, indexing="xy")
    var = phase_psd(np.sqrt(grid.k2), params.screen_r0) * grid.dk**2 * _ring_weight_array(m, n)
    amp = np.sqrt(var)
    coeffs = _complex_normal(rng, (grid.n, grid.n)) * amp
    # Unscaled inverse DFT: sum_kappa c_kappa exp(i kappa . x).
    field = sfft.ifft2(coeffs, norm="forward")
    screen = PhaseScreen(grid, math.sqrt(2) * field.real)
    if params.subharmonic_orders > 0:
        screen = add_subharmonics(screen, params, slab_index, rng)
    return screen


def add_subharmonics(
    screen: PhaseScreen, params: TurbulenceParams, slab_index: int, rng: np.random.Generator
) -> PhaseScreen:
    """Add low-frequency power below the grid's fundamental frequency.

    Order ``d`` contributes the eight non-zero points of a 3x3 frequency lattice
    with spacing ``dk / 3**d``.
    """
    grid = screen.grid
    if params.subharmonic_orders == 0 or params.cn2 == 0:
        return screen
    r0 = params.screen_r0
    x = grid.x
    steps = np.array([-1, 0, 1])
    m, n = np.meshgrid(steps, steps, indexing="xy")
    weights = _ring_weight_array(m, n)
    low = np.zeros((grid.n, grid.n))
    for order in range(1, params.subharmonic_orders + 1):
        dk = grid.dk / 3**order
        amp = np.sqrt(phase_psd(np.hypot(m, n) * dk, r0) * weights) * dk
        coeffs = _complex_normal(rng, (3, 3)) * amp
        ex = np.exp(1j * np.outer(steps * dk, x))  # (3, n) rows indexed by the x step
        # sum_{a,b} c[a, b] exp(i (s_b dk x + s_a dk y)); the x and y axes coincide.
        low += (ex.T @ coeffs @ ex).real
    return PhaseScreen(grid, screen.phase + math.sqrt(2) * low)


@dataclass(frozen=True)
class StructureFunctionTable:
    separations: np.ndarray
    D: np.ndarray
    stderr: np.ndarray
    n_screens: int


def structure_function(
    screens: Iterable[PhaseScreen], separations, min_screens: int = 100, axis: str = "both"
) -> StructureFunctionTable:
    """Ensemble phase structure function ``<[phi(x + r) - phi(x)]^2>``.

    Separations are rounded to whole samples; pairs run along ``axis``
    (``"x"``, ``"y"`` or ``"both"``) without wrap-around. The standard error
    is over the per-screen averages.
    """
    if axis not in ("x", "y", "both"):
        raise ValueError(f"axis must be 'x', 'y' or 'both', got {axis!r}")
    separations = np.atleast_1d(np.asarray(separations, dtype=float))
    per_screen = []
    grid = None
    for s in screens:
        if grid is None:
            grid = s.grid
            shifts = np.rint(separations / grid.dx).astype(int)
            if np.any(shifts < 1) or np.any(shifts >= grid.n):
                raise ValueError("separations must lie between one sample and the grid width")
        phi = s.phase
        row = []
        for sh in shifts:
            dx2 = np.mean((phi[:, sh:] - phi[:, :-sh]) ** 2)
            dy2 = np.mean((phi[sh:, :] - phi[:-sh, :]) ** 2)
            row.append(dx2 if axis == "x" else dy2 if axis == "y" else 0.5 * (dx2 + dy2))
        per_screen.append(row)
    if not per_screen:
        raise ValueError("empty screen ensemble")
    if len(per_screen) < min_screens:
        raise ValueError(f"need at least {min_screens} screens, got {len(per_screen)}")
    data = np.asarray(per_screen)
    m = len(data)
    stderr = data.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(data.shape[1])
    return StructureFunctionTable(shifts * grid.dx, data.mean(axis=0), stderr, m)


def kolmogorov_structure_function(r, r0: float):
    return STRUCTURE_CONST * (np.asarray(r) / r0) ** (5 / 3)


def save_screen_table(path, screen: PhaseScreen) -> None:
    """Export as plain text (``.txt``) or NumPy binary (``.npy``)."""
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, screen.phase)
    else:
        np.savetxt(path, screen.phase, fmt="%.17g")


def load_screen_table(path, grid: GridSpec) -> PhaseScreen:
    path = Path(path)
    phase = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, ndmin=2)
    return PhaseScreen(grid, phase)
