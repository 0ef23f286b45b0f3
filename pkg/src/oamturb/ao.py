"""Adaptive-optics phase correction derived from the received Gaussian beacon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from oamturb.grid import GridSpec
from oamturb.modes import ComplexField

KINDS = ("none", "tiptilt", "ideal")
# Below this fraction of the peak beacon amplitude the phase is treated as undefined.
AMPLITUDE_FLOOR = 1e-6


class BeaconLost(ValueError):
    """The received beacon carries no power, so no correction can be derived."""


@dataclass(frozen=True)
class AOCorrection:
    grid: GridSpec
    kind: str
    phase: np.ndarray
    tilt: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown correction kind {self.kind!r}")


def no_correction(grid: GridSpec) -> AOCorrection:
    return AOCorrection(grid, "none", np.zeros((grid.n, grid.n)))


def ideal_correction(beacon_rx: ComplexField) -> AOCorrection:
    """Full-resolution phase conjugation of the received beacon."""
    amp = np.abs(beacon_rx.values)
    peak = amp.max()
    if peak == 0:
        raise BeaconLost("beacon lost: received field is identically zero")
    phase = np.where(amp > AMPLITUDE_FLOOR * peak, np.angle(beacon_rx.values), 0.0)
    return AOCorrection(beacon_rx.grid, "ideal", phase)


def focal_centroid(beacon_rx: ComplexField) -> tuple[float, float]:
    """Intensity centroid of the focal spot, in angular spatial frequency (rad/m).

    A lens maps transverse wave vector onto focal-plane position, so the
    centroid is taken directly over the field's spectrum.
    """
    grid = beacon_rx.grid
    intensity = np.abs(grid.fft(beacon_rx.values)) ** 2
    total = intensity.sum()
    if total == 0:
        raise BeaconLost("beacon lost: focal-plane intensity is zero")
    kx = float(np.sum(intensity.sum(axis=0) * grid.kx) / total)
    ky = float(np.sum(intensity.sum(axis=1) * grid.ky) / total)
    return kx, ky


def tilt_phase(grid: GridSpec, gx: float, gy: float) -> np.ndarray:
    X, Y = grid.xy
    return gx * X + gy * Y


def tiptilt_correction(beacon_rx: ComplexField, max_iter: int = 20, tol: float = 1e-9) -> AOCorrection:
    """Tip/tilt mirror setting from the beacon's focal-spot centroid.

    The first step is the raw centroid. Hard aperture edges leave spectral
    tails that wrap at the Nyquist frequency, so a non-integer tilt does not
    shift the sampled centroid exactly; the setting is refined until the
    corrected spot is centred to ``tol * dk``, as a closed tip/tilt loop would.
    """
    grid = beacon_rx.grid
    gx, gy = focal_centroid(beacon_rx)
    for _ in range(max_iter):
        corrected = beacon_rx.replace(beacon_rx.values * np.exp(-1j * tilt_phase(grid, gx, gy)))
        rx, ry = focal_centroid(corrected)
        gx, gy = gx + rx, gy + ry
        if max(abs(rx), abs(ry)) < tol * grid.dk:
            break
    return AOCorrection(grid, "tiptilt", tilt_phase(grid, gx, gy), (gx, gy))


def derive_correction(kind: str, beacon_rx: ComplexField) -> AOCorrection:
    if kind == "none":
        return no_correction(beacon_rx.grid)
    if kind == "tiptilt":
        return tiptilt_correction(beacon_rx)
    if kind == "ideal":
        return ideal_correction(beacon_rx)
    raise ValueError(f"unknown correction kind {kind!r}")


def apply_correction(f: ComplexField, c: AOCorrection) -> ComplexField:
    """Multiply ``f`` by ``exp(-i phase)``."""
    if c.grid != f.grid:
        raise ValueError("correction and field live on different grids")
    if c.kind == "none":
        return f.replace(f.values.copy())
    return f.replace(f.values * np.exp(-1j * c.phase))
