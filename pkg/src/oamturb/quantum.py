"""Biphoton density matrix, concurrence, trace and crosstalk error rate.

Basis order of every 4x4 matrix: ``|l0,l0>, |-l0,l0>, |l0,-l0>, |-l0,-l0>``
(Alice's label first). A realization contributes the unnormalised projected
state ``(a, b, c, d) / sqrt(2)`` in that basis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from oamturb.modes import ComplexField, ReceiverBasis, apply_aperture

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)
HERMITIAN_TOL = 1e-10
EIGEN_NEG_TOL = 1e-9
RANK_FLOOR = 1e-13
AMPLITUDE_COLUMNS = ["realization_index", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "re_d", "im_d"]


@dataclass(frozen=True)
class RealizationAmplitudes:
    """Overlap amplitudes of one turbulence realization.

    ``b`` and ``c`` are survival amplitudes (``+l0 -> +l0``, ``-l0 -> -l0``);
    ``a`` (``-l0 -> +l0``) and ``d`` (``+l0 -> -l0``) are crosstalk.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=complex)

    @classmethod
    def from_array(cls, x) -> "RealizationAmplitudes":
        a, b, c, d = (complex(v) for v in x)
        return cls(a, b, c, d)


@dataclass(frozen=True)
class DensityMatrix4:
    rho: np.ndarray
    trace_raw: float

    def __post_init__(self):
        if self.rho.shape != (4, 4):
            raise ValueError("density matrix must be 4x4")


@dataclass(frozen=True)
class QuantumMetrics:
    C: float
    dC: float
    N: float
    dN: float
    R: float
    dR: float
    n_realizations: int


def as_amplitude_matrix(ensemble) -> np.ndarray:
    """Stack an ensemble into an ``(n, 4)`` complex array ordered ``a, b, c, d``."""
    if isinstance(ensemble, np.ndarray):
        X = np.asarray(ensemble, dtype=complex)
    else:
        X = np.array([r.as_array() for r in ensemble], dtype=complex).reshape(-1, 4)
    if X.ndim != 2 or X.shape[1] != 4:
        raise ValueError(f"expected an (n, 4) amplitude array, got shape {X.shape}")
    return X


def compute_amplitudes(
    psi_minus: ComplexField,
    psi_plus: ComplexField,
    l0: int,
    basis: ReceiverBasis,
    aperture_diameter: float | None = None,
) -> RealizationAmplitudes:
    """Project the received fields for inputs ``-l0`` and ``+l0`` onto the receiver basis.

    The fields should already be clipped by the receiver aperture; passing
    ``aperture_diameter`` applies the (idempotent) stop here as well.
    """
    if l0 == 0:
        raise ValueError("l0 = 0 gives a degenerate encoding")
    if basis.l0 != abs(l0):
        raise ValueError(f"receiver basis is for l0={basis.l0}, not {abs(l0)}")
    for f in (psi_minus, psi_plus):
        if f.grid != basis.plus.grid:
            raise ValueError("fields and receiver basis live on different grids")
    if aperture_diameter is not None:
        psi_minus = apply_aperture(psi_minus, aperture_diameter)
        psi_plus = apply_aperture(psi_plus, aperture_diameter)
    X = overlap_amplitudes(psi_minus.values, psi_plus.values, basis)
    return RealizationAmplitudes.from_array(X)


def overlap_amplitudes(minus: np.ndarray, plus: np.ndarray, basis: ReceiverBasis) -> np.ndarray:
    """Batched ``(a, b, c, d)`` for field arrays with matching leading dimensions."""
    dA = basis.plus.grid.cell_area
    up = basis.plus.values.conj()
    dn = basis.minus.values.conj()

    def ov(f, m):
        return np.sum(f * m, axis=(-2, -1)) * dA

    return np.stack([ov(minus, up), ov(plus, up), ov(minus, dn), ov(plus, dn)], axis=-1)


def _second_moments(X: np.ndarray) -> np.ndarray:
    """``<x x^dagger>`` over realizations, summed in index order."""
    return np.mean(X[:, :, None] * X.conj()[:, None, :], axis=0)


def accumulate_density_matrix(ensemble) -> DensityMatrix4:
    """Disorder-averaged, projected and renormalised biphoton state.

    ``trace_raw`` is the post-selection probability
    ``<|a|^2 + |b|^2 + |c|^2 + |d|^2> / 2``, equal to 1 for a lossless,
    crosstalk-free channel.
    """
    X = as_amplitude_matrix(ensemble)
    if len(X) == 0:
        raise ValueError("empty ensemble")
    S = _second_moments(X)
    total = float(np.real(np.trace(S)))
    if total <= 0:
        raise ValueError("ensemble has zero weight in the encoding subspace (N = 0)")
    rho = S / total
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix4(rho, total / 2)


def _matrix(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=complex)


def wootters_matrix(rho) -> np.ndarray:
    """``rho (sy x sy) rho* (sy x sy)``."""
    m = _matrix(rho)
    return m @ YY @ m.conj() @ YY


def wootters_eigenvalues(rho) -> np.ndarray:
    """Eigenvalues of the Wootters matrix in decreasing order, clamped at zero."""
    m = _matrix(rho)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    lam = np.sort(np.linalg.eigvals(wootters_matrix(m)).real)[::-1]
    if lam[-1] < -EIGEN_NEG_TOL:
        raise ValueError(f"Wootters matrix has negative eigenvalue {lam[-1]:.3g}; input is not PSD")
    return np.clip(lam, 0, None)


def _root_factor(rhos: np.ndarray) -> np.ndarray:
    """Factor ``rho = V V^dagger`` with eigenvalues below ``RANK_FLOOR * tr`` set to zero.

    Concurrence grows like the square root of small eigenvalues of rho, so rounding
    noise of 1e-16 would otherwise leak in at the 1e-8 level.
    """
    w, v = np.linalg.eigh(rhos)
    tr = w.sum(axis=-1, keepdims=True)
    w = np.where(w < RANK_FLOOR * tr, 0.0, w)
    return v * np.sqrt(w)[..., None, :]


def _root_wootters(rhos: np.ndarray) -> np.ndarray:
    """Square roots of the Wootters eigenvalues, decreasing.

    They are the singular values of ``tau = V^T (sy x sy) V`` for any factor
    ``rho = V V^dagger``, which avoids square roots of eigenvalues of R.
    """
    V = _root_factor(rhos)
    tau = np.swapaxes(V, -1, -2) @ YY @ V
    return np.linalg.svd(tau, compute_uv=False)


def concurrence(rho) -> float:
    wootters_eigenvalues(rho)  # validation only
    s = _root_wootters(_matrix(rho))
    return float(max(s[0] - s[1] - s[2] - s[3], 0.0))


def concurrence_batch(rhos: np.ndarray) -> np.ndarray:
    """Concurrence of a stack of ``(m, 4, 4)`` density matrices (no validation)."""
    s = _root_wootters(np.asarray(rhos, dtype=complex))
    return np.maximum(s[:, 0] - s[:, 1] - s[:, 2] - s[:, 3], 0.0)


def qber(ensemble) -> float:
    """Crosstalk detection error rate ``<|a|^2 + |d|^2> / <|a|^2 + |b|^2 + |c|^2 + |d|^2>``."""
    X = as_amplitude_matrix(ensemble)
    if len(X) == 0:
        raise ValueError("empty ensemble")
    p = np.abs(X) ** 2
    total = p.sum(axis=1).mean()
    if total == 0:
        raise ValueError("ensemble has zero weight in the encoding subspace (N = 0)")
    return float((p[:, 0] + p[:, 3]).mean() / total)


def write_amplitudes_csv(path, ensemble, indices: Sequence[int] | None = None) -> None:
    X = as_amplitude_matrix(ensemble)
    if indices is None:
        indices = range(len(X))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AMPLITUDE_COLUMNS)
        for i, x in zip(indices, X):
            w.writerow([int(i)] + [repr(float(v)) for z in x for v in (z.real, z.imag)])


def read_amplitudes_csv(path) -> tuple[np.ndarray, list[RealizationAmplitudes]]:
    """Return realization indices and the ensemble stored by :func:`write_amplitudes_csv`."""
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != AMPLITUDE_COLUMNS:
            raise ValueError(f"unexpected amplitude CSV header {header}")
        idx, rows = [], []
        for line in r:
            idx.append(int(line[0]))
            v = [float(t) for t in line[1:]]
            rows.append(RealizationAmplitudes(*(complex(v[2 * j], v[2 * j + 1]) for j in range(4))))
    return np.array(idx, dtype=int), rows
