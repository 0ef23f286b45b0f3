"""Statistical error bars for the ensemble observables.

The concurrence error follows first-order propagation of independent Bloch
coefficient errors through the eigenvalues of the (non-Hermitian) Wootters
matrix, using left/right eigenvectors. A nonparametric bootstrap provides an
independent check and the errors on the trace and the error rate.

Normalisation: ``rho = (1/4) sum_ij B_ij sigma_i x sigma_j`` with
``B_ij = tr(rho sigma_i x sigma_j)``, so ``B_00 = 1`` for unit trace and the
Wootters matrix is ``(1/16) sum B_ij B_kl Gamma_ijkl``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache

import numpy as np
import scipy.linalg

from oamturb.quantum import (
    DensityMatrix4,
    QuantumMetrics,
    accumulate_density_matrix,
    as_amplitude_matrix,
    concurrence,
    concurrence_batch,
    qber,
)

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# PAULI_PRODUCTS[i, j] = sigma_i (x) sigma_j
PAULI_PRODUCTS = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)
EIGEN_FLOOR = 1e-12
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class BlochDecomposition:
    B: np.ndarray
    dB: np.ndarray

    def __post_init__(self):
        if self.B.shape != (4, 4) or self.dB.shape != (4, 4):
            raise ValueError("Bloch arrays must be 4x4")
        if np.iscomplexobj(self.B) or np.iscomplexobj(self.dB):
            raise TypeError("Bloch coefficients and errors are real")
        if np.any(self.dB < 0):
            raise ValueError("Bloch errors must be non-negative")

    def density_matrix(self) -> np.ndarray:
        return reconstruct_density_matrix(self.B)


def _rho(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=complex)


def bloch_coefficients(rho) -> BlochDecomposition:
    """``B_ij = tr(rho sigma_i x sigma_j)`` with zero errors attached."""
    m = _rho(rho)
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    B = np.einsum("ab,ijba->ij", m, PAULI_PRODUCTS)
    if np.max(np.abs(B.imag)) > 1e-12 * max(1.0, np.max(np.abs(B.real))):
        raise ValueError("Bloch coefficients have a non-negligible imaginary part")
    return BlochDecomposition(B.real.copy(), np.zeros((4, 4)))


def reconstruct_density_matrix(B: np.ndarray) -> np.ndarray:
    return 0.25 * np.einsum("ij,ijab->ab", B, PAULI_PRODUCTS)


def _single_shot_bloch(X: np.ndarray) -> np.ndarray:
    """Bloch coefficients of each realization's normalised pure state, shape (n, 4, 4)."""
    norm = np.sum(np.abs(X) ** 2, axis=1)
    keep = norm > 0
    X = X[keep] / np.sqrt(norm[keep])[:, None]
    # tr(x x^dag P) = x^dag P x
    return np.einsum("na,ijab,nb->nij", X.conj(), PAULI_PRODUCTS, X).real


def bloch_errors(ensemble) -> BlochDecomposition:
    """Bloch coefficients of the averaged state with standard errors of the mean.

    Each realization's normalised single-shot state is mapped to Bloch
    coefficients; ``dB`` is their sample standard deviation over ``sqrt(n)``.
    """
    X = as_amplitude_matrix(ensemble)
    if len(X) < 2:
        raise ValueError("need at least two realizations for error estimates")
    shots = _single_shot_bloch(X)
    n = len(shots)
    if n < 2:
        raise ValueError("fewer than two realizations reach the encoding subspace")
    dB = shots.std(axis=0, ddof=1) / math.sqrt(n)
    B = bloch_coefficients(accumulate_density_matrix(X)).B
    return BlochDecomposition(B, dB)


@cache
def _gamma_all() -> np.ndarray:
    sy = PAULI[2]
    # G2[i, k] = sigma_i sigma_y sigma_k^* sigma_y
    G2 = np.einsum("iab,bc,kcd,de->ikae", PAULI, sy, PAULI.conj(), sy)
    # Gamma[i, j, k, l] = G2[i, k] (x) G2[j, l]
    G = np.einsum("ikab,jlcd->ijklacbd", G2, G2).reshape(4, 4, 4, 4, 4, 4)
    G.flags.writeable = False
    return G


def gamma_tensor(i: int, j: int, k: int, l: int) -> np.ndarray:
    """``(sigma_i sigma_y sigma_k^* sigma_y) (x) (sigma_j sigma_y sigma_l^* sigma_y)``."""
    for idx in (i, j, k, l):
        if not 0 <= idx <= 3:
            raise IndexError(f"Pauli index {idx} out of range")
    return _gamma_all()[i, j, k, l]


def wootters_from_bloch(B: np.ndarray) -> np.ndarray:
    return np.einsum("ij,kl,ijklab->ab", B, B, _gamma_all()) / 16


def wootters_perturbation(B: np.ndarray, dB: np.ndarray) -> np.ndarray:
    """First-order change of the Wootters matrix for Bloch changes ``dB`` (signed)."""
    G = _gamma_all()
    return (np.einsum("kl,mnklab,mn->ab", B, G, dB) + np.einsum("kl,klmnab,mn->ab", B, G, dB)) / 16


def eigenvalue_shifts(R: np.ndarray, dR: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First-order eigenvalue shifts of a non-Hermitian matrix.

    Returns ``(eigenvalues, shifts)`` sorted by decreasing real part. Each shift
    is ``W^dagger dR V`` with left/right eigenvectors normalised to
    ``W^dagger V = 1``; eigenvalues closer than ``DEGENERACY_GAP`` share the
    average shift of their cluster.
    """
    lam, vl, vr = scipy.linalg.eig(R, left=True, right=True)
    order = np.argsort(-lam.real)
    lam, vl, vr = lam[order], vl[:, order], vr[:, order]
    shifts = np.empty(len(lam), dtype=complex)
    i = 0
    while i < len(lam):
        j = i + 1
        while j < len(lam) and abs(lam[j] - lam[i]) < DEGENERACY_GAP:
            j += 1
        W, V = vl[:, i:j], vr[:, i:j]
        M = W.conj().T @ V
        # Biorthonormalise within the cluster; the trace is then basis-independent.
        proj = np.linalg.pinv(M) @ (W.conj().T @ dR @ V)
        shifts[i:j] = np.trace(proj) / (j - i)
        i = j
    return lam, shifts


@dataclass(frozen=True)
class ConcurrenceErrorReport:
    dC: float
    eigenvalues: np.ndarray
    shifts: np.ndarray
    n_excluded: int
    one_sided: bool


def concurrence_error_report(bloch: BlochDecomposition) -> ConcurrenceErrorReport:
    """Propagate ``bloch.dB`` to the concurrence with diagnostics.

    Eigenvalues below ``EIGEN_FLOOR`` are left out of the sum (their
    ``1/sqrt(lambda)`` weight diverges) and counted in ``n_excluded``. When the
    concurrence is exactly zero the derivative is undefined; the same sum is
    returned and ``one_sided`` is set.
    """
    B, dB = bloch.B, bloch.dB
    R = wootters_from_bloch(B)
    dR = wootters_perturbation(B, dB)
    lam, shifts = eigenvalue_shifts(R, dR)
    lam_r = lam.real
    keep = lam_r > EIGEN_FLOOR
    terms = np.abs(shifts[keep]) / (2 * np.sqrt(lam_r[keep]))
    dC = float(np.sqrt(np.sum(terms**2)))
    one_sided = concurrence(bloch.density_matrix()) == 0.0
    return ConcurrenceErrorReport(dC, lam_r, shifts, int(np.sum(~keep)), one_sided)


def concurrence_error(bloch: BlochDecomposition) -> float:
    return concurrence_error_report(bloch).dC


def bootstrap_error(ensemble, n_resamples: int, rng: np.random.Generator) -> tuple[float, float, float]:
    """Bootstrap standard errors ``(dC, dN, dR)`` from resampled realizations."""
    X = as_amplitude_matrix(ensemble)
    n = len(X)
    if n == 0:
        raise ValueError("empty ensemble")
    if n_resamples < 100:
        raise ValueError("use at least 100 resamples")
    outer = (X[:, :, None] * X.conj()[:, None, :]).reshape(n, 16)
    C, N, R = [], [], []
    chunk = 256
    for start in range(0, n_resamples, chunk):
        m = min(chunk, n_resamples - start)
        idx = rng.integers(0, n, size=(m, n))
        counts = np.zeros((m, n))
        np.add.at(counts, (np.repeat(np.arange(m), n), idx.ravel()), 1.0)
        S = (counts @ outer / n).reshape(m, 4, 4)
        total = np.trace(S, axis1=1, axis2=2).real
        ok = total > 0
        rhos = S[ok] / total[ok][:, None, None]
        C.append(concurrence_batch(rhos))
        N.append(total / 2)
        R.append((S[ok, 0, 0].real + S[ok, 3, 3].real) / total[ok])
    C, N, R = (np.concatenate(v) for v in (C, N, R))
    return float(C.std(ddof=1)), float(N.std(ddof=1)), float(R.std(ddof=1))


def evaluate_metrics(ensemble, rng: np.random.Generator, n_resamples: int = 500) -> QuantumMetrics:
    """Concurrence, trace and error rate of an ensemble with their error bars."""
    X = as_amplitude_matrix(ensemble)
    dm = accumulate_density_matrix(X)
    dC = concurrence_error(bloch_errors(X))
    _, dN, dR = bootstrap_error(X, n_resamples, rng)
    return QuantumMetrics(concurrence(dm), dC, dm.trace_raw, dN, qber(X), dR, len(X))
