import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import roots_legendre

from oamturb.modes import ModeIndex, apply_aperture, lg_mode, lg_profile, receiver_basis
from oamturb.propagation import ChannelRealization, fresnel_propagate, propagate_channel
from oamturb.quantum import (
    RealizationAmplitudes,
    accumulate_density_matrix,
    compute_amplitudes,
    concurrence,
    qber,
    read_amplitudes_csv,
    write_amplitudes_csv,
)
from oamturb.turbulence import PhaseScreen, TurbulenceParams, phase_screen

from conftest import L, W0, WAVELENGTH, random_density_matrix, random_unitary2

PSI_MINUS = np.array([0, 1, 1, 0]) / math.sqrt(2)  # (|-l0,l0> + |l0,-l0>)/sqrt(2)
PHI_PLUS = np.array([1, 0, 0, 1]) / math.sqrt(2)


def received(grid, l0, screen=None, aperture=None):
    basis = receiver_basis(grid, l0, W0, WAVELENGTH, L)
    fields = []
    for l in (-l0, l0):
        f = lg_mode(grid, ModeIndex(0, l), W0, WAVELENGTH)
        if screen is None:
            f = fresnel_propagate(f, L)
        else:
            f = propagate_channel(f, ChannelRealization([screen], L))
        if aperture is not None:
            f = apply_aperture(f, aperture)
        fields.append(f)
    return fields, basis


@pytest.mark.parametrize("l0", [1, 3, 5])
def test_vacuum_amplitudes(grid, l0):
    (minus, plus), basis = received(grid, l0)
    amp = compute_amplitudes(minus, plus, l0, basis)
    assert abs(amp.a) < 1e-12 and abs(amp.d) < 1e-12
    assert abs(amp.b) >= 0.999 and abs(amp.c) >= 0.999
    assert abs(amp.b) == pytest.approx(abs(amp.c), abs=1e-12)


def test_uniform_screen_gives_global_phase(grid):
    (m0, p0), basis = received(grid, 2, aperture=0.2)
    ref = compute_amplitudes(m0, p0, 2, basis).as_array()
    c0 = 0.83
    (m1, p1), _ = received(grid, 2, PhaseScreen(grid, np.full((grid.n, grid.n), c0)), aperture=0.2)
    out = compute_amplitudes(m1, p1, 2, basis).as_array()
    np.testing.assert_allclose(out, ref * np.exp(1j * c0), atol=1e-12)


def test_rejects_degenerate_encoding(grid):
    (minus, plus), basis = received(grid, 1)
    with pytest.raises(ValueError):
        compute_amplitudes(minus, plus, 0, basis)
    with pytest.raises(ValueError):
        compute_amplitudes(minus, plus, 2, basis)


def tilted_field(x, y, l, g):
    """Analytic LG_{0,l} after a mid-path tilt screen g*x (paraxial boost of the far half)."""
    k = 2 * math.pi / WAVELENGTH
    half = L / 2
    shift = g * half / k
    u = lg_profile(x - shift, y, ModeIndex(0, l), W0, WAVELENGTH, L)
    return u * np.exp(1j * g * x - 1j * g**2 * half / (2 * k))


def quadrature_overlap(f, g, r_max=0.2, nr=400, nphi=512):
    r, wr = roots_legendre(nr)
    r = 0.5 * r_max * (r + 1)
    wr = 0.5 * r_max * wr
    phi = 2 * np.pi * np.arange(nphi) / nphi
    R, P = np.meshgrid(r, phi, indexing="ij")
    X, Y = R * np.cos(P), R * np.sin(P)
    integrand = f(X, Y) * np.conj(g(X, Y)) * R
    return np.sum(integrand * wr[:, None]) * 2 * np.pi / nphi


def test_tilt_channel_against_quadrature(grid):
    l0 = 1
    g = 2 * math.pi / (10 * W0)
    X, _ = grid.xy
    (minus, plus), basis = received(grid, l0, PhaseScreen(grid, g * X))
    amp = compute_amplitudes(minus, plus, l0, basis)

    def basis_mode(l):
        return lambda x, y: lg_profile(x, y, ModeIndex(0, l), W0, WAVELENGTH, L)

    oracle = {
        "a": quadrature_overlap(lambda x, y: tilted_field(x, y, -l0, g), basis_mode(l0)),
        "b": quadrature_overlap(lambda x, y: tilted_field(x, y, l0, g), basis_mode(l0)),
        "c": quadrature_overlap(lambda x, y: tilted_field(x, y, -l0, g), basis_mode(-l0)),
        "d": quadrature_overlap(lambda x, y: tilted_field(x, y, l0, g), basis_mode(-l0)),
    }
    assert abs(amp.a) > 1e-3 and abs(amp.d) > 1e-3
    for name, val in oracle.items():
        assert abs(getattr(amp, name) - val) < 1e-6


def test_bell_projector():
    amps = [RealizationAmplitudes(0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0)]
    dm = accumulate_density_matrix(amps)
    np.testing.assert_allclose(dm.rho, np.outer(PSI_MINUS, PSI_MINUS), atol=1e-15)
    # trace_raw carries the 1/2 of the projected biphoton state
    assert dm.trace_raw == pytest.approx(0.5)
    assert concurrence(dm) == pytest.approx(1.0, abs=1e-12)


def test_decohered_mixture():
    amps = [RealizationAmplitudes(0, 1, 0, 0), RealizationAmplitudes(0, 0, 1, 0)] * 5
    dm = accumulate_density_matrix(amps)
    np.testing.assert_allclose(dm.rho, np.diag([0, 0.5, 0.5, 0]), atol=1e-15)
    assert np.linalg.matrix_rank(dm.rho) == 2
    assert dm.trace_raw == pytest.approx(0.5)
    assert concurrence(dm) == 0


def test_vacuum_channel_trace_is_one():
    dm = accumulate_density_matrix([RealizationAmplitudes(0, 1, 1, 0)])
    assert dm.trace_raw == pytest.approx(1.0)


def test_random_ensembles_give_valid_states(rng):
    for _ in range(1000):
        n = rng.integers(1, 12)
        X = (rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))) * 0.4
        dm = accumulate_density_matrix(X)
        rho = dm.rho
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() > -1e-9
        assert dm.trace_raw > 0


def test_empty_and_dark_ensembles():
    with pytest.raises(ValueError):
        accumulate_density_matrix([])
    with pytest.raises(ValueError):
        accumulate_density_matrix([RealizationAmplitudes(0, 0, 0, 0)])
    with pytest.raises(ValueError):
        qber([RealizationAmplitudes(0, 0, 0, 0)])


def werner(p):
    return p * np.outer(PHI_PLUS, PHI_PLUS) + (1 - p) * np.eye(4) / 4


def brute_force_concurrence(rho):
    # independent route: singular values of sqrt(rho) sqrt(rho_tilde)
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    w, v = np.linalg.eigh(rho)
    sq = v @ np.diag(np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    tilde = yy @ rho.conj() @ yy
    w2, v2 = np.linalg.eigh(tilde)
    sq2 = v2 @ np.diag(np.sqrt(np.clip(w2, 0, None))) @ v2.conj().T
    s = np.linalg.svd(sq @ sq2, compute_uv=False)
    return max(0.0, s[0] - s[1] - s[2] - s[3])


def test_concurrence_simple_cases():
    assert concurrence(np.outer(PSI_MINUS, PSI_MINUS)) == pytest.approx(1, abs=1e-12)
    assert concurrence(np.eye(4) / 4) == 0
    assert concurrence(werner(0.5)) == pytest.approx(0.25, abs=1e-12)
    assert brute_force_concurrence(werner(0.5)) == pytest.approx(0.25, abs=1e-12)


def test_concurrence_matches_brute_force(rng):
    for _ in range(200):
        rho = random_density_matrix(rng, rank=int(rng.integers(1, 5)))
        assert concurrence(rho) == pytest.approx(brute_force_concurrence(rho), abs=1e-7)


def test_concurrence_rejects_non_hermitian():
    rho = np.eye(4) / 4
    rho[0, 1] = 0.1
    with pytest.raises(ValueError):
        concurrence(rho)


def test_concurrence_rejects_indefinite():
    with pytest.raises(ValueError):
        concurrence(np.diag([0.6, 0.6, -0.1, -0.1]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_concurrence_bounds_and_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, rank=int(rng.integers(1, 5)))
    c = concurrence(rho)
    assert 0 <= c <= 1
    U = np.kron(random_unitary2(rng), random_unitary2(rng))
    assert concurrence(U @ rho @ U.conj().T) == pytest.approx(c, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi))
def test_global_phase_invariance(seed, theta):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(6, 4)) + 1j * rng.normal(size=(6, 4))
    Y = X * np.exp(1j * theta * rng.integers(0, 3, size=(6, 1)))
    a, b = accumulate_density_matrix(X), accumulate_density_matrix(Y)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-12)
    assert a.trace_raw == pytest.approx(b.trace_raw)
    assert concurrence(a) == pytest.approx(concurrence(b), abs=1e-10)
    assert qber(X) == pytest.approx(qber(Y))


def test_qber_values():
    vac = [RealizationAmplitudes(0, 1, 1, 0)] * 3
    assert qber(vac) == 0
    s5, s45 = math.sqrt(0.05), math.sqrt(0.45)
    assert qber([RealizationAmplitudes(s5, s45, 1j * s45, -s5)] * 4) == pytest.approx(0.10)
    assert qber([RealizationAmplitudes(0.3, 0, 0, 0.8j)]) == 1


def test_amplitude_norm_bounds(grid):
    p = TurbulenceParams(1e-13, L, WAVELENGTH, 1)
    for seed in range(3):
        screen = phase_screen(grid, p, 0, np.random.default_rng(seed))
        (minus, plus), basis = received(grid, 3, screen, aperture=0.2)
        x = compute_amplitudes(minus, plus, 3, basis).as_array()
        p2 = np.abs(x) ** 2
        assert p2[0] + p2[2] <= 1 + 1e-6  # input -l0
        assert p2[1] + p2[3] <= 1 + 1e-6  # input +l0


def test_amplitudes_csv_round_trip(tmp_path, rng):
    X = rng.normal(size=(7, 4)) + 1j * rng.normal(size=(7, 4))
    write_amplitudes_csv(tmp_path / "a.csv", X, indices=range(10, 17))
    idx, back = read_amplitudes_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(idx, np.arange(10, 17))
    np.testing.assert_array_equal(np.array([r.as_array() for r in back]), X)
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "realization_index,re_a,im_a,re_b,im_b,re_c,im_c,re_d,im_d"
