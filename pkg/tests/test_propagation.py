import numpy as np
import pytest

from oamturb.ao import focal_centroid
from oamturb.modes import ModeIndex, inner_product, lg_mode
from oamturb.propagation import ChannelRealization, apply_screen, fresnel_propagate, propagate_channel
from oamturb.turbulence import PhaseScreen, TurbulenceParams, phase_screen

from conftest import L, W0, WAVELENGTH


def random_channel(grid, n_screens, seed=0, cn2=5e-14, placement="symmetric"):
    rng = np.random.default_rng(seed)
    p = TurbulenceParams(cn2, L, WAVELENGTH, n_screens)
    return ChannelRealization([phase_screen(grid, p, i, rng) for i in range(n_screens)], L / n_screens, placement)


def zero_channel(grid, n_screens):
    return ChannelRealization([PhaseScreen(grid, np.zeros((grid.n, grid.n)))] * n_screens, L / n_screens)


def test_zero_distance_is_identity(grid):
    f = lg_mode(grid, ModeIndex(0, 2), W0, WAVELENGTH)
    np.testing.assert_array_equal(fresnel_propagate(f, 0.0).values, f.values)


def test_negative_distance_rejected(grid):
    with pytest.raises(ValueError):
        fresnel_propagate(lg_mode(grid, ModeIndex(0, 0), W0, WAVELENGTH), -1.0)


def test_gaussian_matches_analytic_beam(grid):
    f = fresnel_propagate(lg_mode(grid, ModeIndex(0, 0), W0, WAVELENGTH), L)
    target = lg_mode(grid, ModeIndex(0, 0), W0, WAVELENGTH, L)
    assert f.z == L
    assert abs(inner_product(f, target)) ** 2 >= 0.999


def test_power_conserved(grid):
    f = lg_mode(grid, ModeIndex(0, 3), W0, WAVELENGTH)
    assert fresnel_propagate(f, L).power() == pytest.approx(f.power(), abs=1e-10)
    ch = random_channel(grid, 4)
    assert propagate_channel(f, ch).power() == pytest.approx(f.power(), abs=1e-10)


def test_apply_screen(grid):
    f = lg_mode(grid, ModeIndex(0, 1), W0, WAVELENGTH)
    zero = PhaseScreen(grid, np.zeros((grid.n, grid.n)))
    np.testing.assert_array_equal(apply_screen(f, zero).values, f.values)
    const = PhaseScreen(grid, np.full((grid.n, grid.n), 0.7))
    g = apply_screen(f, const)
    np.testing.assert_allclose(g.values, f.values * np.exp(0.7j), atol=1e-15)
    m = lg_mode(grid, ModeIndex(0, 1), W0, WAVELENGTH, 0.0)
    assert abs(inner_product(g, m)) == pytest.approx(abs(inner_product(f, m)), abs=1e-14)


def test_tilt_screen_displaces_far_field(grid):
    gx = 50.0
    X, _ = grid.xy
    f = lg_mode(grid, ModeIndex(0, 0), 2.45 * W0, WAVELENGTH)
    tilted = apply_screen(f, PhaseScreen(grid, gx * X))
    kx, ky = focal_centroid(tilted)
    assert kx == pytest.approx(gx, abs=1.0)
    assert abs(ky) < 1e-9


def test_zero_screens_equal_vacuum(grid):
    f = lg_mode(grid, ModeIndex(0, 2), W0, WAVELENGTH)
    out = propagate_channel(f, zero_channel(grid, 4))
    ref = fresnel_propagate(f, L)
    np.testing.assert_allclose(out.values, ref.values, atol=1e-12)
    assert out.z == pytest.approx(L)


def test_single_screen_composition(grid):
    ch = random_channel(grid, 1, seed=3)
    f = lg_mode(grid, ModeIndex(0, 1), W0, WAVELENGTH)
    step = fresnel_propagate(apply_screen(fresnel_propagate(f, L / 2), ch.screens[0]), L / 2)
    np.testing.assert_allclose(propagate_channel(f, ch).values, step.values, atol=1e-12)


def test_end_placement_composition(grid):
    ch = random_channel(grid, 2, seed=4, placement="end")
    f = lg_mode(grid, ModeIndex(0, 1), W0, WAVELENGTH)
    step = f
    for s in ch.screens:
        step = apply_screen(fresnel_propagate(step, L / 2), s)
    np.testing.assert_allclose(propagate_channel(f, ch).values, step.values, atol=1e-12)


def test_linearity_and_unitarity(grid, rng):
    ch = random_channel(grid, 4, seed=9)
    f = lg_mode(grid, ModeIndex(0, 1), W0, WAVELENGTH)
    g = lg_mode(grid, ModeIndex(0, -3), W0, WAVELENGTH)
    alpha, beta = 0.4 + 0.2j, -1.1j
    lhs = propagate_channel(f.replace(alpha * f.values + beta * g.values), ch).values
    rhs = alpha * propagate_channel(f, ch).values + beta * propagate_channel(g, ch).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))

    h = f.replace(rng.normal(size=f.values.shape) + 1j * rng.normal(size=f.values.shape))
    before = inner_product(h, g)
    after = inner_product(propagate_channel(h, ch), propagate_channel(g, ch))
    assert abs(after - before) <= 1e-9 * abs(before)


def test_vacuum_energy_stays_central(grid):
    f = fresnel_propagate(lg_mode(grid, ModeIndex(0, 0), W0, WAVELENGTH), L)
    X, Y = grid.xy
    inner = (np.abs(X) <= grid.width / 4) & (np.abs(Y) <= grid.width / 4)
    frac = np.sum(np.abs(f.values[inner]) ** 2) / np.sum(np.abs(f.values) ** 2)
    assert frac >= 1 - 1e-6


def test_batched_propagation_matches_single(grid):
    ch = random_channel(grid, 4, seed=1)
    fs = [lg_mode(grid, ModeIndex(0, l), W0, WAVELENGTH) for l in (-2, 0, 2)]
    batch = ch.propagate(np.stack([f.values for f in fs]), WAVELENGTH)
    for f, out in zip(fs, batch):
        np.testing.assert_allclose(out, propagate_channel(f, ch).values, atol=1e-13)


def test_absorber_removes_edge_power(grid):
    ch = random_channel(grid, 4, seed=2)
    ch_abs = ChannelRealization(ch.screens, ch.slab_length, absorber=True)
    f = lg_mode(grid, ModeIndex(0, 0), W0, WAVELENGTH)
    f = f.replace(np.ones_like(f.values))
    assert propagate_channel(f, ch_abs).power() < propagate_channel(f, ch).power()


def test_channel_validation(grid, small_grid):
    with pytest.raises(ValueError):
        ChannelRealization([], 1.0)
    mixed = [PhaseScreen(grid, np.zeros((grid.n, grid.n))), PhaseScreen(small_grid, np.zeros((128, 128)))]
    with pytest.raises(ValueError):
        ChannelRealization(mixed, 1.0)
    with pytest.raises(ValueError):
        ChannelRealization(mixed[:1], 1.0, placement="middle")
