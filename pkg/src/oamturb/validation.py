"""Self-checks behind the ``validate`` subcommand: screen statistics and vacuum propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from oamturb.experiment import LinkConfig, SimulationContext, simulate
from oamturb.grid import make_grid
from oamturb.modes import ModeIndex, inner_product, lg_mode
from oamturb.propagation import fresnel_propagate
from oamturb.quantum import accumulate_density_matrix, concurrence, qber
from oamturb.turbulence import (
    TurbulenceParams,
    kolmogorov_structure_function,
    phase_screen,
    structure_function,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def params_for_screen_r0(r0: float, wavelength: float, subharmonic_orders: int) -> TurbulenceParams:
    """Single-slab parameters whose screen Fried parameter equals ``r0``."""
    L = 100.0
    k = 2 * math.pi / wavelength
    cn2 = r0 ** (-5 / 3) / (0.423 * k**2 * L)
    return TurbulenceParams(cn2, L, wavelength, 1, subharmonic_orders)


def structure_ratios(
    grid_n: int = 256,
    width: float = 0.4,
    r0: float = 0.05,
    n_screens: int = 1000,
    subharmonic_orders: int = 7,
    seed: int = 1,
    wavelength: float = 1064e-9,
):
    """Ensemble D(r) over the Kolmogorov law at 4dx .. width/8 (in doublings) and width/4."""
    grid = make_grid(grid_n, width)
    params = params_for_screen_r0(r0, wavelength, subharmonic_orders)
    shifts = [4]
    while shifts[-1] * 2 <= grid_n // 8:
        shifts.append(shifts[-1] * 2)
    if shifts[-1] != grid_n // 8:
        shifts.append(grid_n // 8)
    shifts.append(grid_n // 4)
    rng = np.random.default_rng(seed)
    table = structure_function(
        (phase_screen(grid, params, 0, rng) for _ in range(n_screens)), np.array(shifts) * grid.dx
    )
    return table, table.D / kolmogorov_structure_function(table.separations, r0)


def screen_checks(n_screens: int = 1000, grid_n: int = 256, width: float = 0.4, seed: int = 1) -> list[Check]:
    table, ratio = structure_ratios(grid_n, width, 0.05, n_screens, 7, seed)
    band = ratio[:-1]
    out = [
        Check(
            "structure function, 7 subharmonic orders",
            bool(np.all(np.abs(band - 1) <= 0.10)),
            "D/D_kolmogorov over [4dx, width/8] = " + ", ".join(f"{v:.3f}" for v in band),
        )
    ]
    _, plain = structure_ratios(grid_n, width, 0.05, n_screens, 0, seed + 1)
    out.append(
        Check(
            "structure function deficit without subharmonics",
            bool(plain[-1] < 0.8),
            f"D/D_kolmogorov at width/4 = {plain[-1]:.3f}",
        )
    )
    return out


def vacuum_mode_overlaps(cfg: LinkConfig, l_values=range(6)) -> dict[int, float]:
    """``|<propagated LG_0l, analytic LG_0l(z=L)>|^2`` for each ``l``."""
    grid = make_grid(cfg.grid_n, cfg.grid_width)
    out = {}
    for l in l_values:
        start = lg_mode(grid, ModeIndex(0, l), cfg.w0, cfg.wavelength, 0.0)
        target = lg_mode(grid, ModeIndex(0, l), cfg.w0, cfg.wavelength, cfg.L)
        out[l] = abs(inner_product(fresnel_propagate(start, cfg.L), target)) ** 2
    return out


def turbulence_free_metrics(cfg: LinkConfig) -> dict[tuple[int, str], tuple[float, float, float]]:
    """``(C, R, N)`` per (l0, scenario) for a channel without turbulence."""
    ctx = SimulationContext.build(cfg)
    runs = [simulate(cfg, ctx, 0.0, np.random.SeedSequence(cfg.master_seed, spawn_key=(r,))) for r in range(2)]
    out = {}
    for key in runs[0]:
        X = np.array([run[key] for run in runs])
        dm = accumulate_density_matrix(X)
        out[key] = (concurrence(dm), qber(X), dm.trace_raw)
    return out


def vacuum_checks(cfg: LinkConfig) -> list[Check]:
    ov = vacuum_mode_overlaps(cfg)
    out = [
        Check(
            "vacuum propagation vs analytic LG modes",
            min(ov.values()) >= 0.999,
            ", ".join(f"l={l}: {v:.6f}" for l, v in ov.items()),
        )
    ]
    m = turbulence_free_metrics(cfg)
    worst_C = min(v[0] for v in m.values())
    worst_R = max(v[1] for v in m.values())
    worst_N = min(v[2] for v in m.values())
    out.append(
        Check(
            "turbulence-free end-to-end",
            worst_C >= 0.999 and worst_R <= 1e-3 and worst_N >= 0.99,
            f"min C = {worst_C:.6f}, max R = {worst_R:.2e}, min N = {worst_N:.6f}",
        )
    )
    return out
