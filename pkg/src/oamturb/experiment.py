"""Monte-Carlo sweep over turbulence strength, OAM order and AO scenario.

Seeding: realization ``r`` of the ``i``-th Cn2 value draws its screens from
``SeedSequence(master_seed, spawn_key=(i, r))``. With paired screens (the
default) every l0 and AO scenario of that realization sees the same channel;
unpaired runs append ``(l0, scenario_index)`` to the key. Bootstrap resampling
for cell ``(i, l0, scenario)`` uses ``spawn_key=(BOOTSTRAP_STREAM, i, l0,
scenario_index)``. A cell is therefore reproducible in isolation and results
do not depend on how realizations are distributed over workers.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from oamturb.ao import KINDS, derive_correction
from oamturb.grid import GridSpec, make_grid
from oamturb.modes import (
    ComplexField,
    ModeIndex,
    ReceiverBasis,
    aperture_mask,
    gaussian_beacon,
    lg_mode,
    receiver_basis,
)
from oamturb.propagation import PLACEMENTS, ChannelRealization
from oamturb.quantum import QuantumMetrics, RealizationAmplitudes, overlap_amplitudes
from oamturb.stats import evaluate_metrics
from oamturb.turbulence import TurbulenceParams, fried_parameter, phase_screen

log = logging.getLogger(__name__)

FULL_CN2 = tuple(float(v) for v in np.geomspace(1.4e-15, 1.5e-13, 19))
DESK_CN2 = tuple(float(v) for v in np.geomspace(1.4e-15, 1.5e-13, 8))
BOOTSTRAP_STREAM = 2**31


@dataclass(frozen=True)
class LinkConfig:
    """Physical link, numerical resolution and sweep definition (full-study defaults)."""

    wavelength: float = 1064e-9
    L: float = 500.0
    w0: float = 0.03
    beacon_waist_factor: float = 2.45
    aperture: float = 0.2
    grid_n: int = 512
    grid_width: float = 0.4
    n_screens: int = 4
    subharmonic_orders: int = 7
    cn2_list: tuple[float, ...] = FULL_CN2
    l0_list: tuple[int, ...] = (1, 2, 3, 4, 5)
    scenarios: tuple[str, ...] = KINDS
    realizations: int = 1000
    master_seed: int = 2017
    placement: str = "symmetric"
    absorber: bool = False
    paired_screens: bool = True
    bootstrap_resamples: int = 500

    def __post_init__(self):
        for name in ("wavelength", "L", "w0", "beacon_waist_factor", "aperture", "grid_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "cn2_list", tuple(float(v) for v in self.cn2_list))
        object.__setattr__(self, "l0_list", tuple(int(v) for v in self.l0_list))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.cn2_list:
            raise ValueError("cn2_list is empty")
        if any(v < 0 for v in self.cn2_list):
            raise ValueError("cn2 values must be non-negative")
        if list(self.cn2_list) != sorted(self.cn2_list):
            raise ValueError("cn2_list must be sorted ascending")
        if not self.l0_list or any(l <= 0 for l in self.l0_list):
            raise ValueError("l0_list must hold positive OAM orders")
        if not self.scenarios or any(s not in KINDS for s in self.scenarios):
            raise ValueError(f"scenarios must be drawn from {KINDS}")
        if self.realizations < 2:
            raise ValueError("need at least two realizations")
        if self.n_screens < 1 or self.subharmonic_orders < 0:
            raise ValueError("invalid screen settings")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.bootstrap_resamples < 100:
            raise ValueError("bootstrap_resamples must be >= 100")

    @classmethod
    def full(cls, **overrides) -> "LinkConfig":
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "LinkConfig":
        base = dict(grid_n=256, realizations=200, l0_list=(1, 3, 5), cn2_list=DESK_CN2)
        base.update(overrides)
        return cls(**base)

    @property
    def beacon_waist(self) -> float:
        return self.beacon_waist_factor * self.w0

    def w0_over_r0(self, cn2: float) -> float:
        if cn2 == 0:
            return 0.0
        return self.w0 / fried_parameter(cn2, self.wavelength, self.L)

    def cn2_for_strength(self, w0_over_r0: float) -> float:
        """Cn2 giving the requested ``w0 / r0`` over the full path."""
        k = 2 * math.pi / self.wavelength
        r0 = self.w0 / w0_over_r0
        return r0 ** (-5 / 3) / (0.423 * k**2 * self.L)

    def turbulence(self, cn2: float) -> TurbulenceParams:
        return TurbulenceParams(cn2, self.L, self.wavelength, self.n_screens, self.subharmonic_orders)


@dataclass(frozen=True)
class SweepResultRow:
    cn2: float
    w0_over_r0: float
    l0: int
    scenario: str
    C: float
    dC: float
    N: float
    dN: float
    R: float
    dR: float
    realizations: int
    seed: int


CSV_COLUMNS = [f.name for f in dataclasses.fields(SweepResultRow)]


@dataclass
class SimulationContext:
    """Per-configuration precomputed inputs shared by every realization."""

    grid: GridSpec
    wavelength: float
    l0_list: tuple[int, ...]
    scenarios: tuple[str, ...]
    inputs: np.ndarray  # (1 + 2 * len(l0_list), n, n): beacon, then (-l0, +l0) pairs
    bases: dict[int, ReceiverBasis]
    mask: np.ndarray

    @classmethod
    def build(cls, cfg: LinkConfig, l0_list=None, scenarios=None) -> "SimulationContext":
        l0_list = tuple(cfg.l0_list if l0_list is None else l0_list)
        scenarios = tuple(cfg.scenarios if scenarios is None else scenarios)
        grid = make_grid(cfg.grid_n, cfg.grid_width)
        fields = [gaussian_beacon(grid, cfg.beacon_waist, cfg.wavelength).values]
        bases = {}
        for l0 in l0_list:
            fields.append(lg_mode(grid, ModeIndex(0, -l0), cfg.w0, cfg.wavelength).values)
            fields.append(lg_mode(grid, ModeIndex(0, l0), cfg.w0, cfg.wavelength).values)
            bases[l0] = receiver_basis(grid, l0, cfg.w0, cfg.wavelength, cfg.L)
        return cls(grid, cfg.wavelength, l0_list, scenarios, np.stack(fields), bases, aperture_mask(grid, cfg.aperture))


_CONTEXTS: dict[LinkConfig, SimulationContext] = {}


def _context(cfg: LinkConfig) -> SimulationContext:
    ctx = _CONTEXTS.get(cfg)
    if ctx is None:
        _CONTEXTS.clear()
        ctx = _CONTEXTS[cfg] = SimulationContext.build(cfg)
    return ctx


def realization_seed(cfg: LinkConfig, cn2_index: int, realization: int, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.master_seed, spawn_key=(cn2_index, realization, *extra))


def draw_channel(cfg: LinkConfig, grid: GridSpec, cn2: float, seed) -> ChannelRealization:
    """Screens for one realization, drawn slab by slab from a single stream."""
    rng = np.random.default_rng(seed)
    params = cfg.turbulence(cn2)
    screens = [phase_screen(grid, params, s, rng) for s in range(cfg.n_screens)]
    return ChannelRealization(screens, params.slab_length, cfg.placement, cfg.absorber)


def simulate(cfg: LinkConfig, ctx: SimulationContext, cn2: float, seed) -> dict[tuple[int, str], np.ndarray]:
    """One realization: amplitudes ``(a, b, c, d)`` for every (l0, scenario) of ``ctx``.

    Beacon and photon modes cross the same screens, are clipped by the
    receiver aperture, then corrected with the phase sensed on the beacon.
    """
    ch = draw_channel(cfg, ctx.grid, cn2, seed)
    out = ch.propagate(ctx.inputs, ctx.wavelength) * ctx.mask
    beacon = ComplexField(ctx.grid, out[0], cfg.L, ctx.wavelength)
    photons = out[1:]
    result = {}
    for scenario in ctx.scenarios:
        corr = derive_correction(scenario, beacon)
        fixed = photons if scenario == "none" else photons * np.exp(-1j * corr.phase)
        for j, l0 in enumerate(ctx.l0_list):
            amps = overlap_amplitudes(fixed[2 * j], fixed[2 * j + 1], ctx.bases[l0])
            result[(l0, scenario)] = amps
    return result


def run_realization(
    cfg: LinkConfig, cn2: float, l0: int, scenario: str, realization_seed
) -> RealizationAmplitudes:
    """Amplitudes of a single realization; ``realization_seed`` is an int or SeedSequence."""
    ctx = SimulationContext.build(cfg, l0_list=(l0,), scenarios=(scenario,))
    return RealizationAmplitudes.from_array(simulate(cfg, ctx, cn2, realization_seed)[(l0, scenario)])


def _cell_keys(cfg: LinkConfig):
    return [(l0, s) for l0 in cfg.l0_list for s in cfg.scenarios]


def _simulate_block(cfg: LinkConfig, cn2_index: int, realizations: Sequence[int]) -> dict:
    """Worker task: a contiguous block of realizations for one Cn2 value."""
    cn2 = cfg.cn2_list[cn2_index]
    keys = _cell_keys(cfg)
    out = {key: np.empty((len(realizations), 4), dtype=complex) for key in keys}
    if cfg.paired_screens:
        ctx = _context(cfg)
        for i, r in enumerate(realizations):
            res = simulate(cfg, ctx, cn2, realization_seed(cfg, cn2_index, r))
            for key in keys:
                out[key][i] = res[key]
    else:
        for key in keys:
            l0, scenario = key
            ctx = SimulationContext.build(cfg, (l0,), (scenario,))
            sidx = cfg.scenarios.index(scenario)
            for i, r in enumerate(realizations):
                out[key][i] = simulate(cfg, ctx, cn2, realization_seed(cfg, cn2_index, r, l0, sidx))[key]
    return out


@dataclass
class SweepCell:
    cn2_index: int
    cn2: float
    l0: int
    scenario: str
    amplitudes: np.ndarray = field(repr=False)


def simulate_sweep(cfg: LinkConfig, workers: int = 1, block: int = 25) -> list[SweepCell]:
    """Run every realization of the sweep and return per-cell amplitude ensembles."""
    tasks = [
        (i, tuple(range(s, min(s + block, cfg.realizations))))
        for i in range(len(cfg.cn2_list))
        for s in range(0, cfg.realizations, block)
    ]
    if workers <= 1:
        results = [_simulate_block(cfg, i, rs) for i, rs in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_simulate_block, cfg, i, rs) for i, rs in tasks]
            results = [f.result() for f in futures]
    cells = []
    for i, cn2 in enumerate(cfg.cn2_list):
        blocks = [res for (j, _), res in zip(tasks, results) if j == i]
        for l0, scenario in _cell_keys(cfg):
            amps = np.concatenate([b[(l0, scenario)] for b in blocks])
            cells.append(SweepCell(i, cn2, l0, scenario, amps))
    return cells


def bootstrap_rng(cfg: LinkConfig, cell: SweepCell) -> np.random.Generator:
    key = (BOOTSTRAP_STREAM, cell.cn2_index, cell.l0, cfg.scenarios.index(cell.scenario))
    return np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=key))


def summarize_cell(cfg: LinkConfig, cell: SweepCell) -> SweepResultRow:
    """Aggregate a cell into a result row; failures yield NaN metrics instead of raising."""
    try:
        m = evaluate_metrics(cell.amplitudes, bootstrap_rng(cfg, cell), cfg.bootstrap_resamples)
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.warning("cell cn2=%g l0=%d %s failed: %s", cell.cn2, cell.l0, cell.scenario, exc)
        nan = math.nan
        m = QuantumMetrics(nan, nan, nan, nan, nan, nan, len(cell.amplitudes))
    return SweepResultRow(
        cell.cn2, cfg.w0_over_r0(cell.cn2), cell.l0, cell.scenario,
        m.C, m.dC, m.N, m.dN, m.R, m.dR, m.n_realizations, cfg.master_seed,
    )


def run_sweep(cfg: LinkConfig, workers: int = 1, cells: list[SweepCell] | None = None) -> list[SweepResultRow]:
    """Full study: one row per (cn2, l0, scenario) in configuration order."""
    if cells is None:
        cells = simulate_sweep(cfg, workers)
    return [summarize_cell(cfg, c) for c in cells]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def emit_csv(rows: Sequence[SweepResultRow], path) -> None:
    """Write the sweep table: header plus one line per row, full float precision."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])


def read_csv(path) -> list[SweepResultRow]:
    types = {f.name: f.type for f in dataclasses.fields(SweepResultRow)}
    rows = []
    with open(Path(path), newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {r.fieldnames}")
        for line in r:
            vals = {}
            for k, v in line.items():
                t = types[k]
                vals[k] = v if t == "str" else int(v) if t == "int" else float(v)
            rows.append(SweepResultRow(**vals))
    return rows


# -- config files -----------------------------------------------------------


def _parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _split(s: str) -> list[str]:
    return [t.strip() for t in s.replace(";", ",").split(",") if t.strip()]


_PARSERS = {
    "float": float,
    "int": int,
    "bool": _parse_bool,
    "str": str.strip,
    "tuple[float, ...]": lambda s: tuple(float(t) for t in _split(s)),
    "tuple[int, ...]": lambda s: tuple(int(t) for t in _split(s)),
    "tuple[str, ...]": lambda s: tuple(_split(s)),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into typed LinkConfig overrides.

    Blank lines and ``#`` comments are ignored; lists are comma-separated.
    """
    types = {f.name: f.type for f in dataclasses.fields(LinkConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _PARSERS[types[key]](value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path, base: LinkConfig | None = None) -> LinkConfig:
    overrides = parse_config_text(Path(path).read_text())
    base = LinkConfig() if base is None else base
    return dataclasses.replace(base, **overrides)
