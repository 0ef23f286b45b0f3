"""Wave-optics simulation of OAM photon entanglement through turbulence with adaptive optics."""

from oamturb.grid import GridSpec, make_grid
from oamturb.modes import ComplexField, ModeIndex, lg_mode, gaussian_beacon, inner_product, apply_aperture
from oamturb.turbulence import (
    TurbulenceParams,
    PhaseScreen,
    fried_parameter,
    rytov_variance,
    screen_count,
    phase_screen,
    add_subharmonics,
    structure_function,
)
from oamturb.propagation import ChannelRealization, fresnel_propagate, apply_screen, propagate_channel
from oamturb.ao import AOCorrection, ideal_correction, tiptilt_correction, apply_correction
from oamturb.quantum import (
    RealizationAmplitudes,
    DensityMatrix4,
    QuantumMetrics,
    compute_amplitudes,
    accumulate_density_matrix,
    concurrence,
    qber,
)
from oamturb.stats import (
    BlochDecomposition,
    bloch_coefficients,
    bloch_errors,
    gamma_tensor,
    concurrence_error,
    bootstrap_error,
)
from oamturb.experiment import LinkConfig, SweepResultRow, run_realization, run_sweep, emit_csv

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "make_grid",
    "ComplexField",
    "ModeIndex",
    "lg_mode",
    "gaussian_beacon",
    "inner_product",
    "apply_aperture",
    "TurbulenceParams",
    "PhaseScreen",
    "fried_parameter",
    "rytov_variance",
    "screen_count",
    "phase_screen",
    "add_subharmonics",
    "structure_function",
    "ChannelRealization",
    "fresnel_propagate",
    "apply_screen",
    "propagate_channel",
    "AOCorrection",
    "ideal_correction",
    "tiptilt_correction",
    "apply_correction",
    "RealizationAmplitudes",
    "DensityMatrix4",
    "QuantumMetrics",
    "compute_amplitudes",
    "accumulate_density_matrix",
    "concurrence",
    "qber",
    "BlochDecomposition",
    "bloch_coefficients",
    "bloch_errors",
    "gamma_tensor",
    "concurrence_error",
    "bootstrap_error",
    "LinkConfig",
    "SweepResultRow",
    "run_realization",
    "run_sweep",
    "emit_csv",
]
