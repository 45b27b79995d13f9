"""Pseudospectral simulation and soliton-resolution diagnostics for the
Calogero-Moser derivative NLS and its gauge-transformed form."""

from .spectral import (
    Field,
    GaugeTag,
    Grid1D,
    abs_deriv,
    cutoff_chi,
    cutoff_phi,
    derivative,
    dplus,
    hilbert,
    inner_r,
    l2_norm,
    szego_minus,
    szego_project,
)
from .states import (
    IDENTITY,
    ModulationParams,
    compose_params,
    demodulate,
    explicit_blowup_S,
    ground_state_Q_box,
    galilean,
    gauge,
    gauge_inverse,
    ground_state_Q,
    ground_state_R,
    kernel_elements,
    modulate,
    pseudo_conformal,
    relative_params,
    truncated_kernels,
)
from .functionals import energy, hdot1, mass, momentum
from .evolution import SimConfig, Trajectory, run
from .decomposition import extract_bubbles, fit_modulation, track_modulation

__version__ = "0.1.0"

__all__ = [
    "Field",
    "GaugeTag",
    "Grid1D",
    "abs_deriv",
    "cutoff_chi",
    "cutoff_phi",
    "derivative",
    "dplus",
    "hilbert",
    "inner_r",
    "l2_norm",
    "szego_minus",
    "szego_project",
    "IDENTITY",
    "ModulationParams",
    "compose_params",
    "demodulate",
    "explicit_blowup_S",
    "ground_state_Q_box",
    "galilean",
    "gauge",
    "gauge_inverse",
    "ground_state_Q",
    "ground_state_R",
    "kernel_elements",
    "modulate",
    "pseudo_conformal",
    "relative_params",
    "truncated_kernels",
    "energy",
    "hdot1",
    "mass",
    "momentum",
    "SimConfig",
    "Trajectory",
    "run",
    "extract_bubbles",
    "fit_modulation",
    "track_modulation",
]
