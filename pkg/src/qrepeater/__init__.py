"""Fock-space simulator of a time-bin, polarization-insensitive quantum repeater."""

from .chain import ChainConfig, ChainStats, simulate_chain, sweep
from .fock import (
    Ensemble,
    JointState,
    LinearModeMap,
    ModeId,
    apply_mode_map,
    fidelity,
    make_vacuum,
)
from .link import LinkConfig, LinkResult, psi_plus, run_link_exhaustive, run_link_sampled
from .noise import ClickPattern, DetectorModel, JonesUnitary, detect, sample_jones
from .swap import SwapResult, run_elementary_swap, run_higher_swap

__all__ = [
    "ChainConfig",
    "ChainStats",
    "ClickPattern",
    "DetectorModel",
    "Ensemble",
    "JointState",
    "JonesUnitary",
    "LinearModeMap",
    "LinkConfig",
    "LinkResult",
    "ModeId",
    "SwapResult",
    "apply_mode_map",
    "detect",
    "fidelity",
    "make_vacuum",
    "psi_plus",
    "run_elementary_swap",
    "run_higher_swap",
    "run_link_exhaustive",
    "run_link_sampled",
    "sample_jones",
    "simulate_chain",
    "sweep",
]
