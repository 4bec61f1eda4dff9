"""Bound states of position-dependent-mass particles around a screw dislocation."""
from __future__ import annotations

from .errors import (ConfigError, ConvergenceError, DomainError, GridError, InvalidState,
                     NoRootError, PdmError)
from .model import (DislocationConfig, GaugeConfig, PdmProfile, PotentialConfig,
                    SolvableFamily, SystemConfig, classify)
from .spectra import EnergyResult, Flag, RadialWavefunction, Variant, energy, validity, wavefunction

__all__ = [
    "ConfigError", "ConvergenceError", "DomainError", "GridError", "InvalidState",
    "NoRootError", "PdmError", "DislocationConfig", "GaugeConfig", "PdmProfile",
    "PotentialConfig", "SolvableFamily", "SystemConfig", "classify", "EnergyResult",
    "Flag", "RadialWavefunction", "Variant", "energy", "validity", "wavefunction",
]
__version__ = "0.1.0"
