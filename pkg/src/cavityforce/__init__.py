"""Dispersion forces between particles in a solvent, with graded cavity boundaries."""

__version__ = "0.1.0"

from .dielectric import (MaterialError, Oscillator, OscillatorModel, PolarizabilityModel, load_material,
                         permittivity_at, polarizability_at)
from .forces import (CasimirScenario, CurveTable, VdwScenario, casimir_pressure, casimir_vacuum,
                     relative_curves, vdw_potential, vdw_vacuum)
from .profiles import CavityFit, ProfileKind, ProfileSpec, fit_density
from .riccati import SurrogateFit, compute_surrogate, solve_riccati_nonretarded

__all__ = [
    "CasimirScenario", "CavityFit", "CurveTable", "MaterialError", "Oscillator", "OscillatorModel",
    "PolarizabilityModel", "ProfileKind", "ProfileSpec", "SurrogateFit", "VdwScenario", "casimir_pressure",
    "casimir_vacuum", "compute_surrogate", "fit_density", "load_material", "permittivity_at",
    "polarizability_at", "relative_curves", "solve_riccati_nonretarded", "vdw_potential", "vdw_vacuum",
]
