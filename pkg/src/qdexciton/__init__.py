"""Bound states, exciton binding, and driven dynamics of a spherical
core/well/clad quantum dot in the two-band effective-mass picture."""

from qdexciton._kernels import BACKEND
from qdexciton.dynamics import (
    DipoleTable,
    DriveRun,
    TimeSeries,
    dipole_couplings,
    evolve,
    leakage,
    leakage_scan,
    pair_dipole,
    resonance_frequency,
)
from qdexciton.entanglement import (
    SchmidtSpectrum,
    coefficient_matrix,
    entropy,
    entropy_scan,
    state_entropy,
)
from qdexciton.exciton import (
    ExcitonBasis,
    ExcitonSolution,
    MultipoleKernel,
    angular_coefficient,
    binding_energy,
    ci_assemble,
    kernel_radial,
    perturbative_binding,
    solve_exciton,
)
from qdexciton.materials import (
    Config,
    Device,
    DriveSettings,
    Material,
    Numerics,
    builtin_material,
    cds_hgs_device,
    load_config,
)
from qdexciton.radial import (
    ChannelSpec,
    RadialSolution,
    infinite_well_reference,
    matching_residual,
    selfpol_potential,
    solve_channel,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelSpec",
    "Config",
    "Device",
    "DipoleTable",
    "DriveRun",
    "DriveSettings",
    "ExcitonBasis",
    "ExcitonSolution",
    "Material",
    "MultipoleKernel",
    "Numerics",
    "RadialSolution",
    "SchmidtSpectrum",
    "TimeSeries",
    "__version__",
    "angular_coefficient",
    "binding_energy",
    "builtin_material",
    "cds_hgs_device",
    "ci_assemble",
    "coefficient_matrix",
    "dipole_couplings",
    "entropy",
    "entropy_scan",
    "evolve",
    "infinite_well_reference",
    "kernel_radial",
    "leakage",
    "leakage_scan",
    "load_config",
    "matching_residual",
    "pair_dipole",
    "perturbative_binding",
    "resonance_frequency",
    "selfpol_potential",
    "solve_channel",
    "solve_exciton",
    "state_entropy",
]
