"""Coulomb-gauge lattice workbench.

Numerics for the Hamiltonian formulation of a gauge field on a periodic
spatial grid: FFT spectral calculus and the transverse projector, the
gauge-fixing operator and its spectrum, iterated-kernel and pseudoinverse
Green's functions, symplectic time evolution, a truncated bosonic Fock
layer, and the desk-scale gap scan.
"""

__version__ = "0.1.0"

from .algebra import StructureConstants, levi_civita, spinor_map
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    GaugeError,
    NumericalError,
    YmcError,
)
from .lattice import (
    ColorScalarField,
    Grid,
    LatticeField,
    coulomb_residual,
    l2_inner,
    l2_norm,
    laplacian,
    spectral_derivative,
    transverse_project,
)

__all__ = [
    "__version__",
    "StructureConstants",
    "levi_civita",
    "spinor_map",
    "Grid",
    "LatticeField",
    "ColorScalarField",
    "spectral_derivative",
    "transverse_project",
    "coulomb_residual",
    "l2_inner",
    "l2_norm",
    "laplacian",
    "YmcError",
    "DomainError",
    "GaugeError",
    "CapacityError",
    "NumericalError",
    "ConfigError",
]
