"""Quasistatic effective elastic moduli of 3D periodic composites.

Two solvers compute the effective Christoffel matrices: a 3D plane-wave
expansion (:mod:`phonomog.pwe`) and a monodromy-matrix method that integrates
a Riccati equation for the propagator resolvent (:mod:`phonomog.mm`). Both feed
:func:`phonomog.homogenize.effective_moduli`, which recovers all 21 constants.
"""

from .cell import BAR, EPOXY, STEEL, TILDE, Material, UnitCell
from .errors import (
    ConfigError,
    IntegrationError,
    MaterialError,
    MemoryGuardError,
    PhonomogError,
    PhonomogWarning,
    SingularLatticeError,
    SymmetryError,
)
from .homogenize import (
    BoundsReport,
    EffectiveResult,
    convergence_study,
    effective_moduli,
    hashin_shtrikman,
    mm_zero_bound,
    speeds,
)
from .tensors import DTensor, StiffnessTensor, christoffel

__all__ = [
    "BAR", "EPOXY", "STEEL", "TILDE", "Material", "UnitCell",
    "ConfigError", "IntegrationError", "MaterialError", "MemoryGuardError",
    "PhonomogError", "PhonomogWarning", "SingularLatticeError", "SymmetryError",
    "BoundsReport", "EffectiveResult", "convergence_study", "effective_moduli",
    "hashin_shtrikman", "mm_zero_bound", "speeds",
    "DTensor", "StiffnessTensor", "christoffel",
]
