"""Two-phase periodic unit cells and the Fourier coefficients of their stiffness.

The stiffness field is ``c(x) = c_m + (c_i - c_m) chi(x)`` with ``chi`` the
inclusion indicator in fractional coordinates. A cell declared on a lattice
``A`` describes the physical field ``c(B y mod 1)``, ``B = A^{-1}``; the
geometry stays in fractional coordinates, so reducing it to the cubic lattice
only transforms the material tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .errors import MaterialError
from .tensors import (
    COSSERAT,
    FULL,
    StiffnessTensor,
    bar_transform,
    check_invertible,
    tilde_transform,
)

GPA = 1e9
G_PER_CC = 1e3  # g/cm^3 -> kg/m^3
MM_PER_US = 1e3  # mm/us -> m/s

TILDE = "cosserat"
BAR = "anisotropic-density"


@dataclass(frozen=True)
class Material:
    """Homogeneous phase: stiffness in Pa, density in kg/m^3."""

    stiffness: StiffnessTensor
    rho: float

    def __post_init__(self):
        if not np.isfinite(self.rho) or self.rho <= 0.0:
            raise MaterialError(f"density must be positive, got {self.rho}")
        if self.stiffness.kind == FULL:
            ev = np.linalg.eigvalsh(0.5 * (self.stiffness.voigt + self.stiffness.voigt.conj().T))
            if ev.min() <= 0.0:
                raise MaterialError("stiffness is not positive definite")

    @classmethod
    def isotropic(cls, c11: float, c66: float, rho: float) -> "Material":
        """From longitudinal/shear moduli (Pa) and density (kg/m^3)."""
        return cls(StiffnessTensor.from_c11_c66(c11, c66), rho)

    @classmethod
    def from_display(cls, c11_gpa: float, c66_gpa: float, rho_gcc: float) -> "Material":
        """From moduli in GPa and density in g/cm^3."""
        return cls.isotropic(c11_gpa * GPA, c66_gpa * GPA, rho_gcc * G_PER_CC)

    def is_isotropic(self) -> bool:
        c = self.stiffness
        if c.kind != FULL:
            return False
        c11, c66 = c.c[0, 0, 0, 0].real, c.c[0, 1, 0, 1].real
        return c.allclose(StiffnessTensor.from_c11_c66(c11, c66), 1e-12)


STEEL = Material.from_display(170.0, 80.0, 7.7)
EPOXY = Material.from_display(7.537, 1.482, 1.142)


@dataclass(frozen=True, eq=False)
class UnitCell:
    """Matrix phase with one periodic inclusion geometry.

    Parameters
    ----------
    matrix, inclusion : Material
    geometry : geometry.Geometry
        Inclusion indicator on the unit torus.
    lattice : np.ndarray
        Lattice matrix ``A`` whose columns are the period vectors.
    density_factor : np.ndarray
        ``rho(x) = density_factor * rho_scalar(x)``; identity except after an
        anisotropic-density reduction, where it is ``B B^+``.
    reduced_from : tuple or None
        ``(A, formulation)`` when this cell came from :meth:`to_cubic_equivalent`.
    """

    matrix: Material
    inclusion: Material
    geometry: geo.Geometry
    lattice: np.ndarray = field(default_factory=lambda: np.eye(3))
    density_factor: np.ndarray = field(default_factory=lambda: np.eye(3))
    reduced_from: tuple | None = None
    label: str = "cell"

    def __post_init__(self):
        A = np.asarray(self.lattice, dtype=float)
        check_invertible(A, "lattice")
        object.__setattr__(self, "lattice", A)
        object.__setattr__(self, "density_factor", np.asarray(self.density_factor, dtype=float))

    # -- factories ---------------------------------------------------------
    @classmethod
    def homogeneous(cls, material: Material, lattice=None) -> "UnitCell":
        return cls(material, material, geo.Empty(), _lattice(lattice), label="homogeneous")

    @classmethod
    def cube(cls, matrix: Material, inclusion: Material, side: float, lattice=None) -> "UnitCell":
        if not 0.0 <= side <= 1.0:
            raise ValueError(f"cube side must lie in [0, 1], got {side}")
        g = geo.Empty() if side == 0.0 else geo.Boxes.axis_aligned((side, side, side))
        return cls(matrix, inclusion, g, _lattice(lattice), label=f"cube s={side:g}")

    @classmethod
    def cube_fraction(cls, matrix: Material, inclusion: Material, fraction: float, lattice=None) -> "UnitCell":
        """Cube inclusion with volume fraction ``f`` (side ``f^(1/3)``)."""
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"volume fraction must lie in [0, 1], got {fraction}")
        return cls.cube(matrix, inclusion, fraction ** (1.0 / 3.0), lattice)

    @classmethod
    def sphere(cls, matrix: Material, inclusion: Material, diameter: float, lattice=None) -> "UnitCell":
        if not 0.0 <= diameter <= 1.0:
            raise ValueError(f"sphere diameter must lie in [0, 1], got {diameter}")
        g = geo.Empty() if diameter == 0.0 else geo.Ellipsoids.axis_aligned((diameter,) * 3)
        return cls(matrix, inclusion, g, _lattice(lattice), label=f"sphere d={diameter:g}")

    @classmethod
    def spheroid(cls, matrix: Material, inclusion: Material, a: float, lattice=None) -> "UnitCell":
        """Oblate spheroid with minor axis ``a`` along x1 and unit major axes."""
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"spheroid minor axis must lie in [0, 1], got {a}")
        g = geo.Empty() if a == 0.0 else geo.Ellipsoids.axis_aligned((a, 1.0, 1.0))
        return cls(matrix, inclusion, g, _lattice(lattice), label=f"spheroid a={a:g}")

    @classmethod
    def laminate(cls, matrix: Material, inclusion: Material, fraction: float, axis: int = 0) -> "UnitCell":
        """Layer of ``inclusion`` with thickness ``fraction`` normal to ``axis``."""
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"layer fraction must lie in [0, 1], got {fraction}")
        sides = np.ones(3)
        sides[axis] = fraction
        g = geo.Empty() if fraction == 0.0 else geo.Boxes.axis_aligned(sides)
        return cls(matrix, inclusion, g, label=f"laminate f={fraction:g}")

    @classmethod
    def voxels(cls, matrix: Material, inclusion: Material, grid, lattice=None) -> "UnitCell":
        """Grid of material indices (0 = matrix, 1 = inclusion)."""
        grid = np.asarray(grid)
        if not np.all(np.isin(grid, (0, 1))):
            raise ValueError("voxel grid entries must be 0 (matrix) or 1 (inclusion)")
        return cls(matrix, inclusion, geo.Voxels(grid), _lattice(lattice), label="voxels")

    # -- tensors -----------------------------------------------------------
    @property
    def c_matrix(self) -> np.ndarray:
        return self.matrix.stiffness.c

    @property
    def c_delta(self) -> np.ndarray:
        return self.inclusion.stiffness.c - self.matrix.stiffness.c

    @property
    def kind(self) -> str:
        if self.matrix.stiffness.kind == self.inclusion.stiffness.kind == FULL:
            return FULL
        return COSSERAT

    @property
    def is_homogeneous(self) -> bool:
        return isinstance(self.geometry, geo.Empty) or np.allclose(self.c_delta, 0.0, atol=0.0)

    @property
    def scale(self) -> float:
        """Stiffness magnitude used to nondimensionalize the solvers."""
        return float(max(np.abs(self.c_matrix).max(), np.abs(self.inclusion.stiffness.c).max()))

    def volume_fraction(self) -> float:
        return float(self.geometry.volume_fraction())

    def mean_density(self) -> float:
        """Volume-averaged scalar density (kg/m^3)."""
        f = self.volume_fraction()
        return f * self.inclusion.rho + (1.0 - f) * self.matrix.rho

    def mean_density_tensor(self) -> np.ndarray:
        return self.density_factor * self.mean_density()

    def stiffness_at(self, x: np.ndarray) -> np.ndarray:
        """Pointwise ``c(x)`` for fractional points ``x`` of shape (..., 3)."""
        chi = self.geometry.indicator(np.asarray(x, dtype=float)).astype(float)
        return self.c_matrix + chi[..., None, None, None, None] * self.c_delta

    def mean_stiffness(self) -> np.ndarray:
        return self.c_matrix + self.volume_fraction() * self.c_delta

    # -- Fourier coefficients ----------------------------------------------
    def chi3(self, g: np.ndarray) -> np.ndarray:
        return self.geometry.fourier3d(np.asarray(g, dtype=float))

    def fourier3d(self, g) -> np.ndarray:
        """``c_hat(g)`` as an array of shape (..., 3, 3, 3, 3) in ``c[i,j,k,l]`` layout."""
        g = np.asarray(g, dtype=float)
        chi = self.chi3(g)
        zero = np.all(g == 0.0, axis=-1).astype(float)
        return zero[..., None, None, None, None] * self.c_matrix + chi[..., None, None, None, None] * self.c_delta

    def chi2(self, g2: np.ndarray, t: float, axis: int, resolution: int = 64) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"slice coordinate must lie in [0, 1], got {t}")
        return self.geometry.slice_fourier(axis, float(t), np.asarray(g2, dtype=float), resolution)

    def fourier2d_slice(self, g2, t: float, axis: int, resolution: int = 64) -> np.ndarray:
        """Section coefficients ``c_hat(g; x_axis = t)``, shape (..., 3, 3, 3, 3)."""
        g2 = np.asarray(g2, dtype=float)
        chi = self.chi2(g2, t, axis, resolution)
        zero = np.all(g2 == 0.0, axis=-1).astype(float)
        return zero[..., None, None, None, None] * self.c_matrix + chi[..., None, None, None, None] * self.c_delta

    def section_average(self, t: float, axis: int, resolution: int = 64) -> np.ndarray:
        """Stiffness averaged over the section ``x_axis = t``."""
        return self.fourier2d_slice(np.zeros(2), t, axis, resolution)

    def breakpoints(self, axis: int) -> np.ndarray:
        return self.geometry.breakpoints(axis)

    # -- lattices ----------------------------------------------------------
    @property
    def is_cubic(self) -> bool:
        return np.allclose(self.lattice, np.eye(3), atol=1e-14)

    def with_lattice(self, A_int) -> "UnitCell":
        """Same physical medium described on the integer superlattice ``lattice @ A``."""
        A_int = np.asarray(A_int, dtype=float)
        return replace(
            self,
            geometry=self.geometry.remapped(A_int),
            lattice=self.lattice @ A_int,
            label=f"{self.label} on superlattice",
        )

    def to_cubic_equivalent(self, formulation: str = BAR) -> "UnitCell":
        """Equivalent problem on the cubic lattice.

        ``"cosserat"`` maps tensors by ``c~_ijkl = b_jp b_lq c_ipkq`` and keeps the
        scalar density; ``"anisotropic-density"`` maps all four indices and
        multiplies the density by ``B B^+``.
        """
        A = self.lattice
        B = check_invertible(A, "lattice")
        if formulation == TILDE:
            tr = lambda m: Material(tilde_transform(m.stiffness, B), m.rho)  # noqa: E731
            dens = self.density_factor
        elif formulation == BAR:
            tr = lambda m: Material(bar_transform(m.stiffness, B), m.rho)  # noqa: E731
            dens = B @ self.density_factor @ B.T
        else:
            raise ValueError(f"unknown formulation {formulation!r}")
        return UnitCell(
            tr(self.matrix),
            tr(self.inclusion),
            self.geometry,
            np.eye(3),
            dens,
            (A, formulation),
            f"{self.label} ({formulation})",
        )


def _lattice(lattice) -> np.ndarray:
    return np.eye(3) if lattice is None else np.asarray(lattice, dtype=float)
