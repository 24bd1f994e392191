# ruff: noqa: E741
"""Elastic tensor algebra.

Rank-4 stiffness tensors are stored as complex ``(3, 3, 3, 3)`` arrays
``c[i, j, k, l]``. The 3x3 "blocks" used by the solvers are
``C_jl = (c_ijkl)_{i,k}``, i.e. ``block(c, j, l) == c[:, j, :, l]``.
All axis indices in this module are zero-based.

Voigt order is 11, 22, 33, 23, 13, 12 with no factor-of-2 weighting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PhonomogWarning, SingularLatticeError, SymmetryError

FULL = "full-elastic"
COSSERAT = "cosserat"

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
# (i, j) -> Voigt index
VOIGT_INDEX = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2]])

# Superlattice matrices whose scaled forms A/sqrt(2) are pi/4 rotations about e1, e2, e3.
LATTICE_ROTATIONS = (
    np.array([[1, 0, 0], [0, 1, -1], [0, 1, 1]], dtype=float),
    np.array([[1, 0, 1], [0, 1, 0], [-1, 0, 1]], dtype=float),
    np.array([[1, -1, 0], [1, 1, 0], [0, 0, 1]], dtype=float),
)

_S2 = 1.0 / np.sqrt(2.0)
CANONICAL_DIRECTIONS = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, _S2, _S2],
        [_S2, 0.0, _S2],
        [_S2, _S2, 0.0],
    ]
)

# Right factor of the Gamma -> D tableau (columns: 11, 22, 33, 23, 31, 12).
_GAMMA_TO_D = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, -0.5, -0.5],
        [0.0, 1.0, 0.0, -0.5, 0.0, -0.5],
        [0.0, 0.0, 1.0, -0.5, -0.5, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
)


def _as_tensor_array(c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.shape != (3, 3, 3, 3):
        raise ValueError(f"expected a (3, 3, 3, 3) array, got {c.shape}")
    return c


def is_major_symmetric(c, rtol: float = 1e-12) -> bool:
    c = np.asarray(c)
    scale = max(np.abs(c).max(), np.finfo(float).tiny)
    return np.abs(c - np.conj(c.transpose(2, 3, 0, 1))).max() <= rtol * scale


def is_minor_symmetric(c, rtol: float = 1e-12) -> bool:
    c = np.asarray(c)
    scale = max(np.abs(c).max(), np.finfo(float).tiny)
    return (
        np.abs(c - c.transpose(1, 0, 2, 3)).max() <= rtol * scale
        and np.abs(c - c.transpose(0, 1, 3, 2)).max() <= rtol * scale
    )


@dataclass(frozen=True, eq=False)
class StiffnessTensor:
    """Rank-4 stiffness ``c[i, j, k, l]`` with a symmetry-class flag.

    ``kind`` is ``"full-elastic"`` (minor and major symmetry) or
    ``"cosserat"`` (major symmetry only).
    """

    c: np.ndarray
    kind: str = FULL

    def __post_init__(self):
        c = _as_tensor_array(self.c)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.kind not in (FULL, COSSERAT):
            raise ValueError(f"unknown symmetry class {self.kind!r}")
        if not is_major_symmetric(c, 1e-10):
            raise SymmetryError("stiffness lacks major symmetry c_ijkl = conj(c_klij)")
        if self.kind == FULL and not is_minor_symmetric(c, 1e-10):
            raise SymmetryError("full-elastic stiffness lacks minor symmetries")

    @classmethod
    def from_voigt(cls, v) -> "StiffnessTensor":
        return full_from_voigt(v)

    @classmethod
    def isotropic(cls, lam: float, mu: float) -> "StiffnessTensor":
        d = np.eye(3)
        c = (
            lam * np.einsum("ij,kl->ijkl", d, d)
            + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
        )
        return cls(c)

    @classmethod
    def from_c11_c66(cls, c11: float, c66: float) -> "StiffnessTensor":
        """Isotropic tensor from longitudinal and shear moduli."""
        return cls.isotropic(c11 - 2.0 * c66, c66)

    @property
    def voigt(self) -> np.ndarray:
        return voigt_view(self)

    def block(self, j: int, l: int) -> np.ndarray:
        return extract_block(self, j, l)

    def blocks(self) -> np.ndarray:
        """All blocks as ``out[j, l] = C_jl``, shape (3, 3, 3, 3)."""
        return self.c.transpose(1, 3, 0, 2)

    def __add__(self, other: "StiffnessTensor") -> "StiffnessTensor":
        kind = FULL if self.kind == other.kind == FULL else COSSERAT
        return StiffnessTensor(self.c + other.c, kind)

    def __sub__(self, other: "StiffnessTensor") -> "StiffnessTensor":
        kind = FULL if self.kind == other.kind == FULL else COSSERAT
        return StiffnessTensor(self.c - other.c, kind)

    def __mul__(self, s: float) -> "StiffnessTensor":
        return StiffnessTensor(self.c * s, self.kind)

    __rmul__ = __mul__

    def allclose(self, other: "StiffnessTensor", rtol: float = 1e-10) -> bool:
        scale = max(np.abs(self.c).max(), np.abs(other.c).max())
        return np.abs(self.c - other.c).max() <= rtol * scale


def voigt_view(t: StiffnessTensor) -> np.ndarray:
    """6x6 Voigt matrix of a full-elastic tensor."""
    if t.kind != FULL:
        raise SymmetryError("Voigt view requires a full-elastic (minor-symmetric) tensor")
    out = np.empty((6, 6), dtype=complex)
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (k, l) in enumerate(VOIGT_PAIRS):
            out[I, J] = t.c[i, j, k, l]
    return out


def full_from_voigt(v) -> StiffnessTensor:
    v = np.asarray(v, dtype=complex)
    if v.shape != (6, 6):
        raise ValueError(f"expected a 6x6 Voigt matrix, got {v.shape}")
    idx = VOIGT_INDEX
    c = v[idx[:, :, None, None], idx[None, None, :, :]]
    return StiffnessTensor(c, FULL)


def extract_block(t: StiffnessTensor, j: int, l: int) -> np.ndarray:
    """Block ``C_jl = (c_ijkl)_{i,k}``; satisfies ``C_jl = C_lj^+``."""
    if not (0 <= j < 3 and 0 <= l < 3):
        raise IndexError("block indices must be in {0, 1, 2}")
    return t.c[:, j, :, l]


def check_invertible(A, name: str = "A") -> np.ndarray:
    """Return ``inv(A)``; reject |det A| < 1e-12 * ||A||^3."""
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    norm = np.linalg.norm(A, 2)
    if norm == 0.0 or abs(np.linalg.det(A)) < 1e-12 * norm**3:
        raise SingularLatticeError(f"{name} is singular or numerically degenerate")
    return np.linalg.inv(A)


def tilde_transform(t: StiffnessTensor, B) -> StiffnessTensor:
    """``c~_ijkl = b_jp b_lq c_ipkq``; the result is Cosserat class."""
    B = np.asarray(B, dtype=float)
    check_invertible(B, "B")
    c = np.einsum("jp,lq,ipkq->ijkl", B, B, t.c)
    return StiffnessTensor(c, COSSERAT)


def bar_transform(t: StiffnessTensor, B) -> StiffnessTensor:
    """``c-_ijkl = b_im b_jp b_kn b_lq c_mpnq``; symmetry class is preserved."""
    B = np.asarray(B, dtype=float)
    check_invertible(B, "B")
    c = np.einsum("im,jp,kn,lq,mpnq->ijkl", B, B, B, B, t.c, optimize=True)
    return StiffnessTensor(c, t.kind)


def rotate(t: StiffnessTensor, Q) -> StiffnessTensor:
    """Rotate all four indices by an orthogonal matrix ``Q``."""
    Q = np.asarray(Q, dtype=float)
    c = np.einsum("im,jp,kn,lq,mpnq->ijkl", Q, Q, Q, Q, t.c, optimize=True)
    return StiffnessTensor(c, t.kind)


@dataclass(frozen=True, eq=False)
class DTensor:
    """Pair-symmetrized tensor ``d_ikjl = (c_ijkl + c_ilkj) / 2``.

    Stored as ``d[i, k, j, l]`` so that ``D_jl = d[:, :, j, l]``. It carries the
    index symmetries of a full-elastic stiffness.
    """

    d: np.ndarray

    def __post_init__(self):
        d = _as_tensor_array(self.d)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    def block(self, j: int, l: int) -> np.ndarray:
        return self.d[:, :, j, l]

    @property
    def voigt(self) -> np.ndarray:
        out = np.empty((6, 6), dtype=complex)
        for I, (i, k) in enumerate(VOIGT_PAIRS):
            for J, (j, l) in enumerate(VOIGT_PAIRS):
                out[I, J] = self.d[i, k, j, l]
        return out

    @classmethod
    def from_voigt(cls, v) -> "DTensor":
        v = np.asarray(v, dtype=complex)
        idx = VOIGT_INDEX
        return cls(v[idx[:, :, None, None], idx[None, None, :, :]])

    @classmethod
    def from_blocks(cls, blocks) -> "DTensor":
        """From ``blocks[j, l] = D_jl`` (3x3 each)."""
        blocks = np.asarray(blocks, dtype=complex)
        return cls(blocks.transpose(2, 3, 0, 1))

    def blocks(self) -> np.ndarray:
        return self.d.transpose(2, 3, 0, 1)


def d_from_ceff(t: StiffnessTensor) -> DTensor:
    c = t.c
    return DTensor(0.5 * (c.transpose(0, 2, 1, 3) + c.transpose(0, 2, 3, 1)))


def total_symmetrization(a: np.ndarray) -> np.ndarray:
    """``a^s_ijkl = (a_ijkl + a_ikjl + a_iljk) / 3`` for a minor/major-symmetric array."""
    return (a + a.transpose(0, 2, 1, 3) + a.transpose(0, 2, 3, 1)) / 3.0


def ceff_from_d(D: DTensor) -> StiffnessTensor:
    """Invert the pair symmetrization through ``C = 3 D^s - 2 D``."""
    d = D.d
    c = 3.0 * total_symmetrization(d) - 2.0 * d
    return StiffnessTensor(c, FULL)


def ceff_from_d_tableau(D: DTensor) -> np.ndarray:
    """Same inversion written entry by entry in Voigt form (returns the 6x6)."""
    d = D.voigt
    out = np.empty((6, 6), dtype=complex)
    # off-diagonal combinations 2 d_xy - d_uv; the rest copy through
    two_minus = {
        (0, 1): ((5, 5), (0, 1)),
        (0, 2): ((4, 4), (0, 2)),
        (0, 3): ((4, 5), (0, 3)),
        (1, 2): ((3, 3), (1, 2)),
        (1, 4): ((3, 5), (1, 4)),
        (2, 5): ((3, 4), (2, 5)),
    }
    copy = {
        (0, 0): (0, 0), (0, 4): (0, 4), (0, 5): (0, 5),
        (1, 1): (1, 1), (1, 3): (1, 3), (1, 5): (1, 5),
        (2, 2): (2, 2), (2, 3): (2, 3), (2, 4): (2, 4),
        (3, 3): (1, 2), (3, 4): (2, 5), (3, 5): (1, 4),
        (4, 4): (0, 2), (4, 5): (0, 3),
        (5, 5): (0, 1),
    }
    for (I, J), (a, b) in two_minus.items():
        out[I, J] = 2.0 * d[a] - d[b]
    for (I, J), a in copy.items():
        out[I, J] = d[a]
    iu = np.triu_indices(6, 1)
    out[iu[1], iu[0]] = out[iu]
    return out


def _normalized(kappa, strict: bool) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    n = np.linalg.norm(kappa)
    if n == 0.0:
        raise ValueError("direction vector is zero")
    if abs(n - 1.0) > 1e-12:
        if strict:
            raise ValueError(f"direction {kappa} is not a unit vector")
        warnings.warn(f"normalizing non-unit direction {kappa}", PhonomogWarning, stacklevel=3)
        kappa = kappa / n
    return kappa


def christoffel(obj, kappa, strict: bool = False) -> np.ndarray:
    """Christoffel matrix ``sum_jl D_jl kappa_j kappa_l``.

    ``obj`` may be a :class:`StiffnessTensor`, a :class:`DTensor` or an array
    of blocks ``blocks[j, l] = C_jl`` (e.g. the PWE output).
    """
    kappa = _normalized(kappa, strict)
    if isinstance(obj, StiffnessTensor):
        blocks = obj.blocks()
    elif isinstance(obj, DTensor):
        blocks = obj.blocks()
    else:
        blocks = np.asarray(obj, dtype=complex)
    g = np.einsum("jlik,j,l->ik", blocks, kappa, kappa)
    return 0.5 * (g + g.conj().T)


def blocks_from_gammas(gammas) -> np.ndarray:
    """Symmetric block pairs ``D_jl`` from the six canonical Christoffel matrices.

    Works for any quadratic form in the direction, so it also applies to
    Cosserat-type stiffness fields.
    """
    G = np.asarray(gammas, dtype=complex)
    if G.shape != (6, 3, 3):
        raise ValueError("exactly six 3x3 Christoffel matrices are required")
    out = np.zeros((3, 3, 3, 3), dtype=complex)
    for j in range(3):
        out[j, j] = G[j]
    for (j, l), n in (((1, 2), 3), ((0, 2), 4), ((0, 1), 5)):
        out[j, l] = out[l, j] = G[n] - 0.5 * (G[j] + G[l])
    return out


def gamma_tableau(gammas) -> np.ndarray:
    """Unsymmetrized Voigt array of ``d`` from the six canonical Christoffel matrices.

    Computes ``Gamma_cols @ K`` where column ``alpha`` of ``Gamma_cols`` holds the
    Voigt entries of ``Gamma^(alpha)``. Symmetric for consistent inputs.
    """
    G = np.asarray(gammas, dtype=complex)
    if G.shape != (6, 3, 3):
        raise ValueError("exactly six 3x3 Christoffel matrices are required")
    cols = np.empty((6, 6), dtype=complex)
    for I, (i, k) in enumerate(VOIGT_PAIRS):
        cols[I, :] = G[:, i, k]
    return cols @ _GAMMA_TO_D


def d_from_gammas(gammas) -> DTensor:
    """Recover D from the Christoffel matrices at ``CANONICAL_DIRECTIONS``.

    The tableau is symmetrized, which is exact for consistent inputs.
    """
    d = gamma_tableau(gammas)
    return DTensor.from_voigt(0.5 * (d + d.T))


def random_stiffness(rng: np.random.Generator, scale: float = 1.0) -> StiffnessTensor:
    """Random positive-definite full-elastic tensor (for tests and demos)."""
    m = rng.normal(size=(6, 6))
    v = m @ m.T + 6.0 * np.eye(6)
    return full_from_voigt(scale * v / 6.0)


def random_dtensor(rng: np.random.Generator) -> DTensor:
    m = rng.normal(size=(6, 6))
    return DTensor.from_voigt(m + m.T)
