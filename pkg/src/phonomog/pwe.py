"""Plane-wave expansion of the quasistatic effective-medium problem.

For a truncation ``N`` the unknown periodic displacement is expanded over
``g in [-N, N]^3 \\ {0}`` (lexicographic order). With ``c_hat`` the 3D Fourier
coefficients of the stiffness,

    q_j[(g, p), q]      = sum_m g_m c_hat(g)[p, m, q, j]
    C0[(g, p), (g', q)] = sum_km g_k g'_m c_hat(g - g')[p, k, q, m]
    C^e_jl              = C_jl(0) - q_j^+ C0^{-1} q_l

The 2*pi factors of the gradients cancel between ``q`` and ``C0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .cell import UnitCell
from .errors import MaterialError, MemoryGuardError

DEFAULT_MAX_SIDE = 3 * 11**3


def index_set(N: int) -> np.ndarray:
    """Integer vectors of ``[-N, N]^3`` without the origin, lexicographic."""
    if N < 0:
        raise ValueError("truncation N must be non-negative")
    r = range(-N, N + 1)
    pts = [p for p in itertools.product(r, r, r) if p != (0, 0, 0)]
    return np.array(pts, dtype=float).reshape(-1, 3)


def matrix_side(N: int) -> int:
    return 3 * ((2 * N + 1) ** 3 - 1)


@dataclass
class PweSystem:
    N: int
    g: np.ndarray
    C0: np.ndarray
    q: np.ndarray  # (3, side, 3): q[j]
    c_zero: np.ndarray  # blocks of c_hat(0), scaled
    scale: float

    @property
    def side(self) -> int:
        return self.C0.shape[0]


def assemble(cell: UnitCell, N: int, max_side: int = DEFAULT_MAX_SIDE) -> PweSystem:
    """Build ``C0`` and the ``q_j`` for ``cell`` (stiffness divided by ``cell.scale``)."""
    side = matrix_side(N)
    if side > max_side:
        raise MemoryGuardError(f"PWE matrix side {side} at N={N} exceeds the cap {max_side}")
    s = cell.scale
    cm = cell.c_matrix / s
    dc = cell.c_delta / s
    G = index_set(N)
    n = len(G)
    c_zero = (cm + dc * cell.volume_fraction()).transpose(1, 3, 0, 2)
    if n == 0:
        return PweSystem(N, G, np.zeros((0, 0), complex), np.zeros((3, 0, 3), complex), c_zero, s)

    # chi_hat on all differences g - g'
    M = 2 * N
    r = np.arange(-M, M + 1, dtype=float)
    diff = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1)
    chi_grid = cell.chi3(diff)
    # index of (g - g') in the difference grid: (g - g' + 2N) flattened
    off = (G.astype(int)[:, None, :] - G.astype(int)[None, :, :]) + M
    X = chi_grid[off[..., 0], off[..., 1], off[..., 2]]
    del off

    chi = cell.chi3(G)
    q = np.einsum("gm,g,pmqj->jgpq", G, chi, dc).reshape(3, n * 3, 3)

    C0 = np.zeros((n, 3, n, 3), dtype=complex)
    for p in range(3):
        for qq in range(3):
            dpq = dc[p, :, qq, :]
            if np.any(dpq != 0.0):
                C0[:, p, :, qq] = X * (G @ dpq @ G.T)
    diag = np.einsum("gk,gm,pkqm->gpq", G, G, cm)
    idx = np.arange(n)
    C0[idx, :, idx, :] += diag
    C0 = C0.reshape(3 * n, 3 * n)
    return PweSystem(N, G, C0, q, c_zero, s)


def solve(system: PweSystem) -> np.ndarray:
    """Effective blocks ``out[j, l] = C^e_jl`` (Pa), shape (3, 3, 3, 3)."""
    out = system.c_zero.copy()
    if system.side:
        try:
            factor = linalg.cho_factor(system.C0, lower=True, check_finite=False)
        except linalg.LinAlgError:
            ev = np.linalg.eigvalsh(system.C0).min()
            raise MaterialError(
                f"PWE matrix C0 is not positive definite (smallest eigenvalue {ev:.3e} relative)"
            ) from None
        Q = system.q.transpose(1, 0, 2).reshape(system.side, 9)
        X = linalg.cho_solve(factor, Q, check_finite=False)
        corr = (Q.conj().T @ X).reshape(3, 3, 3, 3)  # [j, p, l, q]
        out = out - corr.transpose(0, 2, 1, 3)
    out = 0.5 * (out + out.transpose(1, 0, 3, 2).conj())
    return out * system.scale


def effective_blocks(cell: UnitCell, N: int, max_side: int = DEFAULT_MAX_SIDE) -> np.ndarray:
    return solve(assemble(cell, N, max_side))
