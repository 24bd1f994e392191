"""Effective moduli, wave speeds and closed-form bounds for unit cells."""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mm, pwe
from .cell import BAR, TILDE, UnitCell
from .errors import MaterialError, PhonomogWarning, SymmetryError
from .tensors import (
    CANONICAL_DIRECTIONS,
    FULL,
    DTensor,
    StiffnessTensor,
    blocks_from_gammas,
    ceff_from_d,
    christoffel,
    gamma_tableau,
    total_symmetrization,
)

log = logging.getLogger(__name__)

PWE = "pwe"
MM = "mm"
METHODS = (PWE, MM)
SKEW_TOL = 1e-5


@dataclass
class EffectiveResult:
    method: str
    N: int
    c_eff: StiffnessTensor
    gammas: np.ndarray  # (6, 3, 3) at CANONICAL_DIRECTIONS
    mean_rho: float
    speeds: np.ndarray  # (6, 3) ascending, m/s
    diagnostics: dict = field(default_factory=dict)

    @property
    def voigt(self) -> np.ndarray:
        return self.c_eff.voigt.real


def speeds_from_gamma(gamma: np.ndarray, rho: float) -> np.ndarray:
    """Ascending speeds ``sqrt(lambda / rho)`` of a Christoffel matrix."""
    lam = np.linalg.eigvalsh(0.5 * (gamma + gamma.conj().T))
    scale = max(np.abs(lam).max(), 1e-300)
    if lam.min() < -1e-10 * scale:
        raise MaterialError(f"Christoffel matrix has a negative eigenvalue {lam.min():.3e}")
    return np.sqrt(np.clip(lam, 0.0, None) / rho)


def speeds(result: EffectiveResult, kappa, strict: bool = False) -> np.ndarray:
    """Ascending phase speeds (m/s) along ``kappa``.

    Along the six canonical directions (either sign) the directly computed
    Christoffel matrices are used; elsewhere the symmetric effective tensor.
    The two agree for PWE; for truncated MM they differ by the tableau skew.
    """
    k = np.asarray(kappa, dtype=float)
    n = np.linalg.norm(k)
    if n > 0.0:
        hit = np.abs(np.abs(CANONICAL_DIRECTIONS @ (k / n)) - 1.0) <= 1e-12
        if hit.any():
            return result.speeds[int(np.argmax(hit))].copy()
    return speeds_from_gamma(christoffel(result.c_eff, kappa, strict), result.mean_rho)


def _map_back(blocks: np.ndarray, A: np.ndarray, formulation: str) -> np.ndarray:
    """Physical blocks from those of the cubic-lattice equivalent."""
    if formulation == BAR:
        blocks = np.einsum("ab,jlbc,dc->jlad", A, blocks, A)
    return np.einsum("pj,ql,jlik->pqik", A, A, blocks)


def _cubic_blocks(cell: UnitCell, method: str, N: int, diag: dict, mm_opts: dict) -> np.ndarray:
    """Pair blocks ``D_jl`` of the effective medium for a cubic-lattice cell."""
    if method == PWE:
        sys_ = pwe.assemble(cell, N)
        diag.setdefault("matrix_side", sys_.side)
        return pwe.solve(sys_)
    if method != MM:
        raise ValueError(f"unknown method {method!r}")
    gam = np.empty((6, 3, 3), dtype=complex)
    runs = []
    for l in range(3):
        r = mm.cll_eff(cell, l, N, **mm_opts)
        gam[l] = r.C
        runs.append(r)
    gam[3:], rot = mm.rotated_principal_runs(cell, N, **mm_opts)
    runs += rot
    diag.setdefault("matrix_side", mm.matrix_side(N))
    diag["steps"] = [r.steps for r in runs]
    diag["alpha"] = [r.alpha for r in runs]
    diag["redraws"] = sum(r.redraws for r in runs)
    diag["residual"] = max(r.residual for r in runs)
    diag["step_change"] = max(r.change for r in runs)
    return blocks_from_gammas(gam)


def symmetry_defect(c: np.ndarray) -> float:
    """Largest relative departure of ``c`` from real, major and minor symmetric."""
    nrm = np.abs(c).max()
    parts = (c.imag, c - c.transpose(2, 3, 0, 1), c - c.transpose(1, 0, 2, 3), c - c.transpose(0, 1, 3, 2))
    return float(max(np.abs(p).max() for p in parts) / nrm)


def effective_moduli(
    cell: UnitCell,
    method: str = MM,
    N: int = 2,
    formulation: str = BAR,
    strict: bool = False,
    **mm_opts,
) -> EffectiveResult:
    """All 21 effective constants from six Christoffel matrices.

    Oblique cells are first mapped to the cubic lattice (``formulation`` picks
    the tensor transform) and the resulting blocks are mapped back.

    Truncated MM runs along different axes agree only up to truncation error,
    so the raw tableau can miss full elastic symmetry. Its relative defect is
    reported as ``diagnostics["skew"]``; above ``SKEW_TOL`` this raises
    ``SymmetryError`` when ``strict`` and otherwise warns and keeps the
    nearest symmetric tensor.
    """
    t0 = time.perf_counter()
    diag: dict = {}
    if cell.is_cubic:
        blocks = _cubic_blocks(cell, method, N, diag, mm_opts)
    else:
        red = cell.to_cubic_equivalent(formulation)
        blocks = _map_back(_cubic_blocks(red, method, N, diag, mm_opts), cell.lattice, formulation)
    gammas = np.array([christoffel(blocks, k) for k in CANONICAL_DIRECTIONS])
    d = gamma_tableau(gammas)
    raw = DTensor.from_voigt(d).d
    skew = symmetry_defect(3.0 * total_symmetrization(raw) - 2.0 * raw)
    if skew > SKEW_TOL:
        msg = f"recovered moduli lack full elastic symmetry (skew {skew:.2e}, {method} N={N})"
        if strict:
            raise SymmetryError(msg)
        warnings.warn(msg + "; using the symmetric part", PhonomogWarning, stacklevel=2)
    c = ceff_from_d(DTensor.from_voigt(0.5 * (d + d.T))).c
    imag = float(np.abs(c.imag).max() / np.abs(c).max())
    if imag > SKEW_TOL:
        raise SymmetryError(f"recovered moduli have an imaginary part {imag:.2e}")
    c_eff = StiffnessTensor(c.real, FULL)
    rho = cell.mean_density()
    sp = np.array([speeds_from_gamma(g, rho) for g in gammas])
    diag["skew"] = skew
    diag["seconds"] = time.perf_counter() - t0
    return EffectiveResult(method, N, c_eff, gammas, rho, sp, diag)


def principal_gamma(cell: UnitCell, method: str, N: int, l: int, **mm_opts) -> np.ndarray:
    """``C_ll^eff`` alone, i.e. the Christoffel matrix along ``e_l`` (cubic lattice)."""
    if not cell.is_cubic:
        raise ValueError("principal runs need a cubic-lattice cell; use effective_moduli")
    if method == PWE:
        return pwe.effective_blocks(cell, N)[l, l]
    return mm.cll_eff(cell, l, N, **mm_opts).C


# -- bounds ---------------------------------------------------------------


def _panel_gauss(f, bp: np.ndarray, n: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for a, b in zip(bp[:-1], bp[1:]):
        if b - a <= 1e-14:
            continue
        for xi, wi in zip(x, w):
            total = total + 0.5 * (b - a) * wi * f(a + 0.5 * (b - a) * (xi + 1.0))
    return total


def harmonic_section_mean(cell: UnitCell, l: int, rtol: float = 1e-9, n0: int = 8, n_max: int = 1024) -> np.ndarray:
    """``<<C_ll>_sec^{-1}>_l^{-1}``: harmonic mean along ``x_l`` of section averages."""
    bp = cell.breakpoints(l)
    blocks_m = cell.c_matrix[:, l, :, l]
    blocks_d = cell.c_delta[:, l, :, l]

    def inv_section(t):
        area = cell.chi2(np.zeros(2), t, l, 256).real
        S = blocks_m + area * blocks_d
        try:
            np.linalg.cholesky(0.5 * (S + S.conj().T))
        except np.linalg.LinAlgError:
            raise MaterialError(f"section average not positive definite at x_{l + 1}={t:.6g}") from None
        return np.linalg.inv(S)

    n = n0
    prev = _panel_gauss(inv_section, bp, n)
    while True:
        n *= 2
        cur = _panel_gauss(inv_section, bp, n)
        if np.linalg.norm(cur - prev) <= rtol * np.linalg.norm(cur) or n >= n_max:
            break
        prev = cur
    H = np.linalg.inv(cur)
    return 0.5 * (H + H.conj().T)


@dataclass
class BoundsReport:
    voigt: np.ndarray  # (3, 3, 3): <C_ll> per axis
    mm_zero: np.ndarray  # (3, 3, 3)
    mean_blocks: np.ndarray  # (3, 3, 3, 3): <C_jl>
    mean_rho: float
    lattice: np.ndarray
    lattice_cell: UnitCell | None = None

    def gamma_b(self, kappa) -> np.ndarray:
        """Bound matrix: averaged off-diagonal blocks plus harmonic principal blocks."""
        k = np.asarray(kappa, dtype=float)
        k = k / np.linalg.norm(k)
        if self.lattice is not None:
            k = self.lattice.T @ k
        G = np.einsum("jlik,j,l->ik", self.mean_blocks, k, k)
        for l in range(3):
            G = G + (self.mm_zero[l] - self.mean_blocks[l, l]) * k[l] ** 2
        return 0.5 * (G + G.conj().T)

    def gamma_voigt(self, kappa) -> np.ndarray:
        k = np.asarray(kappa, dtype=float)
        k = k / np.linalg.norm(k)
        if self.lattice is not None:
            k = self.lattice.T @ k
        return christoffel(self.mean_blocks, k)

    def speeds_b(self, kappa) -> np.ndarray:
        return speeds_from_gamma(self.gamma_b(kappa), self.mean_rho)

    def speeds_b_or_nan(self, kappa) -> np.ndarray:
        """``speeds_b`` with NaN where the off-axis bound matrix is indefinite."""
        try:
            return self.speeds_b(kappa)
        except MaterialError as exc:
            log.info("no speed bound along %s: %s", np.asarray(kappa).tolist(), exc)
            return np.full(3, np.nan)

    def speeds_voigt(self, kappa) -> np.ndarray:
        return speeds_from_gamma(self.gamma_voigt(kappa), self.mean_rho)


def mm_zero_bound(cell: UnitCell) -> BoundsReport:
    """Voigt and ``N = 0`` monodromy bounds.

    Oblique cells are handled on their Cosserat-type cubic equivalent, where
    ``Gamma(kappa) = Gamma~(A^T kappa)``.
    """
    lattice = None
    work = cell
    if not cell.is_cubic:
        work = cell.to_cubic_equivalent(TILDE)
        lattice = cell.lattice
    mean = work.mean_stiffness().transpose(1, 3, 0, 2)
    voigt = np.array([mean[l, l] for l in range(3)])
    mz = np.array([harmonic_section_mean(work, l) for l in range(3)])
    return BoundsReport(voigt, mz, mean, cell.mean_density(), lattice)


@dataclass
class HSBounds:
    bulk: tuple[float, float]
    shear: tuple[float, float]
    cl: tuple[float, float]
    ct: tuple[float, float]


def _hs_bulk(K, G, f, Gs):
    return 1.0 / np.sum(f / (K + 4.0 / 3.0 * Gs)) - 4.0 / 3.0 * Gs


def _hs_shear(K, G, f, Ks, Gs):
    zeta = Gs / 6.0 * (9.0 * Ks + 8.0 * Gs) / (Ks + 2.0 * Gs)
    return 1.0 / np.sum(f / (G + zeta)) - zeta


def hashin_shtrikman(cell: UnitCell) -> HSBounds:
    """Two-phase isotropic bulk/shear bounds (Walpole form) and the implied speeds."""
    mats = (cell.matrix, cell.inclusion)
    if not all(m.is_isotropic() for m in mats):
        raise ValueError("Hashin-Shtrikman bounds need two isotropic phases")
    c11 = np.array([m.stiffness.c[0, 0, 0, 0].real for m in mats])
    G = np.array([m.stiffness.c[0, 1, 0, 1].real for m in mats])
    K = c11 - 4.0 / 3.0 * G
    fi = cell.volume_fraction()
    f = np.array([1.0 - fi, fi])
    live = f > 0.0
    Kl, Gl, fl = K[live], G[live], f[live]
    kb = (_hs_bulk(Kl, Gl, fl, Gl.min()), _hs_bulk(Kl, Gl, fl, Gl.max()))
    gb = (_hs_shear(Kl, Gl, fl, Kl.min(), Gl.min()), _hs_shear(Kl, Gl, fl, Kl.max(), Gl.max()))
    rho = cell.mean_density()
    cl = tuple(float(np.sqrt((k + 4.0 / 3.0 * g) / rho)) for k, g in zip(kb, gb))
    ct = tuple(float(np.sqrt(g / rho)) for g in gb)
    return HSBounds(tuple(map(float, kb)), tuple(map(float, gb)), cl, ct)


# -- studies --------------------------------------------------------------


def convergence_study(cell: UnitCell, methods=METHODS, Ns=(0, 1, 2), kappa=(1.0, 0.0, 0.0), **mm_opts) -> list[dict]:
    """Speeds along ``kappa`` per (method, N), with bound columns; rows sorted."""
    kappa = np.asarray(kappa, dtype=float)
    axis = _principal_axis(kappa)
    bounds = mm_zero_bound(cell)
    hs = _hs_or_none(cell)
    rows = []
    for method in sorted(methods):
        for N in sorted(Ns):
            t0 = time.perf_counter()
            residual = 0.0
            if axis is not None and cell.is_cubic:
                gamma = principal_gamma(cell, method, N, axis, **mm_opts)
            else:
                res = effective_moduli(cell, method, N, **mm_opts)
                gamma = christoffel(res.c_eff, kappa)
                residual = res.diagnostics.get("residual", 0.0)
            sp = speeds_from_gamma(gamma, cell.mean_density())
            rows.append(
                {
                    "method": method,
                    "N": N,
                    "matrix_side": pwe.matrix_side(N) if method == PWE else mm.matrix_side(N),
                    "seconds": time.perf_counter() - t0,
                    "residual": residual,
                    "speeds": sp,
                    "bound_speeds": bounds.speeds_b_or_nan(kappa),
                    "voigt_speeds": bounds.speeds_voigt(kappa),
                    "hs": hs,
                }
            )
    return rows


def _principal_axis(kappa: np.ndarray):
    k = kappa / np.linalg.norm(kappa)
    for l in range(3):
        if abs(abs(k[l]) - 1.0) < 1e-14:
            return l
    return None


def _hs_or_none(cell: UnitCell):
    try:
        return hashin_shtrikman(cell)
    except ValueError:
        return None
