"""Inclusion geometries on the unit torus and their Fourier coefficients.

Every geometry is the indicator ``chi(x)`` of a 1-periodic set described in
fractional coordinates ``x in [0, 1)^3``. Conventions:

* 3D coefficients ``chi3(g) = <chi(x) exp(-2 pi i g.x)>`` for integer ``g``;
* slice coefficients along ``axis``: with ``(a, b)`` the two remaining axes in
  increasing order, ``chi2(g; t) = <chi exp(-2 pi i (g_a x_a + g_b x_b))>``
  averaged over the section ``x_axis = t``.

Ellipsoids and parallelepipeds have closed-form coefficients (balls and discs
through Bessel functions, polygons through an edge sum). Integer superlattice
remaps ``chi'(x) = chi(A x mod 1)`` of these stay closed-form; anything else
falls back to trapezoid quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .tensors import check_invertible

TWO_PI = 2.0 * np.pi


def bessel_j1(x):
    """Bessel function of the first kind, order one (Cephes via scipy)."""
    return special.j1(x)


def transverse_axes(axis: int) -> tuple[int, int]:
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return tuple(a for a in range(3) if a != axis)


def disk_ft(k):
    """Fourier transform of the unit disc, ``J1(2 pi k) / k``; equals pi at k = 0."""
    k = np.asarray(k, dtype=float)
    z = TWO_PI * k
    small = z < 1e-4
    zs = np.where(small, 1.0, z)
    big = TWO_PI * bessel_j1(zs) / zs
    series = np.pi * (1.0 - z**2 / 8.0 + z**4 / 192.0)
    return np.where(small, series, big)


def ball_ft(k):
    """Fourier transform of the unit ball; equals 4 pi / 3 at k = 0."""
    k = np.asarray(k, dtype=float)
    z = TWO_PI * k
    small = z < 0.05
    zs = np.where(small, 1.0, z)
    big = 4.0 * np.pi * (np.sin(zs) - zs * np.cos(zs)) / zs**3
    z2 = z * z
    series = 4.0 * np.pi * (
        1.0 / 3.0 - z2 / 30.0 + z2**2 / 840.0 - z2**3 / 45360.0 + z2**4 / 3991680.0
    )
    return np.where(small, series, big)


def polygon_ft(vertices: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Exact ``int_P exp(-2 pi i g.u) du`` for a convex polygon (CCW vertices).

    ``g`` has shape (..., 2). Uses the divergence theorem edge by edge.
    """
    g = np.asarray(g, dtype=float)
    out_shape = g.shape[:-1]
    gf = g.reshape(-1, 2)
    if len(vertices) < 3:
        return np.zeros(out_shape, dtype=complex)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    e = b - a
    area = 0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1])
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)  # outward for CCW, length |e|
    g2 = np.sum(gf * gf, axis=1)
    zero = g2 == 0.0
    gn = gf @ normals.T  # (n, edges)
    z = -TWO_PI * (gf @ e.T)
    phi = np.exp(0.5j * z) * np.sinc(z / TWO_PI)
    phase = np.exp(-1j * TWO_PI * (gf @ a.T))
    s = np.sum(gn * phase * phi, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 1j * s / (TWO_PI * np.where(zero, 1.0, g2))
    val = np.where(zero, area, val)
    return val.reshape(out_shape)


def clip_polygon(poly: np.ndarray, n: np.ndarray, r: float) -> np.ndarray:
    """Keep the part of a convex polygon with ``n.u <= r`` (Sutherland-Hodgman)."""
    if len(poly) == 0:
        return poly
    s = poly @ n - r
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        sp, sq = s[i], s[(i + 1) % m]
        if sp <= 0.0:
            out.append(p)
        if (sp < 0.0 < sq) or (sq < 0.0 < sp):
            out.append(p + (q - p) * (sp / (sp - sq)))
    return np.array(out).reshape(-1, 2)


def _frac_unique(values, tol: float = 1e-12) -> np.ndarray:
    v = np.mod(np.asarray(values, dtype=float), 1.0)
    v = np.concatenate([v, [0.0, 1.0]])
    v = np.sort(v)
    keep = [v[0]]
    for x in v[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    keep[-1] = 1.0
    keep[0] = 0.0
    return np.array(keep)


def _as_integer_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, np.round(A), atol=1e-12):
        raise ValueError("superlattice remap requires an integer matrix")
    check_invertible(A)
    return np.round(A)


def _coset_images(A: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Distinct points ``frac(B (c + m))`` over integer ``m``; |det A| per centre."""
    B = np.linalg.inv(A)
    D = int(round(abs(np.linalg.det(A))))
    reps = np.array(list(itertools.product(range(D), repeat=3)), dtype=float)
    out = []
    for c in centers:
        pts = np.mod((c[None, :] + reps) @ B.T, 1.0)
        pts = np.round(pts, 12) % 1.0
        uniq = np.unique(pts, axis=0)
        out.append(uniq)
    return np.concatenate(out, axis=0)


class Geometry:
    """Base class; subclasses provide the closed forms they support."""

    def volume_fraction(self) -> float:
        return float(np.real(self.fourier3d(np.zeros(3))))

    def indicator(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fourier3d(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def slice_fourier(self, axis: int, t: float, g: np.ndarray, resolution: int = 64) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, axis: int) -> np.ndarray:
        """Sorted points of [0, 1] where slice coefficients may be non-smooth."""
        return np.array([0.0, 1.0])

    def piecewise_constant(self, axis: int) -> bool:
        return False

    def remapped(self, A) -> "Geometry":
        return Remapped(self, _as_integer_matrix(A))


class Empty(Geometry):
    def volume_fraction(self) -> float:
        return 0.0

    def indicator(self, x):
        return np.zeros(np.shape(x)[:-1], dtype=bool)

    def fourier3d(self, g):
        return np.zeros(np.shape(g)[:-1], dtype=complex)

    def slice_fourier(self, axis, t, g, resolution=64):
        return np.zeros(np.shape(g)[:-1], dtype=complex)

    def piecewise_constant(self, axis):
        return True

    def remapped(self, A):
        return self


@dataclass(frozen=True, eq=False)
class Ellipsoids(Geometry):
    """Identical ellipsoids ``{x : (x - c)^T S^{-1} (x - c) <= 1}`` at each centre.

    ``S`` is the symmetric positive-definite shape matrix (squared semi-axes
    for an axis-aligned ellipsoid). Periodic images must not overlap.
    """

    centers: np.ndarray
    S: np.ndarray
    _P: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        S = np.asarray(self.S, dtype=float)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "_P", np.linalg.inv(S))

    @classmethod
    def axis_aligned(cls, diameters, center=(0.5, 0.5, 0.5)) -> "Ellipsoids":
        d = np.asarray(diameters, dtype=float)
        if np.any(d <= 0.0):
            raise ValueError("ellipsoid diameters must be positive")
        return cls(np.asarray(center, dtype=float), np.diag((d / 2.0) ** 2))

    def volume_fraction(self):
        return len(self.centers) * 4.0 / 3.0 * np.pi * np.sqrt(np.linalg.det(self.S))

    def indicator(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape[:-1], dtype=bool)
        for c in self.centers:
            d = np.mod(x - c + 0.5, 1.0) - 0.5
            for shift in itertools.product((-1, 0, 1), repeat=3):
                dd = d + np.array(shift)
                inside |= np.einsum("...i,ij,...j->...", dd, self._P, dd) <= 1.0
        return inside

    def fourier3d(self, g):
        g = np.asarray(g, dtype=float)
        k = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", g, self.S, g), 0.0))
        amp = np.sqrt(np.linalg.det(self.S)) * ball_ft(k)
        phase = np.exp(-1j * TWO_PI * (g @ self.centers.T)).sum(axis=-1)
        return amp * phase

    def _extent(self, axis):
        return np.sqrt(self.S[axis, axis])

    def slice_fourier(self, axis, t, g, resolution=64):
        g = np.asarray(g, dtype=float)
        s = list(transverse_axes(axis))
        S = self.S
        ext = self._extent(axis)
        # transverse shape of the section through the centre (Schur complement)
        E0 = S[np.ix_(s, s)] - np.outer(S[s, axis], S[axis, s]) / S[axis, axis]
        shift_dir = S[s, axis] / S[axis, axis]
        out = np.zeros(g.shape[:-1], dtype=complex)
        kq = np.einsum("...i,ij,...j->...", g, E0, g)
        for c in self.centers:
            lo = int(np.ceil(t - c[axis] - ext))
            hi = int(np.floor(t - c[axis] + ext))
            for k in range(lo, hi + 1):
                w = t - c[axis] - k
                rho2 = 1.0 - w * w / S[axis, axis]
                if rho2 <= 0.0:
                    continue
                center2 = c[s] + w * shift_dir
                amp = rho2 * np.sqrt(np.linalg.det(E0))
                keff = np.sqrt(np.maximum(rho2 * kq, 0.0))
                out += amp * disk_ft(keff) * np.exp(-1j * TWO_PI * (g @ center2))
        return out

    def breakpoints(self, axis):
        ext = self._extent(axis)
        return _frac_unique(np.concatenate([self.centers[:, axis] - ext, self.centers[:, axis] + ext]))

    def remapped(self, A):
        A = _as_integer_matrix(A)
        B = np.linalg.inv(A)
        return Ellipsoids(_coset_images(A, self.centers), B @ self.S @ B.T)


@dataclass(frozen=True, eq=False)
class Boxes(Geometry):
    """Identical parallelepipeds ``{x : |G (x - c)|_i <= h_i}`` at each centre."""

    centers: np.ndarray
    G: np.ndarray
    half: np.ndarray
    _Ginv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        G = np.asarray(self.G, dtype=float)
        h = np.asarray(self.half, dtype=float)
        if np.any(h < 0.0):
            raise ValueError("box half-widths must be non-negative")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "half", h)
        object.__setattr__(self, "_Ginv", check_invertible(G, "G"))

    @classmethod
    def axis_aligned(cls, sides, center=(0.5, 0.5, 0.5)) -> "Boxes":
        return cls(np.asarray(center, dtype=float), np.eye(3), np.asarray(sides, dtype=float) / 2.0)

    def volume_fraction(self):
        return len(self.centers) * np.prod(2.0 * self.half) / abs(np.linalg.det(self.G))

    def indicator(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape[:-1], dtype=bool)
        for c in self.centers:
            d = np.mod(x - c + 0.5, 1.0) - 0.5
            for shift in itertools.product((-1, 0, 1), repeat=3):
                y = (d + np.array(shift)) @ self.G.T
                inside |= np.all(np.abs(y) <= self.half, axis=-1)
        return inside

    def fourier3d(self, g):
        g = np.asarray(g, dtype=float)
        k = g @ self._Ginv  # G^{-T} g
        amp = np.prod(2.0 * self.half * np.sinc(2.0 * self.half * k), axis=-1) / abs(np.linalg.det(self.G))
        phase = np.exp(-1j * TWO_PI * (g @ self.centers.T)).sum(axis=-1)
        return amp * phase

    def _vertices_rel(self):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        return (signs * self.half) @ self._Ginv.T

    def _section(self, axis, w):
        """Polygon (relative to the centre) of the section at offset ``w``."""
        s = list(transverse_axes(axis))
        verts = self._vertices_rel()
        lo = verts[:, s].min(axis=0) - 1.0
        hi = verts[:, s].max(axis=0) + 1.0
        poly = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        for i in range(3):
            n = self.G[i, s]
            off = self.G[i, axis] * w
            if np.abs(n).max() < 1e-14:
                if abs(off) > self.half[i]:
                    return np.zeros((0, 2))
                continue
            poly = clip_polygon(poly, n, self.half[i] - off)
            poly = clip_polygon(poly, -n, self.half[i] + off)
            if len(poly) < 3:
                return np.zeros((0, 2))
        return poly

    def slice_fourier(self, axis, t, g, resolution=64):
        g = np.asarray(g, dtype=float)
        s = list(transverse_axes(axis))
        ext = np.abs(self._vertices_rel()[:, axis]).max()
        out = np.zeros(g.shape[:-1], dtype=complex)
        for c in self.centers:
            lo = int(np.ceil(t - c[axis] - ext))
            hi = int(np.floor(t - c[axis] + ext))
            for k in range(lo, hi + 1):
                poly = self._section(axis, t - c[axis] - k)
                if len(poly) < 3:
                    continue
                out += polygon_ft(poly, g) * np.exp(-1j * TWO_PI * (g @ c[s]))
        return out

    def breakpoints(self, axis):
        v = self._vertices_rel()[:, axis]
        return _frac_unique((self.centers[:, axis][:, None] + v[None, :]).ravel())

    def piecewise_constant(self, axis):
        s = list(transverse_axes(axis))
        for i in range(3):
            if np.abs(self.G[i, s]).max() > 1e-14 and abs(self.G[i, axis]) > 1e-14:
                return False
        return True

    def remapped(self, A):
        A = _as_integer_matrix(A)
        return Boxes(_coset_images(A, self.centers), self.G @ A, self.half)


@dataclass(frozen=True, eq=False)
class Voxels(Geometry):
    """Inclusion given on an ``M x M x M`` grid of cells (truthy = inclusion)."""

    grid: np.ndarray
    _fft: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.grid, dtype=float)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ValueError("voxel grid must be M x M x M")
        object.__setattr__(self, "grid", v)
        object.__setattr__(self, "_fft", np.fft.fftn(v))

    @property
    def M(self) -> int:
        return self.grid.shape[0]

    def volume_fraction(self):
        return float(self.grid.mean())

    def indicator(self, x):
        idx = np.minimum(np.floor(np.mod(x, 1.0) * self.M).astype(int), self.M - 1)
        return self.grid[idx[..., 0], idx[..., 1], idx[..., 2]] > 0.5

    def _cell_factor(self, g):
        M = self.M
        return np.prod(np.exp(-1j * np.pi * g / M) * np.sinc(g / M) / M, axis=-1)

    def fourier3d(self, g):
        g = np.asarray(g, dtype=float)
        gi = np.mod(np.round(g).astype(int), self.M)
        dft = self._fft[gi[..., 0], gi[..., 1], gi[..., 2]]
        return self._cell_factor(g) * dft

    def slice_fourier(self, axis, t, g, resolution=64):
        g = np.asarray(g, dtype=float)
        M = self.M
        layer = np.take(self.grid, min(int(np.floor(t * M)), M - 1), axis=axis)
        F = np.fft.fft2(layer)
        gi = np.mod(np.round(g).astype(int), M)
        return self._cell_factor(g) * F[gi[..., 0], gi[..., 1]]

    def breakpoints(self, axis):
        return np.linspace(0.0, 1.0, self.M + 1)

    def piecewise_constant(self, axis):
        return True


@dataclass(frozen=True, eq=False)
class Remapped(Geometry):
    """``chi'(x) = chi(A x mod 1)`` for an integer matrix ``A``.

    3D coefficients are exact: ``chi'(g) = chi(B^T g)`` when ``B^T g`` is
    integral and zero otherwise. Slices use a periodic trapezoid rule.
    """

    base: Geometry
    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _as_integer_matrix(self.A))

    def volume_fraction(self):
        return self.base.volume_fraction()

    def indicator(self, x):
        return self.base.indicator(np.mod(np.asarray(x) @ self.A.T, 1.0))

    def fourier3d(self, g):
        g = np.asarray(g, dtype=float)
        k = g @ np.linalg.inv(self.A)  # B^T g
        kr = np.round(k)
        ok = np.all(np.abs(k - kr) < 1e-9, axis=-1)
        return np.where(ok, self.base.fourier3d(kr), 0.0)

    def slice_fourier(self, axis, t, g, resolution=64):
        g = np.asarray(g, dtype=float)
        R = int(resolution)
        s = transverse_axes(axis)
        u = (np.arange(R) + 0.5) / R
        x = np.empty((R, R, 3))
        x[..., s[0]] = u[:, None]
        x[..., s[1]] = u[None, :]
        x[..., axis] = t
        F = np.fft.fft2(self.indicator(x).astype(float)) / R**2
        gi = np.mod(np.round(g).astype(int), R)
        shift = np.exp(-1j * np.pi * (g[..., 0] + g[..., 1]) / R)
        return shift * F[gi[..., 0], gi[..., 1]]

    def remapped(self, A):
        return Remapped(self.base, self.A @ _as_integer_matrix(A))
