# ruff: noqa: E741
"""Monodromy-matrix (propagator) solver for one principal block ``C_ll^eff``.

Along axis ``l`` the cell problem becomes the first-order system
``w' = Q0(x_l) w`` for ``w = (u_hat, t_hat)``, the 2D Fourier coefficients of
displacement and of the traction on planes ``x_l = const``. The transverse
wavevectors ``g in [-N, N]^2`` are stored row-major with ``g = 0`` at index
``z = K // 2``; the state layout is ``[u(g_0), ..., u(g_K-1), t(g_0), ...]``
with three components per wavevector.

The propagator over the period is never formed directly. The shifted resolvent
``R = (M0 - alpha I)^{-1}`` obeys ``R' = -R Q0 (I + alpha R)`` and stays bounded,
so it is integrated with RK4 and ``C_ll^eff`` is read from it by a Schur
complement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .cell import UnitCell
from .errors import IntegrationError, MaterialError
from .geometry import transverse_axes

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 2j
ALPHA_REDRAWS = (0.5 + 2j, -1.5 + 1.5j)
DIVERGENCE_FACTOR = 1e12
PRUNE_TOL = 1e-6
HERMITIAN_TOL = 1e-6
_NUDGE = 1e-12


def index_set(N: int) -> np.ndarray:
    """Transverse wavevectors of ``[-N, N]^2``, row-major; the origin is central."""
    if N < 0:
        raise ValueError("truncation N must be non-negative")
    r = np.arange(-N, N + 1, dtype=float)
    return np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)


def matrix_side(N: int) -> int:
    return 6 * (2 * N + 1) ** 2


class _Diverged(Exception):
    pass


@dataclass
class MmSystem:
    """Assembles ``Q0(x_l)`` for one cell, axis and truncation.

    Stiffness is divided by ``cell.scale``; all returned matrices are in those
    units.
    """

    cell: UnitCell
    l: int
    N: int
    resolution: int | None = None
    g: np.ndarray = field(init=False)
    _off: np.ndarray = field(init=False, repr=False)
    _diff: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.axes = transverse_axes(self.l)
        self.g = index_set(self.N)
        self.K = len(self.g)
        self.z = self.K // 2
        if self.resolution is None:
            self.resolution = 8 * (2 * self.N + 1)
        s = self.cell.scale
        cm = self.cell.c_matrix / s
        dc = self.cell.c_delta / s
        self._cm = cm.transpose(1, 3, 0, 2)  # [j, l] blocks
        self._dc = dc.transpose(1, 3, 0, 2)
        M = 2 * self.N
        r = np.arange(-M, M + 1, dtype=float)
        self._diff = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
        gi = self.g.astype(int)
        d = gi[:, None, :] - gi[None, :, :] + M
        self._off = d[..., 0] * (2 * M + 1) + d[..., 1]
        self.homogeneous = self.cell.is_homogeneous

    @property
    def side(self) -> int:
        return 6 * self.K

    def breakpoints(self) -> np.ndarray:
        return self.cell.breakpoints(self.l)

    def coupling(self, t: float) -> np.ndarray:
        """``X[g, g'] = chi_hat(g - g'; t)`` on the section ``x_l = t``."""
        if self.homogeneous:
            return np.zeros((self.K, self.K), dtype=complex)
        vals = self.cell.chi2(self._diff, t, self.l, self.resolution)
        return vals[self._off]

    def _kron(self, X: np.ndarray, left: np.ndarray, j: int, l: int, right: np.ndarray) -> np.ndarray:
        """``kron(diag(left) I diag(right), Cm_jl) + kron(diag(left) X diag(right), dC_jl)``."""
        K = self.K
        out = np.zeros((K, 3, K, 3), dtype=complex)
        idx = np.arange(K)
        out[idx, :, idx, :] = (left * right)[:, None, None] * self._cm[j, l][None]
        out += (left[:, None] * X * right[None, :])[:, None, :, None] * self._dc[j, l][None, :, None, :]
        return out.reshape(3 * K, 3 * K)

    def blocks(self, t: float):
        """``(B, A1, A2)`` at ``x_l = t``."""
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"x_l must lie in [0, 1], got {t}")
        X = self.coupling(t)
        one = np.ones(self.K)
        l = self.l
        B = self._kron(X, one, l, l, one)
        A1 = np.zeros_like(B)
        A2 = np.zeros_like(B)
        for ia, a in enumerate(self.axes):
            ga = self.g[:, ia]
            A1 += self._kron(X, one, l, a, ga)
            for ib, b in enumerate(self.axes):
                A2 += self._kron(X, ga, a, b, self.g[:, ib])
        return B, 2j * np.pi * A1, 4.0 * np.pi**2 * A2

    def q0(self, t: float) -> np.ndarray:
        B, A1, A2 = self.blocks(t)
        B = 0.5 * (B + B.conj().T)
        try:
            fac = linalg.cho_factor(B, lower=True, check_finite=False)
        except linalg.LinAlgError:
            raise MaterialError(f"section stiffness B is not positive definite at x_l={t:.6g}") from None
        n = B.shape[0]
        Binv = linalg.cho_solve(fac, np.eye(n), check_finite=False)
        BA1 = Binv @ A1
        A1h = A1.conj().T
        Q = np.empty((2 * n, 2 * n), dtype=complex)
        Q[:n, :n] = -BA1
        Q[:n, n:] = Binv
        Q[n:, :n] = A2 - A1h @ BA1
        Q[n:, n:] = A1h @ Binv
        return Q

    def section_row(self, t: float, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row operators giving the mean traction on planes normal to ``x_j``.

        Returns ``(P, S)`` with ``mean_j = P @ du_dl + S @ u`` (3 x 3K each).
        """
        X = self.coupling(t)
        one = np.ones(self.K)
        e = np.zeros(self.K)
        e[self.z] = 1.0
        rows = slice(3 * self.z, 3 * self.z + 3)
        P = self._kron(X, one, j, self.l, one)[rows]
        S = np.zeros_like(P)
        for ib, b in enumerate(self.axes):
            S += self._kron(X, one, j, b, self.g[:, ib])[rows]
        return P, 2j * np.pi * S


def panels(bp: np.ndarray, steps: int) -> list[tuple[float, float, int]]:
    """Split ``[0, 1]`` at ``bp`` and share ``steps`` in proportion to length."""
    bp = np.unique(np.concatenate([[0.0, 1.0], np.clip(bp, 0.0, 1.0)]))
    out = []
    for a, b in zip(bp[:-1], bp[1:]):
        if b - a <= 1e-12:
            continue
        out.append((a, b, max(2, int(np.ceil(steps * (b - a))))))
    return out


class _PanelQ:
    """Evaluates ``Q0`` strictly inside a panel (interfaces are one-sided)."""

    def __init__(self, system: MmSystem, a: float, b: float):
        self.s = system
        self.a, self.b = a, b
        self.eps = min(_NUDGE, (b - a) / 4.0)
        self.const = system.cell.geometry.piecewise_constant(system.l)
        self._q = None

    def clamp(self, t: float) -> float:
        return min(max(t, self.a + self.eps), self.b - self.eps)

    def __call__(self, t: float) -> np.ndarray:
        if self.const:
            if self._q is None:
                self._q = self.s.q0(0.5 * (self.a + self.b))
            return self._q
        return self.s.q0(self.clamp(t))


def integrate_resolvent(system: MmSystem, alpha: complex = DEFAULT_ALPHA, steps: int = 512) -> np.ndarray:
    """RK4 for ``R' = -R Q0 (I + alpha R)``, ``R(0) = I / (1 - alpha)``; returns ``R(1)``.

    Raises ``_Diverged`` when ``||R||`` grows past ``1e12 ||R(0)||``.
    """
    if alpha == 1.0:
        raise ValueError("alpha = 1 is excluded")
    n = system.side
    I = np.eye(n, dtype=complex)
    R = I / (1.0 - alpha)
    limit = DIVERGENCE_FACTOR * np.abs(R).max()

    def f(R, Q):
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is checked per panel
            P = R @ Q
            return -(P + alpha * (P @ R))

    for a, b, m in panels(system.breakpoints(), steps):
        Q = _PanelQ(system, a, b)
        # uniform in x_l for constant sections; otherwise uniform in theta with
        # x_l = a + (b - a)(1 - cos theta)/2, which smooths square-root edges
        graded = not Q.const
        h = np.pi / m if graded else (b - a) / m
        Qa = Q(a) * 0.0 if graded else Q(a)
        for k in range(m):
            if graded:
                Qm = _graded_q(Q, a, b, (k + 0.5) * h)
                Qb = _graded_q(Q, a, b, (k + 1) * h)
            else:
                t = a + k * h
                Qm = Q(t + 0.5 * h)
                Qb = Q(t + h)
            k1 = f(R, Qa)
            k2 = f(R + 0.5 * h * k1, Qm)
            k3 = f(R + 0.5 * h * k2, Qm)
            k4 = f(R + h * k3, Qb)
            R = R + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            Qa = Qb
        if not np.isfinite(R).all() or np.abs(R).max() > limit:
            raise _Diverged(f"resolvent diverged near x_l={b:.4g} with alpha={alpha}")
    return R


def _graded_q(Q: "_PanelQ", a: float, b: float, theta: float) -> np.ndarray:
    """``Q0(x(theta)) dx/dtheta`` for the cosine-graded panel map."""
    x = a + 0.5 * (b - a) * (1.0 - np.cos(theta))
    return Q(x) * (0.5 * (b - a) * np.sin(theta))


def monodromy_direct(system: MmSystem, substeps: int = 64, overflow: float = 1e14) -> np.ndarray:
    """Propagator ``M0(1)`` as a product of fourth-order Magnus exponentials.

    Exact for coefficients constant on each panel. Only meant for small ``N``.
    """
    n = system.side
    M = np.eye(n, dtype=complex)
    c = np.sqrt(3.0) / 6.0
    for a, b, m in panels(system.breakpoints(), substeps):
        Q = _PanelQ(system, a, b)
        h = (b - a) / m
        for k in range(m):
            t = a + k * h
            Q1 = Q(t + (0.5 - c) * h)
            Q2 = Q(t + (0.5 + c) * h)
            omega = 0.5 * h * (Q1 + Q2) + (np.sqrt(3.0) / 12.0) * h * h * (Q2 @ Q1 - Q1 @ Q2)
            M = linalg.expm(omega) @ M
            if np.abs(M).max() > overflow:
                raise IntegrationError(
                    f"propagator overflow (|M| > {overflow:g}) at N={system.N}; use the resolvent path"
                )
    return M


def _slices(system: MmSystem):
    K, z = system.K, system.z
    d0 = np.arange(3 * z, 3 * z + 3)
    t0 = 3 * K + d0
    return d0, t0


def transfer_matrix(R: np.ndarray, alpha: complex) -> np.ndarray:
    """``T = (1 - alpha)(I + (alpha - 1) R) = (1 - alpha)(M0 - I) R``."""
    n = R.shape[0]
    return (1.0 - alpha) * (np.eye(n) + (alpha - 1.0) * R)


def pruning_residual(T: np.ndarray, d0: np.ndarray, t0: np.ndarray) -> float:
    """Relative size of the columns/rows of ``T`` that must vanish."""
    nrm = np.abs(T).max()
    return float(max(np.abs(T[:, d0]).max(), np.abs(T[t0, :]).max()) / nrm)


def _hermitize(C: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    skew = 0.5 * (C - C.conj().T)
    herm = 0.5 * (C + C.conj().T)
    rel = np.abs(skew).max() / np.abs(herm).max()
    if rel > tol:
        raise IntegrationError(f"C_ll^eff skew part {rel:.2e} exceeds {tol:g}; increase steps")
    return herm


def schur_solution(T: np.ndarray, d0: np.ndarray, t0: np.ndarray):
    """Solve ``T v = (d, 0)`` with ``v[d0] = 0`` by the pruned Schur complement.

    Returns ``(C, V)``: ``C = (T2 - T1 T3^{-1} T4)^{-1}`` and the map ``V``
    from ``d`` to the full vector ``v``.
    """
    n = T.shape[0]
    rest_r = np.setdiff1d(np.arange(n), np.concatenate([d0, t0]))
    rest_c = rest_r
    T2 = T[np.ix_(d0, t0)]
    T1 = T[np.ix_(d0, rest_c)]
    T4 = T[np.ix_(rest_r, t0)]
    T3 = T[np.ix_(rest_r, rest_c)]
    if len(rest_r):
        try:
            Y = np.linalg.solve(T3, T4)
        except np.linalg.LinAlgError:
            raise IntegrationError("reduced block T3 is singular") from None
        S = T2 - T1 @ Y
    else:
        Y = np.zeros((0, 3))
        S = T2
    C = np.linalg.inv(S)
    V = np.zeros((n, 3), dtype=complex)
    V[t0] = C
    V[rest_c] = -Y @ C
    return C, V


def extract_cll_eff(R: np.ndarray, alpha: complex, system: MmSystem, tol: float = PRUNE_TOL) -> np.ndarray:
    """Scaled ``C_ll^eff`` from ``R(1)``."""
    T = transfer_matrix(R, alpha)
    d0, t0 = _slices(system)
    res = pruning_residual(T, d0, t0)
    if res > tol:
        raise IntegrationError(f"pruning residual {res:.2e} exceeds {tol:g}; increase RK4 steps")
    C, _ = schur_solution(T, d0, t0)
    return _hermitize(C)


def direct_solve_cll(R: np.ndarray, alpha: complex, system: MmSystem) -> np.ndarray:
    """Same quantity from a minimum-norm solve of the unpruned system (SVD)."""
    T = transfer_matrix(R, alpha)
    n = T.shape[0]
    d0, t0 = _slices(system)
    U, s, Vh = np.linalg.svd(T)
    r = n - 3
    Tp = (Vh[:r].conj().T / s[:r]) @ U[:, :r].conj().T
    rhs = np.zeros((n, 3), dtype=complex)
    rhs[d0] = np.eye(3)
    v = Tp @ rhs
    return v[t0]


@dataclass
class CllResult:
    C: np.ndarray  # Pa
    steps: int
    alpha: complex
    change: float
    residual: float
    redraws: int = 0


def _alphas(alpha):
    yield alpha
    for a in ALPHA_REDRAWS:
        if a != alpha:
            yield a


def cll_eff(
    cell: UnitCell,
    l: int,
    N: int,
    alpha: complex = DEFAULT_ALPHA,
    steps: int = 512,
    rtol: float = 1e-8,
    max_steps: int = 2**16,
    resolution: int | None = None,
) -> CllResult:
    """``C_ll^eff`` (Pa) with RK4 step doubling until the relative change is ``<= rtol``."""
    system = MmSystem(cell, l, N, resolution)
    redraws = 0
    for a in _alphas(alpha):
        try:
            return _doubling(system, a, steps, rtol, max_steps, redraws)
        except _Diverged as exc:
            log.warning("%s; re-drawing alpha", exc)
            redraws += 1
    raise IntegrationError(f"resolvent diverged for every alpha tried (axis {l}, N={N})")


def _doubling(system, alpha, steps, rtol, max_steps, redraws):
    s = system.cell.scale
    prev = None
    n = steps
    while True:
        R = integrate_resolvent(system, alpha, n)
        T = transfer_matrix(R, alpha)
        d0, t0 = _slices(system)
        res = pruning_residual(T, d0, t0)
        C = None
        if res <= PRUNE_TOL:
            try:
                C = extract_cll_eff(R, alpha, system)
            except IntegrationError as exc:  # under-resolved; keep doubling
                log.debug("%s", exc)
        if C is not None and prev is not None:
            change = float(np.linalg.norm(C - prev) / np.linalg.norm(C))
            log.debug("axis %d N=%d steps=%d change=%.2e", system.l, system.N, n, change)
            if change <= rtol:
                return CllResult(C * s, n, alpha, change, res, redraws)
        if 2 * n > max_steps:
            raise IntegrationError(
                f"no convergence to {rtol:g} within {max_steps} RK4 steps (axis {system.l}, N={system.N})"
            )
        prev = C
        n *= 2


def propagate(system: MmSystem, w0: np.ndarray, ts: np.ndarray, substeps: int = 64) -> np.ndarray:
    """Forward-propagate states ``w' = Q0 w`` from 0, sampling at sorted ``ts``.

    Uses fourth-order Magnus steps; the forward map grows exponentially with
    ``N``, so this is only accurate at small truncations.
    """
    ts = np.asarray(ts, dtype=float)
    cuts = np.unique(np.concatenate([system.breakpoints(), ts]))
    out = np.empty((len(ts),) + w0.shape, dtype=complex)
    w = w0.astype(complex)
    c = np.sqrt(3.0) / 6.0
    done = {}
    if 0.0 in ts:
        done[0.0] = w.copy()
    for a, b, m in panels(cuts, substeps):
        Q = _PanelQ(system, a, b)
        h = (b - a) / m
        for k in range(m):
            t = a + k * h
            Q1 = Q(t + (0.5 - c) * h)
            Q2 = Q(t + (0.5 + c) * h)
            omega = 0.5 * h * (Q1 + Q2) + (np.sqrt(3.0) / 12.0) * h * h * (Q2 @ Q1 - Q1 @ Q2)
            w = linalg.expm(omega) @ w
        done[b] = w.copy()
    keys = np.array(sorted(done))
    for i, t in enumerate(ts):
        out[i] = done[keys[np.argmin(np.abs(keys - t))]]
    return out


def periodic_state(system: MmSystem, alpha: complex = DEFAULT_ALPHA, steps: int = 1024):
    """Initial states ``w(0)`` of the periodic cell solutions for unit jumps ``d = e_k``.

    Returns ``(W0, C)`` with ``W0`` of shape (side, 3) and the scaled ``C_ll^eff``.
    """
    R = integrate_resolvent(system, alpha, steps)
    T = transfer_matrix(R, alpha)
    d0, t0 = _slices(system)
    C, V = schur_solution(T, d0, t0)
    return (1.0 - alpha) * R @ V, C


def mean_traction_profile(system: MmSystem, j: int, ts: np.ndarray, alpha=DEFAULT_ALPHA, steps=1024, substeps=64):
    """Mean traction on planes normal to ``x_j`` (scaled units) along ``x_l``.

    Entry ``[n, i, k]`` is component ``i`` at ``ts[n]`` for the jump ``d = e_k``.
    For ``j = l`` this is the conserved net force.
    """
    W0, _ = periodic_state(system, alpha, steps)
    W = propagate(system, W0, ts, substeps)
    K = system.K
    out = np.empty((len(ts), 3, 3), dtype=complex)
    for n, t in enumerate(ts):
        tt = min(max(t, _NUDGE), 1.0 - _NUDGE)
        B, A1, _ = system.blocks(tt)
        u, tr = W[n, : 3 * K], W[n, 3 * K :]
        dudl = np.linalg.solve(B, tr - A1 @ u)
        P, S = system.section_row(tt, j)
        out[n] = P @ dudl + S @ u
    return out


def direct_offdiagonal(cell: UnitCell, j: int, l: int, N: int, alpha=DEFAULT_ALPHA, steps=1024, substeps=32):
    """``C_jl^e`` (Pa) by averaging the propagated section tractions over ``x_l``.

    Gauss-Legendre per panel; the forward propagation limits this to small ``N``.
    """
    system = MmSystem(cell, l, N)
    if N * (2 * N + 1) ** 2 > 50:
        log.warning("direct off-diagonal path is poorly conditioned at N=%d", N)
    if j == l:
        return cll_eff(cell, l, N, alpha).C
    W0, _ = periodic_state(system, alpha, steps)
    xg, wg = np.polynomial.legendre.leggauss(8)
    total = np.zeros((3, 3), dtype=complex)
    K = system.K
    w = W0.astype(complex)
    c = np.sqrt(3.0) / 6.0
    for a, b, m in panels(system.breakpoints(), substeps):
        Q = _PanelQ(system, a, b)
        h = (b - a) / m
        for k in range(m):
            t = a + k * h
            nodes = t + 0.5 * h * (xg + 1.0)
            prev = t
            wk = w
            for x, wt in zip(nodes, wg):
                wk = _magnus_step(Q, prev, x, c) @ wk
                prev = x
                B, A1, _ = system.blocks(Q.clamp(x))
                u, tr = wk[: 3 * K], wk[3 * K :]
                dudl = np.linalg.solve(B, tr - A1 @ u)
                P, S = system.section_row(Q.clamp(x), j)
                total += 0.5 * h * wt * (P @ dudl + S @ u)
            w = _magnus_step(Q, prev, t + h, c) @ wk
    return total * cell.scale


def _magnus_step(Q, t0, t1, c):
    h = t1 - t0
    if h <= 0.0:
        return np.eye(Q.s.side, dtype=complex)
    Q1 = Q(t0 + (0.5 - c) * h)
    Q2 = Q(t0 + (0.5 + c) * h)
    omega = 0.5 * h * (Q1 + Q2) + (np.sqrt(3.0) / 12.0) * h * h * (Q2 @ Q1 - Q1 @ Q2)
    return linalg.expm(omega)


# superlattice matrix, run axis and resulting direction index (3 + n)
ROTATED_RUNS = ((0, 1), (1, 2), (2, 0))


def rotated_principal_runs(cell: UnitCell, N: int, **kw) -> tuple[np.ndarray, list[CllResult]]:
    """Christoffel matrices at ``(e2+e3)/sqrt2``, ``(e1+e3)/sqrt2``, ``(e1+e2)/sqrt2``.

    Each comes from a principal run on the same medium viewed on the
    superlattice ``A_n`` and reduced with the four-index transform. Row ``l``
    of ``A_n^{-1}`` is ``kappa / sqrt2``, hence ``Gamma = 2 A C_ll^eff A^T``.
    """
    from .cell import BAR
    from .tensors import LATTICE_ROTATIONS

    if not cell.is_cubic:
        raise ValueError("rotated runs need a cell on the cubic lattice")
    gammas = np.empty((3, 3, 3), dtype=complex)
    results = []
    for n, l in ROTATED_RUNS:
        A = LATTICE_ROTATIONS[n]
        sub = cell.with_lattice(A).to_cubic_equivalent(BAR)
        r = cll_eff(sub, l, N, **kw)
        gammas[n] = 2.0 * A @ r.C @ A.T
        results.append(r)
    return gammas, results
