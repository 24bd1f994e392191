import warnings

import numpy as np
import pytest

from phonomog import mm
from phonomog.cell import BAR, EPOXY, STEEL, TILDE, Material, UnitCell
from phonomog.errors import MaterialError, PhonomogWarning, SymmetryError
from phonomog.homogenize import (
    MM,
    PWE,
    convergence_study,
    effective_moduli,
    harmonic_section_mean,
    hashin_shtrikman,
    mm_zero_bound,
    speeds,
    speeds_from_gamma,
    symmetry_defect,
)
from phonomog.tensors import CANONICAL_DIRECTIONS, LATTICE_ROTATIONS, christoffel, random_stiffness


def rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max() / np.abs(np.asarray(b)).max()


@pytest.fixture(scope="module")
def aniso():
    return Material(random_stiffness(np.random.default_rng(5), scale=4e10), 3500.0)


@pytest.fixture(scope="module")
def cube():
    return UnitCell.cube_fraction(EPOXY, STEEL, 1 / 8)


@pytest.mark.parametrize("method", [PWE, MM])
def test_homogeneous_speeds(method):
    for mat, c11, c66 in ((STEEL, 170e9, 80e9), (EPOXY, 7.537e9, 1.482e9)):
        cl, ct = np.sqrt(c11 / mat.rho), np.sqrt(c66 / mat.rho)
        r = effective_moduli(UnitCell.homogeneous(mat), method, 0)
        for k in range(6):
            np.testing.assert_allclose(r.speeds[k], [ct, ct, cl], rtol=1e-12)


@pytest.mark.parametrize("method", [PWE, MM])
def test_homogeneous_anisotropic_reproduces_input(aniso, method):
    r = effective_moduli(UnitCell.homogeneous(aniso), method, 1)
    assert rel(r.voigt, aniso.stiffness.voigt.real) <= 1e-8
    assert r.diagnostics["skew"] < 1e-12


def test_speeds_even_in_direction(cube):
    r = effective_moduli(cube, PWE, 1)
    k = np.array([0.3, -0.4, np.sqrt(0.75)])
    np.testing.assert_allclose(speeds(r, k), speeds(r, -k))


def test_negative_eigenvalue_rejected():
    with pytest.raises(MaterialError):
        speeds_from_gamma(np.diag([1.0, -1.0, 2.0]), 1.0)


def test_pwe_gammas_recontract_from_moduli(cube):
    r = effective_moduli(cube, PWE, 2)
    back = np.array([christoffel(r.c_eff, k) for k in CANONICAL_DIRECTIONS])
    assert rel(back, r.gammas) <= 1e-8


def test_pwe_cube_is_cubic(cube):
    v = effective_moduli(cube, PWE, 2).voigt
    assert abs(v[0, 0] - v[1, 1]) <= 1e-10 * v[0, 0]
    assert abs(v[0, 1] - v[1, 2]) <= 1e-10 * v[0, 0]
    off = v[np.ix_(range(3), range(3, 6))]
    assert np.abs(off).max() <= 1e-10 * v[0, 0]


def test_inconsistent_mm_runs_warn_or_raise(cube):
    with pytest.warns(PhonomogWarning, match="symmetry"):
        r = effective_moduli(cube, MM, 0)
    assert r.diagnostics["skew"] > 1e-2
    assert symmetry_defect(r.c_eff.c) < 1e-14
    with pytest.raises(SymmetryError):
        effective_moduli(cube, MM, 0, strict=True)


@pytest.mark.parametrize("method,N", [(PWE, 1), (MM, 0)])
@pytest.mark.parametrize("formulation", [TILDE, BAR])
def test_oblique_homogeneous_matches_cubic(aniso, method, N, formulation):
    ref = effective_moduli(UnitCell.homogeneous(aniso), method, N).voigt
    for A in LATTICE_ROTATIONS:
        r = effective_moduli(UnitCell.homogeneous(aniso, A), method, N, formulation)
        assert rel(r.voigt, ref) <= 1e-8


def test_oblique_formulations_agree_pwe():
    hard = Material.from_display(200.0, 90.0, 7.7)
    A = np.array([[1, 0, 0], [0, 1, 0], [0, 1, 1]])
    cell = UnitCell.cube(STEEL, hard, 0.5, lattice=A)
    a = effective_moduli(cell, PWE, 2, TILDE).voigt
    b = effective_moduli(cell, PWE, 2, BAR).voigt
    assert rel(a, b) <= 1e-10


def test_mm_zero_bound_equals_mm_at_zero_truncation(cube):
    b = mm_zero_bound(cube)
    for l in range(3):
        assert rel(b.mm_zero[l], mm.cll_eff(cube, l, 0).C) <= 1e-8


def test_voigt_bound_equals_pwe_zero(cube):
    r = effective_moduli(cube, PWE, 0)
    b = mm_zero_bound(cube)
    for k in CANONICAL_DIRECTIONS:
        assert rel(b.gamma_voigt(k), christoffel(r.c_eff, k)) <= 1e-12


def test_bound_for_large_cube_matches_section_formula():
    s = 0.9
    cell = UnitCell.cube(EPOXY, STEEL, s)
    c_e, c_s = 7.537e9, 170e9
    expected = 1.0 / (s / (c_e + s * s * (c_s - c_e)) + (1 - s) / c_e)
    assert mm_zero_bound(cell).mm_zero[0][0, 0].real == pytest.approx(expected, rel=1e-9)
    # limit form as the side tends to one
    near = UnitCell.cube(EPOXY, STEEL, 0.999)
    lim = 1.0 / (1 / c_s + 0.001 / c_e)
    assert mm_zero_bound(near).mm_zero[0][0, 0].real == pytest.approx(lim, rel=2e-3)


def test_harmonic_section_mean_of_laminate():
    lam = UnitCell.laminate(EPOXY, STEEL, 0.5)
    H = harmonic_section_mean(lam, 0).real
    assert H[0, 0] == pytest.approx(1 / (0.5 / 170e9 + 0.5 / 7.537e9), rel=1e-12)


def test_bounds_ordering_on_principal_axes(cube):
    b = mm_zero_bound(cube)
    for l in range(3):
        k = np.eye(3)[l]
        assert np.all(b.speeds_b(k) < b.speeds_voigt(k))
        assert np.all(np.linalg.eigvalsh(b.mm_zero[l]) <= np.linalg.eigvalsh(b.voigt[l]))
    h = mm_zero_bound(UnitCell.homogeneous(STEEL))
    np.testing.assert_allclose(h.speeds_b([1, 2, 3]), h.speeds_voigt([1, 2, 3]), rtol=1e-12)


def test_bound_matrix_off_axis_can_be_indefinite(cube):
    # Voigt off-diagonal blocks plus harmonic principal blocks need not be positive
    b = mm_zero_bound(cube)
    assert np.linalg.eigvalsh(b.gamma_b([1, 1, 0])).min() < 0
    with pytest.raises(MaterialError):
        b.speeds_b([1, 1, 0])
    assert np.linalg.eigvalsh(b.gamma_b([1, 1, 1])).min() > 0


def test_oblique_bound_uses_transformed_direction(aniso):
    plain = mm_zero_bound(UnitCell.homogeneous(aniso))
    tilted = mm_zero_bound(UnitCell.homogeneous(aniso, LATTICE_ROTATIONS[1]))
    k = np.array([0.2, 0.5, -0.8])
    assert rel(tilted.gamma_b(k), plain.gamma_b(k)) <= 1e-10


def test_hashin_shtrikman_limits_and_values(cube):
    for f, mat in ((0.0, EPOXY), (1.0, STEEL)):
        hs = hashin_shtrikman(UnitCell.cube_fraction(EPOXY, STEEL, f))
        c11 = mat.stiffness.c[0, 0, 0, 0].real
        c66 = mat.stiffness.c[0, 1, 0, 1].real
        for lo, hi in (hs.bulk, hs.shear):
            assert lo == pytest.approx(hi)
        assert hs.shear[0] == pytest.approx(c66)
        assert hs.bulk[0] == pytest.approx(c11 - 4 / 3 * c66)
    hs = hashin_shtrikman(cube)
    assert hs.cl == pytest.approx((2150.16, 3135.74), rel=1e-5)
    assert hs.ct == pytest.approx((991.53, 1828.96), rel=1e-5)


def test_hashin_shtrikman_needs_isotropic_phases(aniso):
    with pytest.raises(ValueError):
        hashin_shtrikman(UnitCell.cube(aniso, STEEL, 0.5))


def test_convergence_study_rows(cube):
    rows = convergence_study(cube, methods=(PWE, MM), Ns=(1, 0))
    assert [(r["method"], r["N"]) for r in rows] == [(MM, 0), (MM, 1), (PWE, 0), (PWE, 1)]
    cl = {(r["method"], r["N"]): r["speeds"][-1] for r in rows}
    assert cl[(PWE, 1)] <= cl[(PWE, 0)]
    assert cl[(MM, 1)] <= cl[(MM, 0)]
    for N in (0, 1):
        assert cl[(MM, N)] <= cl[(PWE, N)]
    assert rows[0]["speeds"][-1] == pytest.approx(rows[0]["bound_speeds"][-1], rel=1e-8)


def test_convergence_study_homogeneous_is_flat():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rows = convergence_study(UnitCell.homogeneous(EPOXY), Ns=(0, 1))
    ref = rows[0]["speeds"]
    for r in rows:
        np.testing.assert_allclose(r["speeds"], ref, rtol=1e-10)
        assert r["residual"] == 0.0


def test_speeds_on_canonical_axes_use_direct_runs():
    cell = UnitCell.cube_fraction(EPOXY, STEEL, 0.5)
    with pytest.warns(PhonomogWarning):
        r = effective_moduli(cell, MM, 0)
    np.testing.assert_allclose(speeds(r, [-2, 0, 0]), mm_zero_bound(cell).speeds_b([1, 0, 0]), rtol=1e-10)
    np.testing.assert_array_equal(speeds(r, [1, 1, 0]), r.speeds[5])
    # the symmetrized N = 0 tableau is far from positive off the canonical set
    with pytest.raises(MaterialError):
        speeds(r, np.array([2, 1, 0]) / np.sqrt(5))
