import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonomog.cell import EPOXY, STEEL
from phonomog.errors import PhonomogWarning, SingularLatticeError, SymmetryError
from phonomog.tensors import (
    CANONICAL_DIRECTIONS,
    COSSERAT,
    LATTICE_ROTATIONS,
    DTensor,
    StiffnessTensor,
    bar_transform,
    blocks_from_gammas,
    ceff_from_d,
    ceff_from_d_tableau,
    christoffel,
    d_from_ceff,
    d_from_gammas,
    extract_block,
    full_from_voigt,
    random_dtensor,
    random_stiffness,
    rotate,
    tilde_transform,
    total_symmetrization,
)

seeds = st.integers(0, 2**32 - 1)


def rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max() / np.abs(np.asarray(b)).max()


def rotation_about(axis, angle):
    c, s = np.cos(angle), np.sin(angle)
    i, j = [k for k in range(3) if k != axis]
    Q = np.eye(3)
    Q[i, i], Q[i, j], Q[j, i], Q[j, j] = c, -s, s, c
    return Q


def test_isotropic_voigt_lambda_mu_one():
    v = StiffnessTensor.isotropic(1.0, 1.0).voigt.real
    expected = np.diag([3.0, 3, 3, 1, 1, 1])
    expected[:3, :3] += 1.0 - np.eye(3)
    np.testing.assert_array_equal(v, expected)


def test_steel_c12_from_isotropy():
    v = STEEL.stiffness.voigt.real
    assert v[0, 1] == pytest.approx(10e9)
    assert v[0, 0] == pytest.approx(170e9)
    assert v[5, 5] == pytest.approx(80e9)


def test_epoxy_block_11():
    np.testing.assert_allclose(extract_block(EPOXY.stiffness, 0, 0).real, np.diag([7.537e9, 1.482e9, 1.482e9]))


def test_isotropic_block_11():
    lam, mu = 2.0, 0.7
    B = StiffnessTensor.isotropic(lam, mu).block(0, 0).real
    np.testing.assert_allclose(B, np.diag([lam + 2 * mu, mu, mu]))


@given(seeds)
def test_voigt_roundtrip(seed):
    t = random_stiffness(np.random.default_rng(seed))
    assert full_from_voigt(t.voigt).allclose(t, 1e-15)


@given(seeds)
def test_blocks_hermitian_pairs(seed):
    t = random_stiffness(np.random.default_rng(seed))
    for j in range(3):
        for l in range(3):
            np.testing.assert_allclose(extract_block(t, j, l), extract_block(t, l, j).conj().T)


def test_cosserat_rejects_voigt_view():
    t = tilde_transform(STEEL.stiffness, np.array([[1.0, 0.4, 0], [0, 1, 0], [0, 0, 1]]))
    assert t.kind == COSSERAT
    with pytest.raises(SymmetryError):
        t.voigt


def test_minor_symmetry_enforced_for_full_class():
    c = np.array(STEEL.stiffness.c)
    c[0, 1, 0, 0] += 1e9
    c[0, 0, 0, 1] += 1e9
    with pytest.raises(SymmetryError):
        StiffnessTensor(c)


def test_tilde_identity_and_shear_breaks_minor_symmetry():
    t = StiffnessTensor.isotropic(1.0, 1.0)
    assert tilde_transform(t, np.eye(3)).allclose(t, 1e-15)
    B = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
    ct = tilde_transform(t, B).c
    # direct contraction oracle for two entries
    oracle = lambda i, j, k, l: sum(  # noqa: E731
        B[j, p] * B[l, q] * t.c[i, p, k, q] for p in range(3) for q in range(3)
    )
    assert ct[0, 1, 0, 1] == pytest.approx(oracle(0, 1, 0, 1))
    assert ct[1, 0, 0, 1] == pytest.approx(oracle(1, 0, 0, 1))
    assert abs(ct[0, 1, 0, 1] - ct[1, 0, 0, 1]) > 0.1


@given(seeds)
@settings(max_examples=30)
def test_tilde_and_bar_major_symmetry_and_block_relation(seed):
    rng = np.random.default_rng(seed)
    t = random_stiffness(rng)
    B = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    ct, cb = tilde_transform(t, B), bar_transform(t, B)
    assert cb.kind == "full-elastic"
    np.testing.assert_allclose(ct.c, ct.c.transpose(2, 3, 0, 1).conj(), atol=1e-12)
    for j in range(3):
        for l in range(3):
            np.testing.assert_allclose(cb.block(j, l), B @ ct.block(j, l) @ B.T, atol=1e-11)


def test_singular_transform_rejected():
    with pytest.raises(SingularLatticeError):
        tilde_transform(STEEL.stiffness, np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(SingularLatticeError):
        bar_transform(STEEL.stiffness, np.ones((3, 3)))


@pytest.mark.parametrize("n", range(3))
def test_bar_with_lattice_rotation_is_scaled_rotation(n):
    # A_n / sqrt2 is a rotation by pi/4 in the plane normal to e_n
    rng = np.random.default_rng(n)
    t = random_stiffness(rng)
    A = LATTICE_ROTATIONS[n]
    B = np.linalg.inv(A)
    axes = [k for k in range(3) if k != n]
    Q = np.eye(3)
    Q[np.ix_(axes, axes)] = np.sqrt(2.0) * B[np.ix_(axes, axes)]
    S = np.diag(np.where(np.arange(3) == n, 1.0, 1.0 / np.sqrt(2.0)))
    expected = bar_transform(rotate(t, Q), S)
    assert bar_transform(t, B).allclose(expected, 1e-13)
    if n == 0:
        # the in-plane block only: scale factor 1/4
        cb = bar_transform(t, B).c
        cr = rotate(t, Q).c
        assert cb[1, 1, 2, 2] == pytest.approx(cr[1, 1, 2, 2] / 4.0)


def test_christoffel_homogeneous_steel_speeds():
    gam = christoffel(STEEL.stiffness, [1, 0, 0]).real
    np.testing.assert_allclose(gam, np.diag([170e9, 80e9, 80e9]))
    c = np.sqrt(np.linalg.eigvalsh(gam) / 7700.0) / 1e3
    np.testing.assert_allclose(c, [3.223, 3.223, 4.699], atol=1e-3)


@given(seeds, st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
@settings(max_examples=40)
def test_christoffel_even_hermitian_positive(seed, k):
    t = random_stiffness(np.random.default_rng(seed))
    k = np.asarray(k) / np.linalg.norm(k)
    g = christoffel(t, k)
    np.testing.assert_allclose(g, christoffel(t, -k))
    np.testing.assert_allclose(g, g.conj().T)
    assert np.linalg.eigvalsh(g).min() > 0


def test_christoffel_nonunit_warns_or_raises():
    with pytest.warns(PhonomogWarning):
        g = christoffel(STEEL.stiffness, [2.0, 0.0, 0.0])
    np.testing.assert_allclose(g.real, np.diag([170e9, 80e9, 80e9]))
    with pytest.raises(ValueError):
        christoffel(STEEL.stiffness, [2.0, 0.0, 0.0], strict=True)


@given(seeds)
def test_d_roundtrip_involution(seed):
    t = random_stiffness(np.random.default_rng(seed))
    back = ceff_from_d(d_from_ceff(t))
    assert back.allclose(t, 1e-14)


@given(seeds)
def test_d_from_gammas_exact(seed):
    D = random_dtensor(np.random.default_rng(seed))
    gam = np.array([christoffel(D, k) for k in CANONICAL_DIRECTIONS])
    np.testing.assert_allclose(d_from_gammas(gam).d, D.d, atol=1e-12)


@given(seeds)
@settings(max_examples=30)
def test_d_from_gammas_of_stiffness(seed):
    t = random_stiffness(np.random.default_rng(seed))
    gam = np.array([christoffel(t, k) for k in CANONICAL_DIRECTIONS])
    np.testing.assert_allclose(d_from_gammas(gam).d, d_from_ceff(t).d, atol=1e-12)


def test_d_from_gammas_needs_six():
    with pytest.raises(ValueError):
        d_from_gammas(np.zeros((5, 3, 3)))


def test_d_of_isotropic_matches_pair_average():
    t = StiffnessTensor.isotropic(2.0, 1.0)
    gam = np.array([christoffel(t, k) for k in CANONICAL_DIRECTIONS])
    D = d_from_gammas(gam)
    c = t.c
    np.testing.assert_allclose(D.d, 0.5 * (c.transpose(0, 2, 1, 3) + c.transpose(0, 2, 3, 1)), atol=1e-14)


def test_tableau_spot_entries():
    v = np.zeros((6, 6))
    v[5, 5], v[0, 1], v[1, 0] = 3.0, 1.0, 1.0
    c = ceff_from_d_tableau(DTensor.from_voigt(v))
    assert c[0, 1] == pytest.approx(5.0)


@given(seeds)
def test_tableau_matches_total_symmetrization(seed):
    D = random_dtensor(np.random.default_rng(seed))
    tab = ceff_from_d_tableau(D)
    c = 3.0 * total_symmetrization(D.d) - 2.0 * D.d
    np.testing.assert_allclose(tab, StiffnessTensor(c).voigt, atol=1e-12)
    # two spot entries written out
    d = D.voigt
    assert tab[0, 2] == pytest.approx(2 * d[4, 4] - d[0, 2])
    assert tab[3, 3] == pytest.approx(d[1, 2])


@given(seeds)
@settings(max_examples=20)
def test_blocks_from_gammas_reproduce_quadratic_form(seed):
    rng = np.random.default_rng(seed)
    t = tilde_transform(random_stiffness(rng), rng.normal(size=(3, 3)) + 2 * np.eye(3))
    gam = np.array([christoffel(t, k) for k in CANONICAL_DIRECTIONS])
    blocks = blocks_from_gammas(gam)
    k = rng.normal(size=3)
    k /= np.linalg.norm(k)
    np.testing.assert_allclose(christoffel(blocks, k), christoffel(t, k), atol=1e-10)


def test_rotation_helper_is_orthogonal():
    Q = rotation_about(2, 0.3)
    np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-15)
