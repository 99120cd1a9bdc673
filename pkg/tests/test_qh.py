import numpy as np
import pytest

from stokesqh.qh import (
    ConjugacyClass,
    Double,
    Fission,
    InternallyFusedDouble,
    Jet,
    Scaled,
    StokesSpace,
    UnipotentList,
    VanDenBergh,
    fuse,
    fusion_product,
    inv,
    reduce_at_identity,
    theta,
    verify_qh1,
    verify_qh2,
    verify_qh3,
    verify_space,
)
from stokesqh.irregular import stokes_space_dim

from conftest import qh_suite_spaces


@pytest.mark.parametrize("space", qh_suite_spaces(), ids=lambda s: s.name)
def test_qh_axioms(space):
    rng = np.random.default_rng(7)
    rep = verify_space(space, [space.random_point(rng) for _ in range(3)])
    assert rep["passed"], rep["worst"]


def test_jet_algebra(rng):
    a = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    da = rng.normal(size=(2, 3, 3))
    j = Jet(a, da)
    ji = inv(j)
    assert np.allclose(ji.val, np.linalg.inv(a))
    assert np.allclose((j @ ji).der, 0)
    assert np.allclose(theta(j), np.linalg.inv(a) @ da)


def test_dimensions(two_level):
    assert Double(3).dim == 18
    assert Fission((2, 1), 2).dim == 9 + 5 + 2 * 2 * 2
    assert StokesSpace(two_level).dim == stokes_space_dim(two_level) == 22
    assert ConjugacyClass(np.array([1, 2, 2])).dim == 4


def test_double_moment(rng):
    sp = Double(2)
    C, h = sp.random_point(rng)
    m1, m2 = sp.moment_values([C, h])
    assert np.allclose(m1, np.linalg.inv(C) @ h @ C)
    assert np.allclose(m2, np.linalg.inv(h))


def test_unipotent_list_check_point(gl2_simple, rng):
    sp = StokesSpace(gl2_simple)
    pt = sp.random_point(rng)
    sp.check_point(pt)
    bad = [p.copy() for p in pt]
    bad[2] = bad[2].T
    with pytest.raises(ValueError):
        sp.check_point(bad)


def test_fusion_moment(rng):
    sp = fusion_product(Double(2), Double(2), 0, 0)
    pt = sp.random_point(rng)
    mus = sp.moment_values(pt)
    sub = Double(2)
    a, b = sub.moment_values(pt[:2]), sub.moment_values(pt[2:])
    assert np.allclose(mus[0], a[0] @ b[0])
    assert verify_space(sp, [pt])["passed"]


def test_internal_fusion_of_double(rng):
    sp = fuse(Double(2), 0, 1)
    assert len(sp.groups) == 1
    assert verify_space(sp, [sp.random_point(rng)])["passed"]


def test_reduction_of_fused_double_pair(rng):
    # D (x) D reduced with slice C = I: pairs (a, b) and h = [a, b]^-1
    sp = fusion_product(InternallyFusedDouble(2), Double(2), 0, 0)
    red = reduce_at_identity(sp, 0, {2: np.eye(2)})
    a, b = InternallyFusedDouble(2).random_point(rng)
    h = np.linalg.inv(a @ b @ np.linalg.inv(a) @ np.linalg.inv(b))
    pt = [a, b, np.eye(2, dtype=complex), h]
    red.check_point(pt)
    assert red.dim_at(pt) == 16 - 4 - 4
    assert verify_qh2(red, pt)["passed"]
    assert verify_qh3(red, pt)["passed"]


def test_reduction_without_slice_is_degenerate(rng):
    # the residual G-orbit lies in the kernel of omega
    sp = fusion_product(InternallyFusedDouble(2), Double(2), 0, 0)
    red = reduce_at_identity(sp, 0)
    a, b = InternallyFusedDouble(2).random_point(rng)
    h = np.linalg.inv(a @ b @ np.linalg.inv(a) @ np.linalg.inv(b))
    pt = [a, b, np.eye(2, dtype=complex), h]
    assert not verify_qh3(red, pt)["passed"]


def test_scaled_negative_control(rng):
    sp = Scaled(Fission((1, 1), 1), 2.0)
    pt = sp.random_point(rng)
    assert not verify_qh1(sp, pt)["passed"]
    assert not verify_qh2(sp, pt)["passed"]


def test_vdb_requires_invertible(rng):
    sp = VanDenBergh(1, 1)
    with pytest.raises(ValueError):
        sp.check_point([np.array([[1.0]]), np.array([[-1.0]])])


def test_qh1_needs_chart(rng):
    red = reduce_at_identity(Double(2), 0)
    with pytest.raises(TypeError):
        verify_qh1(red, Double(2).identity_point())


def test_equivariance_field_matches_moment(rng):
    sp = UnipotentList(3, Fission((1, 1, 1), 1).patterns)
    rep = verify_space(sp, [sp.random_point(rng)], equivariance=True)
    assert rep["rows"][0]["equivariance"]["passed"]
