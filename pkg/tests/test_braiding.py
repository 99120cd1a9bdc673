import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stokesqh.braiding import (
    DeformationPath,
    InadmissiblePathError,
    Schedule,
    WallEvent,
    apply_cut_crossing,
    detect_events,
    direction_table,
    refactorize,
    transport,
    validate_path,
    verify_transport,
)
from stokesqh.irregular import IrregularType
from stokesqh.lie import UnipotentPattern
from stokesqh.morphisms import theta
from stokesqh.wild import check_relation, is_stable

from conftest import braid_fixture, gl3_collision

U = UnipotentPattern.of
T = IrregularType.from_terms


def flat(rep):
    return np.concatenate([x.ravel() for x in rep.to_point()])


def local(rep, i):
    return [rep.connectors[i], rep.formal[i]] + list(rep.stokes[i])


@pytest.fixture(scope="module")
def braid():
    return braid_fixture()


def test_constant_path(braid):
    Q, _, rep = braid
    path = DeformationPath.constant(1, Q)
    assert validate_path(path) == (True, None)
    assert detect_events(path).events == []
    res = verify_transport(rep, path)
    assert res.report["passed"]
    assert np.abs(flat(res.representation) - flat(rep)).max() == 0


def test_rotating_path_is_admissible():
    path = DeformationPath(0, lambda t: T(2, {1: [np.exp(1j * t), -np.exp(1j * t)]}), np.linspace(0, 1, 9))
    assert validate_path(path)[0]


def test_crossing_eigenvalues_invalid():
    samples = [T(2, {1: [1 - 2 * s, 2 * s - 1]}) for s in np.linspace(0, 1, 5)]
    ok, info = validate_path(DeformationPath.from_samples(0, samples))
    assert not ok and info["time"] == pytest.approx(0.5)


@pytest.mark.parametrize("turns, senses", [(-1, [-1, -1]), (1, [1, 1]), (-0.5, [-1]), (0.5, [1])])
def test_winding_events(braid, turns, senses):
    Q = braid[0]
    sch = detect_events(DeformationPath.wind(1, Q, (0, 1), turns))
    assert [e.kind for e in sch.events] == ["cut-crossing"] * len(senses)
    assert [e.sense for e in sch.events] == senses


def test_winding_loop_is_theta_squared(braid):
    Q, _, rep = braid
    res = verify_transport(rep, DeformationPath.wind(1, Q, (0, 1), -1))
    assert res.report["passed"]
    C, h, S1, S2 = local(rep, 1)
    hi = np.linalg.inv(h)
    target = [S2 @ S1 @ C, h, hi @ S1 @ h, hi @ S2 @ h]
    assert max(np.abs(a - b).max() for a, b in zip(local(res.representation, 1), target)) < 1e-12
    assert max(np.abs(a - b).max() for a, b in zip(theta(theta(local(rep, 1))), target)) < 1e-12


def test_null_homotopic_loop(braid):
    Q, _, rep = braid
    p = DeformationPath.wind(1, Q, (0, 1), 0.7)
    res = verify_transport(rep, p.then(p.reverse()))
    assert res.report["passed"] and len(res.events) == 2
    assert np.abs(flat(res.representation) - flat(rep)).max() < 1e-10


def test_wind_at_first_point_keeps_slice(braid):
    _, Q2, rep = braid
    res = verify_transport(rep, DeformationPath.wind(0, Q2, (0, 1), -1))
    assert res.report["passed"]
    assert np.allclose(res.representation.connectors[0], np.eye(2))


def test_discretization_independent(braid):
    Q, _, rep = braid
    p = DeformationPath.wind(1, Q, (0, 1), -1.3)
    a = transport(rep, p).representation
    b = transport(rep, p.resampled(37)).representation
    assert np.abs(flat(a) - flat(b)).max() < 1e-10


def test_transport_commutes_with_h_action(braid, rng):
    Q, _, rep = braid
    p = DeformationPath.wind(1, Q, (0, 1), -1)
    ks = [np.diag(np.exp(rng.normal(size=2) + 1j * rng.normal(size=2))) for _ in range(2)]
    a = transport(rep.act(ks), p).representation
    b = transport(rep, p).representation.act(ks)
    assert np.abs(flat(a) - flat(b)).max() < 1e-10


def test_corrupted_event_order(braid):
    Q, _, rep = braid
    p = DeformationPath.wind(1, Q, (0, 1), -1)
    sch = detect_events(p)
    flipped = [WallEvent(e.time, e.kind, e.point, -e.sense) for e in sch.events[:1]]
    res = transport(rep, p, Schedule(sch.path, sch.times, flipped))
    assert check_relation(res.representation) < 1e-10
    # the relation survives a wrong sense, but the result no longer matches the true transport
    true = transport(rep, p).representation
    assert np.abs(flat(res.representation) - flat(true)).max() > 1e-3


def test_cut_crossing_identity(braid):
    Q, _, rep = braid
    I = [np.eye(2, dtype=complex)]
    ev = WallEvent(0.0, "cut-crossing", 1, -1)
    ident = type(rep)(rep.curve, [], I * 2, I * 2, [I * 2, I * 2])
    out = apply_cut_crossing(ident, ev)
    assert np.abs(flat(out) - flat(ident)).max() == 0
    back = apply_cut_crossing(apply_cut_crossing(rep, ev), WallEvent(0.0, "cut-crossing", 1, 1))
    assert np.abs(flat(back) - flat(rep)).max() < 1e-13


def test_refactorize_commuting():
    a = np.eye(3, dtype=complex)
    a[0, 1] = 2.0
    b = np.eye(3, dtype=complex)
    b[0, 2] = 3.0
    new = refactorize([a, b], [U([(0, 2)]), U([(0, 1)])])
    assert np.allclose(new[0], b) and np.allclose(new[1], a)


def test_refactorize_heisenberg():
    x, y = 2.0, 3.0
    S12 = np.eye(3, dtype=complex)
    S12[0, 1] = x
    S23 = np.eye(3, dtype=complex)
    S23[1, 2] = y
    # product S12 S23 rewritten as F3 F2 F1 with F1 in U_12, F2 in U_13, F3 in U_23
    F1, F2, F3 = refactorize([S23, S12], [U([(0, 1)]), U([(0, 2)]), U([(1, 2)])])
    assert np.allclose(F3 @ F2 @ F1, S12 @ S23)
    assert F1[0, 1] == pytest.approx(x) and F3[1, 2] == pytest.approx(y)
    assert abs(F2[0, 2]) == pytest.approx(x * y)


def test_gl3_collinear_collision():
    path, rep = gl3_collision()
    sch = detect_events(path)
    coll = [e for e in sch.events if e.kind == "collision"]
    assert len(coll) == 2
    assert all(e.time == pytest.approx(0.5, abs=1e-8) for e in coll)
    supports = {frozenset(e.support.positions) for e in coll}
    assert frozenset({(0, 1), (1, 2), (0, 2)}) in supports
    res = verify_transport(rep, path)
    assert res.report["passed"]
    back = transport(res.representation, path.reverse()).representation
    assert np.abs(flat(back) - flat(rep)).max() < 1e-12


def test_transport_invariants_on_stable_point(braid):
    Q, _, rep = braid
    assert is_stable(rep)
    for turns in (-1, 0.5, 2):
        r = verify_transport(rep, DeformationPath.wind(1, Q, (0, 1), turns)).report
        assert r["passed"] and r["classes"] < 1e-12 and r["stable_after"]


def test_path_must_start_at_point(braid):
    Q, _, rep = braid
    with pytest.raises(ValueError):
        transport(rep, DeformationPath.constant(1, T(2, {1: [2, -1]})))


def test_direction_table(braid):
    rows = direction_table(DeformationPath.wind(1, braid[0], (0, 1), 0.25, steps=4))
    assert rows and all(len(r) == 3 for r in rows)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_refactorize_roundtrip(vals):
    x, y, z = vals
    S12 = np.eye(3, dtype=complex)
    S12[0, 1] = x
    S13 = np.eye(3, dtype=complex)
    S13[0, 2] = z
    S23 = np.eye(3, dtype=complex)
    S23[1, 2] = y
    old = [U([(1, 2)]), U([(0, 2)]), U([(0, 1)])]
    new = [U([(0, 1)]), U([(0, 2)]), U([(1, 2)])]
    fwd = refactorize([S23, S13, S12], new)
    assert np.allclose(fwd[2] @ fwd[1] @ fwd[0], S12 @ S13 @ S23)
    back = refactorize(fwd, old)
    assert max(np.abs(a - b).max() for a, b in zip(back, [S23, S13, S12])) < 1e-12
