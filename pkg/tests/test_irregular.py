import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stokesqh.irregular import (
    IrregularType,
    centralizer,
    degree,
    degree_sum,
    half_period_parabolic,
    is_one_level,
    levi_chain,
    positivity_cocharacter,
    q_alpha,
    same_pole_degrees,
    singular_directions,
    stokes_space_dim,
)
from stokesqh.lie import RootDatum, UnipotentPattern

from conftest import corpus

T = IrregularType.from_terms


def angles(st):
    return sorted(round(d.angle, 9) for d in st.directions)


def test_type_normalization():
    Q = IrregularType(2, ((2, (0, 0)), (1, (1, 2)), (1, (1, 0))))
    assert Q.pole_orders == (1,)
    assert np.allclose(Q.coefficient(1), [2, 2])
    with pytest.raises(ValueError):
        IrregularType(2, ((0, (1, 2)),))
    with pytest.raises(ValueError):
        IrregularType(2, ((1, (1, 2, 3)),))


def test_json_roundtrip(two_level):
    assert IrregularType.from_json(two_level.to_json()) == two_level


def test_q_alpha():
    Q = T(2, {1: [1, -1]})
    assert q_alpha(Q, (0, 1)) == {1: 2}
    assert q_alpha(Q, (1, 0)) == {1: -2}
    Q3 = T(3, {2: [1, 1, -2], 1: [0, 1, 3]})
    assert q_alpha(Q3, (0, 1)) == {1: -1}
    assert degree(Q3, (0, 1)) == 1


def test_directions_gl2_simple_pole():
    st = singular_directions(T(2, {1: [1, -1]}))
    assert angles(st) == [0.0, round(np.pi, 9)]
    by = {round(d.angle, 9): d.roots for d in st.directions}
    assert by[round(np.pi, 9)] == {(0, 1)}
    assert by[0.0] == {(1, 0)}


def test_directions_gl2_double_pole():
    st = singular_directions(T(2, {2: [1, -1]}))
    assert np.allclose(angles(st), [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert all(len(d.roots) == 1 for d in st.directions)


def test_directions_shared():
    st = singular_directions(T(3, {1: [0, 0, 1]}))
    by = {round(d.angle, 9): d for d in st.directions}
    assert set(by) == {0.0, round(np.pi, 9)}
    assert by[0.0].pattern == UnipotentPattern.of([(0, 2), (1, 2)])


def test_empty_structure():
    st = singular_directions(IrregularType(3))
    assert len(st) == 0 and st.dim() == 0


@pytest.mark.parametrize(
    "Q, parts",
    [
        (IrregularType(3), ((0, 1, 2),)),
        (T(3, {1: [0, 0, 1]}), ((0, 1), (2,))),
        (T(3, {1: [0, 1, 2]}), ((0,), (1,), (2,))),
    ],
)
def test_centralizer(Q, parts):
    assert centralizer(Q) == parts


def test_levi_chain(two_level):
    ch = levi_chain(two_level)
    assert ch.chain == (((0,), (1,), (2,)), ((0, 1), (2,)))
    assert ch.complements[0] == {(0, 1), (1, 0)}
    assert ch.complements[1] == {(0, 2), (2, 0), (1, 2), (2, 1)}
    assert levi_chain(IrregularType(2)).chain == ()
    one = levi_chain(T(3, {1: [0, 1, 2]}))
    assert one.chain == (((0,), (1,), (2,)),) and len(one.complements[0]) == 6


def test_two_level_structure(two_level):
    st = singular_directions(two_level)
    assert np.allclose(st.angles, [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert st.directions[0].roots == {(0, 1), (2, 0), (2, 1)}
    assert st.directions[0].multi_level
    assert stokes_space_dim(two_level) == 22


def test_half_period_gl2():
    Q = T(2, {1: [1, -1]})
    st = singular_directions(Q, cut=0.5)  # order: pi, then 0
    u, info = half_period_parabolic(Q, st, 0)
    assert u == UnipotentPattern.of([(0, 1)]) and info["matches"]
    u2, info2 = half_period_parabolic(Q, st, 1)
    assert u2 == UnipotentPattern.of([(1, 0)]) and info2["matches"]


def test_half_period_gl3_full_triangle():
    Q = T(3, {1: [0, 1, 2]})
    st = singular_directions(Q)
    u, info = half_period_parabolic(Q, st, 0)
    assert len(u) == 3 and info["matches"]
    lam = info["lambda"]
    assert all(lam[i] > lam[j] for i, j in u.positions)


def test_half_period_alternates_double_pole():
    Q = T(2, {2: [1, -1]})
    st = singular_directions(Q)
    pats = [half_period_parabolic(Q, st, i)[0] for i in range(4)]
    assert all(len(p) == 1 for p in pats)
    assert pats[0] == pats[2] and pats[1] == pats[3] and pats[0] == pats[1].opposite()


def test_half_period_needs_one_level(two_level):
    with pytest.raises(ValueError):
        half_period_parabolic(two_level, singular_directions(two_level), 0)


def test_positivity_cocharacter(two_level):
    st = singular_directions(two_level)
    for d in st.directions:
        lam = positivity_cocharacter(two_level, d)
        assert all(lam.pairing(a) > 0 for a in d.roots)
    lam = positivity_cocharacter(two_level, 0.0)
    assert all(lam.pairing(a) > 0 for a in [(2, 0), (2, 1)])


def test_same_pole_degrees():
    A = T(3, {1: [0, 1, 2]})
    assert same_pole_degrees(A, A)
    assert same_pole_degrees(A, T(3, {1: [5, 1j, -2]}))
    assert not same_pole_degrees(A, T(3, {1: [0, 0, 2]}))


@pytest.mark.parametrize("Q", corpus(), ids=lambda Q: f"n{Q.n}k{Q.pole_orders}")
def test_corpus_invariants(Q):
    st = singular_directions(Q)
    assert sum(len(d.roots) for d in st.directions) == degree_sum(Q)
    for d in st.directions:
        assert d.pattern.is_closed()
        assert all(UnipotentPattern(r).is_closed() for _, r in d.levels)
        assert not (d.roots & {(j, i) for i, j in d.roots})
        assert all(positivity_cocharacter(Q, d).pairing(a) > 0 for a in d.roots)
    if is_one_level(Q):
        k = Q.pole_orders[0]
        shifted = sorted(round((a + np.pi / k) % (2 * np.pi), 7) % round(2 * np.pi, 7) for a in st.angles)
        assert np.allclose(shifted, sorted(round(a, 7) for a in st.angles))
        for i in range(len(st)):
            assert half_period_parabolic(Q, st, i)[1]["matches"]


def test_root_count_per_direction():
    Q = T(3, {2: [1, 1, -2], 1: [0, 1, 3]})
    st = singular_directions(Q)
    for a in RootDatum(3).roots:
        assert sum(a in d.roots for d in st.directions) == degree(Q, a)


coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.data())
def test_random_one_level_invariants(n, k, data):
    A = data.draw(st.lists(coef, min_size=n, max_size=n))
    assume(min(abs(a - b) for i, a in enumerate(A) for b in A[i + 1:]) > 1e-3)
    Q = T(n, {k: A})
    sd = singular_directions(Q)
    assert sum(len(d.roots) for d in sd.directions) == degree_sum(Q) == k * n * (n - 1)
    assert len(sd) % (2 * k) == 0
    for d in sd.directions:
        assert d.pattern.is_closed()
        assert not (d.roots & {(j, i) for i, j in d.roots})
    for i in range(len(sd)):
        assert half_period_parabolic(Q, sd, i)[1]["matches"]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.data())
def test_q_alpha_antisymmetric(n, data):
    A = data.draw(st.lists(coef, min_size=n, max_size=n))
    B = data.draw(st.lists(coef, min_size=n, max_size=n))
    Q = T(n, {1: A, 2: B})
    for i in range(n):
        for j in range(n):
            if i != j:
                qa, qb = q_alpha(Q, (i, j)), q_alpha(Q, (j, i))
                assert qa.keys() == qb.keys()
                assert all(np.isclose(qa[m], -qb[m]) for m in qa)
