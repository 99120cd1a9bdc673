import sys

import numpy as np
import pytest

from stokesqh.irregular import IrregularType, two_level_type


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_level():
    return two_level_type()


@pytest.fixture
def gl2_simple():
    return IrregularType.from_terms(2, {1: [1, -1]})


def random_matrix(rng, n, m=None, scale=1.0):
    m = n if m is None else m
    return scale * (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m)))


def corpus():
    """Ten irregular types in GL_2, GL_3, GL_4 (one- and multi-level, with coincident directions)."""
    w = np.exp(2j * np.pi / 3)
    T = IrregularType.from_terms
    return [
        T(2, {1: [1, -1]}),
        T(2, {2: [1, -1]}),
        T(2, {3: [1, -1], 1: [0.5, 0]}),
        T(3, {1: [0, 0, 1]}),
        T(3, {1: [0, 1, 2]}),
        two_level_type(),
        T(3, {2: [1, w, w * w]}),
        T(4, {1: [1, 1j, -1, -1j]}),
        T(4, {2: [1, 1, -1, -1], 1: [0, 1, 0, 2]}),
        T(4, {3: [0, 1, 3j, 2 + 1j], 2: [1, 0, 0, 1], 1: [0.3, 0, -1, 2]}),
    ]


def qh_suite_spaces():
    """Named spaces covered by the QH axiom suite."""
    from stokesqh.qh import ConjugacyClass, Double, Fission, InternallyFusedDouble, StokesSpace, VanDenBergh

    spaces = [ConjugacyClass(np.exp(1j * np.array([0.3, 1.1, 2.0]))), Double(2), InternallyFusedDouble(2)]
    spaces += [Fission(g, r) for g in [(1, 1), (2, 1)] for r in (1, 2, 3)]
    spaces += [VanDenBergh(1, 1), VanDenBergh(2, 1), VanDenBergh(2, 2), StokesSpace(two_level_type())]
    return spaces


def gl3_nesting():
    """Nesting data for the chain T < GL_2 x GL_1 < GL_3."""
    from stokesqh.lie import UnipotentPattern, partition_mask
    from stokesqh.morphisms import nesting

    U = UnipotentPattern.of
    T = partition_mask([[0], [1], [2]], 3)
    K = partition_mask([[0, 1], [2]], 3)
    return nesting(3, [U([(0, 1)]), U([(1, 0)])], [U([(0, 2), (1, 2)]), U([(2, 0), (2, 1)])], T, K)


def generic_configs():
    """Three (curve, classes) pairs passing the genericity test."""
    from stokesqh.wild import ConjugacyClassSpec as K, IrregularCurve

    Z2, Z3 = IrregularType(2), IrregularType(3)
    q = np.exp(0.7j)
    tame3 = (IrregularCurve(0, (Z2,) * 3), [K((q ** (2 ** i), q ** -(2 ** i))) for i in range(3)])
    ev = np.exp(1j * np.array([[0.3, 1.1], [-0.4, 2.0], [0.9, -1.3], [1.7, 0.0]]))
    ev[3, 1] = 1 / np.prod(ev)
    pvi = (IrregularCurve(0, (Z2,) * 4), [K(tuple(row)) for row in ev])
    Q = IrregularType.from_terms(3, {1: [1, np.exp(2j), np.exp(4j)]})
    e = np.exp(1j * np.array([0.4, 1.7, -0.9]))
    f = np.exp(1j * np.array([0.25, 2.9, 1.3]))
    f = f / (np.prod(e) * np.prod(f)) ** (1 / 3)
    gl3 = (IrregularCurve(0, (Q, Z3)), [K(tuple(e)), K(tuple(f))])
    return [tame3, pvi, gl3]


def painleve_configs():
    """GL_2, g = 0 configurations (m, r_1, ..., r_m); r_i is the pole order of Q_i."""
    from stokesqh.wild import ConjugacyClassSpec as K, IrregularCurve

    out = {}
    for label in [(4, 0, 0, 0, 0), (3, 1, 0, 0), (2, 1, 1), (2, 2, 0), (1, 3)]:
        m, rs = label[0], label[1:]
        pts = tuple(IrregularType.from_terms(2, {r: [1, -1]}) if r else IrregularType(2) for r in rs)
        ev = np.exp(1j * np.random.default_rng(5).uniform(0, 6, (m, 2)))
        ev[-1, 1] /= np.prod(ev)
        out[label] = (IrregularCurve(0, pts), [K(tuple(e)) for e in ev])
    return out


def braid_fixture():
    """GL_2 curve with two one-level points and a stable sampled representation."""
    from stokesqh.wild import ConjugacyClassSpec as K, IrregularCurve, sample_point

    Q = IrregularType.from_terms(2, {1: [1, -1]})
    Q2 = IrregularType.from_terms(2, {1: [0.5 + 1j, -0.3]})
    curve = IrregularCurve(0, (Q2, Q))
    classes = [K((np.exp(0.4j), np.exp(1.3j))), K((np.exp(-0.4j), np.exp(-1.3j)))]
    return Q, Q2, sample_point(curve, classes, seed=0)


def gl3_collision():
    """GL_3 path where a_1 - a_2 and a_2 - a_3 become collinear at t = 1/2, with a sampled representation."""
    from stokesqh.braiding import DeformationPath
    from stokesqh.wild import IrregularCurve, sample_point

    def f(t):
        return IrregularType.from_terms(3, {1: [1, 0, -1 + (0.3 - 0.6 * t) * 1j]})

    path = DeformationPath(0, f, np.linspace(0, 1, 9))
    curve = IrregularCurve(0, (f(0.0), IrregularType(3)))
    return path, sample_point(curve, [None, None], seed=1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(n))
