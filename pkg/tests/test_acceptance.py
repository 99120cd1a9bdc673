"""Acceptance suite: one PASS/FAIL line per criterion.

Run with pytest (lines appear in the terminal summary) or directly:
``python tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import (  # noqa: E402
    braid_fixture,
    corpus,
    generic_configs,
    gl3_collision,
    gl3_nesting,
    painleve_configs,
    qh_suite_spaces,
)
from stokesqh.braiding import DeformationPath, transport, verify_transport  # noqa: E402
from stokesqh.irregular import (  # noqa: E402
    degree_sum,
    half_period_parabolic,
    is_one_level,
    singular_directions,
    two_level_type,
)
from stokesqh.lie import UnipotentPattern  # noqa: E402
from stokesqh.morphisms import (  # noqa: E402
    edge_reversal,
    inversion_morphism,
    level_compose,
    level_decompose,
    nesting_sample,
    theta_morphism,
    vdb_lift,
    vdb_morphism,
    vdb_relations,
    verify_pullback,
)
from stokesqh.qh import Fission, StokesSpace, verify_space  # noqa: E402
from stokesqh.wild import (  # noqa: E402
    IrregularCurve,
    check_relation,
    expected_dim,
    galois_crosscheck,
    is_generic,
    is_stable,
    numeric_dim_check,
    reducible_example,
    sample_point,
)

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, passed: bool, detail: str) -> bool:
    RESULTS[n] = (bool(passed), detail)
    return bool(passed)


def line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"


def maxdiff(xs, ys):
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(xs, ys))


def criterion_1() -> bool:
    t0 = time.perf_counter()
    failed, worst = [], {"qh1": 0.0, "qh2": 0.0}
    for space in qh_suite_spaces():
        rng = np.random.default_rng(2024)
        rep = verify_space(space, [space.random_point(rng) for _ in range(20)])
        if not rep["passed"]:
            failed.append(space.name)
        for k in worst:
            worst[k] = max(worst[k], rep["worst"].get(k, 0.0))
    dt = time.perf_counter() - t0
    ok = not failed and worst["qh1"] <= 1e-5 and worst["qh2"] <= 1e-10 and dt < 60
    return record(1, ok, f"13 spaces x 20 points, QH1 {worst['qh1']:.1e}, QH2 {worst['qh2']:.1e}, "
                         f"failed {failed or 'none'}, {dt:.1f}s")


def criterion_2() -> bool:
    rng = np.random.default_rng(7)
    rel, om, edge = 0.0, 0.0, 0.0
    ok = True
    for dims in [(1, 1), (2, 1), (2, 2)]:
        M = vdb_morphism(*dims)
        pts = [M.source.random_point(rng) for _ in range(100)]
        for a, b in pts:
            r = vdb_relations(vdb_lift(a, b), dims[0])
            rel = max(rel, max(r.values()))
            b2, c = edge_reversal(a, b)
            target = -np.linalg.solve(np.eye(dims[0]) + a @ b, a)
            edge = max(edge, float(np.abs(b2 - b).max()), float(np.abs(c - target).max()))
        pb = verify_pullback(M, pts)
        om = max(om, pb["omega_residual"])
        ok &= pb["passed"]
    ok &= rel <= 1e-12 and om <= 1e-9 and edge <= 1e-12
    return record(2, ok, f"3 x 100 points, relations {rel:.1e}, two-form {om:.1e}, edge reversal {edge:.1e}")


def criterion_3() -> bool:
    rng = np.random.default_rng(11)
    th_om = th_mu = inv_om = inv_mu = 0.0
    ok = True
    for sp in [Fission((1, 1), 2), Fission((2, 1), 1), Fission((1, 1, 1), 2), StokesSpace(two_level_type())]:
        pts = [sp.random_point(rng) for _ in range(3)]
        a = verify_pullback(theta_morphism(sp), pts)
        b = verify_pullback(inversion_morphism(sp), pts)
        th_om, th_mu = max(th_om, a["omega_residual"]), max(th_mu, a["moment_residual"])
        inv_om, inv_mu = max(inv_om, b["omega_residual"]), max(inv_mu, b["moment_residual"])
        ok &= a["passed"] and b["passed"]
    nd = gl3_nesting()
    nest = verify_pullback(nd.morphism, [nesting_sample(nd, rng) for _ in range(5)])
    ok &= nest["passed"] and th_mu <= 1e-13 and th_om <= 1e-9 and inv_om <= 1e-9
    return record(3, ok, f"theta omega {th_om:.1e} moment {th_mu:.1e}; inversion omega {inv_om:.1e} "
                         f"moment {inv_mu:.1e}; nesting omega {nest['omega_residual']:.1e}")


def criterion_4() -> bool:
    Q = two_level_type()
    sp = StokesSpace(Q)
    rng = np.random.default_rng(13)
    mono = trip = 0.0
    for _ in range(100):
        p = sp.random_point(rng)
        dec = level_decompose(Q, p, sp.structure)
        mono = max(mono, dec.monodromy_residual)
        trip = max(trip, maxdiff(level_compose(Q, dec.B, sp.structure), p[2:]))
    return record(4, mono <= 1e-12 and trip <= 1e-12,
                  f"100 points, round trip {trip:.1e}, monodromy products {mono:.1e}")


def criterion_5() -> bool:
    confs = painleve_configs()
    dims = {label: expected_dim(c, k) for label, (c, k) in confs.items()}
    measured = {}
    for label in [(4, 0, 0, 0, 0), (2, 1, 1)]:
        curve, classes = confs[label]
        rep = sample_point(curve, classes, seed=1)
        chk = numeric_dim_check(curve, classes, rep) if is_stable(rep) else None
        measured[label] = None if chk is None else chk.measured
    ok = all(d == 2 for d in dims.values()) and all(v == 2 for v in measured.values())
    return record(5, ok, f"expected {sorted(set(dims.values()))} over 5 configurations, numeric {measured}")


def criterion_6() -> bool:
    counts, rel = [], 0.0
    ok = True
    for curve, classes in generic_configs():
        ok &= is_generic(curve, classes).generic
        n = 0
        for seed in range(50):
            rep = sample_point(curve, classes, seed=seed)
            rel = max(rel, check_relation(rep))
            n += is_stable(rep)
        counts.append(n)
    red = is_stable(reducible_example())
    ok &= all(c == 50 for c in counts) and rel <= 1e-10 and not red
    return record(6, ok, f"stable counts {counts} of 50, relation {rel:.1e}, reducible stable={red}")


def criterion_7() -> bool:
    agree = total = 0
    curves = [(c, k) for c, k in generic_configs()]
    curves.append((IrregularCurve(0, (two_level_type(),)), None))
    curves.append((IrregularCurve(0, (two_level_type(), two_level_type())), None))
    for curve, classes in curves:
        for seed in range(15):
            rep = sample_point(curve, classes, seed=100 + seed)
            agree += galois_crosscheck(rep)
            total += 1
    rep = reducible_example()
    agree += galois_crosscheck(rep)
    total += 1
    return record(7, agree == total and total >= 50, f"{agree}/{total} samples agree")


def criterion_8() -> bool:
    t0 = time.perf_counter()
    Q, Q2, rep = braid_fixture()
    reports = []
    # null-homotopic loop
    p = DeformationPath.wind(1, Q, (0, 1), 0.7)
    res = verify_transport(rep, p.then(p.reverse()))
    reports.append(res.report)
    null = maxdiff(res.representation.to_point(), rep.to_point())
    # winding loop against the closed form
    res = verify_transport(rep, DeformationPath.wind(1, Q, (0, 1), -1))
    reports.append(res.report)
    C, h, S1, S2 = [rep.connectors[1], rep.formal[1]] + rep.stokes[1]
    hi = np.linalg.inv(h)
    got = [res.representation.connectors[1], res.representation.formal[1]] + res.representation.stokes[1]
    wind = maxdiff(got, [S2 @ S1 @ C, h, hi @ S1 @ h, hi @ S2 @ h])
    # other paths
    for path in [DeformationPath.wind(0, Q2, (0, 1), 1.5), DeformationPath.wind(1, Q, (1, 0), 2)]:
        reports.append(verify_transport(rep, path).report)
    # collision round trip
    cpath, crep = gl3_collision()
    res = verify_transport(crep, cpath)
    reports.append(res.report)
    back = transport(res.representation, cpath.reverse()).representation
    coll = maxdiff(back.to_point(), crep.to_point())
    dt = time.perf_counter() - t0
    inv_ok = all(r["passed"] for r in reports)
    ok = null <= 1e-10 and wind <= 1e-10 and coll <= 1e-12 and inv_ok and dt < 30
    return record(8, ok, f"null loop {null:.1e}, winding vs closed form {wind:.1e}, collision round trip "
                         f"{coll:.1e}, invariants on {len(reports)} paths {'ok' if inv_ok else 'broken'}, {dt:.1f}s")


def criterion_9() -> bool:
    ok, half = True, 0
    for Q in corpus():
        st = singular_directions(Q)
        ok &= sum(len(d.roots) for d in st.directions) == degree_sum(Q)
        for d in st.directions:
            ok &= d.pattern.is_closed()
            ok &= all(UnipotentPattern(r).is_closed() for _, r in d.levels)
        if is_one_level(Q):
            for i in range(len(st)):
                ok &= bool(half_period_parabolic(Q, st, i)[1]["matches"])
                half += 1
    return record(9, ok, f"10 types, {half} half-period windows checked")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n):
    ok = CRITERIA[n - 1]()
    print(line(n))
    assert ok, line(n)


if __name__ == "__main__":
    for i, f in enumerate(CRITERIA, 1):
        try:
            f()
        except Exception as e:  # report and keep going
            record(i, False, f"error: {e!r}")
        print(line(i))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
