"""Numerical verification of the quasi-Hamiltonian axioms.

QH1  d omega = mu^*(theta^3)/6
QH2  omega(v_X, .) = 1/2 mu^*(theta + theta_bar, X)
QH3  ker omega  meets  ker d mu  only in 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import QHSpace


class StepSizeError(RuntimeError):
    """Finite-difference step too small: halving changes dω by more than the tolerance."""


def _concat(*batches):
    return [np.concatenate(parts) for parts in zip(*batches)]


def _null_space(A: np.ndarray, tol: float) -> np.ndarray:
    """Columns spanning ker A (relative singular value threshold)."""
    if A.shape[1] == 0:
        return np.zeros((0, 0), dtype=complex)
    u, s, vh = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * max(smax, 1.0)))
    return vh[rank:].conj().T


def _d_omega(space: QHSpace, pt, h: float) -> np.ndarray:
    N = space.dim
    D = np.zeros((N, N, N), dtype=complex)
    for i in range(N):
        x = np.zeros(N, dtype=complex)
        x[i] = h
        Wp = space.omega_matrix(space.chart_point(pt, x), space.chart_tangents(pt, x))
        Wm = space.omega_matrix(space.chart_point(pt, -x), space.chart_tangents(pt, -x))
        D[i] = (Wp - Wm) / (2 * h)
    # d omega(e_i, e_j, e_k) = d_i w_jk - d_j w_ik + d_k w_ij
    return D - D.transpose(1, 0, 2) + D.transpose(1, 2, 0)


def cubic_term(space: QHSpace, pt) -> np.ndarray:
    """mu^*(theta^3)/6 on the chart coordinate fields: 1/2 sum over groups of Tr X_i [X_j, X_k]."""
    N = space.dim
    E = space.chart_tangents(pt, np.zeros(N, dtype=complex))
    out = np.zeros((N, N, N), dtype=complex)
    for th, _ in space.moment_forms(pt, E):
        t1 = np.einsum("iab,jbc,kca->ijk", th, th, th)
        out += 0.5 * (t1 - t1.transpose(0, 2, 1))
    return out


def verify_qh1(space: QHSpace, pt, step: float = 1e-4, tol: float = 1e-5) -> dict:
    if not getattr(space, "charted", False):
        raise TypeError("QH1 check needs a charted space")
    N = space.dim
    if N == 0:
        return {"residual": 0.0, "step": step, "halving": 0.0, "passed": True}
    rhs = cubic_term(space, pt)
    d1 = _d_omega(space, pt, step)
    d2 = _d_omega(space, pt, step / 2)
    res = float(np.max(np.abs(d1 - rhs)))
    halving = float(np.max(np.abs(d1 - d2)))
    if halving > tol and float(np.max(np.abs(d2 - rhs))) > res:
        raise StepSizeError(f"step {step} gives halving disagreement {halving:.2e}")
    return {"residual": res, "step": step, "halving": halving, "passed": res <= tol}


def verify_qh2(space, pt, tol: float = 1e-10) -> dict:
    E = space.tangent_basis(pt)
    N = E[0].shape[0] if E else 0
    forms = space.moment_forms(pt, E)
    res = 0.0
    for k, G in enumerate(space.groups):
        Xs = G.basis()
        if len(Xs) == 0 or N == 0:
            continue
        V = space.fundamental(pt, k, Xs)
        Om = space.omega_matrix(pt, _concat(V, E))
        lhs = Om[: len(Xs), len(Xs):]
        th, thb = forms[k]
        rhs = 0.5 * np.einsum("jab,xba->xj", th + thb, Xs)
        res = max(res, float(np.max(np.abs(lhs - rhs))))
    return {"residual": res, "passed": res <= tol}


def verify_qh3(space, pt, tol: float = 1e-8) -> dict:
    E = space.tangent_basis(pt)
    N = E[0].shape[0] if E else 0
    if N == 0:
        return {"sigma_min": None, "passed": True, "kernel_dim": 0, "kernel_match": True}
    Om = space.omega_matrix(pt, E)
    forms = space.moment_forms(pt, E)
    dmu = [th[:, G.mask] for (th, _), G in zip(forms, space.groups)]
    A = np.concatenate([Om.T] + [d.T for d in dmu], axis=0)
    s = np.linalg.svd(A, compute_uv=False)
    rel = float(s[-1] / max(s[0], 1.0))

    # ker omega against {v_X : Ad_mu X = -X}
    ker = _null_space(Om, 1e-9)
    mus = space.moment_values(pt)
    vs = []
    for k, (G, mu) in enumerate(zip(space.groups, mus)):
        B = G.basis()
        if len(B) == 0:
            continue
        img = mu @ B @ np.linalg.inv(mu) + B
        M = img[:, G.mask].T  # columns = basis elements
        nul = _null_space(M, 1e-9)
        if nul.size:
            Xs = np.tensordot(nul.T, B, axes=1)
            vs.append(space.coords(pt, space.fundamental(pt, k, Xs)))
    if vs:
        V = np.concatenate(vs)
        sv = np.linalg.svd(V, compute_uv=False)
        span = int(np.sum(sv > 1e-9 * max(sv[0], 1.0)))
        in_kernel = float(np.max(np.abs(V @ Om))) if V.size else 0.0
    else:
        span, in_kernel = 0, 0.0
    match = span == ker.shape[1] and in_kernel <= 1e-8
    return {
        "sigma_min": rel,
        "passed": rel > tol,
        "kernel_dim": int(ker.shape[1]),
        "ad_minus_one_dim": span,
        "kernel_match": bool(match),
    }


def verify_equivariance(space: QHSpace, pt, gs, tol: float = 1e-9) -> dict:
    mus = space.moment_values(pt)
    pt2 = space.act_point(gs, pt)
    mus2 = space.moment_values(pt2)
    mu_res = max(
        (float(np.max(np.abs(m2 - g @ m @ np.linalg.inv(g)))) for m, m2, g in zip(mus, mus2, gs)),
        default=0.0,
    )
    E = space.tangent_basis(pt)
    if E and E[0].shape[0]:
        pt3, E2 = space.push_action(gs, pt, E)
        om_res = float(np.max(np.abs(space.omega_matrix(pt3, E2) - space.omega_matrix(pt, E))))
    else:
        om_res = 0.0
    return {"moment": mu_res, "omega": om_res, "passed": mu_res <= 1e-10 and om_res <= tol}


@dataclass
class Tolerances:
    qh1: float = 1e-5
    qh2: float = 1e-10
    qh3: float = 1e-8
    equivariance: float = 1e-9
    step: float = 1e-4


def verify_space(space, points, tol: Tolerances | None = None, equivariance: bool = True, seed: int = 0) -> dict:
    """Run every applicable check at each point and collect a JSON-ready report."""
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    rows = []
    for idx, pt in enumerate(points):
        row = {"point": idx}
        if getattr(space, "charted", False):
            row["qh1"] = verify_qh1(space, pt, tol.step, tol.qh1)
        row["qh2"] = verify_qh2(space, pt, tol.qh2)
        row["qh3"] = verify_qh3(space, pt, tol.qh3)
        if equivariance and getattr(space, "charted", False):
            gs = [G.random(rng) for G in space.groups]
            row["equivariance"] = verify_equivariance(space, pt, gs, tol.equivariance)
        row["passed"] = all(v["passed"] for k, v in row.items() if isinstance(v, dict))
        rows.append(row)
    worst = {}
    for key in ("qh1", "qh2", "equivariance"):
        vals = [r[key]["residual" if key != "equivariance" else "omega"] for r in rows if key in r]
        if vals:
            worst[key] = max(vals)
    qh3 = [r["qh3"]["sigma_min"] for r in rows if r["qh3"]["sigma_min"] is not None]
    if qh3:
        worst["qh3_sigma_min"] = min(qh3)
    return {"space": space.name, "points": len(rows), "passed": all(r["passed"] for r in rows),
            "worst": worst, "rows": rows}
