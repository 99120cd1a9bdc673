"""Explicit maps between quasi-Hamiltonian spaces and a generic pullback tester.

Points of a unipotent-list space are ``[C, h, S_1, ..., S_m]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .irregular import IrregularType, StokesStructure, centralizer, levi_chain, singular_directions
from .lie import BlockGrading, UnipotentPattern, direct_span_factorize, multiply, partition_mask
from .qh.spaces import Fusion, Product, QHSpace, ReducedSpace, UnipotentList

ISOMORPHISM = "isomorphism"
ANTI_ISOMORPHISM = "anti-isomorphism"
TWO_FORM_ONLY = "two-form-only"


@dataclass
class SpaceMorphism:
    source: object
    target: QHSpace
    forward: Callable[[list], list]
    behaviour: str = ISOMORPHISM
    # maps (source moment values, target moment values) -> residual; default compares slot by slot
    moment_check: Callable | None = None
    name: str = "morphism"

    def __call__(self, pt):
        return self.forward(pt)


def _curve(space, pt, batch_row, t: float) -> list:
    out = []
    for f, g, xi in zip(space.factors, pt, batch_row):
        g = np.asarray(g, dtype=complex)
        if f.kind == "linear":
            out.append(g + t * xi)
        else:
            out.append(g @ expm(t * xi))
    return out


def pushforward(F: Callable, source, target: QHSpace, pt, batch, h: float = 1e-3) -> list:
    """Differential of F along each tangent of the batch (fourth-order central differences)."""
    N = batch[0].shape[0]
    img = [np.asarray(x, dtype=complex) for x in F(pt)]
    out = [np.zeros((N,) + f.shape, dtype=complex) for f in target.factors]
    for i in range(N):
        row = [b[i] for b in batch]
        fp1, fm1 = F(_curve(source, pt, row, h)), F(_curve(source, pt, row, -h))
        fp2, fm2 = F(_curve(source, pt, row, 2 * h)), F(_curve(source, pt, row, -2 * h))
        for t, f in enumerate(target.factors):
            d = (8 * (np.asarray(fp1[t]) - fm1[t]) - (np.asarray(fp2[t]) - fm2[t])) / (12 * h)
            out[t][i] = d if f.kind == "linear" else np.linalg.solve(img[t], d)
    return out


def _moment_residual(morph: SpaceMorphism, pt, img) -> float | None:
    if morph.behaviour == TWO_FORM_ONLY and morph.moment_check is None:
        return None
    src = morph.source.moment_values(pt)
    tgt = morph.target.moment_values(img)
    if morph.moment_check is not None:
        return float(morph.moment_check(src, tgt))
    if morph.behaviour == ANTI_ISOMORPHISM:
        src = [np.linalg.inv(m) for m in src]
    return max((float(np.max(np.abs(a - b))) for a, b in zip(src, tgt)), default=0.0)


def verify_pullback(morph: SpaceMorphism, points: Sequence, tol: float = 1e-9) -> dict:
    """Check F^*omega' = +-omega and the moment map relation at each sample point."""
    sign = -1.0 if morph.behaviour == ANTI_ISOMORPHISM else 1.0
    om_res, mu_res = 0.0, 0.0
    for pt in points:
        E = morph.source.tangent_basis(pt)
        if not E or E[0].shape[0] == 0:
            continue
        img = morph.forward(pt)
        morph.target.check_point(img)
        pushed = pushforward(morph.forward, morph.source, morph.target, pt, E)
        lhs = morph.target.omega_matrix(img, pushed)
        rhs = sign * morph.source.omega_matrix(pt, E)
        om_res = max(om_res, float(np.max(np.abs(lhs - rhs))))
        m = _moment_residual(morph, pt, img)
        if m is not None:
            mu_res = max(mu_res, m)
    return {
        "morphism": morph.name,
        "behaviour": morph.behaviour,
        "omega_residual": om_res,
        "moment_residual": mu_res,
        "passed": om_res <= tol and mu_res <= 1e-10,
    }


def identity_morphism(space) -> SpaceMorphism:
    return SpaceMorphism(space, space, lambda pt: [np.array(x) for x in pt], name="identity")


# ---------------------------------------------------------------------------
# Isomonodromy, inversion and twists
# ---------------------------------------------------------------------------


def _like(space: UnipotentList, patterns, name: str) -> UnipotentList:
    return UnipotentList(space.n, patterns, small_mask=space.small_mask, big_mask=space.big_mask, name=name)


def theta(pt) -> list:
    """(C, h, S_1..S_m) -> (S_1 C, h, S_2, ..., S_m, h^-1 S_1 h)."""
    C, h, S = pt[0], pt[1], list(pt[2:])
    if not S:
        return [np.array(C), np.array(h)]
    hi = np.linalg.inv(h)
    return [S[0] @ C, np.array(h)] + [np.array(s) for s in S[1:]] + [hi @ S[0] @ h]


def theta_inverse(pt) -> list:
    D, h, T = pt[0], pt[1], list(pt[2:])
    if not T:
        return [np.array(D), np.array(h)]
    S1 = h @ T[-1] @ np.linalg.inv(h)
    return [np.linalg.inv(S1) @ D, np.array(h), S1] + [np.array(t) for t in T[:-1]]


def theta_morphism(space: UnipotentList) -> SpaceMorphism:
    pats = space.patterns[1:] + space.patterns[:1]
    return SpaceMorphism(space, _like(space, pats, space.name + "'"), theta, ISOMORPHISM, name="theta")


def inversion(pt) -> list:
    """(C, h, S) -> (C, h^-1, T) with T_i = h S_{m+1-i}^-1 h^-1."""
    C, h, S = pt[0], pt[1], list(pt[2:])
    hi = np.linalg.inv(h)
    return [np.array(C), hi] + [h @ np.linalg.inv(s) @ hi for s in reversed(S)]


def inversion_morphism(space: UnipotentList) -> SpaceMorphism:
    target = _like(space, list(reversed(space.patterns)), space.name + "^-1")
    return SpaceMorphism(space, target, inversion, ANTI_ISOMORPHISM, name="inversion")


def twist_inner(pt) -> list:
    C, h, S = pt[0], pt[1], list(pt[2:])
    hi = np.linalg.inv(h)
    return [h @ C, np.array(h)] + [h @ s @ hi for s in S]


def twist_outer(pt) -> list:
    C, h, S = pt[0], pt[1], list(pt[2:])
    b = UnipotentList.b_of(h, S)
    return [np.linalg.solve(b, C), np.array(h)] + [np.array(s) for s in S]


def twist_morphisms(space: UnipotentList) -> tuple[SpaceMorphism, SpaceMorphism]:
    return (SpaceMorphism(space, space, twist_inner, name="twist-inner"),
            SpaceMorphism(space, space, twist_outer, name="twist-outer"))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """w with w e_j = e_perm[j]."""
    n = len(perm)
    w = np.zeros((n, n))
    for j, i in enumerate(perm):
        w[i, j] = 1.0
    return w


def conjugate_by_permutation(space: UnipotentList, perm: Sequence[int]) -> SpaceMorphism:
    """Conjugation by a Weyl permutation normalizing H; relates two-forms only."""
    w = permutation_matrix(perm)
    small = (w @ space.small_mask.astype(float) @ w.T) > 0.5
    big = (w @ space.big_mask.astype(float) @ w.T) > 0.5
    if not np.array_equal(small, space.small_mask) or not np.array_equal(big, space.big_mask):
        raise ValueError("permutation does not normalize the groups of the space")
    pats = [UnipotentPattern.of((perm[i], perm[j]) for i, j in p.positions) for p in space.patterns]
    target = UnipotentList(space.n, pats, small_mask=small, big_mask=big, name=space.name + "^w")

    def fwd(pt):
        return [w @ g @ w.T for g in pt]

    def mcheck(src, tgt):
        return max(float(np.max(np.abs(w @ a @ w.T - b))) for a, b in zip(src, tgt))

    return SpaceMorphism(space, target, fwd, TWO_FORM_ONLY, moment_check=mcheck, name="weyl-conjugation")


def merge_consecutive(space: UnipotentList, groups: Sequence[Sequence[int]]) -> SpaceMorphism:
    """Multiply consecutive unipotent factors together (direct spanning equivalence)."""
    flat = [i for g in groups for i in g]
    if flat != list(range(space.m)) or any(list(g) != list(range(g[0], g[0] + len(g))) for g in groups):
        raise ValueError("groups must partition 0..m-1 into consecutive runs")
    pats = []
    for g in groups:
        u = UnipotentPattern(frozenset().union(*(space.patterns[i].positions for i in g)))
        if not u.is_closed():
            raise ValueError(f"union of patterns {list(g)} is not closed")
        pats.append(u)
    target = _like(space, pats, space.name + "-merged")

    def fwd(pt):
        S = list(pt[2:])
        return [np.array(pt[0]), np.array(pt[1])] + [multiply([S[i] for i in reversed(g)]) for g in groups]

    def back(pt):
        S = list(pt[2:])
        out = [np.array(pt[0]), np.array(pt[1])]
        for g, s in zip(groups, S):
            # S_last ... S_first = merged factor
            fac = direct_span_factorize(s, [space.patterns[i] for i in reversed(g)])
            out.extend(reversed(fac))
        return out

    m = SpaceMorphism(space, target, fwd, ISOMORPHISM, name="merge")
    m.inverse = back
    return m


# ---------------------------------------------------------------------------
# Nesting
# ---------------------------------------------------------------------------


def nest_glue(pt_inner, pt_outer, check: bool = True) -> list:
    """Point (D=1, h, A) of A'(K,H) and (C, k, B) of A''(G,K) -> (C, h, S) of A(G,H)."""
    D, h, A = pt_inner[0], pt_inner[1], list(pt_inner[2:])
    C, k, B = pt_outer[0], pt_outer[1], list(pt_outer[2:])
    if len(A) != len(B):
        raise ValueError("inner and outer spaces need the same number of unipotent factors")
    if check and np.max(np.abs(D - np.eye(D.shape[0]))) > 1e-9:
        raise ValueError("inner connector must be the identity")
    if check and np.max(np.abs(k - UnipotentList.b_of(h, A))) > 1e-9 * max(1.0, np.max(np.abs(k))):
        raise ValueError("constraint k = h A_m ... A_1 violated")
    Ds = [np.eye(D.shape[0], dtype=complex)]
    for a in A:
        Ds.append(a @ Ds[-1])
    S = [Ds[i + 1] @ B[i] @ np.linalg.inv(Ds[i]) for i in range(len(B))]
    return [np.array(C), np.array(h)] + S


@dataclass
class NestingData:
    inner: UnipotentList
    outer: UnipotentList
    glued: ReducedSpace
    target: UnipotentList
    morphism: SpaceMorphism


def nesting(n: int, inner_patterns, outer_patterns, small_mask, mid_mask) -> NestingData:
    """Set up A'(K,H) glued to A''(G,K) along K, mapped into A(G,H)."""
    inner = UnipotentList(n, inner_patterns, small_mask=small_mask, big_mask=mid_mask, name="inner")
    outer = UnipotentList(n, outer_patterns, small_mask=mid_mask, name="outer")
    # groups of the product: [K (inner G), H, G, K (outer H)]
    fused = Fusion(Product([inner, outer]), 0, 3)
    glued = ReducedSpace(fused, 0, {0: np.eye(n)}, name="nest-glue")
    pats = [UnipotentPattern(a.positions | b.positions) for a, b in zip(inner_patterns, outer_patterns)]
    target = UnipotentList(n, pats, small_mask=small_mask, name="nested")
    m_in = len(inner.factors)

    def fwd(pt):
        # off-constraint evaluation is needed for finite differences along tangent curves
        return nest_glue(pt[:m_in], pt[m_in:], check=False)

    def mcheck(src, tgt):
        # source groups after reduction: [H, G]; target groups: [G, H]
        return max(float(np.max(np.abs(src[1] - tgt[0]))), float(np.max(np.abs(src[0] - tgt[1]))))

    morph = SpaceMorphism(glued, target, fwd, ISOMORPHISM, moment_check=mcheck, name="nest-glue")
    return NestingData(inner, outer, glued, target, morph)


def nesting_sample(data: NestingData, rng) -> list:
    """Random point of the glued space: D = 1 and k = h A_m ... A_1."""
    rng = np.random.default_rng(rng)
    p1 = data.inner.random_point(rng)
    p1[0] = np.eye(data.inner.n, dtype=complex)
    p2 = data.outer.random_point(rng)
    p2[1] = UnipotentList.b_of(p1[1], p1[2:])
    return p1 + p2


# ---------------------------------------------------------------------------
# Van den Bergh spaces as reduced fission spaces
# ---------------------------------------------------------------------------


def vdb_fission(dim_v: int, dim_w: int) -> UnipotentList:
    from .qh.spaces import Fission

    return Fission(BlockGrading((dim_v, dim_w)), 2)


def vdb_lift(a, b) -> list:
    """(a, b) in B(V, W) -> slice point (C=1, h, S_1..S_4) with h S_4 S_3 S_2 S_1 = 1."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    dv, dw = a.shape
    Iv, Iw = np.eye(dv), np.eye(dw)
    x = Iv + a @ b
    y = np.linalg.inv(Iw + b @ a)
    c = -np.linalg.solve(x, a)
    f = -(b + b @ a @ b)
    n = dv + dw

    def blk(tl, tr, bl, br):
        return np.block([[tl, tr], [bl, br]]).astype(complex)

    Z = np.zeros((dv, dw))
    S1 = blk(Iv, a, Z.T, Iw)
    S2 = blk(Iv, Z, b, Iw)
    S3 = blk(Iv, c, Z.T, Iw)
    S4 = blk(Iv, Z, f, Iw)
    h = blk(x, Z, Z.T, y)
    return [np.eye(n, dtype=complex), h, S1, S2, S3, S4]


def vdb_relations(pt, dim_v: int) -> dict:
    C, h, S1, S2, S3, S4 = pt
    a = S1[:dim_v, dim_v:]
    b = S2[dim_v:, :dim_v]
    c = S3[:dim_v, dim_v:]
    f = S4[dim_v:, :dim_v]
    x = h[:dim_v, :dim_v]
    y = h[dim_v:, dim_v:]
    Iv, Iw = np.eye(x.shape[0]), np.eye(y.shape[0])
    return {
        "relation": float(np.max(np.abs(h @ S4 @ S3 @ S2 @ S1 - np.eye(h.shape[0])))),
        "slice": float(np.max(np.abs(C - np.eye(C.shape[0])))),
        "x": float(np.max(np.abs(x - (Iv + a @ b)))),
        "y": float(np.max(np.abs(y - np.linalg.inv(Iw + b @ a)))),
        "c": float(np.max(np.abs(c + np.linalg.solve(x, a)))),
        "f": float(np.max(np.abs(f + b + b @ a @ b))),
    }


def vdb_reduce(pt, dim_v: int, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray, dict]:
    """Slice point of the reduced r=2 fission space -> (a, b) in B(V, W)."""
    rel = vdb_relations(pt, dim_v)
    if rel["relation"] > tol or rel["slice"] > tol:
        raise ValueError(f"point is not on the slice variety (residuals {rel})")
    a = np.array(pt[2][:dim_v, dim_v:])
    b = np.array(pt[3][dim_v:, :dim_v])
    return a, b, rel


def vdb_morphism(dim_v: int, dim_w: int) -> SpaceMorphism:
    """B(V, W) -> A^2(G, H) landing in the slice; pulls omega back to the B(V, W) form."""
    from .qh.spaces import VanDenBergh

    src = VanDenBergh(dim_v, dim_w)
    tgt = vdb_fission(dim_v, dim_w)

    def mcheck(s, t):
        mu_g, mu_h = t
        res = float(np.max(np.abs(mu_g - np.eye(mu_g.shape[0]))))
        res = max(res, float(np.max(np.abs(mu_h[:dim_v, :dim_v] - s[0]))))
        return max(res, float(np.max(np.abs(mu_h[dim_v:, dim_v:] - s[1]))))

    return SpaceMorphism(src, tgt, lambda pt: vdb_lift(pt[0], pt[1]), ISOMORPHISM, moment_check=mcheck,
                         name="van-den-bergh")


def edge_reversal(a, b) -> tuple[np.ndarray, np.ndarray]:
    """B(V, W) -> A^2 slice -> theta -> read (b, c) from the first two Stokes factors."""
    a = np.asarray(a, dtype=complex)
    dv = a.shape[0]
    pt = theta(vdb_lift(a, b))
    T1, T2 = pt[2], pt[3]
    return T1[dv:, :dv], T2[:dv, dv:]


# ---------------------------------------------------------------------------
# Level decomposition
# ---------------------------------------------------------------------------


@dataclass
class LevelDecomposition:
    Q: IrregularType
    structure: StokesStructure
    levels: tuple[int, ...]
    S_levels: list  # S_levels[i][j] = S_i^j
    B: list  # B[i][j] = B_i^j
    h_chain: list  # h_1, ..., h_r with h_{j+1} = h_j B^j_s ... B^j_1
    monodromy_original: np.ndarray
    monodromy_twisted: np.ndarray
    spaces: list = field(default_factory=list)  # A(1), ..., A(r)
    points: list = field(default_factory=list)

    @property
    def monodromy_residual(self) -> float:
        return float(np.max(np.abs(self.monodromy_original - self.monodromy_twisted)))


def _level_patterns(st: StokesStructure, k: int) -> list[UnipotentPattern]:
    return [d.level_pattern(k) for d in st.directions]


def level_decompose(Q: IrregularType, pt, structure: StokesStructure | None = None,
                    tol: float = 1e-9) -> LevelDecomposition:
    st = structure or singular_directions(Q)
    ks = Q.pole_orders
    C, h, S = pt[0], pt[1], list(pt[2:])
    s, r = len(S), len(ks)
    if s != len(st):
        raise ValueError("point does not match the Stokes structure")
    n = Q.n
    I = np.eye(n, dtype=complex)
    S_lev = [direct_span_factorize(S[i], [st.directions[i].level_pattern(k) for k in ks]) for i in range(s)]
    B = [[None] * r for _ in range(s)]
    for j in range(r):
        x = I.copy()
        for i in range(s):
            Bij = np.linalg.solve(x, S_lev[i][j] @ x)
            if not st.directions[i].level_pattern(ks[j]).contains_matrix(Bij, tol):
                raise ValueError(f"twisted multiplier B_{i + 1}^{j + 1} leaves its Stokes group")
            B[i][j] = Bij
            x = multiply(S_lev[i][:j]) @ x if j else x
    hs = [np.array(h)]
    for j in range(r):
        hs.append(hs[-1] @ multiply([B[i][j] for i in reversed(range(s))]))
    mono = UnipotentList.b_of(h, S)
    dec = LevelDecomposition(Q, st, ks, S_lev, B, hs, mono, hs[-1])
    chain = levi_chain(Q).chain
    masks = [partition_mask(p, n) for p in chain] + [np.ones((n, n), dtype=bool)]
    for j in range(r):
        sp = UnipotentList(n, _level_patterns(st, ks[j]), small_mask=masks[j], big_mask=masks[j + 1],
                           name=f"level{j + 1}")
        Cj = np.array(C) if j == r - 1 else I.copy()
        dec.spaces.append(sp)
        dec.points.append([Cj, hs[j]] + [B[i][j] for i in range(s)])
    return dec


def level_compose(Q: IrregularType, B, structure: StokesStructure | None = None) -> list[np.ndarray]:
    """Inverse conversion: twisted multipliers B[i][j] -> Stokes multipliers S_i."""
    st = structure or singular_directions(Q)
    ks = Q.pole_orders
    s, r = len(st), len(ks)
    n = Q.n
    S_lev = [[None] * r for _ in range(s)]
    for j in range(r):
        x = np.eye(n, dtype=complex)
        for i in range(s):
            S_lev[i][j] = x @ B[i][j] @ np.linalg.inv(x)
            if j:
                x = multiply(S_lev[i][:j]) @ x
    return [multiply(S_lev[i]) for i in range(s)]
