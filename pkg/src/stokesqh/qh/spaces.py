"""Charted quasi-Hamiltonian spaces with exact two-forms and moment maps.

A point is a list of matrices, one per factor.  Tangent vectors are handled in
batches: a list with one array of shape (N, r, c) per factor, holding the
left-trivialized value xi (dg = g xi) for group and unipotent factors and the
plain increment for linear factors.

Each space writes its two-form as 2 omega = sum coef * (L, R), where L and R are
Lie-algebra valued one-forms and (L, R)(u, v) = Tr L(u) R(v) - Tr L(v) R(u).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from ..lie import BlockGrading, UnipotentPattern
from .jets import Jet, inv, mat_product, theta, theta_bar, value

# Global normalization of the two-form relative to the axioms.  Calibrated on
# the double; any other value makes QH2 fail.
OMEGA_SCALE = 1.0

Batch = list  # list of (N, r, c) arrays, one per factor


def _masked_basis(mask: np.ndarray) -> np.ndarray:
    idx = np.argwhere(mask)
    out = np.zeros((len(idx),) + mask.shape, dtype=complex)
    for t, (i, j) in enumerate(idx):
        out[t, i, j] = 1.0
    return out


def _disk(rng: np.random.Generator, shape, radius: float = 0.5) -> np.ndarray:
    r = radius * np.sqrt(rng.random(shape))
    return r * np.exp(2j * np.pi * rng.random(shape))


@dataclass(eq=False)
class Factor:
    """One matrix coordinate of a charted space."""

    name: str
    kind: str  # "group", "unipotent" or "linear"
    shape: tuple[int, int]
    tangent_mask: np.ndarray
    support_mask: np.ndarray | None = None  # allowed support of g (or g - I); None = anything

    @property
    def dim(self) -> int:
        return int(self.tangent_mask.sum())

    def basis(self) -> np.ndarray:
        return _masked_basis(self.tangent_mask)

    def check(self, g: np.ndarray, tol: float = 1e-9) -> None:
        g = np.asarray(g)
        if g.shape != self.shape:
            raise ValueError(f"factor {self.name}: shape {g.shape}, expected {self.shape}")
        scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
        if self.kind == "linear":
            return
        if self.support_mask is not None:
            if self.kind == "unipotent":
                dev = g - np.eye(self.shape[0])
            else:
                dev = g
            if np.any(np.abs(dev[~self.support_mask]) > tol * scale):
                raise ValueError(f"factor {self.name}: support violates its group")
        if self.kind == "unipotent" and np.any(np.abs(np.diag(g) - 1) > tol * scale):
            raise ValueError(f"factor {self.name}: not unipotent")
        if self.kind == "group":
            s = np.linalg.svd(g, compute_uv=False)
            if s[-1] <= 1e-12 * s[0]:
                raise ValueError(f"factor {self.name}: singular matrix")

    def random(self, rng: np.random.Generator, radius: float = 0.5) -> np.ndarray:
        r, c = self.shape
        if self.kind == "linear":
            return _disk(rng, (r, c), radius)
        mask = self.support_mask if self.support_mask is not None else np.ones((r, c), dtype=bool)
        for _ in range(100):
            x = _disk(rng, (r, c), radius) * mask
            if self.kind == "unipotent":
                return np.eye(r) + x * ~np.eye(r, dtype=bool)
            g = np.eye(r) + x
            if np.linalg.cond(g) < 1e3:
                return g
        raise RuntimeError(f"could not draw a well-conditioned element for {self.name}")


@dataclass(eq=False)
class GroupFactor:
    """An acting group: GL_n or a block-diagonal Levi given by its Lie-algebra support."""

    name: str
    n: int
    mask: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.mask.sum())

    def basis(self) -> np.ndarray:
        return _masked_basis(self.mask)

    def same_as(self, other: "GroupFactor") -> bool:
        return self.n == other.n and np.array_equal(self.mask, other.mask)

    def random(self, rng, radius: float = 0.5) -> np.ndarray:
        return Factor(self.name, "group", (self.n, self.n), self.mask, self.mask).random(rng, radius)


def full_mask(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=bool)


def _dexp_left(M: np.ndarray, E: np.ndarray) -> np.ndarray:
    """exp(-M) d/dt exp(M + tE) at t=0, batched over E."""
    if np.linalg.norm(M) < 0.3:
        term = E.copy()
        out = E.copy()
        fact = 1.0
        for k in range(1, 14):
            term = M @ term - term @ M
            fact *= k + 1
            out = out + ((-1) ** k / fact) * term
        return out
    n = M.shape[0]
    res = []
    for e in E:
        big = np.zeros((2 * n, 2 * n), dtype=complex)
        big[:n, :n] = M
        big[n:, n:] = M
        big[:n, n:] = e
        X = expm(big)
        res.append(np.linalg.solve(X[:n, :n], X[:n, n:]))
    return np.array(res)


class QHSpace:
    """Base class for charted quasi-Hamiltonian spaces."""

    name: str = "space"
    factors: list[Factor]
    groups: list[GroupFactor]
    charted = True

    # -- to be provided by subclasses -------------------------------------
    def moment(self, pt):
        raise NotImplementedError

    def act(self, gs, pt):
        raise NotImplementedError

    def form_terms(self, jets) -> list:
        raise NotImplementedError

    # -- generic machinery ------------------------------------------------
    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "factors": [{"name": f.name, "kind": f.kind, "dim": f.dim} for f in self.factors],
            "groups": [{"name": g.name, "dim": g.dim} for g in self.groups],
        }

    def check_point(self, pt, tol: float = 1e-9) -> None:
        if len(pt) != len(self.factors):
            raise ValueError(f"{self.name}: expected {len(self.factors)} factors, got {len(pt)}")
        for f, g in zip(self.factors, pt):
            f.check(g, tol)

    def random_point(self, rng: np.random.Generator | int | None = None, radius: float = 0.5) -> list:
        rng = np.random.default_rng(rng)
        return [f.random(rng, radius) for f in self.factors]

    def identity_point(self) -> list:
        return [
            np.zeros(f.shape, dtype=complex) if f.kind == "linear" else np.eye(f.shape[0], dtype=complex)
            for f in self.factors
        ]

    def empty_batch(self, N: int) -> Batch:
        return [np.zeros((N,) + f.shape, dtype=complex) for f in self.factors]

    def tangent_basis(self, pt=None) -> Batch:
        N = self.dim
        out = self.empty_batch(N)
        start = 0
        for t, f in enumerate(self.factors):
            out[t][start:start + f.dim] = f.basis()
            start += f.dim
        return out

    def coords(self, pt, batch: Batch) -> np.ndarray:
        """Coordinates (N x dim) of a tangent batch in the chart basis."""
        cols = [b[:, f.tangent_mask] for f, b in zip(self.factors, batch)]
        return np.concatenate(cols, axis=1) if cols else np.zeros((0, 0))

    def lift(self, pt, batch: Batch) -> list[Jet]:
        jets = []
        for f, g, xi in zip(self.factors, pt, batch):
            g = np.asarray(g, dtype=complex)
            jets.append(Jet(g, xi if f.kind == "linear" else g @ xi))
        return jets

    def trivialize(self, jets: Sequence[Jet]) -> Batch:
        out = []
        for f, j in zip(self.factors, jets):
            out.append(j.der if f.kind == "linear" else np.linalg.inv(j.val) @ j.der)
        return out

    def omega_matrix(self, pt, batch: Batch) -> np.ndarray:
        """omega(u_i, u_j) for all pairs in the batch."""
        N = batch[0].shape[0] if batch else 0
        if N == 0:
            return np.zeros((0, 0), dtype=complex)
        M = np.zeros((N, N), dtype=complex)
        for coef, L, R in self.form_terms(self.lift(pt, batch)):
            M += coef * np.einsum("iab,jba->ij", L, R)
        return 0.5 * OMEGA_SCALE * (M - M.T)

    def omega(self, pt, u: Batch, v: Batch) -> complex:
        both = [np.concatenate([a, b]) for a, b in zip(u, v)]
        return complex(self.omega_matrix(pt, both)[0, 1])

    def moment_forms(self, pt, batch: Batch) -> list[tuple[np.ndarray, np.ndarray]]:
        mus = self.moment(self.lift(pt, batch))
        return [(theta(m), theta_bar(m)) for m in mus]

    def moment_values(self, pt) -> list[np.ndarray]:
        return [value(m) for m in self.moment([np.asarray(g, dtype=complex) for g in pt])]

    def fundamental(self, pt, k: int, Xs: np.ndarray) -> Batch:
        """Fundamental vector fields v_X = -d/dt exp(tX).p for X in Xs (group k)."""
        Xs = np.asarray(Xs, dtype=complex)
        N = Xs.shape[0]
        gs = []
        for t, G in enumerate(self.groups):
            gs.append(Jet(np.eye(G.n), Xs if t == k else np.zeros((N, G.n, G.n))))
        jets = [Jet.const(g, N) for g in pt]
        out = self.act(gs, jets)
        return [-x for x in self.trivialize(out)]

    def act_point(self, gs, pt) -> list:
        return [value(x) for x in self.act([np.asarray(g, dtype=complex) for g in gs], [np.asarray(p) for p in pt])]

    def push_action(self, gs, pt, batch: Batch):
        """Image point and pushed tangent batch under the action of gs."""
        out = self.act([np.asarray(g, dtype=complex) for g in gs], self.lift(pt, batch))
        return [j.val for j in out], self.trivialize(out)

    # -- chart --------------------------------------------------------------
    def chart_point(self, pt, x: np.ndarray) -> list:
        out, start = [], 0
        for f, g in zip(self.factors, pt):
            xs = x[start:start + f.dim]
            start += f.dim
            M = np.tensordot(xs, f.basis(), axes=1) if f.dim else np.zeros(f.shape, dtype=complex)
            out.append(g @ expm(M) if f.kind == "group" else g + M)
        return out

    def chart_tangents(self, pt, x: np.ndarray) -> Batch:
        """Coordinate vector fields of the chart at chart_point(pt, x)."""
        N = self.dim
        out = self.empty_batch(N)
        start = 0
        for t, (f, g) in enumerate(zip(self.factors, pt)):
            xs = x[start:start + f.dim]
            E = f.basis()
            M = np.tensordot(xs, E, axes=1) if f.dim else np.zeros(f.shape, dtype=complex)
            if f.dim:
                if f.kind == "group":
                    out[t][start:start + f.dim] = _dexp_left(M, E)
                elif f.kind == "unipotent":
                    out[t][start:start + f.dim] = np.linalg.inv(g + M) @ E
                else:
                    out[t][start:start + f.dim] = E
            start += f.dim
        return out


# ---------------------------------------------------------------------------
# Concrete spaces
# ---------------------------------------------------------------------------


class ConjugacyClass(QHSpace):
    """Conjugacy class of a diagonal element R, charted by k with g = k R k^-1."""

    def __init__(self, representative, name: str | None = None):
        R = np.asarray(representative, dtype=complex)
        if R.ndim == 1:
            R = np.diag(R)
        if np.any(np.abs(R - np.diag(np.diag(R))) > 0):
            raise ValueError("conjugacy class representative must be diagonal")
        n = R.shape[0]
        d = np.diag(R)
        self.R = R
        self.n = n
        centr = np.abs(d[:, None] - d[None, :]) <= 1e-12
        self.name = name or f"class{n}"
        self.factors = [Factor("k", "group", (n, n), ~centr, None)]
        self.groups = [GroupFactor("G", n, full_mask(n))]

    def element(self, pt) -> np.ndarray:
        k = np.asarray(pt[0])
        return k @ self.R @ np.linalg.inv(k)

    def moment(self, pt):
        k = pt[0]
        return [k @ self.R @ inv(k)]

    def act(self, gs, pt):
        return [gs[0] @ pt[0]]

    def form_terms(self, jets):
        k = jets[0]
        kb = theta_bar(k)
        mu = k.val @ self.R @ np.linalg.inv(k.val)
        return [(1.0, kb, mu @ kb @ np.linalg.inv(mu))]


class UnipotentList(QHSpace):
    """G x H x U_1 x ... x U_m with the fission-type two-form.

    The big group G and the small group H are block-diagonal Levis (masks); each
    pattern U_i must be normalized by H.  Points are [C, h, S_1, ..., S_m].
    """

    def __init__(self, n: int, patterns: Sequence[UnipotentPattern], small_mask=None, big_mask=None,
                 name: str = "unipotent-list"):
        self.n = n
        self.big_mask = full_mask(n) if big_mask is None else np.asarray(big_mask, dtype=bool)
        self.small_mask = full_mask(n) if small_mask is None else np.asarray(small_mask, dtype=bool)
        self.patterns = list(patterns)
        self.name = name
        for p in self.patterns:
            if not p.is_closed() or not p.is_nilpotent():
                raise ValueError("pattern is not a unipotent group")
            if np.any(p.mask(n) & ~self.big_mask):
                raise ValueError("pattern leaves the big group")
        if np.any(self.small_mask & ~self.big_mask):
            raise ValueError("small group is not contained in the big group")
        self.factors = [
            Factor("C", "group", (n, n), self.big_mask, self.big_mask),
            Factor("h", "group", (n, n), self.small_mask, self.small_mask),
        ] + [Factor(f"S{i + 1}", "unipotent", (n, n), p.mask(n), p.mask(n)) for i, p in enumerate(self.patterns)]
        self.groups = [GroupFactor("G", n, self.big_mask), GroupFactor("H", n, self.small_mask)]

    @property
    def m(self) -> int:
        return len(self.patterns)

    @staticmethod
    def split(pt):
        return pt[0], pt[1], list(pt[2:])

    @staticmethod
    def b_of(h, S):
        """b = h S_m ... S_1."""
        return mat_product([h] + list(reversed(S))) if S else h

    def moment(self, pt):
        C, h, S = self.split(pt)
        b = self.b_of(h, S)
        return [inv(C) @ b @ C, inv(h)]

    def act(self, gs, pt):
        g, k = gs
        C, h, S = self.split(pt)
        ki = inv(k)
        return [k @ C @ inv(g), k @ h @ ki] + [k @ s @ ki for s in S]

    def form_terms(self, jets):
        C, h, S = self.split(jets)
        Cs = [C]
        for s in S:
            Cs.append(s @ Cs[-1])
        b = self.b_of(h, S)
        gb = theta_bar(C)
        bv = b.val
        terms = [
            (1.0, gb, bv @ gb @ np.linalg.inv(bv)),
            (1.0, gb, theta_bar(b)),
            (1.0, theta_bar(Cs[-1]), theta(h)),
        ]
        gam = [theta(c) for c in Cs]
        for i in range(1, len(Cs)):
            terms.append((-1.0, gam[i], gam[i - 1]))
        return terms

    def random_point(self, rng=None, radius: float = 0.5):
        rng = np.random.default_rng(rng)
        return [f.random(rng, radius) for f in self.factors]


def Double(n: int) -> UnipotentList:
    """The double D = G x G with moment map (C^-1 h C, h^-1)."""
    return UnipotentList(n, [], name=f"double{n}")


def Fission(grading: BlockGrading | Sequence[int], r: int) -> UnipotentList:
    if not isinstance(grading, BlockGrading):
        grading = BlockGrading(tuple(grading))
    up, lo = grading.upper(), grading.lower()
    pats = [up, lo] * r
    return UnipotentList(grading.n, pats, small_mask=grading.levi_mask(),
                         name=f"fission{grading.block_sizes}r{r}")


def StokesSpace(Q, cut: float | None = None):
    """A(Q) = G x H x prod Sto_d over the singular directions of Q."""
    from ..irregular import centralizer_mask, singular_directions

    st = singular_directions(Q, cut)
    sp = UnipotentList(Q.n, st.patterns, small_mask=centralizer_mask(Q), name="stokes-space")
    sp.structure = st
    sp.Q = Q
    return sp


class InternallyFusedDouble(QHSpace):
    """G x G with moment map the commutator aba^-1b^-1."""

    def __init__(self, n: int):
        self.n = n
        self.name = f"fused-double{n}"
        self.factors = [Factor("a", "group", (n, n), full_mask(n)), Factor("b", "group", (n, n), full_mask(n))]
        self.groups = [GroupFactor("G", n, full_mask(n))]

    def moment(self, pt):
        a, b = pt
        return [a @ b @ inv(a) @ inv(b)]

    def act(self, gs, pt):
        g = gs[0]
        gi = inv(g)
        return [g @ pt[0] @ gi, g @ pt[1] @ gi]

    def form_terms(self, jets):
        a, b = jets
        ab = a @ b
        aibi = inv(a) @ inv(b)
        return [
            (-1.0, theta(a), theta_bar(b)),
            (-1.0, theta_bar(a), theta(b)),
            (-1.0, theta(ab), theta_bar(aibi)),
        ]


class VanDenBergh(QHSpace):
    """B(V, W): pairs (a, b) with det(1 + ab) != 0, acted on by GL(V) x GL(W)."""

    def __init__(self, dim_v: int, dim_w: int):
        self.dv, self.dw = dim_v, dim_w
        self.name = f"vdb{dim_v}{dim_w}"
        self.factors = [
            Factor("a", "linear", (dim_v, dim_w), np.ones((dim_v, dim_w), dtype=bool)),
            Factor("b", "linear", (dim_w, dim_v), np.ones((dim_w, dim_v), dtype=bool)),
        ]
        self.groups = [GroupFactor("GL(V)", dim_v, full_mask(dim_v)), GroupFactor("GL(W)", dim_w, full_mask(dim_w))]

    def check_point(self, pt, tol: float = 1e-9) -> None:
        super().check_point(pt, tol)
        a, b = pt
        if abs(np.linalg.det(np.eye(self.dv) + a @ b)) <= tol:
            raise ValueError("det(1 + ab) vanishes")

    def random_point(self, rng=None, radius: float = 0.5):
        rng = np.random.default_rng(rng)
        for _ in range(100):
            pt = [f.random(rng, radius) for f in self.factors]
            if np.linalg.cond(np.eye(self.dv) + pt[0] @ pt[1]) < 1e3:
                return pt
        raise RuntimeError("no well-conditioned point of B(V, W)")

    def moment(self, pt):
        a, b = pt
        return [inv(np.eye(self.dv) + a @ b), np.eye(self.dw) + b @ a]

    def act(self, gs, pt):
        gv, gw = gs
        a, b = pt
        return [gv @ a @ inv(gw), gw @ b @ inv(gv)]

    def form_terms(self, jets):
        a, b = jets
        x = np.linalg.inv(np.eye(self.dv) + a.val @ b.val)
        y = np.linalg.inv(np.eye(self.dw) + b.val @ a.val)
        return [(1.0, x @ a.der, b.der), (-1.0, y @ b.der, a.der)]


class Product(QHSpace):
    """Cartesian product of spaces; groups and factors are concatenated."""

    def __init__(self, children: Sequence[QHSpace], name: str | None = None):
        self.children = list(children)
        self.name = name or " x ".join(c.name for c in self.children)
        self.factors = [f for c in self.children for f in c.factors]
        self.groups = [g for c in self.children for g in c.groups]
        self._fslices, self._gslices = [], []
        fs = gs = 0
        for c in self.children:
            self._fslices.append(slice(fs, fs + len(c.factors)))
            self._gslices.append(slice(gs, gs + len(c.groups)))
            fs += len(c.factors)
            gs += len(c.groups)

    def check_point(self, pt, tol=1e-9):
        for c, s in zip(self.children, self._fslices):
            c.check_point(list(pt[s]), tol)

    def random_point(self, rng=None, radius: float = 0.5):
        rng = np.random.default_rng(rng)
        return [g for c in self.children for g in c.random_point(rng, radius)]

    def moment(self, pt):
        return [m for c, s in zip(self.children, self._fslices) for m in c.moment(list(pt[s]))]

    def act(self, gs, pt):
        out = []
        for c, fs, gsl in zip(self.children, self._fslices, self._gslices):
            out.extend(c.act(list(gs[gsl]), list(pt[fs])))
        return out

    def form_terms(self, jets):
        return [t for c, s in zip(self.children, self._fslices) for t in c.form_terms(list(jets[s]))]


class Fusion(QHSpace):
    """Fuse group factors i and j: diagonal action, moment mu_i mu_j at slot i."""

    def __init__(self, child: QHSpace, i: int, j: int, name: str | None = None):
        if i == j:
            raise ValueError("cannot fuse a factor with itself")
        if not child.groups[i].same_as(child.groups[j]):
            raise ValueError("fused factors must carry the same group")
        self.child, self.i, self.j = child, i, j
        self.name = name or f"fuse({child.name};{i},{j})"
        self.factors = child.factors
        self._keep = [t for t in range(len(child.groups)) if t != j]
        self.groups = [child.groups[t] for t in self._keep]
        self._pos = {t: p for p, t in enumerate(self._keep)}

    def check_point(self, pt, tol=1e-9):
        self.child.check_point(pt, tol)

    def random_point(self, rng=None, radius: float = 0.5):
        return self.child.random_point(rng, radius)

    def moment(self, pt):
        mus = self.child.moment(pt)
        out = [mus[t] for t in self._keep]
        out[self._pos[self.i]] = mus[self.i] @ mus[self.j]
        return out

    def act(self, gs, pt):
        old = [None] * len(self.child.groups)
        for t in self._keep:
            old[t] = gs[self._pos[t]]
        old[self.j] = gs[self._pos[self.i]]
        return self.child.act(old, pt)

    def form_terms(self, jets):
        mus = self.child.moment(jets)
        return self.child.form_terms(jets) + [(-1.0, theta(mus[self.i]), theta_bar(mus[self.j]))]


def fuse(space: QHSpace, i: int, j: int) -> Fusion:
    return Fusion(space, i, j)


def fusion_product(a: QHSpace, b: QHSpace, i: int, j: int) -> Fusion:
    """a (x) b with group i of a fused to group j of b."""
    return Fusion(Product([a, b]), i, len(a.groups) + j)


class Scaled(QHSpace):
    """A space whose two-form is multiplied by a constant (negative controls)."""

    def __init__(self, child: QHSpace, scale: float):
        self.child, self.scale = child, scale
        self.name = f"{child.name}*{scale}"
        self.factors = child.factors
        self.groups = child.groups

    def random_point(self, rng=None, radius: float = 0.5):
        return self.child.random_point(rng, radius)

    def check_point(self, pt, tol=1e-9):
        self.child.check_point(pt, tol)

    def moment(self, pt):
        return self.child.moment(pt)

    def act(self, gs, pt):
        return self.child.act(gs, pt)

    def form_terms(self, jets):
        return [(self.scale * c, L, R) for c, L, R in self.child.form_terms(jets)]


# ---------------------------------------------------------------------------
# Reduction at the identity along a global slice
# ---------------------------------------------------------------------------


class ReducedSpace:
    """mu_k^-1(1) intersected with a slice {factor f = fixed value}, as a space with group k removed.

    Tangent spaces are computed numerically as the kernel of the linearized
    constraints; the reduced two-form is the restriction of the parent's.
    """

    charted = False

    def __init__(self, parent: QHSpace, group: int, slice_factors: dict[int, np.ndarray], name: str | None = None,
                 tol: float = 1e-9):
        self.parent = parent
        self.group = group
        self.slice = {int(k): np.asarray(v, dtype=complex) for k, v in slice_factors.items()}
        self.tol = tol
        self.name = name or f"{parent.name}//{parent.groups[group].name}"
        self._keep = [t for t in range(len(parent.groups)) if t != group]
        self.groups = [parent.groups[t] for t in self._keep]
        self.factors = parent.factors

    def constraint_residual(self, pt) -> float:
        mu = self.parent.moment_values(pt)[self.group]
        res = float(np.max(np.abs(mu - np.eye(mu.shape[0]))))
        for f, v in self.slice.items():
            res = max(res, float(np.max(np.abs(np.asarray(pt[f]) - v))))
        return res

    def check_point(self, pt, tol: float = 1e-9) -> None:
        self.parent.check_point(pt, tol)
        r = self.constraint_residual(pt)
        if r > tol * 10:
            raise ValueError(f"point violates reduction constraints (residual {r:.2e})")

    def _constraint_matrix(self, pt) -> np.ndarray:
        E = self.parent.tangent_basis(pt)
        th, _ = self.parent.moment_forms(pt, E)[self.group]
        G = self.parent.groups[self.group]
        rows = [th[:, G.mask]]
        coords = self.parent.coords(pt, E)
        for f in self.slice:
            start = sum(x.dim for x in self.parent.factors[:f])
            rows.append(coords[:, start:start + self.parent.factors[f].dim])
        return np.concatenate(rows, axis=1)

    def kernel_coefficients(self, pt) -> np.ndarray:
        A = self._constraint_matrix(pt)  # (dim_parent, #constraints)
        u, s, vh = np.linalg.svd(A.T)
        smax = s[0] if s.size else 1.0
        rank = int(np.sum(s > self.tol * max(smax, 1.0)))
        return vh[rank:].conj().T  # (dim_parent, dim_reduced)

    @property
    def dim(self) -> int:
        raise AttributeError("dimension of a reduced space depends on the point; use dim_at")

    def dim_at(self, pt) -> int:
        return self.kernel_coefficients(pt).shape[1]

    def tangent_basis(self, pt) -> Batch:
        K = self.kernel_coefficients(pt)
        E = self.parent.tangent_basis(pt)
        return [np.tensordot(K.T, e, axes=1) for e in E]

    def coords(self, pt, batch: Batch) -> np.ndarray:
        K = self.kernel_coefficients(pt)
        P = self.parent.coords(pt, batch)  # (N, dim_parent)
        sol, *_ = np.linalg.lstsq(K, P.T, rcond=None)
        return sol.T

    def omega_matrix(self, pt, batch: Batch) -> np.ndarray:
        return self.parent.omega_matrix(pt, batch)

    def omega(self, pt, u, v) -> complex:
        return self.parent.omega(pt, u, v)

    def lift(self, pt, batch):
        return self.parent.lift(pt, batch)

    def moment(self, pt):
        mus = self.parent.moment(pt)
        return [mus[t] for t in self._keep]

    def moment_values(self, pt):
        vals = self.parent.moment_values(pt)
        return [vals[t] for t in self._keep]

    def moment_forms(self, pt, batch):
        forms = self.parent.moment_forms(pt, batch)
        return [forms[t] for t in self._keep]

    def fundamental(self, pt, k: int, Xs) -> Batch:
        """Induced fundamental fields: parent field plus a compensating field keeping the slice."""
        kp = self._keep[k]
        v = self.parent.fundamental(pt, kp, Xs)
        if not self.slice:
            return v
        G = self.parent.groups[self.group]
        Yb = G.basis()
        w = self.parent.fundamental(pt, self.group, Yb)
        cv = self.parent.coords(pt, v)
        cw = self.parent.coords(pt, w)
        sl = []
        for f in self.slice:
            start = sum(x.dim for x in self.parent.factors[:f])
            sl.extend(range(start, start + self.parent.factors[f].dim))
        A = cw[:, sl].T  # (#slice coords, dim G)
        B = -cv[:, sl].T  # (#slice coords, N)
        Y, *_ = np.linalg.lstsq(A, B, rcond=None)  # (dim G, N)
        return [a + np.tensordot(Y.T, b, axes=1) for a, b in zip(v, w)]


def reduce_at_identity(space: QHSpace, group: int, slice_factors: dict[int, np.ndarray] | None = None) -> ReducedSpace:
    return ReducedSpace(space, group, slice_factors or {})
