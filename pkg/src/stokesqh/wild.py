"""Stokes representations of an irregular curve: sampling, stability, genericity, dimensions.

Points of the representation space are ordered as
``[a_1, b_1, ..., a_g, b_g, C_1, h_1, S^1_1, ..., C_2, h_2, ...]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .irregular import IrregularType, centralizer, centralizer_mask, singular_directions, stokes_space_dim
from .lie import UnipotentPattern, partition_mask
from .qh.jets import Jet, inv
from .qh.spaces import Fusion, InternallyFusedDouble, Product, ReducedSpace, StokesSpace

RANK_TOL = 1e-9


class SampleError(RuntimeError):
    """No sample found; this is not a proof that none exists."""

    def __init__(self, message: str, reason: str = "no sample found"):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class IrregularCurve:
    genus: int
    points: tuple[IrregularType, ...]
    cuts: tuple | None = None  # cut direction per marked point; None means the default cut

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be non-negative")
        if not self.points:
            raise ValueError("an irregular curve needs at least one marked point")
        ns = {Q.n for Q in self.points}
        if len(ns) != 1:
            raise ValueError("all irregular types must live in the same GL_n")
        object.__setattr__(self, "points", tuple(self.points))
        if self.cuts is not None:
            if len(self.cuts) != len(self.points):
                raise ValueError("need one cut per marked point")
            object.__setattr__(self, "cuts", tuple(None if c is None else float(c) for c in self.cuts))

    def cut(self, i: int) -> float | None:
        return None if self.cuts is None else self.cuts[i]

    def replace_point(self, i: int, Q: IrregularType, cut: float | None) -> "IrregularCurve":
        pts = list(self.points)
        pts[i] = Q
        cuts = list(self.cuts) if self.cuts is not None else [None] * self.m
        cuts[i] = cut
        return IrregularCurve(self.genus, tuple(pts), tuple(cuts))

    @property
    def n(self) -> int:
        return self.points[0].n

    @property
    def m(self) -> int:
        return len(self.points)

    def structures(self):
        return [singular_directions(Q, self.cut(i)) for i, Q in enumerate(self.points)]

    def h_masks(self) -> list[np.ndarray]:
        return [centralizer_mask(Q) for Q in self.points]

    def is_exceptional(self) -> bool:
        """g = 0, one marked point with at most a simple pole: the stabilizer exceeds the centre."""
        return self.genus == 0 and self.m == 1 and max(self.points[0].pole_orders, default=0) <= 1

    def to_json(self) -> dict:
        out = {"genus": self.genus, "points": [Q.to_json() for Q in self.points]}
        if self.cuts is not None:
            out["cuts"] = list(self.cuts)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "IrregularCurve":
        cuts = data.get("cuts")
        return cls(int(data["genus"]), tuple(IrregularType.from_json(q) for q in data["points"]),
                   None if cuts is None else tuple(cuts))


@dataclass
class StokesRepresentation:
    curve: IrregularCurve
    handles: list  # [(a_k, b_k)]
    connectors: list  # C_i, C_1 = I
    formal: list  # h_i
    stokes: list  # stokes[i] = [S^i_1, ..., S^i_s]

    def to_point(self) -> list:
        pt = [x for ab in self.handles for x in ab]
        for C, h, S in zip(self.connectors, self.formal, self.stokes):
            pt += [C, h] + list(S)
        return [np.array(x, dtype=complex) for x in pt]

    @classmethod
    def from_point(cls, curve: IrregularCurve, pt) -> "StokesRepresentation":
        g = curve.genus
        handles = [(pt[2 * k], pt[2 * k + 1]) for k in range(g)]
        pos = 2 * g
        Cs, hs, Ss = [], [], []
        for st in curve.structures():
            s = len(st)
            Cs.append(pt[pos])
            hs.append(pt[pos + 1])
            Ss.append(list(pt[pos + 2:pos + 2 + s]))
            pos += 2 + s
        return cls(curve, [tuple(map(np.array, ab)) for ab in handles], list(map(np.array, Cs)),
                   list(map(np.array, hs)), [list(map(np.array, S)) for S in Ss])

    def local_moments(self) -> list:
        """mu_i = C_i^-1 h_i S^i_s ... S^i_1 C_i."""
        out = []
        for C, h, S in zip(self.connectors, self.formal, self.stokes):
            b = h
            for s in reversed(S):
                b = b @ s
            out.append(np.linalg.solve(C, b @ C))
        return out

    def act(self, ks: Sequence[np.ndarray]) -> "StokesRepresentation":
        """Action of H = prod H_i, with the compensating G-action keeping C_1 = 1."""
        g = ks[0]
        gi = np.linalg.inv(g)
        handles = [(g @ a @ gi, g @ b @ gi) for a, b in self.handles]
        Cs, hs, Ss = [], [], []
        for k, C, h, S in zip(ks, self.connectors, self.formal, self.stokes):
            ki = np.linalg.inv(k)
            Cs.append(k @ C @ gi)
            hs.append(k @ h @ ki)
            Ss.append([k @ s @ ki for s in S])
        return StokesRepresentation(self.curve, handles, Cs, hs, Ss)

    def to_json(self) -> dict:
        def mat(x):
            return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(x)]

        return {
            "curve": self.curve.to_json(),
            "handles": [[mat(a), mat(b)] for a, b in self.handles],
            "connectors": [mat(C) for C in self.connectors],
            "formal": [mat(h) for h in self.formal],
            "stokes": [[mat(s) for s in S] for S in self.stokes],
        }

    @classmethod
    def from_json(cls, data: dict) -> "StokesRepresentation":
        def arr(x):
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        curve = IrregularCurve.from_json(data["curve"])
        return cls(curve, [(arr(a), arr(b)) for a, b in data["handles"]], [arr(C) for C in data["connectors"]],
                   [arr(h) for h in data["formal"]], [[arr(s) for s in S] for S in data["stokes"]])


@dataclass(frozen=True)
class ConjugacyClassSpec:
    """Class in H_i of t.u with t = diag(eigenvalues); u trivial or regular unipotent in each block."""

    eigenvalues: tuple[complex, ...]
    unipotent: str = "trivial"

    def __post_init__(self):
        if self.unipotent not in ("trivial", "regular"):
            raise ValueError("unipotent must be 'trivial' or 'regular'")
        object.__setattr__(self, "eigenvalues", tuple(complex(x) for x in self.eigenvalues))

    def representative(self, parts) -> np.ndarray:
        t = np.diag(np.array(self.eigenvalues, dtype=complex))
        if self.unipotent == "trivial":
            return t
        n = len(self.eigenvalues)
        u = np.eye(n, dtype=complex)
        for p in parts:
            vals = {self.eigenvalues[i] for i in p}
            if len(vals) > 1:
                raise ValueError("a regular unipotent part needs t scalar on each block of H")
            for a, b in zip(p, p[1:]):
                u[a, b] = 1.0
        return t @ u

    def to_json(self) -> dict:
        return {"eigenvalues": [[v.real, v.imag] for v in self.eigenvalues], "unipotent": self.unipotent}

    @classmethod
    def from_json(cls, data: dict) -> "ConjugacyClassSpec":
        return cls(tuple(complex(*v) for v in data["eigenvalues"]), data.get("unipotent", "trivial"))


# ---------------------------------------------------------------------------
# The representation space
# ---------------------------------------------------------------------------


def build_space(curve: IrregularCurve) -> ReducedSpace:
    """Reduction of D^g (x) A(Q_1) (x) ... (x) A(Q_m) at the identity, sliced by C_1 = 1."""
    n = curve.n
    children = [InternallyFusedDouble(n) for _ in range(curve.genus)]
    children += [StokesSpace(Q, curve.cut(i)) for i, Q in enumerate(curve.points)]
    space = Product(children)
    g_slots = list(range(curve.genus)) + [curve.genus + 2 * i for i in range(curve.m)]
    for j in g_slots[1:]:
        shift = g_slots.index(j) - 1  # earlier fusions removed this many slots before j
        space = Fusion(space, 0, j - shift)
    c1 = 2 * curve.genus
    red = ReducedSpace(space, 0, {c1: np.eye(n)}, name=f"Hom(g={curve.genus},m={curve.m})")
    red.curve = curve
    return red


def hom_dim(curve: IrregularCurve) -> int:
    n = curve.n
    return (2 * curve.genus - 2) * n * n + sum(stokes_space_dim(Q) for Q in curve.points)


def relation_product(rep: StokesRepresentation):
    """[a_1, b_1] ... [a_g, b_g] mu_1 ... mu_m (works on arrays or jets)."""
    out = None
    for a, b in rep.handles:
        c = a @ b @ inv(a) @ inv(b)
        out = c if out is None else out @ c
    for C, h, S in zip(rep.connectors, rep.formal, rep.stokes):
        b = h
        for s in reversed(S):
            b = b @ s
        mu = inv(C) @ b @ C
        out = mu if out is None else out @ mu
    return out


def check_relation(rep: StokesRepresentation) -> float:
    R = relation_product(rep)
    return float(np.max(np.abs(R - np.eye(R.shape[0]))))


def check_representation(rep: StokesRepresentation, tol: float = 1e-9) -> dict:
    """SR1 pattern membership, SR2 h_i in H_i, slice C_1 = 1 and the relation."""
    n = rep.curve.n
    sr1 = True
    for st, S in zip(rep.curve.structures(), rep.stokes):
        for d, s in zip(st.directions, S):
            sr1 &= d.pattern.contains_matrix(s, tol)
    sr2 = all(not np.any(np.abs(h[~m]) > tol) for h, m in zip(rep.formal, rep.curve.h_masks()))
    return {
        "sr1": bool(sr1),
        "sr2": bool(sr2),
        "slice": float(np.max(np.abs(rep.connectors[0] - np.eye(n)))),
        "relation": check_relation(rep),
    }


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _mask_basis(mask: np.ndarray) -> np.ndarray:
    idx = np.argwhere(mask)
    E = np.zeros((len(idx),) + mask.shape, dtype=complex)
    for k, (i, j) in enumerate(idx):
        E[k, i, j] = 1.0
    return E


@dataclass
class _Param:
    """Affine block of free parameters: M = base + sum x_k E_k."""

    base: np.ndarray
    basis: np.ndarray

    @property
    def size(self) -> int:
        return self.basis.shape[0]


class _Layout:
    """Free parameters of a representation with prescribed (or free) classes."""

    def __init__(self, curve: IrregularCurve, classes, rng):
        self.curve = curve
        self.classes = classes
        n = curve.n
        full = np.ones((n, n), dtype=bool)
        self.parts = [centralizer(Q) for Q in curve.points]
        self.hmasks = curve.h_masks()
        self.structs = curve.structures()
        self.blocks: dict[str, _Param] = {}
        self.order: list[str] = []

        def add(key, base, mask):
            self.blocks[key] = _Param(np.array(base, dtype=complex), _mask_basis(mask))
            self.order.append(key)

        for k in range(curve.genus):
            add(f"a{k}", _random_group(rng, full), full)
            add(f"b{k}", _random_group(rng, full), full)
        self.reps = []
        for i in range(curve.m):
            if i > 0:
                add(f"C{i}", _random_group(rng, full), full)
            if classes is None or classes[i] is None:
                add(f"h{i}", _random_group(rng, self.hmasks[i]), self.hmasks[i])
                self.reps.append(None)
            else:
                self.reps.append(classes[i].representative(self.parts[i]))
                add(f"P{i}", _random_group(rng, self.hmasks[i]), self.hmasks[i])
            for j, d in enumerate(self.structs[i].directions):
                pm = d.pattern.mask(n)
                add(f"S{i}_{j}", np.eye(n) + 0.5 * _disk(rng, (n, n)) * pm, pm)
        offs = np.cumsum([0] + [self.blocks[k].size for k in self.order])
        self.offsets = dict(zip(self.order, offs[:-1]))
        self.size = int(offs[-1])

    def jets(self, x: np.ndarray | None, with_der: bool = True) -> dict:
        N = self.size if with_der else 0
        out = {}
        for key in self.order:
            p = self.blocks[key]
            o = self.offsets[key]
            val = p.base.copy()
            if x is not None:
                val = val + np.tensordot(x[o:o + p.size], p.basis, axes=1)
            der = np.zeros((N,) + val.shape, dtype=complex)
            if with_der:
                der[o:o + p.size] = p.basis
            out[key] = Jet(val, der)
        return out

    def representation(self, jets: dict) -> StokesRepresentation:
        n = self.curve.n
        handles = [(jets[f"a{k}"], jets[f"b{k}"]) for k in range(self.curve.genus)]
        Cs, hs, Ss = [], [], []
        N = next(iter(jets.values())).batch if jets else 0
        for i in range(self.curve.m):
            Cs.append(Jet.const(np.eye(n), N) if i == 0 else jets[f"C{i}"])
            if self.reps[i] is None:
                hs.append(jets[f"h{i}"])
            else:
                P = jets[f"P{i}"]
                hs.append(P @ self.reps[i] @ inv(P))
            Ss.append([jets[f"S{i}_{j}"] for j in range(len(self.structs[i]))])
        return StokesRepresentation(self.curve, handles, Cs, hs, Ss)

    def commit(self, x: np.ndarray) -> None:
        for key in self.order:
            p = self.blocks[key]
            o = self.offsets[key]
            p.base = p.base + np.tensordot(x[o:o + p.size], p.basis, axes=1)

    def conditioned(self, limit: float = 1e6) -> bool:
        for key in self.order:
            if key[0] in "abCPh" and np.linalg.cond(self.blocks[key].base) > limit:
                return False
        return True


def _disk(rng, shape) -> np.ndarray:
    r = np.sqrt(rng.uniform(0, 1, shape))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, shape))


def _random_group(rng, mask: np.ndarray) -> np.ndarray:
    n = mask.shape[0]
    for _ in range(100):
        g = np.eye(n) + 0.5 * _disk(rng, (n, n)) * mask
        if np.linalg.cond(g) < 1e2:
            return g
    return np.eye(n, dtype=complex)


def _strip(j: Jet) -> np.ndarray:
    return j.val


def _values(rep: StokesRepresentation) -> StokesRepresentation:
    return StokesRepresentation(
        rep.curve,
        [(_strip(a), _strip(b)) for a, b in rep.handles],
        [_strip(C) for C in rep.connectors],
        [_strip(h) for h in rep.formal],
        [[_strip(s) for s in S] for S in rep.stokes],
    )


def determinant_obstruction(curve: IrregularCurve, classes) -> complex | None:
    """Product of det(h_i) forced by the relation; None if some class is free."""
    if classes is None or any(c is None for c in classes):
        return None
    return complex(np.prod([np.prod(c.eigenvalues) for c in classes]))


def sample_point(curve: IrregularCurve, classes=None, seed=0, tol: float = 1e-12, retries: int = 100,
                 max_iter: int = 60) -> StokesRepresentation:
    """Random solution of the monodromy relation with h_i in the prescribed classes.

    All free entries start at random values; a minimum-norm Gauss-Newton
    iteration then moves them onto the relation.
    """
    if classes is not None and len(classes) != curve.m:
        raise ValueError("need one class (or None) per marked point")
    det = determinant_obstruction(curve, classes)
    if det is not None and abs(det - 1) > 1e-9:
        raise SampleError(f"product of class determinants is {det:.6g}, not 1", reason="determinant obstruction")
    rng = np.random.default_rng(seed)
    n = curve.n
    for _ in range(retries):
        lay = _Layout(curve, classes, rng)
        ok = False
        for _ in range(max_iter):
            rep = lay.representation(lay.jets(None))
            R = relation_product(rep)
            res = (R.val - np.eye(n)).ravel()
            if np.max(np.abs(res)) <= tol:
                ok = True
                break
            J = R.der.reshape(lay.size, n * n).T
            dx, *_ = np.linalg.lstsq(J, -res, rcond=None)
            lay.commit(dx)
            if not lay.conditioned():
                break
        if ok:
            return _values(lay.representation(lay.jets(None, with_der=False)))
    raise SampleError(f"no sample found after {retries} attempts")


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------


def algebra_dimension(generators: Sequence[np.ndarray], tol: float = RANK_TOL) -> int:
    """Dimension of the unital associative algebra generated by the matrices (span closure)."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    n = gens[0].shape[0] if gens else 1
    basis = np.zeros((0, n * n), dtype=complex)

    def extend(basis, cands):
        if not cands:
            return basis, []
        M = np.concatenate([basis, np.array([c.ravel() for c in cands])])
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        rank = int(np.sum(s > tol * max(s[0], 1.0)))
        new = vh[:rank]
        return new, [] if rank == basis.shape[0] else [v.reshape(n, n) for v in new]

    frontier = [np.eye(n, dtype=complex)] + gens
    basis, frontier = extend(basis, frontier)
    while frontier and basis.shape[0] < n * n:
        cands = [b.reshape(n, n) @ g for b in basis for g in gens]
        basis, frontier = extend(basis, cands)
    return basis.shape[0]


def center_generators(parts, n: int) -> list[np.ndarray]:
    """One block-scalar diagonal matrix per block of H (distinct values per block)."""
    if len(parts) <= 1:
        return []
    d = np.zeros(n, dtype=complex)
    for v, p in enumerate(parts):
        d[list(p)] = v + 1.0
    return [np.diag(d)]


def exponential_torus(Q: IrregularType) -> list[np.ndarray]:
    """Generators of the Lie algebra of the exponential torus: the coefficients A_k."""
    gens = [np.diag(Q.coefficient(k)) for k in Q.pole_orders]
    return [g for g in gens if np.max(np.abs(g)) > 0]


def torus_centralizer_mask(gens: Sequence[np.ndarray], n: int) -> np.ndarray:
    mask = np.ones((n, n), dtype=bool)
    for g in gens:
        d = np.diag(g)
        mask &= np.abs(d[:, None] - d[None, :]) < 1e-12
    return mask


def _loop_generators(rep: StokesRepresentation, torus: str) -> list[np.ndarray]:
    gens = []
    for a, b in rep.handles:
        gens += [a, b]
    n = rep.curve.n
    for Q, C, h, S in zip(rep.curve.points, rep.connectors, rep.formal, rep.stokes):
        Ci = np.linalg.inv(C)
        zs = center_generators(centralizer(Q), n) if torus == "center" else exponential_torus(Q)
        gens += [Ci @ x @ C for x in [h] + list(S) + zs]
    return gens


def stability_report(rep: StokesRepresentation, torus: str = "center") -> dict:
    n = rep.curve.n
    dim = algebra_dimension(_loop_generators(rep, torus))
    return {"algebra_dim": dim, "n2": n * n, "stable": dim == n * n}


def is_stable(rep: StokesRepresentation) -> bool:
    """Burnside test: the algebra generated by loops and centre tori is all of M_n."""
    return stability_report(rep, "center")["stable"]


def galois_crosscheck(rep: StokesRepresentation) -> bool:
    """Burnside with exponential-torus generators must agree with is_stable."""
    for Q in rep.curve.points:
        gens = exponential_torus(Q)
        cmask = torus_centralizer_mask(gens, Q.n)
        if not np.array_equal(cmask, centralizer_mask(Q)):
            raise AssertionError("centralizer of the exponential torus differs from H")
    return stability_report(rep, "torus")["stable"] == is_stable(rep)


def invariant_subspace_witness(rep: StokesRepresentation, rng=0) -> np.ndarray | None:
    """Basis of a proper invariant subspace found from eigenvectors of a random algebra element."""
    gens = _loop_generators(rep, "center")
    rng = np.random.default_rng(rng)
    n = rep.curve.n
    x = sum(complex(*rng.normal(size=2)) * g for g in gens)
    _, vecs = np.linalg.eig(x)
    for v in vecs.T:
        span = v[:, None] / np.linalg.norm(v)
        while True:
            cand = np.concatenate([span] + [g @ span for g in gens], axis=1)
            u, s, _ = np.linalg.svd(cand, full_matrices=False)
            r = int(np.sum(s > RANK_TOL * s[0]))
            if r == span.shape[1]:
                break
            span = u[:, :r]
        if span.shape[1] < n:
            return span
    return None


# ---------------------------------------------------------------------------
# Genericity and dimensions
# ---------------------------------------------------------------------------


@dataclass
class GenericityReport:
    generic: bool
    kernel: complex
    witness: dict | None = None
    complete: bool = True

    def to_json(self) -> dict:
        return {"generic": self.generic, "kernel": [self.kernel.real, self.kernel.imag], "witness": self.witness,
                "complete": self.complete}


def is_generic(curve: IrregularCurve, classes, tol: float = 1e-9, max_selections: int = 200000,
               seed: int = 0) -> GenericityReport:
    """Kernel condition plus: no choice of k eigenvalues at every point (0<k<n) multiplies to 1."""
    n = curve.n
    eig = [np.array(c.eigenvalues, dtype=complex) for c in classes]
    total = complex(np.prod([np.prod(e) for e in eig]))
    if abs(total - 1) > tol:
        return GenericityReport(False, total, {"reason": "kernel", "product": [total.real, total.imag]})
    for k in range(1, n):
        subsets = list(itertools.combinations(range(n), k))
        count = len(subsets) ** len(eig)
        if count <= max_selections:
            choices = itertools.product(subsets, repeat=len(eig))
            complete = True
        else:
            rng = np.random.default_rng(seed)
            choices = (tuple(subsets[i] for i in rng.integers(len(subsets), size=len(eig)))
                       for _ in range(max_selections))
            complete = False
        for sel in choices:
            prod = complex(np.prod([np.prod(e[list(s)]) for e, s in zip(eig, sel)]))
            if abs(prod - 1) <= tol:
                return GenericityReport(False, total, {"k": k, "selection": [list(s) for s in sel]})
        if not complete:
            return GenericityReport(True, total, None, complete=False)
    return GenericityReport(True, total)


def class_dim(Q: IrregularType, spec: ConjugacyClassSpec) -> int:
    """dim of the H-class of t.u = rank of X -> [X, t.u] on Lie(H)."""
    parts = centralizer(Q)
    rep = spec.representative(parts)
    E = _mask_basis(centralizer_mask(Q))
    if len(E) == 0:
        return 0
    M = np.array([(X @ rep - rep @ X).ravel() for X in E])
    return _rank(M)


def _rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1.0)))


def expected_dim(curve: IrregularCurve, classes) -> int:
    """dim Hom + dim C - 2 (dim H - dim Z(G))."""
    dim_h = sum(int(m.sum()) for m in curve.h_masks())
    dim_c = sum(class_dim(Q, c) for Q, c in zip(curve.points, classes))
    return hom_dim(curve) + dim_c - 2 * (dim_h - 1)


@dataclass
class DimensionCheck:
    measured: int | None
    expected: int
    tangent_dim: int
    orbit_rank: int
    orbit_expected: int
    skipped: bool = False
    reason: str = ""

    @property
    def passed(self) -> bool:
        return not self.skipped and self.measured == self.expected

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("measured", "expected", "tangent_dim", "orbit_rank", "orbit_expected",
                                              "skipped", "reason")} | {"passed": self.passed}


def numeric_dim_check(curve: IrregularCurve, classes, rep: StokesRepresentation) -> DimensionCheck:
    """Tangent dimension of mu^-1(C) at rep minus the H-orbit dimension, by numerical ranks.

    Unstable points are skipped: the quotient need not be smooth there.
    """
    if not is_stable(rep):
        return DimensionCheck(None, expected_dim(curve, classes), 0, 0, 0, True, "point is not stable")
    n = curve.n
    full = np.ones((n, n), dtype=bool)
    hmasks = curve.h_masks()
    blocks = []  # (target slot, list of ambient tangent matrices)
    # ambient slots follow the point layout
    slots = []
    for a, b in rep.handles:
        slots += [("a", a), ("b", b)]
    for i, (C, h, S) in enumerate(zip(rep.connectors, rep.formal, rep.stokes)):
        slots += [("C", C, i), ("h", h, i)] + [("S", s, i, j) for j, s in enumerate(S)]
    structs = curve.structures()
    cols = []  # each column: list of per-slot tangent matrices (ambient coordinates)
    for t, sl in enumerate(slots):
        kind = sl[0]
        if kind in ("a", "b"):
            gens = _mask_basis(full)
        elif kind == "C":
            gens = [] if sl[2] == 0 else _mask_basis(full)
        elif kind == "h":
            i = sl[2]
            h = sl[1]
            gens = [Y @ h - h @ Y for Y in _mask_basis(hmasks[i])]
        else:
            i, j = sl[2], sl[3]
            gens = _mask_basis(structs[i].directions[j].pattern.mask(n))
        for Eg in gens:
            col = [np.zeros((n, n), dtype=complex) for _ in slots]
            col[t] = Eg
            cols.append(col)
    L = np.array([np.concatenate([c.ravel() for c in col]) for col in cols]).T  # ambient x params

    def d_relation(col):
        jets = {}
        handles = []
        k = 0
        for a, b in rep.handles:
            handles.append((Jet(a, col[k][None]), Jet(b, col[k + 1][None])))
            k += 2
        Cs, hs, Ss = [], [], []
        for C, h, S in zip(rep.connectors, rep.formal, rep.stokes):
            Cs.append(Jet(C, col[k][None]))
            hs.append(Jet(h, col[k + 1][None]))
            Ss.append([Jet(s, col[k + 2 + j][None]) for j, s in enumerate(S)])
            k += 2 + len(S)
        R = relation_product(StokesRepresentation(curve, handles, Cs, hs, Ss))
        return R.der[0].ravel()

    D = np.array([d_relation(col) for col in cols]).T  # n^2 x params
    # kernel of D, then its image under L
    if D.shape[1] == 0:
        return DimensionCheck(None, expected_dim(curve, classes), 0, 0, 0, True, "no parameters")
    u, s, vh = np.linalg.svd(D)
    r = int(np.sum(s > RANK_TOL * max(s[0] if s.size else 1.0, 1.0)))
    K = vh[r:].conj().T
    T = L @ K
    tdim = _rank(T.T)
    # orbit of H = prod H_i (G compensates to keep C_1 = 1)
    orbit = []
    for i0 in range(curve.m):
        for X in _mask_basis(hmasks[i0]):
            Xs = [np.zeros((n, n), dtype=complex) for _ in range(curve.m)]
            Xs[i0] = X
            X1 = Xs[0]
            col = []
            for sl in slots:
                kind = sl[0]
                if kind in ("a", "b"):
                    col.append(X1 @ sl[1] - sl[1] @ X1)
                elif kind == "C":
                    col.append(Xs[sl[2]] @ sl[1] - sl[1] @ X1)
                else:
                    Xi = Xs[sl[2]]
                    col.append(Xi @ sl[1] - sl[1] @ Xi)
            orbit.append(np.concatenate([c.ravel() for c in col]))
    orank = _rank(np.array(orbit))
    dim_h = sum(int(m.sum()) for m in hmasks)
    exp = expected_dim(curve, classes)
    if orank < dim_h - 1:
        return DimensionCheck(None, exp, tdim, orank, dim_h - 1, True,
                              "orbit rank deficient: stabilizer larger than the centre")
    return DimensionCheck(tdim - orank, exp, tdim, orank, dim_h - 1)


def reducible_example(seed=0) -> StokesRepresentation:
    """Upper triangular tame GL_2 data on three points: a common invariant line."""
    rng = np.random.default_rng(seed)
    curve = IrregularCurve(0, (IrregularType(2, ()),) * 3)
    def upper():
        d = np.exp(rng.normal(size=2) * 0.3 + 1j * rng.uniform(0, 2 * np.pi, 2))
        return np.array([[d[0], rng.normal() + 1j * rng.normal()], [0, d[1]]])
    h1, h2 = upper(), upper()
    C2, C3 = upper(), upper()
    # C_2^-1 h_2 C_2 C_3^-1 h_3 C_3 = h_1^-1 ... solved for h_3
    h3 = C3 @ np.linalg.inv(h1 @ np.linalg.inv(C2) @ h2 @ C2) @ np.linalg.inv(C3)
    return StokesRepresentation(curve, [], [np.eye(2, dtype=complex), C2, C3], [h1, h2, h3], [[], [], []])
