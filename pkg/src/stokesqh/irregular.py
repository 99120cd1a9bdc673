"""Irregular types and the combinatorics they determine.

An irregular type Q = sum_k A_k / z^k has diagonal coefficients A_k.  From Q we
read off the functions q_alpha, singular directions with their supporting
roots, Stokes group patterns (also split by level), the centralizer H, the
chain of Levis and the positivity cocharacters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lie import (
    Cocharacter,
    RootDatum,
    Root,
    UnipotentPattern,
    parabolic_from_cocharacter,
    partition_mask,
    parts_from_labels,
)

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-9
COEFF_TOL = 1e-12


@dataclass(frozen=True)
class IrregularType:
    """Q = sum over terms of diag(A) / z^k, terms sorted by increasing k."""

    n: int
    terms: tuple[tuple[int, tuple[complex, ...]], ...] = ()

    def __post_init__(self):
        cleaned = {}
        for k, A in self.terms:
            k = int(k)
            if k < 1:
                raise ValueError("pole orders must be positive")
            A = tuple(complex(a) for a in A)
            if len(A) != self.n:
                raise ValueError(f"coefficient of z^-{k} has length {len(A)}, expected {self.n}")
            if k in cleaned:
                A = tuple(x + y for x, y in zip(cleaned[k], A))
            cleaned[k] = A
        terms = tuple(
            (k, A) for k, A in sorted(cleaned.items()) if max((abs(a) for a in A), default=0) > COEFF_TOL
        )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, n: int, terms: dict | Sequence) -> "IrregularType":
        items = terms.items() if isinstance(terms, dict) else terms
        return cls(n, tuple((k, tuple(np.ravel(A))) for k, A in items))

    @property
    def pole_orders(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.terms)

    def coefficient(self, k: int) -> np.ndarray:
        for kk, A in self.terms:
            if kk == k:
                return np.array(A)
        return np.zeros(self.n, dtype=complex)

    def evaluate(self, z: complex) -> np.ndarray:
        """Diagonal of Q(z)."""
        out = np.zeros(self.n, dtype=complex)
        for k, A in self.terms:
            out += np.array(A) / z**k
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "terms": [{"k": k, "A": [[a.real, a.imag] for a in A]} for k, A in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "IrregularType":
        n = int(data["n"])
        terms = []
        for t in data.get("terms", []):
            A = [complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in t["A"]]
            terms.append((int(t["k"]), tuple(A)))
        return cls(n, tuple(terms))


def q_alpha(Q: IrregularType, alpha: Root) -> dict[int, complex]:
    """Principal part of alpha o Q as {k: coefficient of z^-k}, zero terms dropped."""
    i, j = alpha
    out = {}
    for k, A in Q.terms:
        c = A[i] - A[j]
        if abs(c) > COEFF_TOL:
            out[k] = c
    return out


def degree(Q: IrregularType, alpha: Root) -> int:
    q = q_alpha(Q, alpha)
    return max(q) if q else 0


def leading_coefficient(Q: IrregularType, alpha: Root) -> complex:
    q = q_alpha(Q, alpha)
    return q[max(q)] if q else 0j


def root_directions(Q: IrregularType, alpha: Root) -> list[float]:
    """Unreduced angles (arg c - pi + 2 pi j)/k at which alpha o Q has maximal decay."""
    k = degree(Q, alpha)
    if k == 0:
        return []
    c = leading_coefficient(Q, alpha)
    return [(math.atan2(c.imag, c.real) - math.pi + TWO_PI * j) / k for j in range(k)]


def _circ_dist(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class Direction:
    angle: float  # in [0, 2pi)
    roots: frozenset
    levels: tuple[tuple[int, frozenset], ...]  # (pole order, roots of that degree)

    @property
    def pattern(self) -> UnipotentPattern:
        return UnipotentPattern(self.roots)

    def level_pattern(self, k: int) -> UnipotentPattern:
        for kk, roots in self.levels:
            if kk == k:
                return UnipotentPattern(roots)
        return UnipotentPattern(frozenset())

    @property
    def multi_level(self) -> bool:
        return len(self.levels) > 1


@dataclass(frozen=True)
class StokesStructure:
    Q: IrregularType
    cut: float
    directions: tuple[Direction, ...]

    @property
    def angles(self) -> list[float]:
        return [d.angle for d in self.directions]

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def patterns(self) -> list[UnipotentPattern]:
        return [d.pattern for d in self.directions]

    def dim(self) -> int:
        return sum(len(d.roots) for d in self.directions)

    def report(self) -> dict:
        return {
            "cut": self.cut,
            "directions": [
                {
                    "angle": d.angle,
                    "roots": sorted([list(a) for a in d.roots]),
                    "levels": {str(k): sorted([list(a) for a in r]) for k, r in d.levels},
                    "multi_level": d.multi_level,
                }
                for d in self.directions
            ],
        }


def default_cut(angles: Sequence[float]) -> float:
    """A cut just below the smallest angle in [0, 2pi)."""
    if not angles:
        return 0.0
    a = sorted(x % TWO_PI for x in angles)
    gaps = [(a[(i + 1) % len(a)] - a[i]) % TWO_PI or TWO_PI for i in range(len(a))]
    eps = min(1e-3, 0.5 * min(gaps))
    return a[0] - eps


def singular_directions(Q: IrregularType, cut: float | None = None) -> StokesStructure:
    """Singular directions of Q, merged within ANGLE_TOL and ordered from the cut."""
    rd = RootDatum(Q.n)
    raw = []
    for alpha in rd.roots:
        k = degree(Q, alpha)
        for th in root_directions(Q, alpha):
            raw.append((th % TWO_PI, alpha, k))
    clusters: list[list] = []
    for th, alpha, k in sorted(raw):
        for cl in clusters:
            if _circ_dist(cl[0], th) <= ANGLE_TOL:
                cl[1].append((alpha, k))
                break
        else:
            clusters.append([th, [(alpha, k)]])
    if cut is None:
        cut = default_cut([c[0] for c in clusters])
    dirs = []
    for th, members in clusters:
        by_level: dict[int, set] = {}
        for alpha, k in members:
            by_level.setdefault(k, set()).add(alpha)
        levels = tuple((k, frozenset(v)) for k, v in sorted(by_level.items()))
        dirs.append(Direction(th % TWO_PI, frozenset(a for a, _ in members), levels))
    dirs.sort(key=lambda d: (d.angle - cut) % TWO_PI)
    return StokesStructure(Q, cut, tuple(dirs))


def centralizer(Q: IrregularType) -> tuple[tuple[int, ...], ...]:
    """Index partition of H = C_G(Q)."""
    labels = [tuple(A[i] for _, A in Q.terms) for i in range(Q.n)]
    return _label_parts(labels)


def _label_parts(labels) -> tuple[tuple[int, ...], ...]:
    # coefficients are compared up to COEFF_TOL
    reps: list = []
    ids = []
    for lab in labels:
        for r, rep in enumerate(reps):
            if all(abs(x - y) <= COEFF_TOL for x, y in zip(lab, rep)):
                ids.append(r)
                break
        else:
            reps.append(lab)
            ids.append(len(reps) - 1)
    return parts_from_labels(ids)


def centralizer_mask(Q: IrregularType) -> np.ndarray:
    return partition_mask(centralizer(Q), Q.n)


@dataclass(frozen=True)
class LeviChain:
    pole_orders: tuple[int, ...]
    chain: tuple[tuple[tuple[int, ...], ...], ...]  # H_1, ..., H_r as partitions
    complements: tuple[frozenset, ...]  # h'_1, ..., h'_r as root sets
    h_roots: frozenset  # roots of h = Lie(H_1)


def levi_chain(Q: IrregularType) -> LeviChain:
    ks = Q.pole_orders
    r = len(ks)
    chain = []
    for i in range(r):
        labels = [tuple(Q.terms[t][1][a] for t in range(i, r)) for a in range(Q.n)]
        chain.append(_label_parts(labels))
    rd = RootDatum(Q.n)
    comps = [frozenset(a for a in rd.roots if degree(Q, a) == k) for k in ks]
    h = frozenset(a for a in rd.roots if degree(Q, a) == 0)
    return LeviChain(ks, tuple(chain), tuple(comps), h)


def is_one_level(Q: IrregularType) -> bool:
    return len(Q.terms) == 1


def half_period_parabolic(Q: IrregularType, structure: StokesStructure, start: int) -> tuple[UnipotentPattern, dict]:
    """Union of the Stokes patterns over a half-period, checked against Rad_u(P_lambda)."""
    if not is_one_level(Q):
        raise ValueError("half_period_parabolic needs a one-level irregular type")
    k = Q.pole_orders[0]
    s = len(structure)
    if s == 0 or s % (2 * k):
        raise ValueError(f"number of directions {s} not divisible by 2k = {2 * k}")
    l = s // (2 * k)
    idx = [(start + t) % s for t in range(l)]
    union = UnipotentPattern(frozenset().union(*(structure.directions[i].roots for i in idx)))
    first = structure.directions[idx[0]].angle
    last = structure.directions[idx[-1]].angle
    bisector = first + ((last - first) % TWO_PI) / 2.0
    lam = -np.real(Q.evaluate(np.exp(1j * bisector)))
    rad = parabolic_from_cocharacter(Cocharacter(tuple(lam))).pattern
    return union, {"bisector": bisector, "lambda": lam.tolist(), "matches": union == rad, "radical": rad}


def positivity_cocharacter(Q: IrregularType, d: Direction | float, max_doublings: int = 60) -> Cocharacter:
    """lambda with alpha(lambda) > 0 on every root supporting d."""
    if isinstance(d, Direction):
        angle, levels = d.angle, dict(d.levels)
    else:
        angle = float(d)
        match = [x for x in singular_directions(Q).directions if _circ_dist(x.angle, angle) <= ANGLE_TOL]
        if not match:
            raise ValueError(f"{angle} is not a singular direction")
        levels = dict(match[0].levels)
    z = np.exp(1j * angle)
    ks = Q.pole_orders
    R = {k: -np.real(Q.coefficient(k) / z**k) for k in ks}
    lam = R[ks[-1]].copy()
    for idx in range(len(ks) - 1, 0, -1):
        needed = [a for k in ks[idx - 1:] for a in levels.get(k, ())]
        N = 1.0
        for _ in range(max_doublings):
            cand = N * lam + R[ks[idx - 1]]
            if all(cand[a[0]] - cand[a[1]] > 0 for a in needed):
                break
            N *= 2.0
        else:
            raise RuntimeError("positivity cocharacter iteration did not converge")
        lam = cand
    return Cocharacter(tuple(lam))


def same_pole_degrees(Q: IrregularType, Qp: IrregularType) -> bool:
    if Q.n != Qp.n:
        return False
    return all(degree(Q, a) == degree(Qp, a) for a in RootDatum(Q.n).roots)


def degree_sum(Q: IrregularType) -> int:
    return sum(degree(Q, a) for a in RootDatum(Q.n).roots)


def stokes_space_dim(Q: IrregularType) -> int:
    """dim A(Q) = dim G + dim H + sum of deg(q_alpha)."""
    dim_h = sum(len(p) ** 2 for p in centralizer(Q))
    return Q.n**2 + dim_h + degree_sum(Q)


def two_level_type() -> IrregularType:
    """GL_3 type with pole orders 1 and 2: H_1 = T inside H_2 = GL_2 x GL_1."""
    return IrregularType.from_terms(3, {2: [1, 1, -2], 1: [0, 1, 3]})
