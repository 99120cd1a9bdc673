"""Type A root data, unipotent patterns and factorization in unipotent groups.

Roots of GL_n are stored as ordered pairs ``(i, j)`` standing for e_i - e_j,
with 0-based indices.  The root vector of ``(i, j)`` is the matrix unit E_ij.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Root = tuple[int, int]


def trace_form(X: np.ndarray, Y: np.ndarray) -> complex:
    """Invariant pairing (X, Y) = Tr(XY) on gl_n."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[0] or X.shape[0] != Y.shape[1]:
        raise ValueError(f"trace_form: incompatible shapes {X.shape} and {Y.shape}")
    return complex(np.einsum("ab,ba->", X, Y))


@dataclass(frozen=True)
class RootDatum:
    n: int

    @cached_property
    def roots(self) -> list[Root]:
        return [(i, j) for i in range(self.n) for j in range(self.n) if i != j]

    def is_root(self, a: Root) -> bool:
        i, j = a
        return 0 <= i < self.n and 0 <= j < self.n and i != j

    @staticmethod
    def negate(a: Root) -> Root:
        return (a[1], a[0])

    @staticmethod
    def add(a: Root, b: Root) -> Root | None:
        """Return a+b if it is a root, else None."""
        (i, j), (k, l) = a, b
        if j == k and i != l:
            return (i, l)
        if l == i and k != j:
            return (k, j)
        return None


@dataclass(frozen=True)
class BlockGrading:
    """Contiguous block decomposition of C^n, giving a Levi H and parabolics P_+/P_-."""

    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        if not sizes or any(b <= 0 for b in sizes):
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @property
    def parts(self) -> tuple[tuple[int, ...], ...]:
        out, start = [], 0
        for b in self.block_sizes:
            out.append(tuple(range(start, start + b)))
            start += b
        return tuple(out)

    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)

    def levi_mask(self) -> np.ndarray:
        return partition_mask(self.parts, self.n)

    def upper(self) -> "UnipotentPattern":
        blk = self.block_of()
        return UnipotentPattern.of(
            (i, j) for i in range(self.n) for j in range(self.n) if blk[i] < blk[j]
        )

    def lower(self) -> "UnipotentPattern":
        return self.upper().opposite()


@dataclass(frozen=True)
class UnipotentPattern:
    """Support set of a unipotent subgroup I + span{E_ij}."""

    positions: frozenset

    @classmethod
    def of(cls, positions: Iterable[Root]) -> "UnipotentPattern":
        pos = frozenset((int(i), int(j)) for i, j in positions)
        if any(i == j for i, j in pos):
            raise ValueError("diagonal position in unipotent pattern")
        return cls(pos)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(sorted(self.positions))

    def __contains__(self, a) -> bool:
        return tuple(a) in self.positions

    def opposite(self) -> "UnipotentPattern":
        return UnipotentPattern(frozenset((j, i) for i, j in self.positions))

    def union(self, other: "UnipotentPattern") -> "UnipotentPattern":
        return UnipotentPattern(self.positions | other.positions)

    def is_closed(self) -> bool:
        for a in self.positions:
            for b in self.positions:
                c = RootDatum.add(a, b)
                if c is not None and c not in self.positions:
                    return False
        return True

    def is_nilpotent(self) -> bool:
        return _longest_paths(self.positions) is not None

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros((n, n), dtype=bool)
        for i, j in self.positions:
            m[i, j] = True
        return m

    def element(self, n: int, values: dict | None = None) -> np.ndarray:
        """I + sum of values[(i,j)] E_ij."""
        u = np.eye(n, dtype=complex)
        for (i, j), x in (values or {}).items():
            if (i, j) not in self.positions:
                raise ValueError(f"position {(i, j)} outside pattern")
            u[i, j] = x
        return u

    def contains_matrix(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        n = u.shape[0]
        allowed = self.mask(n) | np.eye(n, dtype=bool)
        off = np.abs(u - np.eye(n))[~allowed]
        scale = max(1.0, float(np.max(np.abs(u))))
        return bool(np.all(np.abs(np.diag(u) - 1) <= tol * scale) and np.all(off <= tol * scale))


def partition_mask(parts: Sequence[Sequence[int]], n: int) -> np.ndarray:
    """Boolean support of the block-diagonal Levi with the given index parts."""
    m = np.zeros((n, n), dtype=bool)
    for part in parts:
        idx = np.asarray(part, dtype=int)
        m[np.ix_(idx, idx)] = True
    return m


def parts_from_labels(labels: Sequence) -> tuple[tuple[int, ...], ...]:
    """Group indices by equal labels, ordered by first occurrence."""
    seen: dict = {}
    for i, lab in enumerate(labels):
        seen.setdefault(lab, []).append(i)
    return tuple(tuple(v) for v in seen.values())


@dataclass(frozen=True)
class Cocharacter:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not all(np.isfinite(w)):
            raise ValueError("cocharacter weights must be finite")
        object.__setattr__(self, "weights", w)

    def pairing(self, a: Root) -> float:
        return self.weights[a[0]] - self.weights[a[1]]


@dataclass(frozen=True)
class LeviDecomposition:
    pattern: UnipotentPattern
    blocks: tuple[int, ...]
    permutation: tuple[int, ...]  # original indices listed block by block

    @property
    def parts(self) -> tuple[tuple[int, ...], ...]:
        out, start = [], 0
        for b in self.blocks:
            out.append(tuple(self.permutation[start:start + b]))
            start += b
        return tuple(out)


def parabolic_from_cocharacter(lam: Cocharacter | Sequence[float], tol: float = 1e-12) -> LeviDecomposition:
    """Rad_u(P_lambda) and the Levi of P_lambda (level sets of lambda)."""
    w = np.asarray(lam.weights if isinstance(lam, Cocharacter) else lam, dtype=float)
    n = len(w)
    scale = tol * max(1.0, float(np.max(np.abs(w))) if n else 1.0)
    pattern = UnipotentPattern.of(
        (i, j) for i in range(n) for j in range(n) if w[i] - w[j] > scale
    )
    order = sorted(range(n), key=lambda i: -w[i])
    blocks, perm = [], []
    for i in order:
        if perm and abs(w[perm[-1]] - w[i]) <= scale:
            blocks[-1] += 1
        else:
            blocks.append(1)
        perm.append(i)
    return LeviDecomposition(pattern, tuple(blocks), tuple(perm))


def opposite(pattern: UnipotentPattern) -> UnipotentPattern:
    return pattern.opposite()


def _longest_paths(positions: Iterable[Root]) -> dict | None:
    """Longest path length from i to j in the digraph of positions, or None on a cycle."""
    pos = set(positions)
    nodes = sorted({x for p in pos for x in p})
    succ: dict[int, list[int]] = {v: [] for v in nodes}
    for i, j in pos:
        succ[i].append(j)
    # Kahn ordering doubles as the cycle check
    indeg = {v: 0 for v in nodes}
    for i, j in pos:
        indeg[j] += 1
    queue = [v for v in nodes if indeg[v] == 0]
    topo = []
    while queue:
        v = queue.pop()
        topo.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if len(topo) != len(nodes):
        return None
    rank = {v: k for k, v in enumerate(topo)}
    lengths = {}
    for src in nodes:
        best = {src: 0}
        for v in sorted(nodes, key=rank.get):
            if v not in best:
                continue
            for w in succ[v]:
                best[w] = max(best.get(w, -1), best[v] + 1)
        for v, d in best.items():
            if v != src:
                lengths[(src, v)] = d
    return lengths


def direct_span_factorize(u: np.ndarray, order: Sequence[UnipotentPattern], tol: float = 1e-9) -> list[np.ndarray]:
    """Factor u = F_1 F_2 ... F_k with F_j in the unipotent group of order[j].

    Entries are peeled in increasing path length: the (a, b) entry of the
    product is x_ab plus a polynomial in entries of strictly shorter paths, so
    one pass of residual corrections solves the triangular system.
    """
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    owner: dict[Root, int] = {}
    for idx, pat in enumerate(order):
        for a in pat.positions:
            if a in owner:
                raise ValueError(f"patterns overlap at {a}")
            owner[a] = idx
    union = UnipotentPattern(frozenset(owner))
    if not union.is_closed():
        raise ValueError("union of patterns is not closed")
    lengths = _longest_paths(union.positions)
    if lengths is None:
        raise ValueError("union of patterns is not nilpotent")
    if not union.contains_matrix(u, tol):
        raise ValueError("u has support outside the union of patterns")

    factors = [np.eye(n, dtype=complex) for _ in order]
    for a in sorted(owner, key=lambda p: (lengths[p], p)):
        prod = np.eye(n, dtype=complex)
        for f in factors:
            prod = prod @ f
        i, j = a
        factors[owner[a]][i, j] += u[i, j] - prod[i, j]
    return factors


def multiply(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(factors[0].shape[0], dtype=complex) if factors else None
    for f in factors:
        out = out @ f
    return out
