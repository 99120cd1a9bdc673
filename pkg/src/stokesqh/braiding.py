"""Transport of Stokes representations along admissible deformations of an irregular type.

Each root alpha of degree k contributes k direction instances with unwrapped
angles (arg c_alpha - pi + 2 pi l) / k, where c_alpha is the leading
coefficient of alpha o Q.  Instances are tracked continuously in time; their
order relative to the cut and their windows determine the wall events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .irregular import ANGLE_TOL, TWO_PI, IrregularType, default_cut, degree, leading_coefficient, singular_directions
from .lie import RootDatum, UnipotentPattern, direct_span_factorize, multiply
from .morphisms import SpaceMorphism, theta, theta_inverse, verify_pullback
from .wild import StokesRepresentation, build_space, check_relation, is_stable

MIN_STEP = 1e-12
EVENT_WIDTH = 1e-9


class RefinePathError(RuntimeError):
    """An event could not be resolved (tangential or non-closed merge): refine the path."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class InadmissiblePathError(ValueError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


def _interp(samples: Sequence[IrregularType], times: np.ndarray) -> Callable[[float], IrregularType]:
    n = samples[0].n
    ks = sorted({k for Q in samples for k in Q.pole_orders})
    coeffs = np.array([[Q.coefficient(k) for k in ks] for Q in samples])  # (N, K, n)

    def f(t: float) -> IrregularType:
        if len(samples) == 1:
            return samples[0]
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        s = (t - times[i]) / (times[i + 1] - times[i])
        c = (1 - s) * coeffs[i] + s * coeffs[i + 1]
        return IrregularType(n, tuple((k, tuple(c[j])) for j, k in enumerate(ks)))

    return f


@dataclass
class DeformationPath:
    """Q_point(t) for t in [t0, t1]; the other marked points stay fixed."""

    point: int
    func: Callable[[float], IrregularType]
    times: np.ndarray
    cut: float | None = None
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.cut is None:
            self.cut = singular_directions(self.func(self.times[0])).cut

    @property
    def start(self) -> IrregularType:
        return self.func(self.times[0])

    @property
    def end(self) -> IrregularType:
        return self.func(self.times[-1])

    @classmethod
    def from_samples(cls, point: int, samples: Sequence[IrregularType], times=None, cut=None) -> "DeformationPath":
        samples = list(samples)
        times = np.linspace(0.0, 1.0, len(samples)) if times is None else np.asarray(times, dtype=float)
        desc = {"point": point, "samples": [Q.to_json() for Q in samples]}
        return cls(point, _interp(samples, times), times, cut, desc)

    @classmethod
    def constant(cls, point: int, Q: IrregularType, cut=None) -> "DeformationPath":
        return cls.from_samples(point, [Q, Q], cut=cut)

    @classmethod
    def wind(cls, point: int, Q: IrregularType, pair, turns: float, steps: int = 64, cut=None) -> "DeformationPath":
        """Move the leading eigenvalue a_i around a_j: a_i - a_j -> (a_i - a_j) e^{2 pi i turns t}."""
        i, j = pair
        k = max(Q.pole_orders)
        A = Q.coefficient(k)

        def f(t: float) -> IrregularType:
            B = A.copy()
            B[i] = A[j] + (A[i] - A[j]) * np.exp(2j * np.pi * turns * t)
            return IrregularType(Q.n, tuple((kk, tuple(B if kk == k else Q.coefficient(kk))) for kk in Q.pole_orders))

        desc = {"point": point, "kind": "wind", "pair": [i, j], "turns": turns}
        return cls(point, f, np.linspace(0.0, 1.0, steps + 1), cut, desc)

    def reverse(self) -> "DeformationPath":
        t0, t1 = self.times[0], self.times[-1]
        f = self.func
        return DeformationPath(self.point, lambda t: f(t0 + t1 - t), (t0 + t1 - self.times)[::-1], self.cut,
                               {"reverse": self.description})

    def then(self, other: "DeformationPath") -> "DeformationPath":
        """Concatenate (other starts where self ends), reparametrized on [0, 2]."""
        if other.point != self.point:
            raise ValueError("paths move different marked points")
        a0, a1 = self.times[0], self.times[-1]
        b0, b1 = other.times[0], other.times[-1]
        f, g = self.func, other.func

        def h(t):
            return f(a0 + t * (a1 - a0)) if t <= 1 else g(b0 + (t - 1) * (b1 - b0))

        times = np.concatenate([(self.times - a0) / (a1 - a0), 1 + (other.times[1:] - b0) / (b1 - b0)])
        return DeformationPath(self.point, h, times, self.cut, {"then": [self.description, other.description]})

    def resampled(self, steps: int) -> "DeformationPath":
        return DeformationPath(self.point, self.func, np.linspace(self.times[0], self.times[-1], steps + 1), self.cut,
                               self.description)


# ---------------------------------------------------------------------------
# Direction tracking
# ---------------------------------------------------------------------------


def _arg(c: complex) -> float:
    return math.atan2(c.imag, c.real)


class _Tracker:
    """Unwrapped leading-coefficient arguments per root."""

    def __init__(self, Q: IrregularType):
        self.roots = [a for a in RootDatum(Q.n).roots if degree(Q, a) > 0]
        self.deg = {a: degree(Q, a) for a in self.roots}
        self.kmax = max(self.deg.values(), default=1)
        self.all_roots = RootDatum(Q.n).roots

    def args(self, Q: IrregularType, ref: dict | None) -> dict:
        out = {}
        for a in self.roots:
            x = _arg(leading_coefficient(Q, a))
            if ref is not None:
                x = ref[a] + ((x - ref[a] + math.pi) % TWO_PI - math.pi)
            out[a] = x
        return out

    def motion(self, A: dict, B: dict) -> float:
        return max((abs(B[a] - A[a]) / self.deg[a] for a in self.roots), default=0.0)

    def instances(self, A: dict) -> dict:
        """(alpha, l) -> unwrapped angle."""
        return {(a, l): (A[a] - math.pi + TWO_PI * l) / self.deg[a] for a in self.roots for l in range(self.deg[a])}


def _layout(inst: dict, cut: float):
    """Ordered groups (frozensets of instances) and windows relative to the cut."""
    psi = {key: (phi - cut) % TWO_PI for key, phi in inst.items()}
    window = {key: math.floor((phi - cut) / TWO_PI) for key, phi in inst.items()}
    groups: list[list] = []
    for key in sorted(psi, key=lambda x: psi[x]):
        if groups and psi[key] - psi[groups[-1][-1]] <= ANGLE_TOL:
            groups[-1].append(key)
        else:
            groups.append([key])
    return [frozenset(g) for g in groups], window


def _pattern(group) -> UnipotentPattern:
    return UnipotentPattern(frozenset(a for a, _ in group))


@dataclass
class WallEvent:
    time: float
    kind: str  # "cut-crossing" or "collision"
    point: int
    sense: int = 0  # +1: last direction becomes first; -1: first becomes last
    start: int = 0  # index of the first factor of the changed block
    old: list = field(default_factory=list)  # patterns before the event, in order
    new: list = field(default_factory=list)  # patterns after the event, in order
    _old_groups: list = field(default_factory=list, repr=False)
    _new_groups: list = field(default_factory=list, repr=False)

    @property
    def support(self) -> UnipotentPattern:
        return UnipotentPattern(frozenset().union(*(p.positions for p in self.old)))

    def to_json(self) -> dict:
        def roots(p):
            return sorted([list(a) for a in p.positions])

        out = {"time": self.time, "kind": self.kind, "point": self.point}
        if self.kind == "cut-crossing":
            out["sense"] = self.sense
        else:
            out.update({"start": self.start, "old": [roots(p) for p in self.old],
                        "new": [roots(p) for p in self.new], "support": roots(self.support)})
        return out


@dataclass
class Schedule:
    path: DeformationPath
    times: np.ndarray
    events: list

    def to_json(self) -> dict:
        return {"steps": int(len(self.times) - 1), "events": [e.to_json() for e in self.events]}


def refine(path: DeformationPath, tracker: _Tracker | None = None):
    """Refine the time grid until each step moves every direction by less than pi / (8 k_max).

    Returns (times, unwrapped arguments per time).  Raises InadmissiblePathError
    when a pole order changes or a step cannot be made small enough.
    """
    Q0 = path.start
    tr = tracker or _Tracker(Q0)
    limit = math.pi / (8 * tr.kmax)
    times = [float(path.times[0])]
    args = [tr.args(Q0, None)]
    stack = list(path.times[1:][::-1])
    while stack:
        t = float(stack.pop())
        ta = times[-1]
        Q = path.func(t)
        for a in tr.all_roots:
            if degree(Q, a) != tr.deg.get(a, 0):
                if t - ta < MIN_STEP:
                    raise InadmissiblePathError(f"pole order of root {a} changes", t)
                stack += [t, 0.5 * (ta + t)]
                break
        else:
            A = tr.args(Q, args[-1])
            if tr.motion(args[-1], A) >= limit:
                if t - ta < MIN_STEP:
                    raise InadmissiblePathError("directions move discontinuously (a leading coefficient vanishes)", t)
                stack += [t, 0.5 * (ta + t)]
                continue
            times.append(t)
            args.append(A)
    return np.array(times), args, tr


def validate_path(path: DeformationPath) -> tuple[bool, dict | None]:
    try:
        refine(path)
    except InadmissiblePathError as e:
        return False, {"time": e.time, "reason": str(e)}
    return True, None


def _classify(ga, wa, gb, wb):
    """Return ("none"|"cross"|"block"|"mixed", data) for a change between two layouts."""
    crossed = {k: wb[k] - wa[k] for k in wa if wb[k] != wa[k]}
    if not crossed:
        if ga == gb:
            return "none", None
        # split into minimal blocks covering the same instances in both layouts
        blocks = []
        i = j = 0
        while i < len(ga) and j < len(gb):
            si, sj = set(ga[i]), set(gb[j])
            i0, j0 = i, j
            i, j = i + 1, j + 1
            while si != sj:
                if sj - si:
                    if i >= len(ga):
                        return "mixed", None
                    si |= ga[i]
                    i += 1
                else:
                    if j >= len(gb):
                        return "mixed", None
                    sj |= gb[j]
                    j += 1
            if ga[i0:i] != gb[j0:j]:
                blocks.append((i0, ga[i0:i], gb[j0:j]))
        return "block", blocks
    senses = set(crossed.values())
    if len(senses) != 1 or abs(next(iter(senses))) != 1:
        return "mixed", None
    sense = next(iter(senses))
    keys = frozenset(crossed)
    if sense > 0 and ga and ga[-1] == keys and [ga[-1]] + ga[:-1] == gb:
        return "cross", sense
    if sense < 0 and ga and ga[0] == keys and ga[1:] + [ga[0]] == gb:
        return "cross", sense
    return "mixed", None


def detect_events(path: DeformationPath) -> Schedule:
    """Ordered wall events along the path (bisected until each step holds one event)."""
    times, args, tr = refine(path)
    cut = path.cut
    events: list[WallEvent] = []

    def layout_at(A):
        return _layout(tr.instances(A), cut)

    def resolve(ta, Aa, tb, Ab):
        ga, wa = layout_at(Aa)
        gb, wb = layout_at(Ab)
        kind, data = _classify(ga, wa, gb, wb)
        if kind == "none":
            return
        if tb - ta <= EVENT_WIDTH:
            if kind == "cross":
                events.append(WallEvent(float(0.5 * (ta + tb)), "cut-crossing", path.point, sense=data))
                return
            if kind == "block":
                shift = 0
                for lo, old, new in data:
                    ev = WallEvent(float(0.5 * (ta + tb)), "collision", path.point, start=lo + shift,
                                   old=[_pattern(g) for g in old], new=[_pattern(g) for g in new],
                                   _old_groups=list(old), _new_groups=list(new))
                    if not ev.support.is_closed():
                        raise RefinePathError("merged support of colliding directions is not closed", ev.time)
                    events.append(ev)
                    shift += len(new) - len(old)
                return
            raise RefinePathError("simultaneous events at one time cannot be separated", 0.5 * (ta + tb))
        tm = 0.5 * (ta + tb)
        Am = tr.args(path.func(tm), Aa)
        resolve(ta, Aa, tm, Am)
        resolve(tm, Am, tb, Ab)

    for i in range(len(times) - 1):
        resolve(times[i], args[i], times[i + 1], args[i + 1])
    return Schedule(path, times, _coalesce(events, layout_at(args[0])[0]))


def _coalesce(events: list, groups: list) -> list:
    """Join a merge into a coincident group with the split that follows it, then recompute block starts."""
    out: list[WallEvent] = []
    for ev in events:
        partner = None
        if ev.kind == "collision" and len(ev._old_groups) == 1:
            for idx in range(len(out) - 1, -1, -1):
                prev = out[idx]
                if prev.kind == "collision" and prev._new_groups == ev._old_groups:
                    partner = idx
                    break
        if partner is None:
            out.append(ev)
            continue
        prev = out[partner]
        joined = WallEvent(0.5 * (prev.time + ev.time), "collision", ev.point, old=prev.old, new=ev.new,
                           _old_groups=prev._old_groups, _new_groups=ev._new_groups)
        if joined._old_groups == joined._new_groups:
            out.pop(partner)
        else:
            out[partner] = joined
    # replay the layout to fix block positions
    cur = list(groups)
    for ev in out:
        if ev.kind == "cut-crossing":
            cur = [cur[-1]] + cur[:-1] if ev.sense > 0 else cur[1:] + [cur[0]]
            continue
        k = len(ev._old_groups)
        ev.start = next(i for i in range(len(cur) - k + 1) if cur[i:i + k] == ev._old_groups)
        cur = cur[:ev.start] + ev._new_groups + cur[ev.start + k:]
    return out


# ---------------------------------------------------------------------------
# Applying events
# ---------------------------------------------------------------------------


def refactorize(factors: Sequence[np.ndarray], new_patterns: Sequence[UnipotentPattern]) -> list[np.ndarray]:
    """Factors listed in order of increasing angle: product F_k ... F_1 rewritten in the new order."""
    u = multiply(list(reversed(list(factors))))
    # direct_span_factorize returns u = G_1 G_2 ... in its order; our product runs right to left
    fac = direct_span_factorize(u, list(reversed(list(new_patterns))))
    return list(reversed(fac))


def _regauge(rep: StokesRepresentation) -> StokesRepresentation:
    """Restore the slice C_1 = 1 with the compensating G-action."""
    g = rep.connectors[0]
    if np.allclose(g, np.eye(g.shape[0]), atol=0, rtol=0):
        return rep
    gi = np.linalg.inv(g)
    handles = [(g @ a @ gi, g @ b @ gi) for a, b in rep.handles]
    Cs = [C @ gi for C in rep.connectors]
    Cs[0] = np.eye(g.shape[0], dtype=complex)
    return StokesRepresentation(rep.curve, handles, Cs, list(rep.formal), [list(S) for S in rep.stokes])


def _local(rep: StokesRepresentation, i: int) -> list:
    return [rep.connectors[i], rep.formal[i]] + list(rep.stokes[i])


def _with_local(rep: StokesRepresentation, i: int, pt: list) -> StokesRepresentation:
    Cs, hs, Ss = list(rep.connectors), list(rep.formal), [list(S) for S in rep.stokes]
    Cs[i], hs[i], Ss[i] = pt[0], pt[1], list(pt[2:])
    return _regauge(StokesRepresentation(rep.curve, list(rep.handles), Cs, hs, Ss))


def apply_cut_crossing(rep: StokesRepresentation, event: WallEvent) -> StokesRepresentation:
    """Sense -1 (first direction becomes last) applies Theta, sense +1 applies its inverse."""
    pt = _local(rep, event.point)
    pt = theta(pt) if event.sense < 0 else theta_inverse(pt)
    return _with_local(rep, event.point, pt)


def apply_collision(rep: StokesRepresentation, event: WallEvent) -> StokesRepresentation:
    pt = _local(rep, event.point)
    S = list(pt[2:])
    k = len(event.old)
    block = S[event.start:event.start + k]
    new = refactorize(block, event.new)
    S = S[:event.start] + new + S[event.start + k:]
    return _with_local(rep, event.point, pt[:2] + S)


def apply_event(rep: StokesRepresentation, event: WallEvent) -> StokesRepresentation:
    if event.kind == "cut-crossing":
        return apply_cut_crossing(rep, event)
    return apply_collision(rep, event)


@dataclass
class TransportResult:
    representation: StokesRepresentation
    events: list
    report: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"events": [e.to_json() for e in self.events], "report": self.report,
                "representation": self.representation.to_json()}


def final_curve(rep: StokesRepresentation, path: DeformationPath):
    return rep.curve.replace_point(path.point, path.end, path.cut)


def _start_curve(rep: StokesRepresentation, path: DeformationPath):
    start = path.start
    Q = rep.curve.points[path.point]
    if Q != start and not np.allclose([Q.coefficient(k) for k in start.pole_orders],
                                      [start.coefficient(k) for k in start.pole_orders]):
        raise ValueError("path does not start at the irregular type of the representation")
    st_rep = singular_directions(Q, rep.curve.cut(path.point))
    st_path = singular_directions(start, path.cut)
    if [d.roots for d in st_rep.directions] != [d.roots for d in st_path.directions]:
        raise ValueError("cut of the path orders the directions differently from the representation")
    return rep.curve.replace_point(path.point, start, path.cut)


def transport(rep: StokesRepresentation, path: DeformationPath, schedule: Schedule | None = None) -> TransportResult:
    schedule = schedule or detect_events(path)
    out = StokesRepresentation(_start_curve(rep, path), list(rep.handles), list(rep.connectors), list(rep.formal),
                               [list(S) for S in rep.stokes])
    for ev in schedule.events:
        out = apply_event(out, ev)
    out.curve = final_curve(out, path)
    return TransportResult(out, schedule.events)


def transport_map(path: DeformationPath, schedule: Schedule, source_curve, target_curve) -> Callable:
    def F(pt):
        rep = StokesRepresentation.from_point(source_curve, pt)
        for ev in schedule.events:
            rep = apply_event(rep, ev)
        return rep.to_point()

    return F


def _spectrum_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Optimal-matching distance between the eigenvalue multisets."""
    from scipy.optimize import linear_sum_assignment

    ea, eb = np.linalg.eigvals(a), np.linalg.eigvals(b)
    cost = np.abs(ea[:, None] - eb[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def verify_transport(rep: StokesRepresentation, path: DeformationPath, tol: float = 1e-9,
                     check_pullback: bool = True) -> TransportResult:
    """Transport and check relation, formal-monodromy classes, pullback of omega and stability."""
    schedule = detect_events(path)
    res = transport(rep, path, schedule)
    new = res.representation
    rel = check_relation(new)
    cls = max((_spectrum_distance(a, b) for a, b in zip(rep.formal, new.formal)), default=0.0)
    report = {
        "relation": rel,
        "classes": cls,
        "stable_before": bool(is_stable(rep)),
        "stable_after": bool(is_stable(new)),
        "events": len(schedule.events),
    }
    if check_pullback:
        src_curve = _start_curve(rep, path)
        src, tgt = build_space(src_curve), build_space(new.curve)
        start = StokesRepresentation(src_curve, rep.handles, rep.connectors, rep.formal, rep.stokes)
        morph = SpaceMorphism(src, tgt, transport_map(path, schedule, src_curve, new.curve), name="transport")
        pb = verify_pullback(morph, [start.to_point()], tol)
        report["omega"] = pb["omega_residual"]
        report["moment"] = pb["moment_residual"]
    report["passed"] = bool(rel <= 1e-10 and cls <= 1e-8 and report["stable_before"] == report["stable_after"]
                            and report.get("omega", 0.0) <= tol and report.get("moment", 0.0) <= 1e-10)
    res.report = report
    return res


def direction_table(path: DeformationPath) -> list[tuple[float, str, float]]:
    """(time, instance label, unwrapped angle) rows on the refined grid."""
    times, args, tr = refine(path)
    rows = []
    for t, A in zip(times, args):
        for (a, l), phi in sorted(tr.instances(A).items()):
            rows.append((float(t), f"{a[0]}{a[1]}:{l}", float(phi)))
    return rows
