"""Event-driven construction of the orthogonal planar network.

Branches grow in the fourth quadrant.  Labels are processed in order of
birth time.  Processing a label whose branch point lies before its
inactivation point creates its straight child (same line, same inactivation
time) and its orthogonal child, whose ray is stopped by the first imprint
segment it meets; that stopped ray joins the imprint.  The imprint thus holds
the quadrant boundary plus one segment per orthogonal line, including lines
whose tips are still growing.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .genealogy import (
    ROOT,
    Direction,
    Label,
    direction,
    format_label,
    line_owner,
    orth_ancestor,
    orth_child,
    straight_child,
)
from .streams import label_exponential

INF = math.inf


class BranchPolicy(Enum):
    RIGHT_ONLY = "right-only"
    BOTH_SIDES_ANNIHILATE = "both-annihilate"
    BOTH_SIDES_CROSS = "both-cross"
    BOTH_SIDES_PRIORITY = "both-priority"


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class BranchRecord:
    label: Label
    birth: float
    branch_time: float
    inact_time: float
    origin: tuple[float, float]
    dir: Direction

    @property
    def lifetime(self) -> float:
        return self.branch_time - self.birth

    @property
    def branches(self) -> bool:
        return self.branch_time < self.inact_time

    @property
    def length(self) -> float:
        """Rectangle length ``T^inf - T_{u-}``."""
        return self.inact_time - self.birth

    def position(self, s: float) -> tuple[float, float]:
        """Location of the tip of this branch at time ``s`` (no clipping)."""
        d = s - self.birth
        x, y = self.origin
        return (x + self.dir.dx * d if self.dir.dx else x,
                y + self.dir.dy * d if self.dir.dy else y)


@dataclass(frozen=True)
class Segment:
    origin: tuple[float, float]
    dir: Direction
    length: float
    owner: Label
    traced_from: float = 0.0

    def end(self) -> tuple[float, float]:
        x, y = self.origin
        return (_shift(x, self.dir.dx, self.length), _shift(y, self.dir.dy, self.length))


@dataclass(frozen=True)
class Hit:
    point: tuple[float, float]
    distance: float
    owner: Label


def _shift(c: float, sign: int, d: float) -> float:
    if sign == 0:
        return c
    return c + d if sign > 0 else c - d


class _SegmentArray:
    """Growable arrays of axis-aligned segments sharing one orientation.

    ``c`` is the fixed coordinate (y for horizontal, x for vertical) and
    ``[lo, hi]`` the span along the other axis.
    """

    def __init__(self, capacity: int = 256):
        self.c = np.empty(capacity)
        self.lo = np.empty(capacity)
        self.hi = np.empty(capacity)
        self.owners: list[Label] = []
        self.n = 0

    def add(self, c: float, lo: float, hi: float, owner: Label) -> None:
        if self.n == len(self.c):
            for name in ("c", "lo", "hi"):
                old = getattr(self, name)
                new = np.empty(2 * len(old))
                new[: self.n] = old[: self.n]
                setattr(self, name, new)
        self.c[self.n], self.lo[self.n], self.hi[self.n] = c, lo, hi
        self.owners.append(owner)
        self.n += 1

    def view(self):
        return self.c[: self.n], self.lo[: self.n], self.hi[: self.n]


class Imprint:
    """Boundary half-lines plus stopped rays; segments are only ever added."""

    def __init__(self):
        self.horizontal = _SegmentArray()
        self.vertical = _SegmentArray()
        self.segments: list[Segment] = []
        # {0} x (-inf, 0]: the quadrant boundary, owned by the root label
        self.vertical.add(0.0, -INF, 0.0, ROOT)
        self.segments.append(Segment((0.0, 0.0), Direction.MY, INF, ROOT))
        # [0, inf) x {0}: the half line of branch (1)
        self.add(Segment((0.0, 0.0), Direction.PX, INF, (1,)))

    def __len__(self) -> int:
        return len(self.segments)

    def add(self, seg: Segment) -> None:
        if not seg.dir.horizontal and seg.owner == ROOT:
            raise ValueError("root owns the boundary only")
        x0, y0 = seg.origin
        x1, y1 = seg.end()
        if seg.dir.horizontal:
            self.horizontal.add(y0, min(x0, x1), max(x0, x1), seg.owner)
        else:
            self.vertical.add(x0, min(y0, y1), max(y0, y1), seg.owner)
        self.segments.append(seg)


def first_hit(origin: tuple[float, float], dir: Direction, imprint: Imprint) -> Hit | None:
    """Nearest point at strictly positive distance where the ray meets the imprint.

    Ties at equal distance go to the lexicographically smallest owner label.
    """
    x0, y0 = origin
    if dir.horizontal:
        along0, across0, sgn = x0, y0, dir.dx
        perp, coll = imprint.vertical, imprint.horizontal
    else:
        along0, across0, sgn = y0, x0, dir.dy
        perp, coll = imprint.horizontal, imprint.vertical

    best_d = INF
    cands: list[Label] = []

    c, lo, hi = perp.view()
    dist = (c - along0) * sgn
    mask = (dist > 0) & (lo <= across0) & (across0 <= hi)
    if mask.any():
        idx = np.flatnonzero(mask)
        dmin = dist[idx].min()
        best_d = float(dmin)
        cands = [perp.owners[i] for i in idx[dist[idx] == dmin]]

    # collinear segments strictly ahead of the origin (degenerate, tests only)
    c, lo, hi = coll.view()
    on_line = c == across0
    if on_line.any():
        near = lo if sgn > 0 else hi
        dist = (near - along0) * sgn
        m2 = on_line & (dist > 0)
        for i in np.flatnonzero(m2):
            d = float(dist[i])
            if d < best_d:
                best_d, cands = d, [coll.owners[i]]
            elif d == best_d:
                cands.append(coll.owners[i])

    if not cands:
        return None
    owner = min(cands)
    if dir.horizontal:
        pt = (along0 + sgn * best_d, across0)
    else:
        pt = (across0, along0 + sgn * best_d)
    return Hit(pt, best_d, owner)


Lifetimes = Callable[[Label], float]


@dataclass
class NetworkState:
    seed: int
    policy: BranchPolicy
    lifetime: Lifetimes
    records: dict[Label, BranchRecord] = field(default_factory=dict)
    imprint: Imprint = field(default_factory=Imprint)
    hits: dict[Label, Hit | None] = field(default_factory=dict)
    queue: list = field(default_factory=list)
    processed: set = field(default_factory=set)
    clock: float = 0.0
    n_events: int = 0

    @property
    def horizon(self) -> float:
        """All labels born strictly before this time have been processed."""
        return self.queue[0][0] if self.queue else INF

    def push(self, rec: BranchRecord, orth: bool) -> None:
        self.records[rec.label] = rec
        heapq.heappush(self.queue, (rec.birth, int(orth), rec.label))


def make_lifetimes(seed: int, overrides: Mapping[Label, float] | None = None) -> Lifetimes:
    if not overrides:
        return lambda u: label_exponential(seed, u)
    fixed = dict(overrides)

    def lifetime(u: Label) -> float:
        if u in fixed:
            return fixed[u]
        return label_exponential(seed, u)

    return lifetime


def init(seed: int = 0, policy: BranchPolicy = BranchPolicy.RIGHT_ONLY,
         lifetimes: Mapping[Label, float] | None = None, **kwargs):
    """Initial network: branch (1) growing right from the origin, forever."""
    if policy is not BranchPolicy.RIGHT_ONLY:
        from .both_sides import BothSidesState
        return BothSidesState(seed=seed, policy=policy, lifetimes=lifetimes, **kwargs)
    st = NetworkState(seed=seed, policy=policy, lifetime=make_lifetimes(seed, lifetimes))
    d = st.lifetime((1,))
    st.push(BranchRecord((1,), 0.0, d, INF, (0.0, 0.0), Direction.PX), orth=False)
    st.hits[(1,)] = None
    return st


def advance(state, n_events: int | None = None, t_max: float | None = None):
    """Process branching events in birth order until a budget is exhausted.

    ``n_events`` counts branching events (fusions are not events); ``t_max``
    stops before the first label born after ``t_max``.  The queue is left
    intact so a later call resumes where this one stopped.
    """
    if not isinstance(state, NetworkState):
        return state.advance(t_max=t_max, n_events=n_events)
    if n_events is None and t_max is None:
        raise ValueError("need n_events or t_max")
    done = 0
    while state.queue:
        if n_events is not None and done >= n_events:
            break
        birth, _, u = state.queue[0]
        if t_max is not None and birth > t_max:
            break
        heapq.heappop(state.queue)
        state.processed.add(u)
        state.clock = birth
        rec = state.records[u]
        if not rec.branches:
            continue
        t_u = rec.branch_time
        x_u = rec.position(t_u)

        s = straight_child(u)
        ds = state.lifetime(s)
        state.push(BranchRecord(s, t_u, t_u + ds, rec.inact_time, x_u, rec.dir), orth=False)

        o = orth_child(u)
        do = state.lifetime(o)
        odir = rec.dir.rotate_cw()
        hit = first_hit(x_u, odir, state.imprint)
        length = hit.distance if hit else INF
        state.imprint.add(Segment(x_u, odir, length, o, traced_from=t_u))
        state.hits[o] = hit
        state.push(BranchRecord(o, t_u, t_u + do, t_u + length, x_u, odir), orth=True)

        state.n_events += 1
        done += 1
    return state


def _check_horizon(state: NetworkState, t: float) -> None:
    if t > state.horizon:
        raise HorizonError(f"t={t} beyond simulated horizon {state.horizon}")


def alive_labels(state: NetworkState, t: float) -> list[Label]:
    """Labels of V(t) and W(t): born by t and not replaced by children by t."""
    _check_horizon(state, t)
    out = []
    for u, r in state.records.items():
        if r.birth > t:
            continue
        if r.branches and r.branch_time <= t:
            continue
        out.append(u)
    return out


def width_of(state: NetworkState, u: Label) -> float:
    w = orth_ancestor(u)
    if w == ROOT:
        return INF
    return state.records[w].lifetime


def extract_rectangles(state: NetworkState, t: float) -> list[tuple[Label, tuple[float, float, float]]]:
    """``(label, (L, l, a))`` for every rectangle present at time ``t``."""
    out = []
    for u in sorted(alive_labels(state, t)):
        r = state.records[u]
        L = r.length
        out.append((u, (L, width_of(state, u), min(t - r.birth, L))))
    return out


def _span(origin_c: float, sign: int, length: float) -> tuple[float, float]:
    if sign == 0:
        return origin_c, origin_c
    if sign > 0:
        return origin_c, origin_c + length
    return origin_c - length, origin_c


def rectangle_boxes(state: NetworkState, t: float) -> tuple[list[Label], np.ndarray]:
    """Axis-aligned boxes ``[xlo, xhi, ylo, yhi]`` of the regions Omega_u."""
    labels = sorted(alive_labels(state, t))
    boxes = np.empty((len(labels), 4))
    for i, u in enumerate(labels):
        r = state.records[u]
        L, ell = r.length, width_of(state, u)
        side = r.dir.rotate_cw()
        ox, oy = r.origin
        ax0, ax1 = _span(0.0, r.dir.dx, L) if r.dir.dx else _span(0.0, side.dx, ell)
        ay0, ay1 = _span(0.0, r.dir.dy, L) if r.dir.dy else _span(0.0, side.dy, ell)
        boxes[i] = (ox + ax0, ox + ax1, oy + ay0, oy + ay1)
    return labels, boxes


@dataclass
class PartitionReport:
    n_points: int
    n_edge: int
    n_bad: int
    coverage: np.ndarray

    @property
    def ok(self) -> bool:
        return self.n_bad == 0


def point_location_check(state: NetworkState, t: float, points: np.ndarray,
                         chunk: int = 512) -> PartitionReport:
    """Count rectangle interiors covering each point (edges reported apart)."""
    _, boxes = rectangle_boxes(state, t)
    pts = np.asarray(points, dtype=float)
    cover = np.empty(len(pts), dtype=int)
    edge = np.zeros(len(pts), dtype=bool)
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        px, py = p[:, :1], p[:, 1:]
        inside = (boxes[:, 0] < px) & (px < boxes[:, 1]) & (boxes[:, 2] < py) & (py < boxes[:, 3])
        closed = (boxes[:, 0] <= px) & (px <= boxes[:, 1]) & (boxes[:, 2] <= py) & (py <= boxes[:, 3])
        cover[s:s + chunk] = inside.sum(axis=1)
        edge[s:s + chunk] = (closed & ~inside).any(axis=1)
    bad = (~edge) & (cover != 1)
    return PartitionReport(len(pts), int(edge.sum()), int(bad.sum()), cover)


def _clip_area(x0, x1, y0, y1, t):
    """Area of boxes intersected with the triangle x >= 0, y <= 0, x - y <= t."""
    x0 = np.clip(x0, 0.0, t)
    x1 = np.clip(x1, 0.0, t)
    y0 = np.clip(y0, -t, 0.0)
    y1 = np.clip(y1, -t, 0.0)
    # height at abscissa x is max(0, y1 - max(y0, x - t)): piecewise linear in x
    bps = np.stack([x0, np.clip(t + y0, x0, x1), np.clip(t + y1, x0, x1), x1], axis=1)
    bps.sort(axis=1)

    def height(x):
        return np.maximum(0.0, y1[:, None] - np.maximum(y0[:, None], x - t))

    hts = height(bps)
    return (0.5 * (hts[:, 1:] + hts[:, :-1]) * np.diff(bps, axis=1)).sum(axis=1)


def area_accounting(state: NetworkState, t: float) -> float:
    """Relative gap between the triangle area t^2/2 and the clipped rectangle areas."""
    _, b = rectangle_boxes(state, t)
    total = _clip_area(b[:, 0], b[:, 1], b[:, 2], b[:, 3], t).sum()
    return abs(total - t * t / 2) / (t * t / 2)


@dataclass
class FusionReport:
    n_fused: int
    failures: list
    covered_at_birth: int


def fusion_check(state: NetworkState, tol: float = 1e-9) -> FusionReport:
    """Each fusion point must lie on a part of the network traced by the fusion time.

    Also counts fusions whose point was already traced when the fusing
    branch was born, the stronger form of the same property.
    """
    failures = []
    n = 0
    at_birth = 0
    for u in state.processed:
        r = state.records[u]
        if r.branches or math.isinf(r.inact_time):
            continue
        n += 1
        hit = state.hits[line_owner(u)]
        px, py = hit.point
        owner = hit.owner
        if owner == ROOT:
            covered = abs(px) <= tol and py <= tol
            ok = ok_birth = covered
        else:
            o = state.records[owner]
            ox, oy = o.origin
            d = abs(px - ox) + abs(py - oy)
            reach = min(o.length, r.inact_time - o.birth)
            ok = d <= reach + tol
            ok_birth = d <= min(o.length, r.birth - o.birth) + tol
        at_birth += bool(ok_birth)
        if not ok:
            failures.append(format_label(u))
    return FusionReport(n, failures, at_birth)


def traced_segments(state, t: float) -> list[tuple[Label, tuple[float, float], tuple[float, float]]]:
    """Portion of every branch traced by time ``t``: ``(label, start, end)``."""
    out = []
    for u in sorted(state.records):
        r = state.records[u]
        if r.birth >= t:
            continue
        stop = min(t, r.branch_time, r.inact_time)
        if stop <= r.birth:
            continue
        out.append((u, r.origin, r.position(stop)))
    return out


def count_crossings(segments: list[tuple[Label, tuple[float, float], tuple[float, float]]],
                    tol: float = 1e-12) -> int:
    """Transversal crossings between horizontal and vertical traced segments."""
    h, v = [], []
    for _, (x0, y0), (x1, y1) in segments:
        if y0 == y1 and x0 != x1:
            h.append((y0, min(x0, x1), max(x0, x1)))
        elif x0 == x1 and y0 != y1:
            v.append((x0, min(y0, y1), max(y0, y1)))
    if not h or not v:
        return 0
    h = np.array(h)
    v = np.array(v)
    total = 0
    for s in range(0, len(h), 512):
        hh = h[s:s + 512]
        cross = ((hh[:, 1:2] + tol < v[:, 0]) & (v[:, 0] < hh[:, 2:3] - tol)
                 & (v[:, 1] + tol < hh[:, 0:1]) & (hh[:, 0:1] < v[:, 2] - tol))
        total += int(cross.sum())
    return total


def branch_dump(state) -> list[dict]:
    """JSONL-ready records, one per branch, in label order."""
    out = []
    for u in sorted(state.records):
        r = state.records[u]
        out.append({
            "label": format_label(u),
            "birth": r.birth,
            "branch_time": r.branch_time,
            "inact_time": None if math.isinf(r.inact_time) else r.inact_time,
            "origin": [r.origin[0], r.origin[1]],
            "dir": str(r.dir),
        })
    return out


def direction_ok(state: NetworkState) -> bool:
    """Every RightOnly record grows in the direction fixed by its depth."""
    return all(r.dir is direction(u) for u, r in state.records.items())
