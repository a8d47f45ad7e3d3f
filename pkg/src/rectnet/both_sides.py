"""Network variants where lateral offspring may appear on either side.

Without the right-hand rule the rectangle reformulation breaks down, so
these variants are simulated physically: tips advance in time steps of
length ``dt``; a tip that runs into an already traced segment (or the
quadrant boundary) stops.  Two tips whose moves cross inside the same step
meet head on and the collision policy decides:

* annihilate: both stop at the crossing point;
* cross: both continue and the crossing is counted;
* priority: the tip with fewer lateral branchings in its ancestry continues
  (label order breaks ties), the other stops.

Results from this module are exploratory; analytics accept the exact
right-only construction only.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .genealogy import Direction, Label, orth_child, straight_child
from .planar import BranchPolicy, BranchRecord, make_lifetimes
from .streams import KeyedStream

INF = math.inf
EPS = 1e-12


class _Traces:
    def __init__(self, capacity: int = 1024):
        self.ox = np.empty(capacity)
        self.oy = np.empty(capacity)
        self.ex = np.empty(capacity)
        self.ey = np.empty(capacity)
        self.n = 0

    def add(self, x: float, y: float) -> int:
        if self.n == len(self.ox):
            for name in ("ox", "oy", "ex", "ey"):
                old = getattr(self, name)
                new = np.empty(2 * len(old))
                new[: self.n] = old[: self.n]
                setattr(self, name, new)
        i = self.n
        self.ox[i] = self.ex[i] = x
        self.oy[i] = self.ey[i] = y
        self.n += 1
        return i

    def oriented(self, horizontal: bool):
        """(fixed coordinate, lo, hi) of the segments with the given orientation."""
        ox, oy, ex, ey = (a[: self.n] for a in (self.ox, self.oy, self.ex, self.ey))
        if horizontal:
            m = (oy == ey) & (ox != ex)
            return oy[m], np.minimum(ox[m], ex[m]), np.maximum(ox[m], ex[m])
        m = (ox == ex) & (oy != ey)
        return ox[m], np.minimum(oy[m], ey[m]), np.maximum(oy[m], ey[m])


@dataclasses.dataclass
class _Tip:
    label: Label
    idx: int
    time: float
    x: float
    y: float
    dir: Direction


class BothSidesState:
    def __init__(self, seed: int = 0, policy: BranchPolicy = BranchPolicy.BOTH_SIDES_ANNIHILATE,
                 lifetimes=None, dt: float = 0.01, p_right: float = 0.5):
        if policy is BranchPolicy.RIGHT_ONLY:
            raise ValueError("use planar.init for the right-only construction")
        if not 0 < dt <= 0.1:
            raise ValueError("dt must lie in (0, 0.1]")
        self.seed = seed
        self.policy = policy
        self.dt = dt
        self.p_right = p_right
        self.lifetime = make_lifetimes(seed, lifetimes)
        self.records: dict[Label, BranchRecord] = {}
        self.traces = _Traces()
        self.tips: list[_Tip] = []
        self.clock = 0.0
        self.n_events = 0
        self.n_crossings = 0
        self.tips.append(self._spawn((1,), 0.0, (0.0, 0.0), Direction.PX))

    @property
    def horizon(self) -> float:
        return self.clock

    def lateral(self, u: Label) -> int:
        return len(u) - 1

    def side(self, u: Label) -> bool:
        """True when the lateral offspring of ``u`` goes to the right."""
        s = KeyedStream(self.seed, u, counter=1)
        return s.random() < self.p_right

    def _spawn(self, u: Label, birth: float, origin, d: Direction) -> _Tip:
        self.records[u] = BranchRecord(u, birth, birth + self.lifetime(u), INF, origin, d)
        idx = self.traces.add(*origin)
        return _Tip(u, idx, birth, origin[0], origin[1], d)

    def _stop(self, tip: _Tip, time: float, x: float, y: float) -> None:
        self.records[tip.label] = dataclasses.replace(self.records[tip.label], inact_time=time)
        self.traces.ex[tip.idx], self.traces.ey[tip.idx] = x, y

    def advance(self, t_max: float | None = None, n_events: int | None = None):
        if t_max is None and n_events is None:
            raise ValueError("need n_events or t_max")
        while self.tips:
            if t_max is not None and self.clock >= t_max - EPS:
                break
            if n_events is not None and self.n_events >= n_events:
                break
            end = self.clock + self.dt if t_max is None else min(self.clock + self.dt, t_max)
            self._step(end)
            self.clock = end
        return self

    def _obstacle_hits(self, moving: list[_Tip], targets: list[float]) -> list[float]:
        """Distance at which each move first meets a traced segment or the boundary."""
        out = [INF] * len(moving)
        for horizontal in (True, False):
            ids = [k for k, tp in enumerate(moving) if tp.dir.horizontal == horizontal]
            if not ids:
                continue
            c, lo, hi = self.traces.oriented(not horizontal)
            sgn = np.array([moving[k].dir.dx if horizontal else moving[k].dir.dy for k in ids])
            along = np.array([moving[k].x if horizontal else moving[k].y for k in ids])
            across = np.array([moving[k].y if horizontal else moving[k].x for k in ids])
            length = np.array([targets[k] for k in ids])
            if len(c):
                dist = (c[None, :] - along[:, None]) * sgn[:, None]
                ok = ((dist > EPS) & (dist <= length[:, None] + EPS)
                      & (lo[None, :] <= across[:, None]) & (across[:, None] <= hi[None, :]))
                dist = np.where(ok, dist, INF).min(axis=1)
            else:
                dist = np.full(len(ids), INF)
            for j, k in enumerate(ids):
                tp = moving[k]
                # the quadrant boundary absorbs
                if tp.dir is Direction.MX:
                    b = tp.x
                elif tp.dir is Direction.PY:
                    b = -tp.y
                else:
                    b = INF
                if b <= length[j] + EPS:
                    dist[j] = min(dist[j], max(b, 0.0))
                out[k] = float(dist[j])
        return out

    def _encounters(self, moving: list[_Tip], targets: list[float]):
        """Pairs of perpendicular moves crossing away from both start points."""
        found = []
        hs = [k for k, tp in enumerate(moving) if tp.dir.horizontal]
        vs = [k for k, tp in enumerate(moving) if not tp.dir.horizontal]
        for i in hs:
            a = moving[i]
            x0, x1 = sorted((a.x, a.x + a.dir.dx * targets[i]))
            for j in vs:
                b = moving[j]
                y0, y1 = sorted((b.y, b.y + b.dir.dy * targets[j]))
                if x0 <= b.x <= x1 and y0 <= a.y <= y1:
                    di = abs(b.x - a.x)
                    dj = abs(a.y - b.y)
                    if di > EPS and dj > EPS:
                        found.append((max(a.time + di, b.time + dj), i, j, di, dj))
        found.sort()
        return found

    def _step(self, end: float) -> None:
        pending = self.tips
        survivors: list[_Tip] = []
        while pending:
            targets = [min(end, self.records[tp.label].branch_time) - tp.time for tp in pending]
            stop = self._obstacle_hits(pending, targets)
            for when, i, j, di, dj in self._encounters(pending, targets):
                if di >= stop[i] or dj >= stop[j]:
                    continue
                if self.policy is BranchPolicy.BOTH_SIDES_CROSS:
                    self.n_crossings += 1
                elif self.policy is BranchPolicy.BOTH_SIDES_ANNIHILATE:
                    stop[i], stop[j] = di, dj
                else:
                    a, b = pending[i].label, pending[j].label
                    if (self.lateral(a), a) < (self.lateral(b), b):
                        stop[j] = dj
                    else:
                        stop[i] = di
            born: list[_Tip] = []
            for tp, move, s in zip(pending, targets, stop):
                rec = self.records[tp.label]
                if s <= move:
                    x, y = tp.x + tp.dir.dx * s, tp.y + tp.dir.dy * s
                    self._stop(tp, tp.time + s, x, y)
                    continue
                tp.x, tp.y = tp.x + tp.dir.dx * move, tp.y + tp.dir.dy * move
                tp.time += move
                self.traces.ex[tp.idx], self.traces.ey[tp.idx] = tp.x, tp.y
                if tp.time >= rec.branch_time:
                    u = tp.label
                    self.n_events += 1
                    here = (tp.x, tp.y)
                    od = tp.dir.rotate_cw() if self.side(u) else tp.dir.rotate_ccw()
                    for child, d in ((straight_child(u), tp.dir), (orth_child(u), od)):
                        born.append(self._spawn(child, rec.branch_time, here, d))
                else:
                    survivors.append(tp)
            pending = born
        self.tips = survivors
