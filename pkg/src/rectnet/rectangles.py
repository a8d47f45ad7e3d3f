"""Branching process of aging rectangles with freezing and double immigration.

A rectangle is ``(L, l, a)``.  Every rectangle that is not frozen carries one
exponential clock, drawn from the stream of its own label.  At the ring a
finite rectangle of age ``a`` splits into ``(L - a, l, 0)`` (straight child)
and ``(l, a, 0)`` (orthogonal child); the doubly infinite rectangle spawns a
singly infinite ``(inf, a, 0)`` and restarts; a singly infinite rectangle of
width ``l`` spawns the finite ``(l, a, 0)`` and restarts.  A finite rectangle
whose clock would ring after its age reaches ``L`` freezes at ``birth + L``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .genealogy import Label, format_label, orth_child, straight_child
from .streams import label_exponential

INF = math.inf


class CannotBranch(ValueError):
    pass


@dataclass(frozen=True)
class Rect:
    L: float
    ell: float
    birth: float = 0.0
    lifetime: float = INF  # the exponential consumed by this label

    @property
    def finite(self) -> bool:
        return not math.isinf(self.L)

    @property
    def kind(self) -> str:
        if self.finite:
            return "finite"
        return "doubly" if math.isinf(self.ell) else "singly"

    @property
    def branches(self) -> bool:
        return self.lifetime < self.L

    @property
    def frozen_at(self) -> float | None:
        if self.finite and not self.branches:
            return self.birth + self.L
        return None

    @property
    def ring(self) -> float | None:
        return self.birth + self.lifetime if self.branches else None

    def age(self, t: float) -> float:
        return min(t - self.birth, self.L)

    def surface(self) -> float:
        return self.L * self.ell


def branch_finite(L: float, ell: float, a: float) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Children of a finite rectangle branching at age ``a``."""
    if not a < L:
        raise CannotBranch(f"age {a} >= length {L}: frozen rectangles do not branch")
    return (L - a, ell, 0.0), (ell, a, 0.0)


def immigrate(layer: str, delta: float, ell: float = INF) -> tuple[float, float, float]:
    """Offspring of an infinite rectangle whose clock rang at age ``delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if layer == "doubly":
        return (INF, delta, 0.0)
    if layer == "singly":
        if math.isinf(ell):
            raise ValueError("singly infinite rectangle needs a finite width")
        return (ell, delta, 0.0)
    raise ValueError(f"unknown layer {layer!r}")


def children(r: Rect) -> tuple[tuple[float, float], tuple[float, float]]:
    """``(L, l)`` of the straight and orthogonal children at the ring of ``r``."""
    a = r.lifetime
    if r.finite:
        s, o = branch_finite(r.L, r.ell, a)
        return s[:2], o[:2]
    if math.isinf(r.ell):
        return (INF, INF), immigrate("doubly", a)[:2]
    return (INF, r.ell), immigrate("singly", a, r.ell)[:2]


@dataclass
class Population:
    """Every rectangle ever created, keyed by label, plus the pending clocks."""

    seed: int
    rects: dict[Label, Rect] = field(default_factory=dict)
    queue: list = field(default_factory=list)
    clock: float = 0.0
    n_events: int = 0
    expand_finite: bool = True
    truncated: bool = False
    log: list | None = None
    lifetime: Callable[[Label], float] | None = None

    @property
    def horizon(self) -> float:
        """All rings strictly before this time have been processed."""
        return self.queue[0][0] if self.queue else INF

    def add(self, label: Label, L: float, ell: float, birth: float) -> Rect:
        d = self.lifetime(label) if self.lifetime else label_exponential(self.seed, label)
        r = Rect(L, ell, birth, d)
        self.rects[label] = r
        if r.branches and (self.expand_finite or not r.finite):
            heapq.heappush(self.queue, (r.ring, label))
        return r

    def doubly(self) -> list[Label]:
        return [u for u, r in self.rects.items() if r.kind == "doubly"]


def new_population(seed: int, init: tuple[float, float] = (INF, INF), expand_finite: bool = True,
                   record_log: bool = False, lifetimes: dict | None = None) -> Population:
    pop = Population(seed=seed, expand_finite=expand_finite, log=[] if record_log else None)
    if lifetimes:
        fixed = dict(lifetimes)
        pop.lifetime = lambda u: fixed[u] if u in fixed else label_exponential(seed, u)
    pop.add((1,), init[0], init[1], 0.0)
    return pop


def run(pop: Population, t_max: float, max_rects: int | None = None) -> Population:
    """Process rings up to ``t_max`` (inclusive); resumable."""
    while pop.queue and pop.queue[0][0] <= t_max:
        if max_rects is not None and len(pop.rects) >= max_rects:
            pop.truncated = True
            break
        ring, u = heapq.heappop(pop.queue)
        r = pop.rects[u]
        (sl, sw), (ol, ow) = children(r)
        pop.add(straight_child(u), sl, sw, ring)
        pop.add(orth_child(u), ol, ow, ring)
        pop.clock = ring
        pop.n_events += 1
        if pop.log is not None:
            pop.log.append((ring, u))
    if not pop.truncated:
        pop.clock = max(pop.clock, t_max)
    return pop


def simulate(t_max: float, seed: int, init: tuple[float, float] = (INF, INF), **kw) -> Population:
    max_rects = kw.pop("max_rects", None)
    return run(new_population(seed, init, **kw), t_max, max_rects=max_rects)


@dataclass
class EmpiricalMeasure:
    t: float
    labels: list
    L: np.ndarray
    ell: np.ndarray
    a: np.ndarray
    frozen: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def restrict(self, mask: np.ndarray) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.t, [u for u, m in zip(self.labels, mask) if m],
                                self.L[mask], self.ell[mask], self.a[mask], self.frozen[mask])


def _check_time(pop: Population, t: float) -> None:
    if t > pop.clock or (pop.truncated and t >= pop.horizon):
        raise ValueError(f"t={t} beyond simulated horizon {pop.clock}")


def alive(pop: Population, t: float) -> list[Label]:
    """Labels in V(t) and W(t)."""
    _check_time(pop, t)
    out = []
    for u, r in pop.rects.items():
        if r.birth > t:
            continue
        if r.branches and r.ring <= t and (pop.expand_finite or not r.finite):
            continue
        out.append(u)
    return out


def snapshot(pop: Population, t: float, support: str = "finite") -> EmpiricalMeasure:
    labels = sorted(alive(pop, t))
    n = len(labels)
    L = np.empty(n)
    ell = np.empty(n)
    a = np.empty(n)
    for i, u in enumerate(labels):
        r = pop.rects[u]
        L[i], ell[i], a[i] = r.L, r.ell, r.age(t)
    frozen = np.isfinite(L) & (a >= L)
    z = EmpiricalMeasure(t, labels, L, ell, a, frozen)
    if support == "finite":
        return z.restrict(np.isfinite(L))
    if support == "all":
        return z
    raise ValueError(f"unknown support {support!r}")


def integrate(z: EmpiricalMeasure, f: Callable) -> float:
    """Sum of ``f(L, l, a, frozen)`` over the atoms (``f`` is vectorized)."""
    if len(z) == 0:
        return 0.0
    vals = np.broadcast_to(np.asarray(f(z.L, z.ell, z.a, z.frozen), dtype=float), z.L.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("f is not finite on every included atom")
    return float(vals.sum())


def empirical(pop: Population, t: float, f: Callable, support: str = "finite") -> float:
    return integrate(snapshot(pop, t, support), f)


def h(L, ell, a=None, frozen=None):
    return L * ell


def one(L, ell, a=None, frozen=None):
    return np.ones_like(L)


def rect_dump(pop: Population, t: float) -> list[dict]:
    """JSONL-ready records of the rectangles present at ``t``."""
    out = []
    for u in sorted(alive(pop, t)):
        r = pop.rects[u]
        fz = r.frozen_at
        out.append({
            "label": format_label(u),
            "L": None if math.isinf(r.L) else r.L,
            "l": None if math.isinf(r.ell) else r.ell,
            "birth": r.birth,
            "freeze": fz if fz is not None and fz <= t else None,
            "age_at_t": None if math.isinf(r.age(t)) else r.age(t),
        })
    return out


def singly_created(pop: Population, t: float) -> int:
    """Singly infinite rectangles created by time ``t`` (restarts not counted)."""
    return sum(1 for u, r in pop.rects.items()
               if r.kind == "singly" and r.birth <= t and len(u) == 2 and u[-1] == 1)


# --- shared-randomness comparison with the geometric construction -------------------

@dataclass
class EquivalenceReport:
    seed: int
    n_events: int
    horizon: float
    n_compared: int
    max_diff: float
    first_mismatch: str | None
    fusion_failures: int = 0
    n_fused: int = 0

    @property
    def ok(self) -> bool:
        return self.first_mismatch is None


def _fields_geo(state, u) -> tuple:
    from .planar import width_of
    r = state.records[u]
    L = r.length
    fz = r.birth + L if not r.branches and not math.isinf(L) else None
    return L, width_of(state, u), r.birth, fz


def _fields_rect(pop: Population, u) -> tuple:
    r = pop.rects[u]
    return r.L, r.ell, r.birth, r.frozen_at


def _diff(x, y) -> float:
    if x is None or y is None:
        return 0.0 if x is y else INF
    if math.isinf(x) or math.isinf(y):
        return 0.0 if x == y else INF
    return abs(x - y)


def equivalence_check(seed: int, n_events: int, tol: float = 1e-9, with_fusion: bool = True) -> EquivalenceReport:
    """Run both simulators on the same label streams and compare rectangles.

    The horizon is the birth time of the last label processed by the
    geometric run; every label born by then is compared on
    ``(L, l, birth, freeze time)``.
    """
    from . import planar

    state = planar.advance(planar.init(seed), n_events=n_events) if n_events > 0 else planar.init(seed)
    th = state.clock
    pop = simulate(th, seed)
    geo = {u for u, r in state.records.items() if r.birth <= th}
    rec = {u for u, r in pop.rects.items() if r.birth <= th}
    first = None
    worst = 0.0
    if geo != rec:
        diff = sorted(geo ^ rec)
        first = format_label(diff[0])
        worst = INF
    for u in sorted(geo & rec):
        d = max(_diff(x, y) for x, y in zip(_fields_geo(state, u), _fields_rect(pop, u)))
        worst = max(worst, d)
        if d > tol and first is None:
            first = format_label(u)
    rep = EquivalenceReport(seed, state.n_events, th, len(geo & rec), worst, first)
    if with_fusion:
        fr = planar.fusion_check(state)
        rep.fusion_failures = len(fr.failures)
        rep.n_fused = fr.n_fused
    return rep
