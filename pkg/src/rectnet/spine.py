"""Spinal rectangle process, stick-breaking processes and their coupling.

The spine ``Y = (L, l, a)`` follows one rectangle of the branching process
picked with probability proportional to surface: at a ring of age ``a'`` it
moves to ``(L - a', l, 0)`` with probability ``(L - a')/L`` and to
``(l, a', 0)`` otherwise.  The stick process ``(L, a)`` is its one
dimensional analogue: at a ring it keeps the left piece ``a'`` with
probability ``a'/L`` or the right piece ``L - a'``, and restarts at age 0.
Both freeze when the age reaches the length.

Single-path functions take anything exposing ``random()``; the batch
samplers work on numpy arrays with a numpy generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .streams import KeyedStream, draw_exponential, exponentials, numpy_generator

MAX_EVENTS = 10**6


class RunawayPath(RuntimeError):
    pass


@dataclass(frozen=True)
class SpineState:
    L: float
    ell: float
    a: float = 0.0
    frozen: bool = False

    @property
    def h(self) -> float:
        return self.L * self.ell


@dataclass(frozen=True)
class StickState:
    L: float
    a: float = 0.0
    frozen: bool = False


@dataclass(frozen=True)
class Step:
    state: object
    elapsed: float
    left: bool = False  # the left piece (length = age at the ring) was kept


def stick_step(s: StickState, rng) -> Step:
    if s.frozen:
        raise ValueError("frozen stick")
    d = draw_exponential(rng)
    if s.a + d >= s.L:
        return Step(StickState(s.L, s.L, True), s.L - s.a)
    a2 = s.a + d
    if rng.random() < a2 / s.L:
        return Step(StickState(a2, 0.0), d, left=True)
    return Step(StickState(s.L - a2, 0.0), d)


def spine_step(s: SpineState, rng) -> Step:
    if s.frozen:
        raise ValueError("frozen spine")
    d = draw_exponential(rng)
    if s.a + d >= s.L:
        return Step(SpineState(s.L, s.ell, s.L, True), s.L - s.a)
    a2 = s.a + d
    if rng.random() < (s.L - a2) / s.L:
        return Step(SpineState(s.L - a2, s.ell, 0.0), d)
    return Step(SpineState(s.ell, a2, 0.0), d, left=True)


def run_stick(s: StickState, rng, cap: int = MAX_EVENTS) -> tuple[StickState, float, list]:
    """Run to freezing; returns final state, freezing time and the step list."""
    steps = []
    t = 0.0
    while not s.frozen:
        st = stick_step(s, rng)
        steps.append(st)
        t += st.elapsed
        s = st.state
        if len(steps) > cap:
            raise RunawayPath("stick path exceeded the event cap")
    return s, t, steps


# --- coupling -----------------------------------------------------------------------

@dataclass
class CouplingRecord:
    tau: float
    tau1: float
    tau2: float
    L_tau: float
    ell_tau: float
    L1_tau1: float
    L2_tau2: float
    side1: float  # side of Y driven by the first stick at freezing
    side2: float
    switches: list = field(default_factory=list)
    path: list = field(default_factory=list)

    def violations(self) -> dict:
        """Pathwise inequalities; ``sides`` compares each side with the stick driving it."""
        return {
            "tau": self.tau > self.tau1 + self.tau2,
            "side1": self.side1 < self.L1_tau1,
            "side2": self.side2 < self.L2_tau2,
        }

    def literal_violations(self) -> dict:
        """Same inequalities with Y's first coordinate always compared to the first stick."""
        return {"L": self.L_tau < self.L1_tau1, "ell": self.ell_tau < self.L2_tau2}


def couple(L: float, ell: float, a: float, rng1, rng2) -> CouplingRecord:
    """Build the spine from two independent sticks started at ``(L, a)`` and ``(l, 0)``.

    The spine runs the first stick until it keeps a left piece, then the
    second stick until it keeps a left piece, and so on.  The running stick
    supplies the length and the age, the paused one the width.  The spine
    freezes as soon as the running stick freezes.
    """
    if not (0 <= a < L and ell > 0):
        raise ValueError("need 0 <= a < L and l > 0")
    z1, tau1, steps1 = run_stick(StickState(L, a), rng1)
    z2, tau2, steps2 = run_stick(StickState(ell, 0.0), rng2)
    paths = (steps1, steps2)
    cur = [StickState(L, a), StickState(ell, 0.0)]
    pos = [0, 0]
    active = 0
    t = 0.0
    switches = []
    ypath = [(0.0, L, ell, a)]
    while True:
        st = paths[active][pos[active]]
        pos[active] += 1
        t += st.elapsed
        cur[active] = st.state
        other = cur[1 - active]
        if st.state.frozen:
            break
        ypath.append((t, st.state.L, other.L, 0.0))
        if st.left:
            switches.append(t)
            active = 1 - active
    run = cur[active]
    L_tau, ell_tau = run.L, cur[1 - active].L
    ypath.append((t, L_tau, ell_tau, L_tau))
    side1 = cur[0].L
    side2 = cur[1].L
    return CouplingRecord(t, tau1, tau2, L_tau, ell_tau, z1.L, z2.L, side1, side2, switches, ypath)


def couple_many(L: float, ell: float, a: float, n: int, seed: int = 0) -> dict:
    """Coupled paths with per-path keyed streams; counts inequality violations."""
    counts = {"tau": 0, "side1": 0, "side2": 0}
    literal = {"L": 0, "ell": 0}
    for i in range(n):
        rec = couple(L, ell, a, KeyedStream(seed, f"couple-1-{i}"), KeyedStream(seed, f"couple-2-{i}"))
        for k, v in rec.violations().items():
            counts[k] += v
        for k, v in rec.literal_violations().items():
            literal[k] += v
    return {"n": n, "violations": counts, "literal_violations": literal}


# --- batch samplers -----------------------------------------------------------------

def stick_freeze_batch(L, a, rng: np.random.Generator, cap: int = MAX_EVENTS):
    """Vectorized sticks to freezing: final lengths and freezing times."""
    L = np.array(L, dtype=float)
    a = np.array(a, dtype=float)
    t = np.zeros_like(L)
    live = np.ones(L.shape, dtype=bool)
    it = 0
    while live.any():
        idx = np.flatnonzero(live)
        d = exponentials(rng, idx.size)
        u = rng.random(idx.size)
        Li, ai = L[idx], a[idx]
        fz = ai + d >= Li
        t[idx] += np.where(fz, Li - ai, d)
        a2 = ai + d
        newL = np.where(u < a2 / Li, a2, Li - a2)
        jump = ~fz
        L[idx[jump]] = newL[jump]
        a[idx[jump]] = 0.0
        live[idx[fz]] = False
        it += 1
        if it > cap:
            raise RunawayPath("stick batch exceeded the event cap")
    return L, t


def spine_batch(L, ell, a, rng: np.random.Generator, t_stop: float = math.inf, cap: int = MAX_EVENTS):
    """Vectorized spines run to freezing or to time ``t_stop``.

    Returns ``(L, l, a, frozen, time)`` arrays; for frozen paths ``time`` is
    the freezing time and ``a = L``.
    """
    L = np.array(L, dtype=float)
    ell = np.array(ell, dtype=float)
    a = np.array(a, dtype=float)
    L, ell, a = np.broadcast_arrays(L, ell, a)
    L, ell, a = L.copy(), ell.copy(), a.copy()
    t = np.zeros_like(L)
    frozen = np.zeros(L.shape, dtype=bool)
    live = np.ones(L.shape, dtype=bool)
    it = 0
    while live.any():
        idx = np.flatnonzero(live)
        d = exponentials(rng, idx.size)
        u = rng.random(idx.size)
        Li, li, ai, ti = L[idx], ell[idx], a[idx], t[idx]
        fz = ai + d >= Li
        t_event = ti + np.where(fz, Li - ai, d)
        stop = t_event > t_stop
        # paths whose next event is past t_stop just age
        s_idx = idx[stop]
        a[s_idx] = np.minimum(a[s_idx] + (t_stop - t[s_idx]), L[s_idx])
        t[s_idx] = t_stop
        live[s_idx] = False
        f_idx = idx[fz & ~stop]
        a[f_idx] = L[f_idx]
        t[f_idx] = t_event[fz & ~stop]
        frozen[f_idx] = True
        live[f_idx] = False
        j = ~fz & ~stop
        j_idx = idx[j]
        a2 = (ai + d)[j]
        keep_straight = u[j] < (Li[j] - a2) / Li[j]
        newL = np.where(keep_straight, Li[j] - a2, li[j])
        newl = np.where(keep_straight, li[j], a2)
        L[j_idx], ell[j_idx], a[j_idx] = newL, newl, 0.0
        t[j_idx] = t_event[j]
        it += 1
        if it > cap:
            raise RunawayPath("spine batch exceeded the event cap")
    return L, ell, a, frozen, t


def spine_freeze_sample(L: float, ell: float, n: int, seed: int = 0):
    """``n`` draws of ``(L_tau, l_tau, tau)`` from ``(L, l, 0)``."""
    if L <= 0 or ell <= 0:
        raise ValueError("L, l > 0")
    rng = numpy_generator(seed, ("spine-freeze", L, ell))
    Lt, lt, _, _, tau = spine_batch(np.full(n, L), np.full(n, ell), np.zeros(n), rng)
    return Lt, lt, tau


# --- freezing tail ------------------------------------------------------------------

def wilson(k, n, z: float = 1.96):
    k = np.asarray(k, dtype=float)
    p = k / n
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    hw = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return np.clip(c - hw, 0, 1), np.clip(c + hw, 0, 1)


@dataclass
class Survival:
    t: np.ndarray
    p: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: int
    taus: np.ndarray


def freezing_tail(L: float, t_grid, n: int, which: str = "stick", ell: float | None = None,
                  seed: int = 0) -> Survival:
    if n < 1000:
        raise ValueError("need n >= 1000 paths")
    t_grid = np.asarray(t_grid, dtype=float)
    if which == "stick":
        rng = numpy_generator(seed, ("stick-tail", L))
        _, taus = stick_freeze_batch(np.full(n, L), np.zeros(n), rng)
    elif which == "spine":
        rng = numpy_generator(seed, ("spine-tail", L, ell))
        *_, taus = spine_batch(np.full(n, L), np.full(n, ell if ell is not None else L), np.zeros(n), rng)
    else:
        raise ValueError(which)
    taus = np.sort(taus)
    k = n - np.searchsorted(taus, t_grid, side="right")
    lo, hi = wilson(k, n)
    return Survival(t_grid, k / n, lo, hi, n, taus)


def log_linear_fit(s: Survival, t_lo: float, t_hi: float) -> dict:
    """Least-squares line through log survival on ``[t_lo, t_hi]``."""
    m = (s.t >= t_lo) & (s.t <= t_hi) & (s.p > 0)
    x, y = s.t[m], np.log(s.p[m])
    if x.size < 3:
        return {"slope": math.nan, "r2": math.nan, "points": int(x.size)}
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    r2 = 1 - resid.var() / y.var() if y.var() > 0 else math.nan
    return {"slope": float(slope), "intercept": float(icept), "r2": float(r2), "points": int(x.size)}


# --- harmonic moment ----------------------------------------------------------------

@dataclass
class MomentEstimate:
    mean: float
    se: float
    bound: float
    n: int

    @property
    def within_bound(self) -> bool:
        return self.mean <= self.bound + 3 * self.se


def harmonic_moment(L: float, f, n: int, f_sup: float | None = None, seed: int = 0) -> MomentEstimate:
    """Estimate of E[f(L_tau)/L_tau] for a stick started at ``(L, 0)``.

    ``f`` is vectorized and nonnegative; the bound is
    ``f(L) e^{-L} / L + 2 e sup f``.
    """
    rng = numpy_generator(seed, ("harmonic", L))
    Lt, _ = stick_freeze_batch(np.full(n, L), np.zeros(n), rng)
    vals = np.asarray(f(Lt), dtype=float) / Lt
    if f_sup is None:
        grid = np.linspace(0, L, 2001)[1:]
        f_sup = float(np.max(f(grid)))
    bound = float(f(np.array([L]))[0]) * math.exp(-L) / L + 2 * math.e * f_sup
    return MomentEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), bound, n)


def kernel_chain_moment(L: float, f, n: int, seed: int = 0, w_min: float = 1e-12) -> MomentEstimate:
    """Same quantity from the length kernel ``v_x(dy) = (e^{-(x-y)} + e^{-y}) dy`` on ``[0, x]``.

    Each chain moves by the normalized kernel and carries the product of
    kernel masses ``|v_x| = 2 (1 - e^{-x})``; the estimator is
    ``f(L) e^{-L}/L + (1/L) sum_k W_k f(X_k) e^{-X_k}``.
    """
    rng = numpy_generator(seed, ("kernel-chain", L))
    x = np.full(n, float(L))
    w = np.ones(n)
    acc = np.zeros(n)
    live = np.ones(n, dtype=bool)
    for _ in range(MAX_EVENTS):
        if not live.any():
            break
        idx = np.flatnonzero(live)
        xi = x[idx]
        w[idx] *= 2 * -np.expm1(-xi)
        # truncated exponential on [0, xi], reflected with probability 1/2
        u = rng.random(idx.size)
        y = -np.log1p(u * np.expm1(-xi))
        flip = rng.random(idx.size) < 0.5
        y = np.where(flip, xi - y, y)
        x[idx] = y
        acc[idx] += w[idx] * np.asarray(f(y), dtype=float) * np.exp(-y)
        live[idx[w[idx] < w_min]] = False
    first = float(f(np.array([L]))[0]) * math.exp(-L) / L
    vals = first + acc / L
    return MomentEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), math.nan, n)


# --- the function u -----------------------------------------------------------------

@dataclass
class UTable:
    x: np.ndarray
    closed: np.ndarray
    iterated: np.ndarray
    iterations: int

    @property
    def sup_diff(self) -> float:
        return float(np.max(np.abs(self.closed - self.iterated)))


def _cumulative_simpson(y, h):
    """Cumulative integral on a uniform grid: Simpson on even nodes, odd nodes patched."""
    n = len(y)
    out = np.zeros(n)
    if n < 3:
        out[1:] = h * (y[1:] + y[:-1]) / 2
        return out
    pair = h / 3 * (y[0:-2:2] + 4 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pair)
    # odd node: even node before it plus the quadratic through three points over one step
    i = np.arange(1, n, 2)
    base = out[i - 1]
    nxt = np.minimum(i + 1, n - 1)
    prv = i - 1
    # integral over [x_{i-1}, x_i] of the parabola through (i-1, i, i+1)
    out[i] = base + h / 12 * (5 * y[prv] + 8 * y[i] - y[nxt])
    last = n - 1
    if last % 2 == 1:  # no right neighbour: parabola through (last-2, last-1, last)
        out[last] = out[last - 1] + h / 12 * (-y[last - 2] + 8 * y[last - 1] + 5 * y[last])
    return out


def volterra_u(x_max: float = 5.0, step: float = 1e-3, tol: float = 1e-12,
               max_iter: int = 100) -> UTable:
    """``u`` two ways: closed form by Simpson, kernel series by the trapezoid rule.

    The kernel ``k(x, y) = e^{-y} + e^{-(x-y)}`` separates, so each term of
    the series ``u = sum_n u_n``, ``u_0 = 1``, ``u_{n+1}(x) = int_0^x k(x, y)
    u_n(y) dy`` costs two cumulative sums.
    """
    if step > 1e-2:
        raise ValueError("step must be <= 1e-2")
    n = int(round(x_max / step)) + 1
    x = np.linspace(0.0, x_max, n)
    h = x[1] - x[0]
    closed = 1 + 2 * _cumulative_simpson(np.exp(1 - np.exp(-x)), h)

    def ctrapz(y):
        out = np.zeros_like(y)
        out[1:] = np.cumsum(h * (y[1:] + y[:-1]) / 2)
        return out

    ex, emx = np.exp(x), np.exp(-x)
    term = np.ones(n)
    total = term.copy()
    for it in range(1, max_iter + 1):
        term = ctrapz(emx * term) + emx * ctrapz(ex * term)
        total += term
        if np.max(np.abs(term)) < tol:
            return UTable(x, closed, total, it)
    raise RuntimeError("kernel series did not converge within max_iter")


# --- many-to-one ----------------------------------------------------------------------

def population_batch(L: float, ell: float, a: float, t: float, n: int, f, rng: np.random.Generator):
    """Per-run totals of f over V(t) and W(t) for n branching runs from one finite rectangle.

    Particles are processed generation by generation; each carries its run id.
    """
    run = np.arange(n)
    pL = np.full(n, float(L))
    pl = np.full(n, float(ell))
    pa = np.full(n, float(a))  # age at birth (only the root may start old)
    pb = np.zeros(n)
    totals = np.zeros(n)
    while run.size:
        d = exponentials(rng, run.size)
        ring_age = pa + d
        branches = (ring_age < pL) & (pb + d <= t)
        stay = ~branches
        age_t = np.minimum(pa[stay] + (t - pb[stay]), pL[stay])
        fz = age_t >= pL[stay]
        vals = np.asarray(f(pL[stay], pl[stay], age_t, fz), dtype=float)
        totals += np.bincount(run[stay], weights=np.broadcast_to(vals, age_t.shape), minlength=n)
        b = branches
        ra = ring_age[b]
        tb = pb[b] + d[b]
        # straight child (L - a', l, 0) and orthogonal child (l, a', 0)
        run = np.concatenate([run[b], run[b]])
        pL, pl = np.concatenate([pL[b] - ra, pl[b]]), np.concatenate([pl[b], ra])
        pa = np.zeros(run.size)
        pb = np.concatenate([tb, tb])
    return totals


@dataclass
class ManyToOneReport:
    A: float
    se_A: float
    B: float
    se_B: float
    n: int

    @property
    def pooled_se(self) -> float:
        return math.hypot(self.se_A, self.se_B)

    @property
    def z(self) -> float:
        d = abs(self.A - self.B)
        if self.pooled_se == 0:
            return 0.0 if d <= 1e-12 * max(1.0, abs(self.A)) else math.inf
        return d / self.pooled_se

    def agrees(self, k: float = 3.0, floor: float = 1e-10) -> bool:
        """|A - B| within k pooled standard errors (plus a rounding floor)."""
        return abs(self.A - self.B) <= k * self.pooled_se + floor * max(1.0, abs(self.A))


def many_to_one_check(z: SpineState, t: float, f, n: int, seed: int = 0) -> ManyToOneReport:
    """Compare the spine and direct branching estimators of the first moment.

    ``f(L, l, a, frozen)`` is vectorized.  A = h(z) E[f(Y_t)/h(Y_t)],
    B = E[sum over the population at t of f].
    """
    hz = z.L * z.ell
    if t == 0:
        v = float(np.asarray(f(np.array([z.L]), np.array([z.ell]), np.array([z.a]),
                               np.array([z.a >= z.L])))[0])
        return ManyToOneReport(v, 0.0, v, 0.0, n)
    rng_a = numpy_generator(seed, ("m2o-spine", z.L, z.ell, z.a, t))
    Lt, lt, at, fz, _ = spine_batch(np.full(n, z.L), np.full(n, z.ell), np.full(n, z.a), rng_a, t_stop=t)
    va = hz * np.asarray(f(Lt, lt, at, fz), dtype=float) / (Lt * lt)
    rng_b = numpy_generator(seed, ("m2o-branch", z.L, z.ell, z.a, t))
    vb = population_batch(z.L, z.ell, z.a, t, n, f, rng_b)
    return ManyToOneReport(float(va.mean()), float(va.std(ddof=1) / math.sqrt(n)),
                           float(vb.mean()), float(vb.std(ddof=1) / math.sqrt(n)), n)
