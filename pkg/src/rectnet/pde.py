"""Age laws of the two immigration layers.

``p_t`` is the age law of the doubly infinite rectangle and ``m_{t,l}`` the
age density (per unit width ``l``) of singly infinite rectangles.  Both solve
a transport equation ``d/dt + d/da = -1`` with a renewal boundary at age 0;
the laws mix a density with one atom.

The numerical solver follows characteristics on a grid with ``da = dt``:
values shift one node per step and decay by the exact factor ``e^{-dt}``;
the boundary value is solved from the trapezoid rule for the total mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import rectangles as rp
from .streams import numpy_generator


@dataclass(frozen=True)
class AgeLaw:
    density: Callable
    lo: float
    hi: float
    atom_at: float | None
    atom_mass: float

    def continuous_mass(self) -> float:
        if self.hi <= self.lo:
            return 0.0
        return integrate.quad(self.density, self.lo, self.hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    def mass(self) -> float:
        return self.continuous_mass() + self.atom_mass


def p_eval(t: float) -> AgeLaw:
    if t < 0:
        raise ValueError("t >= 0")
    return AgeLaw(lambda a: np.where((np.asarray(a) >= 0) & (np.asarray(a) < t), np.exp(-np.asarray(a, dtype=float)), 0.0),
                  0.0, t, t, math.exp(-t))


def p_density(t: float, a):
    a = np.asarray(a, dtype=float)
    return np.where((a >= 0) & (a < t), np.exp(-a), 0.0)


def m_density(t: float, ell, a):
    a = np.asarray(a, dtype=float)
    ell = np.asarray(ell, dtype=float)
    inside = (a >= 0) & (t - a - ell >= 0)
    return np.where(inside, (2 + (t - a - ell)) * np.exp(-ell - a), 0.0)


def m_eval(t: float, ell: float) -> AgeLaw:
    if t < 0 or ell < 0:
        raise ValueError("t, l >= 0")
    if ell > t:
        return AgeLaw(lambda a: np.zeros_like(np.asarray(a, dtype=float)), 0.0, 0.0, None, 0.0)
    return AgeLaw(lambda a: m_density(t, ell, a), 0.0, t - ell, t - ell, math.exp(-t))


def m_mass(t: float, ell):
    """Closed-form total mass ``(1 + t - l) e^{-l}`` for ``l <= t``."""
    ell = np.asarray(ell, dtype=float)
    return np.where(ell <= t, (1 + t - ell) * np.exp(-ell), 0.0)


def singly_count_mean(t: float, ell_max: float) -> float:
    """Expected number of singly infinite rectangles of width at most ``ell_max`` at ``t``."""
    x = min(ell_max, t)
    # integral of (1 + t - l) e^{-l} over [0, x]
    return float((1 + t) * (1 - math.exp(-x)) - (1 - (1 + x) * math.exp(-x)))


def singly_tail_mean(t: float, ell0: float, a0: float) -> float:
    """Expected number of singly infinite rectangles with width >= l0 and age >= a0."""
    def inner(ell):
        if ell > t:
            return 0.0
        top = t - ell
        cont = integrate.quad(lambda a: m_density(t, ell, a), a0, top)[0] if top > a0 else 0.0
        atom = math.exp(-t) if top >= a0 else 0.0
        return cont + atom
    return float(integrate.quad(inner, ell0, t, limit=200)[0])


# --- characteristics solver -----------------------------------------------------------

@dataclass
class TransportTable:
    which: str
    dt: float
    t: np.ndarray  # time nodes
    a: np.ndarray  # age nodes at the final time
    density: np.ndarray  # density at the final time on ``a``
    atom_at: float | None
    atom_mass: float
    max_err: float  # sup over all time steps and nodes against the closed form
    max_mass_step: float  # largest one-step change of total mass (p only)
    ell: float | None = None


def _boundary(atom: float, dens: np.ndarray, dt: float, source: float) -> float:
    """Solve v0 = atom + trapz(v0, dens[1:]) + source for v0."""
    if dens.size == 1:
        return atom + source
    inner = dens[1:-1].sum() + dens[-1] / 2
    return (atom + dt * inner + source) / (1 - dt / 2)


def characteristics_solve(which: str, t_max: float, step: float, ell: float | None = None,
                          track_error: bool = True) -> TransportTable:
    if step > 1e-3 * t_max + 1e-15:
        raise ValueError("grid step must be <= 1e-3 * t_max")
    n = int(round(t_max / step))
    dt = t_max / n
    decay = math.exp(-dt)
    # p: density nodes a_j = j dt, j = 0..k at time t_k; atom at a = t_k
    p = np.array([1.0])  # boundary value at t=0: the unit atom, empty density
    p_atom = 1.0
    max_err = 0.0
    max_mass_step = 0.0
    mass_prev = p_atom + 0.0

    if which == "m":
        if ell is None or ell < 0:
            raise ValueError("m needs l >= 0")
        k_ell = int(round(ell / dt))
        ell = k_ell * dt
    elif which != "p":
        raise ValueError("which is 'p' or 'm'")

    m = None
    m_atom = 0.0
    for k in range(1, n + 1):
        tk = k * dt
        # p: shift, decay, boundary
        newp = np.empty(p.size + 1)
        newp[1:] = p * decay
        p_atom *= decay
        newp[0] = _boundary(p_atom, newp, dt, 0.0)
        p = newp
        mass = p_atom + dt * (p.sum() - (p[0] + p[-1]) / 2)
        if which == "p":
            max_mass_step = max(max_mass_step, abs(mass - mass_prev))
            mass_prev = mass
            if track_error:
                ages = np.arange(p.size) * dt
                ex = np.exp(-ages)
                max_err = max(max_err, float(np.max(np.abs(p - ex))), abs(p_atom - math.exp(-tk)))
            continue
        # m: starts when the atom of p reaches age l
        if k < k_ell:
            continue
        if k == k_ell:
            m_atom = p_atom  # the unbroken doubly infinite rectangle of age l
            m = np.array([_boundary(m_atom, np.array([0.0]), dt, p[k_ell])])
        else:
            newm = np.empty(m.size + 1)
            newm[1:] = m * decay
            m_atom *= decay
            newm[0] = _boundary(m_atom, newm, dt, p[k_ell])
            m = newm
        if track_error:
            ages = np.arange(m.size) * dt
            ex = (2 + (tk - ages - ell)) * np.exp(-ell - ages)
            max_err = max(max_err, float(np.max(np.abs(m - ex))), abs(m_atom - math.exp(-tk)))

    times = np.arange(n + 1) * dt
    if which == "p":
        return TransportTable("p", dt, times, np.arange(p.size) * dt, p, t_max, p_atom, max_err, max_mass_step)
    if m is None:
        return TransportTable("m", dt, times, np.zeros(0), np.zeros(0), None, 0.0, 0.0, 0.0, ell)
    return TransportTable("m", dt, times, np.arange(m.size) * dt, m, t_max - ell, m_atom, max_err, 0.0, ell)


# --- Monte Carlo validation against the rectangle process ----------------------------------

@dataclass
class LayerSample:
    t: float
    doubly_age: np.ndarray  # one per replicate
    singly_ell: np.ndarray  # pooled
    singly_age: np.ndarray
    singly_rep: np.ndarray  # replicate index of each pooled singly rectangle
    reps: int


def layer_sample(t: float, reps: int, seed: int = 0) -> LayerSample:
    """Infinite rectangles at ``t`` from ``reps`` runs of the rectangle process.

    Finite rectangles are created but not expanded, which leaves the
    infinite layers untouched.
    """
    d_age = np.empty(reps)
    ells, ages, rid = [], [], []
    for r in range(reps):
        pop = rp.simulate(t, seed=hash_seed(seed, r), expand_finite=False)
        for u in rp.alive(pop, t):
            x = pop.rects[u]
            if x.kind == "doubly":
                d_age[r] = t - x.birth
            elif x.kind == "singly":
                ells.append(x.ell)
                ages.append(t - x.birth)
                rid.append(r)
    return LayerSample(t, d_age, np.array(ells), np.array(ages), np.array(rid, dtype=int), reps)


def hash_seed(seed: int, rep: int) -> int:
    """Replicate seed derived from the run seed (stable across platforms)."""
    rng = numpy_generator(seed, ("replicate", rep))
    return int(rng.integers(0, 2**62))


@dataclass
class LayerReport:
    t: float
    reps: int
    atom_freq: float
    atom_expected: float
    atom_se: float
    ks_stat: float
    ks_p: float
    count_le2: float
    count_le2_expected: float
    count_le2_se: float
    tail_count: float
    tail_bound: float
    tail_se: float
    tail_expected: float
    chi2_stat: float
    chi2_dof: int
    chi2_p: float


DEFAULT_ELL_EDGES = (0, 0.25, 0.5, 1, 1.5, 2, 3, 4)
DEFAULT_AGE_EDGES = (0, 0.5, 1, 2, 3, 5)


def _clip_edges(edges, top: float) -> np.ndarray:
    inner = [e for e in edges if e < top]
    return np.array(inner + [top])


def mc_layer_validate(t: float, reps: int, seed: int = 0, ell_max: float = 2.0,
                      tail: tuple[float, float] = (1.0, 1.0), sample: LayerSample | None = None,
                      ell_edges=DEFAULT_ELL_EDGES, age_edges=DEFAULT_AGE_EDGES) -> LayerReport:
    if reps < 1000:
        raise ValueError("need reps >= 1000")
    s = sample if sample is not None else layer_sample(t, reps, seed)
    atom = s.doubly_age >= t
    freq = float(atom.mean())
    exp_atom = math.exp(-t)
    se_atom = math.sqrt(exp_atom * (1 - exp_atom) / reps)
    cont = s.doubly_age[~atom]
    norm = -math.expm1(-t)
    ks = stats.kstest(cont, lambda a: -np.expm1(-np.asarray(a)) / norm)

    per_rep = np.bincount(s.singly_rep[s.singly_ell <= ell_max], minlength=reps)
    cnt = float(per_rep.mean())
    cnt_se = float(per_rep.std(ddof=1) / math.sqrt(reps))
    l0, a0 = tail
    tail_rep = np.bincount(s.singly_rep[(s.singly_ell >= l0) & (s.singly_age >= a0)], minlength=reps)

    # binwise comparison of the pooled (width, age) histogram with m, atoms included
    edges_l = _clip_edges(ell_edges, t)
    edges_a = _clip_edges(age_edges, t + 1e-9)
    obs, _, _ = np.histogram2d(s.singly_ell, s.singly_age, [edges_l, edges_a])
    expct = np.empty_like(obs)
    for i in range(len(edges_l) - 1):
        for j in range(len(edges_a) - 1):
            expct[i, j] = reps * _m_box(t, edges_l[i], edges_l[i + 1], edges_a[j], edges_a[j + 1])
    keep = expct >= 5
    chi2 = float(((obs[keep] - expct[keep]) ** 2 / expct[keep]).sum())
    dof = int(keep.sum())
    return LayerReport(t, reps, freq, exp_atom, se_atom, float(ks.statistic), float(ks.pvalue),
                       cnt, singly_count_mean(t, ell_max), cnt_se,
                       float(tail_rep.mean()), t * math.exp(-l0 - a0), float(tail_rep.std(ddof=1) / math.sqrt(reps)),
                       singly_tail_mean(t, l0, a0), chi2, dof, float(stats.chi2.sf(chi2, dof)))


def _m_box(t, l0, l1, a0, a1) -> float:
    """Expected number of singly infinite rectangles with width in [l0,l1) and age in [a0,a1)."""
    def inner(ell):
        top = t - ell
        if top < 0:
            return 0.0
        lo, hi = a0, min(a1, top)
        cont = integrate.quad(lambda a: m_density(t, ell, a), lo, hi)[0] if hi > lo else 0.0
        atom = math.exp(-t) if a0 <= top < a1 else 0.0
        return cont + atom
    return float(integrate.quad(inner, l0, min(l1, t), limit=200)[0])
