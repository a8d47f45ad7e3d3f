"""Statistics connecting simulations with the stationary profile."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import rectangles as rp
from . import series
from .genealogy import parent
from .pde import hash_seed
from .spine import spine_batch
from .streams import numpy_generator


# --- Pi by sampling the spine --------------------------------------------------------

@dataclass
class MCEstimate:
    mean: float
    se: float
    n: int
    capped: int = 0


def pi_estimate_mc(f: Callable, n: int, seed: int = 0, cap: float | None = None) -> MCEstimate:
    """Pi(f) = E[f(Y_tau)/h(Y_tau)] with the spine started from two size-biased exponentials.

    ``f(L, l, a)`` is vectorized.  ``cap`` bounds ``f/h`` to tame the variance
    when ``f/h`` is unbounded near zero surface; the number of capped samples
    is reported.
    """
    rng = numpy_generator(seed, "pi-mc")
    L0 = rng.gamma(2.0, 1.0, n)
    l0 = rng.gamma(2.0, 1.0, n)
    L, ell, a, _, _ = spine_batch(L0, l0, np.zeros(n), rng)
    v = np.asarray(f(L, ell, a), dtype=float) / (L * ell)
    capped = 0
    if cap is not None:
        capped = int(np.sum(v > cap))
        v = np.minimum(v, cap)
    return MCEstimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)), n, capped)


# --- goodness of fit -----------------------------------------------------------------

@dataclass
class GOF:
    statistic: float
    pvalue: float
    n: int


def gof_test(samples, cdf: Callable) -> GOF:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if x.size < 100:
        raise ValueError("need at least 100 samples")
    r = stats.kstest(x, cdf)
    return GOF(float(r.statistic), float(r.pvalue), int(x.size))


@dataclass
class ChiSquare:
    statistic: float
    dof: int
    pvalue: float
    observed: np.ndarray
    expected: np.ndarray
    edges: np.ndarray


def chi_square_g(L, ell, edges: np.ndarray | None = None, min_expected: float = 5.0) -> ChiSquare:
    """Binwise comparison of pooled (L, l) with the normalized g.

    Bins with small expected counts are pooled into one extra cell, as are
    points beyond the last edge.
    """
    if edges is None:
        edges = series.geometric_edges()
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    n = L.size
    if n == 0:
        raise ValueError("empty sample")
    obs, _, _ = np.histogram2d(L, ell, [edges, edges])
    k = len(edges) - 1
    exp = np.empty((k, k))
    p1 = series.pi_one()
    for i in range(k):
        for j in range(k):
            exp[i, j] = n * series.box_mass(edges[i], edges[i + 1], edges[j], edges[j + 1]) / p1
    keep = exp >= min_expected
    o = list(obs[keep])
    e = list(exp[keep])
    o.append(n - obs[keep].sum())
    e.append(n - exp[keep].sum())
    o, e = np.array(o), np.array(e)
    chi2 = float(((o - e) ** 2 / e).sum())
    dof = len(o) - 1
    return ChiSquare(chi2, dof, float(stats.chi2.sf(chi2, dof)), obs, exp, edges)


# --- pooled frozen rectangles ----------------------------------------------------------

def replicate_seeds(seed: int, reps: int) -> list[int]:
    return [hash_seed(seed, r) for r in range(reps)]


def pooled_frozen(t: float, seeds: Sequence[int]):
    """Concatenated (L, l) of frozen rectangles at ``t`` over independent runs."""
    Ls, ls = [], []
    n_active = 0
    for s in seeds:
        z = rp.snapshot(rp.simulate(t, s), t)
        Ls.append(z.L[z.frozen])
        ls.append(z.ell[z.frozen])
        n_active += int((~z.frozen).sum())
    return np.concatenate(Ls), np.concatenate(ls), n_active


# --- L^2 convergence -------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    t: np.ndarray
    mean: np.ndarray
    mse: np.ndarray
    mse_se: np.ndarray
    reps: int
    limit: float
    slope: float
    intercept: float
    residuals: np.ndarray
    values: np.ndarray = field(repr=False)


def convergence_study(f: Callable, t_grid, reps: int, limit: float, seed: int = 0) -> ConvergenceReport:
    """Replicates of <Z_t, f>/t^2 on a time grid, one run per replicate."""
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if reps < 10:
        raise ValueError("need reps >= 10")
    if t_grid.size < 4:
        raise ValueError("slope fit needs at least 4 times")
    vals = np.empty((reps, t_grid.size))
    for r, s in enumerate(replicate_seeds(seed, reps)):
        pop = rp.simulate(t_grid[-1], s)
        for j, t in enumerate(t_grid):
            vals[r, j] = rp.empirical(pop, t, f) / t ** 2
    err2 = (vals - limit) ** 2
    mse = err2.mean(axis=0)
    mse_se = err2.std(axis=0, ddof=1) / math.sqrt(reps)
    x, y = np.log(t_grid), np.log(mse)
    slope, icept = np.polyfit(x, y, 1)
    return ConvergenceReport(t_grid, vals.mean(axis=0), mse, mse_se, reps, limit, float(slope),
                             float(icept), y - (slope * x + icept), vals)


# --- small fragments -----------------------------------------------------------------

@dataclass
class SmallFragments:
    eps: np.ndarray
    count: np.ndarray  # mean count of finite rectangles with L*l < eps
    count_se: np.ndarray
    frozen_ratio: np.ndarray  # frozen small / frozen total, pooled
    ratio_se: np.ndarray
    g_ratio: np.ndarray  # mass of g on L*l < eps over Pi(1)
    shape: np.ndarray  # count / (eps log(1 + 1/eps))


def small_fragments(eps_grid, t: float, reps: int, seed: int = 0) -> SmallFragments:
    eps = np.asarray(sorted(eps_grid), dtype=float)
    counts = np.zeros((reps, eps.size))
    small_frozen = np.zeros((reps, eps.size))
    frozen_tot = np.zeros(reps)
    for r, s in enumerate(replicate_seeds(seed, reps)):
        z = rp.snapshot(rp.simulate(t, s), t)
        hz = z.L * z.ell
        counts[r] = (hz[:, None] < eps[None, :]).sum(axis=0)
        small_frozen[r] = (hz[z.frozen][:, None] < eps[None, :]).sum(axis=0)
        frozen_tot[r] = z.frozen.sum()
    ratio = small_frozen.sum(axis=0) / frozen_tot.sum()
    # ratio estimator standard error by the delta method over replicates
    resid = small_frozen - ratio[None, :] * frozen_tot[:, None]
    ratio_se = resid.std(axis=0, ddof=1) / math.sqrt(reps) / frozen_tot.mean()
    g_ratio = np.array([series.small_surface_mass(e) for e in eps]) / series.pi_one()
    mean = counts.mean(axis=0)
    return SmallFragments(eps, mean, counts.std(axis=0, ddof=1) / math.sqrt(reps), ratio, ratio_se,
                          g_ratio, mean / (eps * np.log1p(1 / eps)))


# --- genealogy statistics ----------------------------------------------------------------

@dataclass
class TreeStats:
    generations: np.ndarray
    nodes: np.ndarray
    leaves: np.ndarray
    sizes: np.ndarray  # P(subtree size >= k) for k = 1..
    thresholds: np.ndarray

    @property
    def leaf_fraction(self) -> np.ndarray:
        return self.leaves / self.nodes


def tree_stats(obj, t: float | None = None) -> TreeStats:
    """Generation (label depth) counts, leaves, and subtree-size survival.

    Nodes are labels born by ``t``; a leaf has not branched by ``t``.
    Subtrees follow the direct-ancestor relation, so a node's subtree holds
    its straight and orthogonal descendants.
    """
    if isinstance(obj, rp.Population):
        t = obj.clock if t is None else t
        births = {u: r.birth for u, r in obj.rects.items() if r.birth <= t}
        rings = {u: r.ring for u, r in obj.rects.items() if r.birth <= t}
    else:
        t = obj.horizon if t is None else t
        births = {u: r.birth for u, r in obj.records.items() if r.birth <= t}
        rings = {u: (r.branch_time if r.branches else None) for u, r in obj.records.items() if r.birth <= t}
    if not births:
        raise ValueError("empty tree")
    leaf = {u: not (rings[u] is not None and rings[u] <= t) for u in births}
    depth = np.array([len(u) for u in births])
    gens = np.arange(1, depth.max() + 1)
    nodes = np.array([(depth == g).sum() for g in gens])
    leaves = np.array([sum(1 for u in births if len(u) == g and leaf[u]) for g in gens])
    keep = nodes > 0
    size = {u: 1 for u in births}
    for u in sorted(births, key=lambda v: (births[v], v), reverse=True):
        if u != (1,):
            p = parent(u)
            if p in size:
                size[p] += size[u]
    sz = np.array(sorted(size.values()))
    thresholds = np.arange(1, sz.max() + 1)
    surv = 1 - np.searchsorted(sz, thresholds, side="left") / sz.size
    return TreeStats(gens[keep], nodes[keep], leaves[keep], surv, thresholds)
