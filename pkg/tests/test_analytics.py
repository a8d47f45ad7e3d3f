import math

import numpy as np
import pytest
from scipy import integrate, stats

from rectnet import analytics, planar, series
from rectnet import rectangles as rp


def sample_g(n, rng):
    """Exact sampler for the normalized g: a mixture of products of exponentials."""
    k = np.arange(1, 30, dtype=float)
    c = (k + 1) / np.array([math.factorial(int(j) - 1) ** 2 for j in k], dtype=float)
    w = np.concatenate([c / (k + 1), c / (k * (k + 1))])  # masses of the two term families
    comp = rng.choice(w.size, size=n, p=w / w.sum())
    kk = k[comp % k.size]
    second = comp >= k.size
    L = rng.exponential(1 / (kk + 1))
    ell = rng.exponential(1 / np.where(second, kk + 1, kk))
    return L, ell


def test_pi_mc_surface_exact():
    r = analytics.pi_estimate_mc(lambda L, l, a: L * l, 5000, seed=0)
    assert r.mean == pytest.approx(1.0, abs=1e-12)


def test_pi_mc_count_capped():
    cap = 20.0
    trunc = integrate.dblquad(lambda l, L: (1 - cap * L * l) * series.density_g(L, l), 0, 30, 0,
                              lambda L: min(30.0, 1 / (cap * L)) if L > 0 else 30.0, epsabs=1e-9)[0]
    oracle = series.pi_one() - trunc  # Pi(min(1, cap h))
    r = analytics.pi_estimate_mc(lambda L, l, a: np.ones_like(L), 50_000, seed=3, cap=cap)
    assert r.capped > 0
    assert abs(r.mean - oracle) <= 3 * r.se


def test_pi_mc_band():
    oracle = series.pi_quad_L_band(lambda L, l: L * l, 1.0, 2.0)
    r = analytics.pi_estimate_mc(lambda L, l, a: ((L >= 1) & (L <= 2)) * L * l, 50_000, seed=1)
    assert abs(r.mean - oracle) <= 3 * r.se


def test_gof_calibration_and_power():
    rng = np.random.default_rng(0)
    ps = [analytics.gof_test(sample_g(500, rng)[0], series.cdf_L).pvalue for _ in range(100)]
    assert sum(p > 0.05 for p in ps) >= 90
    L, ell = sample_g(2000, rng)
    assert analytics.gof_test(ell, series.cdf_ell).pvalue > 1e-3
    assert analytics.gof_test(L, stats.expon.cdf).pvalue < 1e-3


def test_gof_rejects_small_samples():
    with pytest.raises(ValueError):
        analytics.gof_test(np.ones(10), series.cdf_L)


def test_chi_square_on_exact_samples():
    L, ell = sample_g(20_000, np.random.default_rng(1))
    res = analytics.chi_square_g(L, ell)
    assert res.pvalue > 1e-3
    assert res.expected.shape == (64, 64)


def test_convergence_study_shape():
    rep = analytics.convergence_study(rp.h, [4, 6, 8, 10], 10, 0.5, seed=0)
    assert rep.residuals.size == 4 and math.isfinite(rep.slope)
    assert np.all(rep.mean < 0.5)  # finite-time deficit is pathwise
    with pytest.raises(ValueError):
        analytics.convergence_study(rp.h, [4, 6, 8], 10, 0.5)


def test_small_fragments():
    sf = analytics.small_fragments([1e-9, 1e-3, 1e-2, 1e-1], 12.0, 5, seed=0)
    assert np.all(np.diff(sf.count) >= 0)
    assert sf.count[0] < 0.5
    assert np.all((sf.frozen_ratio >= 0) & (sf.frozen_ratio <= 1))


def test_tree_single_node():
    ts = analytics.tree_stats(rp.simulate(0.0, 0), 0.0)
    assert ts.generations.tolist() == [1] and ts.leaf_fraction.tolist() == [1.0]
    assert ts.sizes[0] == 1


@pytest.mark.parametrize("source", ["rect", "geo"])
def test_tree_monotone(source):
    if source == "rect":
        obj, t = rp.simulate(30.0, 2), 30.0
    else:
        obj = planar.advance(planar.init(2), n_events=3000)
        t = obj.horizon
    ts = analytics.tree_stats(obj, t)
    assert ts.sizes[0] == 1 and np.all(np.diff(ts.sizes) <= 0)
    assert np.all((ts.leaf_fraction >= 0) & (ts.leaf_fraction <= 1))


def test_replicate_seeds_stable():
    assert analytics.replicate_seeds(0, 3) == analytics.replicate_seeds(0, 3)
    assert len(set(analytics.replicate_seeds(0, 50))) == 50
