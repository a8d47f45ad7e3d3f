import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rectnet import series


def _exact(term, k_max=40) -> float:
    return float(sum(term(k) for k in range(1, k_max)))


def _fact2(k):
    return Fraction(math.factorial(k - 1) ** 2)


# independent oracles: exact rational sums of the series at the origin and of its total mass
G00 = _exact(lambda k: Fraction(k + 1) / _fact2(k) * (k + Fraction(k + 1, k)))
PI1 = _exact(lambda k: (1 + Fraction(1, k)) / _fact2(k))


def test_frozen_oracles():
    assert G00 == pytest.approx(21.63069608720305, rel=1e-15)
    assert PI1 == pytest.approx(3.8702221569733966, rel=1e-15)


def test_g_origin():
    assert series.density_g(0.0, 0.0, tol=1e-12) == pytest.approx(G00, abs=1e-11)


def test_pi_moments():
    m = series.pi_moments()
    assert m["pi_1"] == pytest.approx(PI1, rel=1e-14)
    assert m["pi_h_series"] == pytest.approx(1.0, abs=1e-13)
    assert m["limit_count"] == pytest.approx(1.9351110784866983, rel=1e-14)


def test_pi_quad_converges():
    assert series.pi_quad(lambda L, l: 1.0, X=20.0, tol=1e-11) == pytest.approx(PI1, abs=1e-8)


def test_g_decreasing():
    x = np.linspace(0, 6, 61)
    g = series.density_g(x[:, None], x[None, :])
    assert np.all(np.diff(g, axis=0) < 0) and np.all(np.diff(g, axis=1) < 0)


def test_g11_is_g():
    x = np.linspace(0, 5, 26)
    LL, EE = np.meshgrid(x, x)
    assert np.allclose(series.g_nm(1, 1, LL, EE), series.density_g(LL, EE), rtol=1e-12, atol=1e-13)


@given(st.floats(0, 20), st.floats(0, 20))
def test_truncation_stable(L, ell):
    a = series.density_g(L, ell, tol=1e-8)
    b = series.density_g(L, ell, tol=1e-15)
    assert abs(a - b) <= 1e-8


def test_fixed_point_residuals():
    grid = np.linspace(0, 5, 51)
    assert series.gnm_fixedpoint_residual(1, 1, grid) <= 1e-8
    assert series.gnm_halfstep_residual(1, 1, grid) <= 1e-10
    assert series.gnm_halfstep_residual(2, 3, grid) <= 1e-10


@given(st.integers(1, 6), st.integers(1, 6))
def test_surface_weighted_mass(n, m):
    assert series.gnm_h_mass(n, m) == pytest.approx(1 / (n * n * m * m), rel=1e-12)


def test_mass_termwise_vs_quadrature():
    assert series.gnm_mass(1, 1) == pytest.approx(PI1, rel=1e-13)
    q, _ = integrate.dblquad(lambda l, L: series.g_nm(2, 3, L, l), 0, 30, 0, 30, epsabs=1e-11)
    assert series.gnm_mass(2, 3) == pytest.approx(q, abs=1e-9)


def test_marginals_and_cdfs():
    for x in (0.0, 0.3, 2.0):
        q = integrate.quad(lambda l: series.density_g(x, l), 0, np.inf)[0]
        assert float(series.marginal_L(x)) == pytest.approx(q, rel=1e-9)
        q = integrate.quad(lambda L: series.density_g(L, x), 0, np.inf)[0]
        assert float(series.marginal_ell(x)) == pytest.approx(q, rel=1e-9)
    assert float(series.cdf_L(0.0)) == 0.0 and float(series.cdf_L(60.0)) == pytest.approx(1, abs=1e-14)
    assert float(series.cdf_ell(60.0)) == pytest.approx(1, abs=1e-14)
    q = integrate.quad(series.marginal_L, 0, 1.3)[0] / PI1
    assert float(series.cdf_L(1.3)) == pytest.approx(q, rel=1e-10)


def test_box_mass():
    q, _ = integrate.dblquad(lambda l, L: series.density_g(L, l), 0.5, 1.5, 0.2, 0.9, epsabs=1e-12)
    assert series.box_mass(0.5, 1.5, 0.2, 0.9) == pytest.approx(q, rel=1e-9)
    assert series.box_mass(0, np.inf, 0, np.inf) == pytest.approx(PI1, rel=1e-14)


def test_small_surface_mass():
    vals = [series.small_surface_mass(e) for e in (1e-3, 1e-2, 1e-1)]
    assert vals[0] < vals[1] < vals[2] < PI1
    assert series.small_surface_mass(1e-6) < 1e-3  # vanishes like eps log(1/eps)
    q, _ = integrate.dblquad(lambda l, L: series.density_g(L, l), 0, 30, 0, lambda L: min(30, 0.1 / L) if L > 0 else 30,
                             epsabs=1e-10)
    assert vals[2] == pytest.approx(q, rel=1e-5)


def test_edges():
    e = series.geometric_edges()
    assert e.size == 65 and e[0] == 0 and e[-1] == pytest.approx(12) and np.all(np.diff(e) > 0)
