"""Series for the stationary profile of frozen rectangles.

``g(L, l) = sum_k c_k (k e^{-(k+1)L - kl} + (k+1)/k e^{-(k+1)(L+l)})`` with
``c_k = (k+1)/((k-1)!)^2``.  The family ``g_{n,m}`` solves the recursion
``g_{n,m} = (n+1)(m+1)/(n^2 m^2) g_{n+1,m+1} + r_{n,m}`` and ``g = g_{1,1}``.

All evaluators are vectorized over ``(L, l)``.  Truncation stops once the
current term is below ``tol / 10`` with ``k >= 3``; past that point the term
ratio is below 1/2, so the neglected tail is bounded by the last term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

MAX_TERMS = 200


def _coef(k):
    """(k+1)/((k-1)!)^2, computed in log space."""
    k = np.asarray(k, dtype=float)
    return np.exp(np.log(k + 1) - 2 * special.gammaln(k))


def _sum_terms(term, tol: float) -> tuple[np.ndarray, int]:
    total = 0.0
    for k in range(1, MAX_TERMS):
        t = term(k)
        total = total + t
        if k >= 3 and np.max(t) < tol / 10:
            return total, k
    raise RuntimeError("series did not converge")


def density_g(L, ell, tol: float = 1e-12):
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if np.any(L < 0) or np.any(ell < 0):
        raise ValueError("g is defined for L, l >= 0")

    def term(k):
        c = _coef(k)
        return c * (k * np.exp(-(k + 1) * L - k * ell) + (k + 1) / k * np.exp(-(k + 1) * (L + ell)))

    val, _ = _sum_terms(term, tol)
    return val if val.ndim else float(val)


def terms_needed(tol: float) -> int:
    """Truncation index used at the worst point (0, 0)."""
    _, k = _sum_terms(lambda k: _coef(k) * (k + (k + 1) / k), tol)
    return k


@dataclass(frozen=True)
class SeriesDensity:
    n: int = 1
    m: int = 1
    tol: float = 1e-12

    def __call__(self, L, ell):
        return g_nm(self.n, self.m, L, ell, self.tol)

    def mass(self) -> float:
        return gnm_mass(self.n, self.m, self.tol)


def r_nm(n: int, m: int, L, ell):
    """Density of the remainder measure in the (n, m) recursion."""
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    return ((n + 1) / n * np.exp(-(n + 1) * L - m * ell)
            + (n + 1) * (m + 1) / (n * n * m) * np.exp(-(m + 1) * L - (n + 1) * ell))


def _chain_coefs(n: int, m: int, j_max: int) -> np.ndarray:
    """Products prod_{i<j} (n+i+1)(m+i+1)/((n+i)^2 (m+i)^2), j = 0..j_max."""
    out = np.ones(j_max + 1)
    for j in range(1, j_max + 1):
        i = j - 1
        out[j] = out[j - 1] * (n + i + 1) * (m + i + 1) / ((n + i) ** 2 * (m + i) ** 2)
    return out


def g_nm(n: int, m: int, L, ell, tol: float = 1e-12):
    """Density of the measure Pi_{n,m} as the series of remainder densities."""
    if n < 1 or m < 1:
        raise ValueError("n, m >= 1")
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    total = np.zeros(np.broadcast(L, ell).shape)
    coef = 1.0
    for j in range(MAX_TERMS):
        t = coef * r_nm(n + j, m + j, L, ell)
        total = total + t
        if j >= 2 and np.max(t) < tol / 10:
            return total if total.ndim else float(total)
        coef *= (n + j + 1) * (m + j + 1) / ((n + j) ** 2 * (m + j) ** 2)
    raise RuntimeError("series did not converge")


def gnm_mass(n: int, m: int, tol: float = 1e-14) -> float:
    """Total mass of g_{n,m}, termwise: each r_{n,m} integrates in closed form."""
    total = 0.0
    coef = 1.0
    for j in range(MAX_TERMS):
        a, b = n + j, m + j
        t = coef * ((a + 1) / a / ((a + 1) * b) + (a + 1) * (b + 1) / (a * a * b) / ((b + 1) * (a + 1)))
        total += t
        if j >= 2 and t < tol:
            return total
        coef *= (a + 1) * (b + 1) / (a * a * b * b)
    raise RuntimeError("series did not converge")


def gnm_h_mass(n: int, m: int, tol: float = 1e-14) -> float:
    """Integral of L*l*g_{n,m}; the surface-weighted mass equals 1/(n^2 m^2)."""
    total = 0.0
    coef = 1.0
    for j in range(MAX_TERMS):
        a, b = n + j, m + j
        t = coef * ((a + 1) / a / ((a + 1) ** 2 * b * b)
                    + (a + 1) * (b + 1) / (a * a * b) / ((b + 1) ** 2 * (a + 1) ** 2))
        total += t
        if j >= 2 and t < tol:
            return total
        coef *= (a + 1) * (b + 1) / (a * a * b * b)
    raise RuntimeError("series did not converge")


def gnm_fixedpoint_residual(n: int, m: int, grid, tol: float = 1e-12) -> float:
    """Max |g_{n,m} - (n+1)(m+1)/(n^2 m^2) g_{n+1,m+1} - r_{n,m}| on a grid.

    ``grid`` is a 1-d array of coordinates used for both L and l.
    """
    x = np.asarray(grid, dtype=float)
    L, ell = np.meshgrid(x, x, indexing="ij")
    lhs = g_nm(n, m, L, ell, tol)
    rhs = (n + 1) * (m + 1) / (n * n * m * m) * g_nm(n + 1, m + 1, L, ell, tol) + r_nm(n, m, L, ell)
    return float(np.max(np.abs(lhs - rhs)))


def gnm_halfstep_residual(n: int, m: int, grid, tol: float = 1e-12) -> float:
    """Max residual of the single-step identity with swapped parameters.

    ``g_{n,m} = (n+1)/n^2 g_{m,n+1} + (n+1)/n e^{-(n+1)L - m l}``.  Unlike
    the two-step recursion this is not an algebraic consequence of how the
    series is summed, so it independently checks the ordering of exponents.
    """
    x = np.asarray(grid, dtype=float)
    L, ell = np.meshgrid(x, x, indexing="ij")
    lhs = g_nm(n, m, L, ell, tol)
    rhs = (n + 1) / n ** 2 * g_nm(m, n + 1, L, ell, tol) + (n + 1) / n * np.exp(-(n + 1) * L - m * ell)
    return float(np.max(np.abs(lhs - rhs)))


# --- moments and marginals of g ---------------------------------------------------

def _ks(tol: float = 1e-16) -> np.ndarray:
    return np.arange(1, terms_needed(tol) + 6, dtype=float)


def pi_one(tol: float = 1e-16) -> float:
    """Integral of g: sum_k (1 + 1/k) / ((k-1)!)^2."""
    k = _ks(tol)
    return float(np.sum((1 + 1 / k) * np.exp(-2 * special.gammaln(k))))


def pi_h(tol: float = 1e-16) -> float:
    """Integral of L*l*g, termwise; equals 1."""
    k = _ks(tol)
    c = _coef(k)
    return float(np.sum(c * (1 / (k * (k + 1) ** 2) + 1 / (k * (k + 1) ** 3))))


def pi_moments() -> dict:
    p1 = pi_one()
    ph = 1.0
    return {"pi_1": p1, "pi_h": ph, "pi_h_series": pi_h(), "limit_count": p1 / (2 * ph),
            "limit_surface": 0.5}


def marginal_L(L):
    """Density of L under g (not normalized)."""
    L = np.asarray(L, dtype=float)[..., None]
    k = _ks()
    return np.sum(_coef(k) * (1 + 1 / k) * np.exp(-(k + 1) * L), axis=-1)


def marginal_ell(ell):
    ell = np.asarray(ell, dtype=float)[..., None]
    k = _ks()
    return np.sum(_coef(k) * (k / (k + 1) * np.exp(-k * ell) + np.exp(-(k + 1) * ell) / k), axis=-1)


def cdf_L(x):
    """Normalized cumulative distribution of L under g."""
    x = np.asarray(x, dtype=float)[..., None]
    k = _ks()
    c = _coef(k)
    val = np.sum(c * (1 + 1 / k) * -np.expm1(-(k + 1) * np.maximum(x, 0)) / (k + 1), axis=-1)
    return val / pi_one()


def cdf_ell(x):
    x = np.asarray(x, dtype=float)[..., None]
    k = _ks()
    c = _coef(k)
    xp = np.maximum(x, 0)
    val = np.sum(c * (-np.expm1(-k * xp) / (k + 1) - np.expm1(-(k + 1) * xp) / (k * (k + 1))), axis=-1)
    return val / pi_one()


def box_mass(L0, L1, l0, l1) -> float:
    """Exact integral of g over ``[L0, L1] x [l0, l1]`` (ends may be inf)."""
    k = _ks()
    c = _coef(k)

    def seg(rate, a, b):
        return (np.exp(-rate * a) - np.exp(-rate * b)) / rate

    return float(np.sum(c * (k * seg(k + 1, L0, L1) * seg(k, l0, l1)
                             + (k + 1) / k * seg(k + 1, L0, L1) * seg(k + 1, l0, l1))))


def small_surface_mass(eps: float) -> float:
    """Integral of g over the region L*l < eps."""
    k = _ks(1e-14)
    c = _coef(k)
    total = 0.0
    for ck, kk in zip(c, k):
        def inner(L, alpha, beta):
            # integral over l in [0, eps/L] of e^{-alpha L - beta l}
            return np.exp(-alpha * L) * -np.expm1(-beta * eps / L) / beta if L > 0 else 1.0 / beta

        a1 = integrate.quad(inner, 0, np.inf, args=(kk + 1, kk), limit=200)[0]
        a2 = integrate.quad(inner, 0, np.inf, args=(kk + 1, kk + 1), limit=200)[0]
        total += ck * (kk * a1 + (kk + 1) / kk * a2)
    return float(total)


def pi_quad(f, X: float = 30.0, tol: float = 1e-9) -> float:
    """Pi(f) for f depending on (L, l) only, by adaptive 2-d quadrature of f*g."""
    val, _ = integrate.dblquad(lambda ell, L: f(L, ell) * density_g(L, ell), 0, X, 0, X,
                               epsabs=tol, epsrel=tol)
    return float(val)


def pi_quad_L_band(f, L0: float, L1: float, X: float = 30.0, tol: float = 1e-9) -> float:
    val, _ = integrate.dblquad(lambda ell, L: f(L, ell) * density_g(L, ell), L0, L1, 0, X,
                               epsabs=tol, epsrel=tol)
    return float(val)


def geometric_edges(lo: float = 0.0, hi: float = 12.0, bins: int = 64, first: float = 0.01) -> np.ndarray:
    """Bin edges with geometric spacing from ``first`` to ``hi``, plus ``lo``."""
    inner = np.geomspace(first, hi, bins)
    return np.concatenate([[lo], inner])
