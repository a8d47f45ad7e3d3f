"""The acceptance suite: one function per criterion, shared by tests and the CLI.

Every function returns a ``CriterionResult``; ``quick=True`` shrinks
replicate counts for smoke runs (the thresholds are unchanged).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics, pde, series, spine
from . import rectangles as rp


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:>2} {self.title}: {self.summary}"


SEED = 0


@functools.lru_cache(maxsize=None)
def _surface_count_runs(t: float, reps: int, seed: int):
    rows = []
    for s in analytics.replicate_seeds(seed, reps):
        z = rp.snapshot(rp.simulate(t, s), t)
        surf = math.fsum((z.L * z.ell).tolist())
        rows.append((surf, len(z)))
    return tuple(rows)


def surface_law(quick: bool = False) -> CriterionResult:
    t, reps = 50.0, (5 if quick else 20)
    rows = _surface_count_runs(t, reps, SEED)
    ratios = np.array([s / t ** 2 for s, _ in rows])
    gaps = np.array([t * t / 2 - s for s, _ in rows])
    mean = float(ratios.mean())
    ok_mean = abs(mean - 0.5) <= 0.03
    ok_paths = bool(np.all(gaps >= 0))
    return CriterionResult(1, "surface law", ok_mean and ok_paths,
                           f"mean <Z_t,h>/t^2 = {mean:.4f} (target 0.5 +- 0.03), "
                           f"min t^2/2 - <Z_t,h> = {gaps.min():.3f} over {reps} paths at t={t:g}",
                           {"mean": mean, "min_gap": float(gaps.min()), "reps": reps})


def count_law(quick: bool = False) -> CriterionResult:
    t, reps = 50.0, (5 if quick else 20)
    rows = _surface_count_runs(t, reps, SEED)
    mean = float(np.mean([n / t ** 2 for _, n in rows]))
    target = series.pi_one() / 2
    rel = abs(mean - target) / target
    return CriterionResult(2, "count law", rel <= 0.05,
                           f"mean <Z_t,1>/t^2 = {mean:.4f} vs Pi(1)/2 = {target:.4f} "
                           f"(rel. error {rel:.3%}, tol 5%) over {reps} paths at t={t:g}",
                           {"mean": mean, "target": target, "rel": rel})


def stationary_density(quick: bool = False) -> CriterionResult:
    t, reps = 30.0, (10 if quick else 50)
    L, ell, n_active = analytics.pooled_frozen(t, analytics.replicate_seeds(SEED, reps))
    ks_L = analytics.gof_test(L, series.cdf_L)
    ks_l = analytics.gof_test(ell, series.cdf_ell)
    ok = ks_L.statistic <= 0.02 and ks_l.statistic <= 0.02
    return CriterionResult(3, "stationary density", ok,
                           f"KS(L) = {ks_L.statistic:.4f}, KS(l) = {ks_l.statistic:.4f} (tol 0.02) "
                           f"on {L.size} frozen rectangles from {reps} runs at t={t:g}",
                           {"ks_L": ks_L.statistic, "ks_l": ks_l.statistic, "n": int(L.size),
                            "active": n_active})


@functools.lru_cache(maxsize=None)
def _equivalence_runs(seeds: tuple, n_events: int):
    return tuple(rp.equivalence_check(s, n_events) for s in seeds)


def _equiv_params(quick: bool):
    return (tuple(range(3)), 2000) if quick else (tuple(range(10)), 10_000)


def equivalence(quick: bool = False) -> CriterionResult:
    seeds, n = _equiv_params(quick)
    reps = _equivalence_runs(seeds, n)
    worst = max(r.max_diff for r in reps)
    bad = [r for r in reps if not r.ok]
    return CriterionResult(4, "geometry/rectangle equivalence", not bad and worst <= 1e-9,
                           f"max field difference {worst:.3g} over {sum(r.n_compared for r in reps)} labels, "
                           f"{len(seeds)} seeds x {n} events"
                           + (f"; first mismatch seed {bad[0].seed} label {bad[0].first_mismatch}" if bad else ""),
                           {"max_diff": worst})


def coupling(quick: bool = False) -> CriterionResult:
    n = 2000 if quick else 10_000
    r = spine.couple_many(5.0, 3.0, 0.0, n, seed=SEED)
    v = r["violations"]
    return CriterionResult(5, "coupling inequalities", sum(v.values()) == 0,
                           f"{n} paths from (5,3,0): violations tau={v['tau']}, "
                           f"side1={v['side1']}, side2={v['side2']} "
                           f"(fixed-coordinate comparison would give L={r['literal_violations']['L']}, "
                           f"l={r['literal_violations']['ell']})", r)


def many_to_one(quick: bool = False) -> CriterionResult:
    n = 20_000 if quick else 100_000
    fs = {"h": lambda L, l, a, fz: L * l, "h*exp(-L-l)": lambda L, l, a, fz: L * l * np.exp(-L - l)}
    parts, ok = [], True
    for z in [(1.0, 1.0, 0.0), (2.0, 1.0, 0.0)]:
        for name, f in fs.items():
            r = spine.many_to_one_check(spine.SpineState(*z), 3.0, f, n, seed=SEED)
            ok &= r.agrees(3.0)
            parts.append(f"z={z[:2]} f={name}: {r.z:.2f} SE")
    return CriterionResult(6, "many-to-one", ok, f"n={n}, t=3: " + "; ".join(parts))


def freezing_tail(quick: bool = False) -> CriterionResult:
    n = 100_000
    grid = np.arange(20.0, 80.0 + 1e-9, 1.0)
    s = spine.freezing_tail(10.0, grid, n, "stick", seed=SEED)
    empty = grid[s.p == 0]
    fit = spine.log_linear_fit(s, 20, 80)
    early = spine.freezing_tail(10.0, np.arange(10.0, 20.0 + 1e-9, 1.0), n, "stick", seed=SEED)
    efit = spine.log_linear_fit(early, 10, 20)
    defined = empty.size == 0
    ok = defined and fit["r2"] >= 0.98 and fit["slope"] < 0
    if defined:
        summary = f"fit on [20,80]: slope {fit['slope']:.4f}, R^2 {fit['r2']:.4f}"
    else:
        summary = (f"log-survival undefined on [20,80]: zero survivors from t={empty[0]:g} "
                   f"(max freezing time {s.taus[-1]:.2f} in {n} paths); "
                   f"fit on [10,20]: slope {efit['slope']:.4f}, R^2 {efit['r2']:.4f}")
    return CriterionResult(7, "freezing tail", bool(ok), summary,
                           {"fit": fit, "fit_10_20": efit, "max_tau": float(s.taus[-1])})


def volterra(quick: bool = False) -> CriterionResult:
    u = spine.volterra_u(5.0, 1e-3)
    sup = u.sup_diff
    bound_ok = bool(np.all(u.closed <= 1 + 2 * math.e * u.x + 1e-12) and np.all(u.iterated <= 1 + 2 * math.e * u.x + 1e-12))
    ok = sup <= 1e-4 and u.closed[0] == 1.0 and u.iterated[0] == 1.0 and bound_ok
    return CriterionResult(8, "function u", ok,
                           f"sup |iteration - closed| = {sup:.2e} on [0,5] (tol 1e-4), u(0) = {u.closed[0]:g}, "
                           f"u <= 1+2ex: {bound_ok}, u(1) = {u.closed[1000]:.4f}")


def layers(quick: bool = False) -> CriterionResult:
    reps = 2000 if quick else 10_000
    r10 = pde.mc_layer_validate(10.0, reps, seed=SEED)
    r3 = pde.mc_layer_validate(3.0, reps, seed=SEED + 1)
    p = pde.characteristics_solve("p", 10.0, 1e-3)
    m = pde.characteristics_solve("m", 10.0, 1e-3, ell=1.0)
    ok_ks = r10.ks_stat <= 0.02
    ok_atom = abs(r3.atom_freq - r3.atom_expected) <= 3 * r3.atom_se
    rel = abs(r10.count_le2 - r10.count_le2_expected) / r10.count_le2_expected
    ok_count = rel <= 0.02
    ok_pde = p.max_err <= 1e-5 and m.max_err <= 1e-5
    return CriterionResult(9, "immigration layers", ok_ks and ok_atom and ok_count and ok_pde,
                           f"KS(doubly age, t=10) = {r10.ks_stat:.4f}; atom freq at t=3 {r3.atom_freq:.4f} vs "
                           f"{r3.atom_expected:.4f} ({abs(r3.atom_freq - r3.atom_expected) / r3.atom_se:.2f} SE); "
                           f"singly count l<=2: {r10.count_le2:.3f} vs {r10.count_le2_expected:.3f} ({rel:.2%}); "
                           f"solver error p {p.max_err:.1e}, m {m.max_err:.1e}",
                           {"reps": reps})


def fixed_point(quick: bool = False) -> CriterionResult:
    grid = np.linspace(0, 5, 101)
    res = series.gnm_fixedpoint_residual(1, 1, grid)
    masses = {(n, m): series.gnm_mass(n, m) for n, m in [(1, 1), (2, 3)]}
    mass_ok = {k: v <= 1 / (k[0] * k[1]) + 1e-10 for k, v in masses.items()}
    ok = res <= 1e-8 and all(mass_ok.values())
    mass_txt = ", ".join(f"int g_{k[0]},{k[1]} = {v:.4f} vs 1/nm = {1 / (k[0] * k[1]):.4f}"
                         for k, v in masses.items())
    return CriterionResult(10, "stationary fixed point", ok,
                           f"residual {res:.1e} (tol 1e-8); {mass_txt}; "
                           f"surface-weighted masses {series.gnm_h_mass(1, 1):.4f}, {series.gnm_h_mass(2, 3):.4f}",
                           {"residual": res, "masses": {str(k): v for k, v in masses.items()}})


def l2_rate(quick: bool = False) -> CriterionResult:
    reps = 20 if quick else 200
    rep = analytics.convergence_study(rp.h, [10, 20, 40, 80], reps, 0.5, seed=SEED)
    ok = -1.4 <= rep.slope <= -0.6
    mse = ", ".join(f"{m:.2e}" for m in rep.mse)
    return CriterionResult(11, "L2 rate", ok,
                           f"slope {rep.slope:.3f} (range [-1.4,-0.6]); MSE at t=10,20,40,80: {mse}; "
                           f"means {', '.join(f'{m:.4f}' for m in rep.mean)}",
                           {"slope": rep.slope, "mse": rep.mse.tolist(), "mean": rep.mean.tolist()})


def fusion(quick: bool = False) -> CriterionResult:
    seeds, n = _equiv_params(quick)
    reps = _equivalence_runs(seeds, n)
    fails = sum(r.fusion_failures for r in reps)
    fused = sum(r.n_fused for r in reps)
    return CriterionResult(12, "fusion on traced branch", fails == 0,
                           f"{fails} failures among {fused} fusions in {len(seeds)} runs of {n} events")


ALL = [surface_law, count_law, stationary_density, equivalence, coupling, many_to_one, freezing_tail,
       volterra, layers, fixed_point, l2_rate, fusion]
QUICK = [1, 2, 3, 4, 5, 8, 9]


def run_all(quick: bool = False, echo=print) -> list[CriterionResult]:
    out = []
    for fn in ALL:
        num = ALL.index(fn) + 1
        if quick and num not in QUICK:
            continue
        r = fn(quick=quick)
        out.append(r)
        if echo:
            echo(r.line())
    return out
