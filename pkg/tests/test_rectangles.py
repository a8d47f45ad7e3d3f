import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from rectnet import rectangles as rp
from rectnet.rectangles import CannotBranch, Rect, branch_finite, immigrate
from rectnet.streams import label_exponential

INF = math.inf
pos = st.floats(0.01, 100)


def test_branch_example():
    assert branch_finite(3, 2, 1) == ((2, 2, 0.0), (2, 1, 0.0))


def test_branch_at_age_zero():
    assert branch_finite(4.0, 1.5, 0.0) == ((4.0, 1.5, 0.0), (1.5, 0.0, 0.0))


def test_frozen_cannot_branch():
    with pytest.raises(CannotBranch):
        branch_finite(2.0, 1.0, 2.0)


@given(pos, pos, st.floats(0, 1, exclude_max=True))
def test_surface_conserved(L, ell, frac):
    a = frac * L
    assume(a < L)
    (L1, l1, _), (L2, l2, _) = branch_finite(L, ell, a)
    assert L1 * l1 + L2 * l2 == pytest.approx(L * ell, rel=1e-12)
    assert 0 < L1 <= L and L2 == ell


def test_immigration():
    assert immigrate("doubly", 0.7) == (INF, 0.7, 0.0)
    assert immigrate("singly", 1.2, 0.7) == (0.7, 1.2, 0.0)
    with pytest.raises(ValueError):
        immigrate("singly", 1.0)


def test_rect_kinds():
    assert Rect(INF, INF).kind == "doubly"
    assert Rect(INF, 2.0).kind == "singly"
    r = Rect(2.0, 1.0, birth=1.0, lifetime=3.0)
    assert r.kind == "finite" and not r.branches and r.frozen_at == 3.0 and r.age(10) == 2.0


def test_deterministic():
    a = rp.simulate(15.0, 7, record_log=True)
    b = rp.simulate(15.0, 7, record_log=True)
    assert a.log == b.log and a.rects == b.rects


def test_empty_at_zero():
    pop = rp.simulate(0.0, 1)
    assert rp.empirical(pop, 0.0, rp.one) == 0.0
    assert rp.empirical(pop, 0.0, rp.one, support="all") == 1.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pathwise_invariants(seed):
    t_max = 20.0
    pop = rp.simulate(t_max, seed, record_log=True)
    rings = [r for r, _ in pop.log]
    for t in np.unique(np.r_[rings[::25], t_max]):
        labels = rp.alive(pop, t)
        assert sum(1 for u in labels if pop.rects[u].kind == "doubly") == 1
        surf = math.fsum(rp.snapshot(pop, t).L * rp.snapshot(pop, t).ell)
        assert 0 <= t * t / 2 - surf
    for ring, u in pop.log:
        r = pop.rects[u]
        assert r.frozen_at is None  # frozen rectangles never ring
        if r.finite:
            (s, o) = rp.children(r)
            assert s[0] * s[1] + o[0] * o[1] == pytest.approx(r.L * r.ell, rel=1e-12, abs=1e-300)


def test_singly_count_replays_doubly_clock():
    pop = rp.simulate(30.0, 4, record_log=True)
    for t in (5.0, 12.0, 30.0):
        rings = sum(1 for ring, u in pop.log if ring <= t and pop.rects[u].kind == "doubly")
        assert rp.singly_created(pop, t) == rings


def test_singly_count_mean():
    t = 10.0
    counts = [rp.singly_created(rp.simulate(t, s, expand_finite=False), t) for s in range(400)]
    assert abs(np.mean(counts) - t) <= 3 * math.sqrt(t / 400)


def test_equivalence_zero_events():
    rep = rp.equivalence_check(3, 0)
    assert rep.ok and rep.n_compared == 1


def test_equivalence_one_event():
    from rectnet import planar
    st_ = planar.advance(planar.init(5), n_events=1)
    d1 = label_exponential(5, (1,))
    got = dict(planar.extract_rectangles(st_, d1))
    assert got[(2,)][:2] == (INF, INF) and got[(1, 1)][:2] == (INF, d1)
    pop = rp.simulate(d1, 5)
    assert pop.rects[(1, 1)].L == INF and pop.rects[(1, 1)].ell == d1
    assert rp.equivalence_check(5, 1).ok


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_equivalence_runs(seed):
    rep = rp.equivalence_check(seed, 2000)
    assert rep.ok and rep.max_diff <= 1e-9 and rep.fusion_failures == 0
    assert rep.n_compared > 2000


def test_rect_dump_fields():
    recs = rp.rect_dump(rp.simulate(5.0, 2), 5.0)
    assert all(set(r) == {"label", "L", "l", "birth", "freeze", "age_at_t"} for r in recs)
    assert sum(1 for r in recs if r["L"] is None and r["l"] is None) == 1
