import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rectnet import planar
from rectnet.genealogy import ROOT, Direction, direction
from rectnet.planar import (BranchPolicy, BranchRecord, Imprint, NetworkState, Segment, advance,
                            extract_rectangles, first_hit, init)
from rectnet.streams import label_exponential
from rectnet.svg import render_svg, svg_lines

INF = math.inf

# lifetimes of a short hand-checked trace: (1) turns at x=1, (1,1) turns at depth 0.5,
# (1,1,1) heads left and fuses on the y-axis before its clock rings
SCRIPT = {(1,): 1.0, (1, 1): 0.5, (1, 1, 1): 2.0, (2,): 100.0, (1, 2): 100.0}


def scripted(t=3.0):
    return advance(init(0, lifetimes=SCRIPT), t_max=t)


# --- first_hit ---------------------------------------------------------------------

def test_hit_horizontal_segment():
    imp = Imprint()
    imp.add(Segment((0.0, -3.0), Direction.PX, 5.0, (1, 2, 1)))
    h = first_hit((2.0, -1.0), Direction.MY, imp)
    assert h.point == (2.0, -3.0) and h.distance == 2.0 and h.owner == (1, 2, 1)


def test_hit_boundary():
    h = first_hit((1.0, -1.0), Direction.MX, Imprint())
    assert h.point == (0.0, -1.0) and h.distance == 1.0 and h.owner == ROOT


def test_no_hit_below_axis():
    assert first_hit((1.0, 0.0), Direction.MY, Imprint()) is None


def test_tie_goes_to_smallest_owner():
    imp = Imprint()
    imp.add(Segment((0.0, -2.0), Direction.PX, 3.0, (1, 3, 1)))
    imp.add(Segment((3.0, -2.0), Direction.MX, 3.0, (1, 2, 1)))
    assert first_hit((1.0, -1.0), Direction.MY, imp).owner == (1, 2, 1)


@given(st.floats(0.01, 50), st.floats(-50, -0.01))
def test_leftward_ray_always_stops_on_axis(x, y):
    h = first_hit((x, y), Direction.MX, Imprint())
    assert h.point == (0.0, y) and h.distance == x


# --- construction ------------------------------------------------------------------

def test_initial_state():
    st_ = init(4)
    assert list(st_.records) == [(1,)]
    r = st_.records[(1,)]
    assert r.inact_time == INF and r.origin == (0.0, 0.0) and r.dir is Direction.PX
    assert len(st_.imprint) == 2  # both boundary half-lines


def test_first_event():
    st_ = advance(init(2), n_events=1)
    d1 = label_exponential(2, (1,))
    assert st_.records[(1, 1)].origin == (d1, 0.0)
    assert st_.records[(1, 1)].dir is Direction.MY
    assert st_.records[(2,)].birth == d1
    assert st_.hits[(1, 1)] is None  # nothing below the x-axis yet


def test_scripted_trace_fuses_on_axis():
    st_ = scripted()
    r = st_.records[(1, 1, 1)]
    assert r.origin == (1.0, -0.5) and r.dir is Direction.MX
    assert r.inact_time == 2.5 and not r.branches
    assert st_.hits[(1, 1, 1)].owner == ROOT
    assert st_.hits[(1, 1, 1)].point == (0.0, -0.5)
    # events are processed at birth: (1), (2), (1,1), (1,2) all carry a clock
    assert st_.n_events == 4


def test_scripted_svg():
    doc = render_svg(scripted(), 3.0)
    root = ET.fromstring(doc)
    lines = root.findall(".//{http://www.w3.org/2000/svg}line")
    assert len(lines) == 5
    assert sum(1 for ln in lines if ln.get("class") == "boundary") == 2


def test_empty_svg_has_boundary_only():
    st_ = init(0)
    assert len(svg_lines(st_, 0.0)) == 2
    assert render_svg(st_, 0.0, viewport=5.0) == render_svg(init(0), 0.0, viewport=5.0)


def test_svg_deterministic(tmp_path):
    a = advance(init(9), t_max=6.0)
    b = advance(init(9), t_max=6.0)
    render_svg(a, 6.0, tmp_path / "a.svg")
    render_svg(b, 6.0, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    ET.parse(tmp_path / "a.svg")


def _hand_state():
    st_ = NetworkState(seed=0, policy=BranchPolicy.RIGHT_ONLY, lifetime=lambda u: 1.0)
    st_.records[(1,)] = BranchRecord((1,), 0.0, 1.5, INF, (0.0, 0.0), Direction.PX)
    st_.records[(1, 2)] = BranchRecord((1, 2), 2.0, 100.0, 5.0, (1.5, -0.5), Direction.MY)
    return st_


def test_extract_active():
    assert extract_rectangles(_hand_state(), 4.0) == [((1, 2), (3.0, 1.5, 2.0))]


def test_extract_frozen():
    assert extract_rectangles(_hand_state(), 7.0) == [((1, 2), (3.0, 1.5, 3.0))]


def test_first_branch_is_doubly_infinite():
    st_ = init(1)
    advance(st_, n_events=0)
    assert extract_rectangles(st_, 0.0) == [((1,), (INF, INF, 0.0))]


def test_horizon_guard():
    st_ = advance(init(3), n_events=5)
    with pytest.raises(planar.HorizonError):
        extract_rectangles(st_, st_.horizon + 1.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_records_invariants(seed):
    st_ = advance(init(seed), n_events=2000)
    for u, r in st_.records.items():
        assert r.origin[0] >= 0 and r.origin[1] <= 0
        assert r.birth <= r.branch_time and r.birth <= r.inact_time
        assert r.lifetime == pytest.approx(label_exponential(seed, u), abs=1e-9)
        assert r.dir is direction(u)


def test_imprint_monotone():
    st_ = advance(init(5), n_events=300)
    before = list(st_.imprint.segments)
    advance(st_, n_events=300)
    assert st_.imprint.segments[:len(before)] == before
    assert len(st_.imprint) > len(before)


@pytest.mark.parametrize("seed", [0, 7])
def test_partition_area_fusion(seed):
    t = 8.0
    st_ = advance(init(seed), t_max=t + 2)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, t / 2, size=(10_000, 2)) * np.array([1.0, -1.0])
    rep = planar.point_location_check(st_, t, pts)
    assert rep.n_bad == 0
    assert planar.area_accounting(st_, t) <= 1e-6
    fr = planar.fusion_check(st_)
    assert fr.failures == [] and fr.n_fused > 0
    assert planar.count_crossings(planar.traced_segments(st_, t)) == 0


# --- two-sided variants ------------------------------------------------------------

def test_both_sides_cross_counts_crossings():
    st_ = init(3, BranchPolicy.BOTH_SIDES_CROSS)
    advance(st_, t_max=5.0)
    assert st_.n_crossings == planar.count_crossings(planar.traced_segments(st_, st_.horizon))


@pytest.mark.parametrize("policy", [BranchPolicy.BOTH_SIDES_ANNIHILATE, BranchPolicy.BOTH_SIDES_PRIORITY])
def test_both_sides_no_crossings(policy):
    st_ = init(3, policy)
    advance(st_, t_max=5.0)
    assert st_.n_crossings == 0
    assert planar.count_crossings(planar.traced_segments(st_, st_.horizon)) == 0
    assert len(st_.records) > 1
