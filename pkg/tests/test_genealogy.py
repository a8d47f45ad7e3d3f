import pytest
from hypothesis import given, strategies as st

from rectnet.genealogy import (ROOT, Direction, InvalidLabel, depth, direction, format_label, is_orth_child,
                               line_owner, orth_ancestor, orth_child, parent, parse_label, straight_child)

labels = st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=8).map(tuple)


@pytest.mark.parametrize("u, v", [((1,), (2,)), ((1, 1), (1, 2)), ((3, 2, 5), (3, 2, 6))])
def test_straight_child(u, v):
    assert straight_child(u) == v


@pytest.mark.parametrize("u, v", [((1,), (1, 1)), ((2,), (2, 1)), ((1, 2), (1, 2, 1))])
def test_orth_child(u, v):
    assert orth_child(u) == v


@pytest.mark.parametrize("u, v", [((1, 1), (1,)), ((2,), (1,)), ((1, 3), (1, 2))])
def test_parent(u, v):
    assert parent(u) == v


@pytest.mark.parametrize("u, v", [((1, 2, 4), (1, 2)), ((1, 1), (1,)), ((2,), ROOT)])
def test_orth_ancestor(u, v):
    assert orth_ancestor(u) == v


@pytest.mark.parametrize("u, d", [((1,), Direction.PX), ((1, 1), Direction.MY), ((1, 1, 1), Direction.MX),
                                  ((1, 1, 1, 1), Direction.PY), ((1, 1, 1, 1, 1), Direction.PX)])
def test_direction(u, d):
    assert direction(u) is d


def test_root_rejected():
    for op in (straight_child, orth_child, parent, direction):
        with pytest.raises(InvalidLabel):
            op(ROOT)
    assert parent((1,)) == ROOT  # the first branch hangs off the boundary
    assert depth(ROOT) == 0


def test_bad_entries():
    for s in ("1.0", "a.b", "2.-1"):
        with pytest.raises(InvalidLabel):
            parse_label(s)


def test_format_roundtrip():
    assert format_label(ROOT) == "-"
    assert format_label((1, 2, 3)) == "1.2.3"
    assert parse_label("1.2.3") == (1, 2, 3)
    assert parse_label("-") == ROOT


def test_line_owner():
    assert line_owner((1, 3)) == (1, 1)
    assert line_owner((4,)) == (1,)
    assert is_orth_child((2, 1)) and not is_orth_child((2, 2))


@given(labels)
def test_parent_inverts_children(u):
    assert parent(straight_child(u)) == u
    assert parent(orth_child(u)) == u


@given(labels)
def test_orth_ancestor_of_orth_child(u):
    assert orth_ancestor(orth_child(u)) == u


@given(labels)
def test_direction_rotation(u):
    assert direction(straight_child(u)) is direction(u)
    assert direction(orth_child(u)) is direction(u).rotate_cw()
    assert direction(u).rotate_cw().rotate_ccw() is direction(u)


@given(labels)
def test_depths(u):
    assert depth(orth_child(u)) == depth(u) + 1
    assert depth(straight_child(u)) == depth(u)


@given(labels)
def test_parse_format(u):
    assert parse_label(format_label(u)) == u
