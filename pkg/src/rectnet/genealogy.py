"""Ulam-Harris-Neveu labels for branches and rectangles.

A label is a plain tuple of positive ints. The empty tuple is the root and
stands for the quadrant boundary; it is the orthogonal ancestor of every
top-level label ``(n,)``.
"""

from __future__ import annotations

from enum import Enum

Label = tuple[int, ...]

ROOT: Label = ()


class InvalidLabel(ValueError):
    pass


class Direction(Enum):
    """Growth direction; value is the unit vector ``(dx, dy)``."""

    PX = (1, 0)
    MY = (0, -1)
    MX = (-1, 0)
    PY = (0, 1)

    @property
    def dx(self) -> int:
        return self.value[0]

    @property
    def dy(self) -> int:
        return self.value[1]

    @property
    def horizontal(self) -> bool:
        return self.value[1] == 0

    def rotate_cw(self) -> "Direction":
        """Rotation by -90 degrees (the side orthogonal offspring spur to)."""
        dx, dy = self.value
        return Direction((dy, -dx))

    def rotate_ccw(self) -> "Direction":
        dx, dy = self.value
        return Direction((-dy, dx))

    def __str__(self) -> str:
        return {"PX": "+x", "MY": "-y", "MX": "-x", "PY": "+y"}[self.name]


# depth mod 4 -> direction; depth 1 grows right, then turns clockwise
_DIRS = (Direction.PY, Direction.PX, Direction.MY, Direction.MX)


def _check(u: Label) -> None:
    if len(u) == 0:
        raise InvalidLabel("operation undefined on the root label")


def depth(u: Label) -> int:
    return len(u)


def straight_child(u: Label) -> Label:
    _check(u)
    return u[:-1] + (u[-1] + 1,)


def orth_child(u: Label) -> Label:
    _check(u)
    return u + (1,)


def parent(u: Label) -> Label:
    """Direct ancestor: drop a trailing 1, otherwise decrement the last entry."""
    _check(u)
    if u[-1] == 1:
        return u[:-1]
    return u[:-1] + (u[-1] - 1,)


def orth_ancestor(u: Label) -> Label:
    _check(u)
    return u[:-1]


def line_owner(u: Label) -> Label:
    """First label of the straight line ``u`` lies on: ``(..., 1)``."""
    _check(u)
    return u[:-1] + (1,)


def is_orth_child(u: Label) -> bool:
    return len(u) >= 2 and u[-1] == 1


def direction(u: Label) -> Direction:
    _check(u)
    return _DIRS[len(u) % 4]


def format_label(u: Label) -> str:
    if len(u) == 0:
        return "-"
    return ".".join(map(str, u))


def parse_label(s: str) -> Label:
    s = s.strip()
    if s == "-":
        return ROOT
    try:
        u = tuple(int(p) for p in s.split("."))
    except ValueError as exc:
        raise InvalidLabel(f"bad label {s!r}") from exc
    if any(k < 1 for k in u):
        raise InvalidLabel(f"label entries must be >= 1: {s!r}")
    return u
