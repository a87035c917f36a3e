"""Named regions and their rasterisation onto the model grid.

Cells are addressed row-major: cell = y * columns + x, with x the column and
y the line. A cell belongs to a shape when its integer centre (x, y) does.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from .. import messages as m


class RegionError(Exception):
    pass


def _index(x: int, y: int, lines: int, columns: int) -> int | None:
    if 0 <= x < columns and 0 <= y < lines:
        return y * columns + x
    return None


def _rows(lo: float, hi: float, lines: int) -> range:
    return range(max(0, math.ceil(lo)), min(lines - 1, math.floor(hi)) + 1)


def _point(p: m.Point, lines: int, columns: int) -> set[int]:
    i = _index(p.x, p.y, lines, columns)
    return set() if i is None else {i}


def _rect(r: m.Rect, lines: int, columns: int) -> set[int]:
    x0, x1 = sorted((r.p1.x, r.p2.x))
    y0, y1 = sorted((r.p1.y, r.p2.y))
    xs = range(max(0, x0), min(columns - 1, x1) + 1)
    return {y * columns + x for y in _rows(y0, y1, lines) for x in xs}


def _polygon(vertices: list[m.Point], lines: int, columns: int) -> set[int]:
    """Scanline fill, even-odd rule, boundary included; exact rational arithmetic."""
    edges = list(zip(vertices, vertices[1:] + vertices[:1]))
    ys = [v.y for v in vertices]
    out: set[int] = set()
    for y in _rows(min(ys), max(ys), lines):
        row = y * columns
        crossings: list[Fraction] = []
        for a, b in edges:
            if a.y == b.y:
                if a.y == y:  # horizontal edge lying on this row
                    for x in range(max(0, min(a.x, b.x)), min(columns - 1, max(a.x, b.x)) + 1):
                        out.add(row + x)
                continue
            lo, hi = (a, b) if a.y < b.y else (b, a)
            if not lo.y <= y <= hi.y:
                continue
            cx = a.x + Fraction((y - a.y) * (b.x - a.x), b.y - a.y)
            if cx.denominator == 1 and 0 <= cx < columns:  # centre on a slanted edge
                out.add(row + int(cx))
            if lo.y <= y < hi.y:  # half-open so shared vertices count once
                crossings.append(cx)
        crossings.sort()
        for left, right in zip(crossings[::2], crossings[1::2]):
            for x in range(max(0, math.ceil(left)), min(columns - 1, math.floor(right)) + 1):
                out.add(row + x)
    return out


def _circle(c: m.Circle, lines: int, columns: int) -> set[int]:
    r2 = c.radius * c.radius
    out: set[int] = set()
    cx, cy = c.center.x, c.center.y
    for y in _rows(cy - c.radius, cy + c.radius, lines):
        dy2 = (y - cy) ** 2
        if dy2 > r2:
            continue
        half = math.sqrt(r2 - dy2)
        x0, x1 = math.ceil(cx - half), math.floor(cx + half)
        # sqrt rounding can put the span one cell off either way
        while (x0 - 1 - cx) ** 2 + dy2 <= r2:
            x0 -= 1
        while x0 <= x1 and (x0 - cx) ** 2 + dy2 > r2:
            x0 += 1
        while (x1 + 1 - cx) ** 2 + dy2 <= r2:
            x1 += 1
        while x1 >= x0 and (x1 - cx) ** 2 + dy2 > r2:
            x1 -= 1
        for x in range(max(0, x0), min(columns - 1, x1) + 1):
            out.add(y * columns + x)
    return out


def angle_in_sweep(theta: float, a1: float, a2: float) -> bool:
    """Whether direction ``theta`` (degrees) lies on the CCW sweep from a1 to a2.

    A sweep of 360 degrees or more is the full turn; a2 < a1 wraps through 0.
    """
    if a2 - a1 >= 360:
        return True
    sweep = (a2 - a1) % 360
    return (theta - a1) % 360 <= sweep


def _arc(a: m.Arc, lines: int, columns: int) -> set[int]:
    cx, cy = a.center.x, a.center.y
    lo2, hi2 = a.r1 * a.r1, a.r2 * a.r2
    out: set[int] = set()
    if a.r2 < a.r1:
        return out
    for y in _rows(cy - a.r2, cy + a.r2, lines):
        dy = y - cy
        for x in range(max(0, math.ceil(cx - a.r2)), min(columns - 1, math.floor(cx + a.r2)) + 1):
            dx = x - cx
            d2 = dx * dx + dy * dy
            if not lo2 <= d2 <= hi2:
                continue
            if d2 == 0 or angle_in_sweep(math.degrees(math.atan2(dy, dx)), a.a1, a.a2):
                out.add(y * columns + x)
    return out


def simple_cells(shape: m.SimpleRegion, lines: int, columns: int) -> set[int]:
    if isinstance(shape, m.Point):
        return _point(shape, lines, columns)
    if isinstance(shape, m.Rect):
        return _rect(shape, lines, columns)
    if isinstance(shape, m.Square):
        return _polygon([shape.p1, shape.p2, shape.p3, shape.p4], lines, columns)
    if isinstance(shape, m.Circle):
        return _circle(shape, lines, columns)
    if isinstance(shape, m.Arc):
        return _arc(shape, lines, columns)
    raise TypeError(f"not a simple region: {shape!r}")


class RegionStore:
    """Regions by name, in definition order."""

    def __init__(self) -> None:
        self._bodies: dict[str, m.RegionBody] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._bodies

    def names(self) -> list[str]:
        return list(self._bodies)

    def get(self, name: str) -> m.RegionBody | None:
        return self._bodies.get(name)

    def _reaches(self, start: str, target: str) -> bool:
        stack, seen = [start], set()
        while stack:
            name = stack.pop()
            if name == target:
                return True
            if name in seen:
                continue
            seen.add(name)
            body = self._bodies.get(name)
            if isinstance(body, m.Composite):
                stack.extend(body.names)
        return False

    def define(self, name: str, body: m.RegionBody) -> None:
        """Add or replace a region. Composite parts must already exist and not loop back."""
        if isinstance(body, m.Composite):
            for part in body.names:
                if part not in self._bodies:
                    raise RegionError(f"unknown region {part}")
                if part == name or self._reaches(part, name):
                    raise RegionError(f"{name} would contain itself")
        self._bodies[name] = body

    def referrers(self, name: str) -> list[str]:
        return [n for n, b in self._bodies.items() if isinstance(b, m.Composite) and name in b.names]

    def delete(self, names: Iterable[str]) -> None:
        """Remove all of ``names`` or none of them."""
        doomed = set(names)
        for name in doomed:
            if name not in self._bodies:
                raise RegionError(f"unknown region {name}")
            users = [u for u in self.referrers(name) if u not in doomed]
            if users:
                raise RegionError(f"{name} is used by {', '.join(users)}")
        for name in doomed:
            del self._bodies[name]

    def cells(self, name: str, lines: int, columns: int) -> set[int]:
        body = self._bodies.get(name)
        if body is None:
            raise RegionError(f"unknown region {name}")
        return cells_in_region(body, lines, columns, self)


def cells_in_region(
    body: m.RegionBody, lines: int, columns: int, store: RegionStore | None = None
) -> set[int]:
    """Union of the cells covered by every part of ``body``, clipped to the grid."""
    out: set[int] = set()
    if isinstance(body, m.Composite):
        if store is None:
            raise RegionError("composite region needs a region store")
        for name in body.names:
            out |= store.cells(name, lines, columns)
        return out
    for shape in body.area:
        out |= simple_cells(shape, lines, columns)
    return out
