"""Exact 2D geometry on the packing grid.

Polygon vertices produced by packing operations always sit on the integer
grid; centre-of-gravity points may be rational.  Predicates therefore use
int/Fraction arithmetic throughout, so a containment verdict can never
flip on floating-point noise.  Degenerate hulls (empty, single point,
segment) are legal values and every operation stays total on them.
"""

from __future__ import annotations

from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

Coord = Union[int, Fraction]


def exact(value) -> Coord:
    """Coerce a number to an exact coordinate.

    Floats are read through their shortest decimal repr, so exact(0.1)
    is Fraction(1, 10) rather than the nearest binary float.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a coordinate")
    if isinstance(value, (int, Fraction)):
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float):
        return _simplify(Fraction(repr(value)))
    if isinstance(value, str):
        return _simplify(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact coordinate")


def _simplify(f: Fraction) -> Coord:
    return int(f) if f.denominator == 1 else f


class Point2(NamedTuple):
    x: Coord
    y: Coord


@dataclass(frozen=True)
class Rect2:
    """Axis-aligned rectangle, lower corner (x, y), positive extents."""

    x: int
    y: int
    w: int
    d: int

    def __post_init__(self):
        if self.w <= 0 or self.d <= 0:
            raise ValueError(f"rectangle extents must be positive, got {self.w}x{self.d}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.d

    def corners(self) -> tuple[Point2, Point2, Point2, Point2]:
        return (
            Point2(self.x, self.y),
            Point2(self.x2, self.y),
            Point2(self.x2, self.y2),
            Point2(self.x, self.y2),
        )


def _cross(o: Point2, a: Point2, b: Point2) -> Coord:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


class ConvexPolygon2D:
    """Convex polygon with counter-clockwise vertices, no three collinear.

    May be empty (no vertices), a point or a segment.  Instances are
    produced by convex_hull / clip_rect and are canonical: the vertex
    tuple starts at the lexicographically smallest vertex, so equality
    is plain tuple equality.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices: Sequence[Point2] = ()):
        self.vertices: tuple[Point2, ...] = tuple(vertices)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    def __eq__(self, other) -> bool:
        return isinstance(other, ConvexPolygon2D) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        pts = ", ".join(f"({p.x}, {p.y})" for p in self.vertices)
        return f"ConvexPolygon2D([{pts}])"

    def bounds(self) -> tuple[Coord, Coord, Coord, Coord] | None:
        """(min_x, min_y, max_x, max_y), or None when empty."""
        if not self.vertices:
            return None
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)


EMPTY_POLYGON = ConvexPolygon2D()


def _as_point(p) -> Point2:
    if isinstance(p, Point2):
        return p
    x, y = p
    if type(x) is int and type(y) is int:  # hot path: grid corners
        return Point2(x, y)
    return Point2(exact(x), exact(y))


def convex_hull(points: Iterable) -> ConvexPolygon2D:
    """Minimal convex polygon containing all input points (monotone chain).

    Collinear inputs yield a segment, a single repeated point yields a
    point polygon, an empty input yields the empty polygon.  Idempotent:
    hulling the vertices of a hull reproduces it.
    """
    pts = sorted({_as_point(p) for p in points})
    if len(pts) <= 2:
        return ConvexPolygon2D(pts)

    def build(seq):
        chain: list[Point2] = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = build(pts)
    upper = build(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:  # fully collinear input
        hull = [hull[0]]
    if len(hull) > 2 or len(hull) == 1:
        return ConvexPolygon2D(hull)
    # Collinear input: chain ends collapse to the two extreme points.
    return ConvexPolygon2D(sorted({lower[0], lower[-1]}))


def rect_polygon(rect: Rect2) -> ConvexPolygon2D:
    return ConvexPolygon2D(rect.corners())


def _on_segment(a: Point2, b: Point2, p: Point2) -> bool:
    if _cross(a, b, p) != 0:
        return False
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def contains_point(poly: ConvexPolygon2D, p) -> bool:
    """Boundary-inclusive containment test.

    A point exactly on an edge or vertex counts as inside: a CoG on the
    hull boundary is the limiting stable case.
    """
    p = _as_point(p)
    v = poly.vertices
    n = len(v)
    if n == 0:
        return False
    if n == 1:
        return v[0] == p
    if n == 2:
        return _on_segment(v[0], v[1], p)
    for i in range(n):
        if _cross(v[i], v[(i + 1) % n], p) < 0:
            return False
    return True


def contains_region(poly: ConvexPolygon2D, pts: Iterable) -> bool:
    """True iff every point is inside poly.  Empty point sets qualify."""
    return all(contains_point(poly, p) for p in pts)


def _clip_chain(points: list[Point2], closed: bool, inside, intersect) -> list[Point2]:
    """One Sutherland-Hodgman pass against a single half-plane."""
    out: list[Point2] = []
    n = len(points)
    if n == 0:
        return out
    if n == 1:
        return points[:] if inside(points[0]) else []
    edge_count = n if closed else n - 1
    for i in range(edge_count):
        a, b = points[i], points[(i + 1) % n]
        ia, ib = inside(a), inside(b)
        if ia:
            out.append(a)
            if not ib:
                out.append(intersect(a, b))
        elif ib:
            out.append(intersect(a, b))
    if not closed and points and inside(points[-1]):
        out.append(points[-1])
    return out


def clip_rect(poly: ConvexPolygon2D, r: Rect2) -> ConvexPolygon2D:
    """Convex intersection of poly with an axis-aligned rectangle.

    The result may be empty or degenerate (a touching edge clips down to
    a segment).  Intersection vertices are computed exactly, so they may
    carry rational coordinates.
    """

    def cut_x(c: Coord, keep_ge: bool):
        def inside(p: Point2) -> bool:
            return p.x >= c if keep_ge else p.x <= c

        def intersect(a: Point2, b: Point2) -> Point2:
            t = Fraction(c - a.x) / Fraction(b.x - a.x)
            return Point2(c, _simplify(Fraction(a.y) + t * Fraction(b.y - a.y)))

        return inside, intersect

    def cut_y(c: Coord, keep_ge: bool):
        def inside(p: Point2) -> bool:
            return p.y >= c if keep_ge else p.y <= c

        def intersect(a: Point2, b: Point2) -> Point2:
            t = Fraction(c - a.y) / Fraction(b.y - a.y)
            return Point2(_simplify(Fraction(a.x) + t * Fraction(b.x - a.x)), c)

        return inside, intersect

    pts = list(poly.vertices)
    closed = len(pts) >= 3
    for inside, intersect in (
        cut_x(r.x, True),
        cut_x(r.x2, False),
        cut_y(r.y, True),
        cut_y(r.y2, False),
    ):
        pts = _clip_chain(pts, closed, inside, intersect)
        if not pts:
            return EMPTY_POLYGON
    return convex_hull(pts)


def area(poly: ConvexPolygon2D) -> Fraction:
    """Enclosed area; zero for degenerate polygons."""
    v = poly.vertices
    if len(v) < 3:
        return Fraction(0)
    twice = sum(
        v[i].x * v[(i + 1) % len(v)].y - v[(i + 1) % len(v)].x * v[i].y
        for i in range(len(v))
    )
    return Fraction(twice) / 2


def polygon_contains_polygon(outer: ConvexPolygon2D, inner: ConvexPolygon2D) -> bool:
    """True iff every vertex of inner lies in outer (convexity closes the rest)."""
    return contains_region(outer, inner.vertices)


def covered_cells(poly: ConvexPolygon2D, rect: Rect2) -> np.ndarray:
    """Boolean (w, d) mask of grid cells inside rect whose full unit square
    lies within poly.

    A cell only counts as load-bearable when its entire square is inside
    the polygon; corner- or edge-touching cells do not, otherwise hull
    vertices built from such cells could leave the load-bearing region.
    """
    out = np.zeros((rect.w, rect.d), dtype=bool)
    v = poly.vertices
    if len(v) < 3:
        return out
    if all(isinstance(p.x, int) and isinstance(p.y, int) for p in v):
        xs = np.arange(rect.x, rect.x2 + 1, dtype=np.int64)
        ys = np.arange(rect.y, rect.y2 + 1, dtype=np.int64)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        inside = np.ones_like(gx, dtype=bool)
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            inside &= (b.x - a.x) * (gy - a.y) - (b.y - a.y) * (gx - a.x) >= 0
        return inside[:-1, :-1] & inside[1:, :-1] & inside[:-1, 1:] & inside[1:, 1:]
    # Rational vertices (clipped polygons): exact per-corner scan.
    for i in range(rect.w):
        for j in range(rect.d):
            cx, cy = rect.x + i, rect.y + j
            if all(
                contains_point(poly, Point2(px, py))
                for px in (cx, cx + 1)
                for py in (cy, cy + 1)
            ):
                out[i, j] = True
    return out
