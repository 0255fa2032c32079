"""Placement stability validation.

An item resting at its support height is stable when every extreme point
of its centre-of-gravity uncertainty box falls inside the support
polygon: the hull of the footprint cells that both touch the resting
surface and are load-bearable.  Only the horizontal projection matters,
since static equilibrium against gravity is insensitive to the vertical
CoG component.

Two routes compute the support polygon: the production cell route reads
the maintained heightmap/feasibility maps; the polygon route intersects
the footprint with each load-bearable polygon at the contact height.
Under map consistency both give the same hull, which rebuild exploits as
a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .binstate import BinState, Item, Placement, footprint
from .errors import HeightOverflowError, OutOfBoundsError, UnstablePlacementError
from .geometry import (
    EMPTY_POLYGON,
    ConvexPolygon2D,
    Point2,
    Rect2,
    clip_rect,
    contains_region,
    convex_hull,
    covered_cells,
    exact,
)

REASON_OK = "ok"
REASON_UNSTABLE = "unstable"
REASON_COLLISION = "collision"
REASON_FLOATING = "floating"
REASON_FRAGILE = "fragile_contact"


@dataclass(frozen=True)
class CogSet:
    """Horizontal CoG projection plus the 4 extreme corners of its
    uncertainty box (half-widths delta * w and delta * d)."""

    center: Point2
    extremes: tuple[Point2, Point2, Point2, Point2]


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    support_polygon: ConvexPolygon2D
    support_height: int
    reason: str = REASON_OK


def cog_extremes(item: Item, placement, delta_cog) -> CogSet:
    """Extreme CoG positions for an item at a placement.

    Only the horizontal components are produced; the 4 box corners are
    the extreme points that need checking against a convex support
    polygon.  Exact arithmetic, so a CoG landing exactly on a polygon
    edge stays on it.
    """
    delta = Fraction(exact(delta_cog))
    if not 0 <= delta < Fraction(1, 2):
        raise ValueError(f"delta_cog must lie in [0, 0.5), got {delta}")
    cx = _half(2 * placement.x + item.w)
    cy = _half(2 * placement.y + item.d)
    dx = _norm(delta * item.w)
    dy = _norm(delta * item.d)
    return CogSet(
        center=Point2(cx, cy),
        extremes=(
            Point2(_norm(cx - dx), _norm(cy - dy)),
            Point2(_norm(cx + dx), _norm(cy - dy)),
            Point2(_norm(cx + dx), _norm(cy + dy)),
            Point2(_norm(cx - dx), _norm(cy + dy)),
        ),
    )


def _half(n: int):
    return n // 2 if n % 2 == 0 else Fraction(n, 2)


def _norm(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def support_height(state: BinState, fp: Rect2) -> int:
    """Resting height of a load over fp: the highest surface beneath it."""
    if fp.x < 0 or fp.y < 0 or fp.x2 > state.dims[0] or fp.y2 > state.dims[1]:
        raise OutOfBoundsError(f"footprint {fp} leaves the bin base")
    return int(state.heightmap[fp.x : fp.x2, fp.y : fp.y2].max())


def _hull_of_cells(cells, ox: int, oy: int) -> ConvexPolygon2D:
    corners: set[Point2] = set()
    for i, j in cells:
        x, y = ox + int(i), oy + int(j)
        corners.update(
            (Point2(x, y), Point2(x + 1, y), Point2(x + 1, y + 1), Point2(x, y + 1))
        )
    return convex_hull(corners)


def support_polygon(state: BinState, fp: Rect2, h_s: int) -> ConvexPolygon2D:
    """Support polygon from the maps: hull of footprint cells at the
    contact height whose surface is load-bearable.

    Requires h_s == support_height(state, fp).  Empty when no bearable
    contact exists.
    """
    hm = state.heightmap[fp.x : fp.x2, fp.y : fp.y2]
    fm = state.feasmap[fp.x : fp.x2, fp.y : fp.y2]
    return _hull_of_cells(np.argwhere((hm == h_s) & fm), fp.x, fp.y)


def support_polygon_from_lbcps(state: BinState, fp: Rect2, h_s: int) -> ConvexPolygon2D:
    """Support polygon from the polygon set: footprint clipped against
    every load-bearable polygon at the contact height, quantized to full
    grid cells.

    Cells fully inside clip_rect(P, fp) are exactly the footprint cells
    whose square lies inside P, so this matches the cell route exactly
    while never reading the maintained maps.
    """
    corners: set[tuple[int, int]] = set()
    for lbcp in state.lbcps.values():
        if lbcp.height != h_s:
            continue
        clipped = clip_rect(lbcp.polygon, fp)
        if clipped.is_empty:
            continue
        mask = covered_cells(clipped, fp)
        for i, j in np.argwhere(mask):
            x, y = fp.x + int(i), fp.y + int(j)
            corners.update(((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)))
    return convex_hull(corners)


def geometric_support_polygon(state: BinState, fp: Rect2, h_s: int) -> ConvexPolygon2D:
    """Purely geometric support polygon: hull of ALL contact cells,
    ignoring load-bearability.  The bearable polygon is always contained
    in this one, never the converse."""
    hm = state.heightmap[fp.x : fp.x2, fp.y : fp.y2]
    return _hull_of_cells(np.argwhere(hm == h_s), fp.x, fp.y)


def _cog_box_inside(poly: ConvexPolygon2D, item: Item, x: int, y: int, delta: Fraction) -> bool:
    """CoG-box containment on a proper polygon via integer scaling.

    Scaling every coordinate by 2 * denominator(delta) turns the rational
    CoG corners into integers, so the edge tests run on plain ints; the
    verdict is identical to the Fraction route.
    """
    v = poly.vertices
    if len(v) < 3:
        cog = cog_extremes(item, Placement(x, y, 0), delta)
        return contains_region(poly, cog.extremes)
    q = delta.denominator
    scale = 2 * q
    cx = (2 * x + item.w) * q
    cy = (2 * y + item.d) * q
    dx = 2 * delta.numerator * item.w
    dy = 2 * delta.numerator * item.d
    corners = (
        (cx - dx, cy - dy),
        (cx + dx, cy - dy),
        (cx + dx, cy + dy),
        (cx - dx, cy + dy),
    )
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        ax, ay = a.x * scale, a.y * scale
        ex, ey = (b.x - a.x) * scale, (b.y - a.y) * scale
        for px, py in corners:
            if ex * (py - ay) - ey * (px - ax) < 0:
                return False
    return True


def _shrunk(fp: Rect2, shrink: int) -> Rect2:
    if shrink < 0:
        raise ValueError("shrink must be non-negative")
    if fp.w - 2 * shrink < 1 or fp.d - 2 * shrink < 1:
        raise ValueError(f"shrink {shrink} empties a {fp.w}x{fp.d} footprint")
    return Rect2(fp.x + shrink, fp.y + shrink, fp.w - 2 * shrink, fp.d - 2 * shrink)


def robust_contact_filter(state: BinState, item: Item, placement_xy, shrink: int) -> bool:
    """Contact robustness under small size error: true iff the footprint
    and the footprint shrunk inward on all four sides rest at the same
    height.  A placement whose highest contact sits only on the rim is
    rejected as fragile."""
    x, y = placement_xy
    fp = Rect2(x, y, item.w, item.d)
    if shrink == 0:
        support_height(state, fp)  # bounds check only
        return True
    return support_height(state, fp) == support_height(state, _shrunk(fp, shrink))


def validate(state: BinState, item: Item, placement_xy, shrink: int = 0) -> ValidationResult:
    """Structural stability of item placed with its lower corner at
    placement_xy, resting at the support height.

    With shrink > 0 the contact-robustness filter applies and, when it
    passes, the support polygon is taken from the shrunk window's
    contact cells.  Out-of-bounds footprints and placements that would
    poke out of the bin raise; collisions cannot occur because the item
    rests on the highest surface beneath it.
    """
    x, y = placement_xy
    fp = Rect2(x, y, item.w, item.d)
    h_s = support_height(state, fp)
    if h_s + item.h > state.dims[2]:
        raise HeightOverflowError(
            f"item {item.id!r} at {placement_xy} tops out at {h_s + item.h} > {state.dims[2]}"
        )
    window = fp
    if shrink:
        window = _shrunk(fp, shrink)
        if int(state.heightmap[window.x : window.x2, window.y : window.y2].max()) != h_s:
            return ValidationResult(False, EMPTY_POLYGON, h_s, REASON_FRAGILE)
    poly = support_polygon(state, window, h_s)
    if _cog_box_inside(poly, item, x, y, state.delta_cog):
        return ValidationResult(True, poly, h_s)
    return ValidationResult(False, poly, h_s, REASON_UNSTABLE)


def validate_at(state: BinState, item: Item, placement: Placement, shrink: int = 0) -> ValidationResult:
    """Validate a placement with a fixed z.

    Unlike validate, the caller dictates z: a surface higher than z is a
    collision, a surface lower everywhere means the item would float.
    Used when executing planned operations against a state that may have
    changed since planning.
    """
    fp = footprint(item, placement)
    h_s = support_height(state, fp)
    if placement.z + item.h > state.dims[2]:
        raise HeightOverflowError(
            f"item {item.id!r} at {placement} tops out above {state.dims[2]}"
        )
    if h_s > placement.z:
        return ValidationResult(False, EMPTY_POLYGON, h_s, REASON_COLLISION)
    if h_s < placement.z:
        return ValidationResult(False, EMPTY_POLYGON, h_s, REASON_FLOATING)
    return validate(state, item, (placement.x, placement.y), shrink=shrink)


def replay_validate(state: BinState, item: Item, placement: Placement) -> ValidationResult:
    """Validation step used by rebuild: polygon route, strict errors.

    Raises when the recorded placement floats, collides or fails the
    stability test, which signals a corrupted history.
    """
    from .errors import CollisionError, FloatingItemError

    fp = footprint(item, placement)
    h_s = support_height(state, fp)
    if h_s > placement.z:
        raise CollisionError(f"replayed item {item.id!r} collides at {placement}")
    if h_s < placement.z:
        raise FloatingItemError(f"replayed item {item.id!r} floats at {placement}")
    if h_s + item.h > state.dims[2]:
        raise HeightOverflowError(f"replayed item {item.id!r} overflows the bin top")
    poly = support_polygon_from_lbcps(state, fp, h_s)
    cog = cog_extremes(item, placement, state.delta_cog)
    if not contains_region(poly, cog.extremes):
        raise UnstablePlacementError(
            f"replayed item {item.id!r} at {placement} is not stable"
        )
    return ValidationResult(True, poly, h_s)
