"""Bin state: packed items, heightmap, feasibility map and the set of
load-bearable polygons, kept mutually consistent.

The maps use one array cell per grid cell, indexed [x, y].  A cell of the
feasibility map is true iff the surface at that cell, at its current
height, belongs to a load-bearable polygon: any load placed on such a
cell is guaranteed not to topple the stack beneath it.

States are values: mutating operations return a fresh state and never
touch their input, so snapshots can be handed to concurrent workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    BlockedItemError,
    CollisionError,
    FloatingItemError,
    HeightOverflowError,
    OutOfBoundsError,
    UnknownItemError,
)
from .geometry import ConvexPolygon2D, Rect2, covered_cells, exact, rect_polygon

ItemId = Union[int, str]

#: Owner marker for the load-bearable polygon of the bin floor.
FLOOR = None

STATE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Item:
    """A cuboid to pack; dims are (w, d, h) in grid cells."""

    id: ItemId
    w: int
    d: int
    h: int

    def __post_init__(self):
        for v in (self.w, self.d, self.h):
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"item dims must be positive integers, got {self.dims}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.w, self.d, self.h)

    @property
    def volume(self) -> int:
        return self.w * self.d * self.h


@dataclass(frozen=True)
class Placement:
    """Lower-corner load position inside the bin."""

    x: int
    y: int
    z: int


@dataclass(frozen=True)
class PackedItem:
    item: Item
    placement: Placement
    seq: int  # monotone pack-order number; rebuilds replay in this order

    @property
    def top(self) -> int:
        return self.placement.z + self.item.h


@dataclass(frozen=True)
class Lbcp:
    """A horizontal convex region able to bear any vertical load.

    One per packed item (its top face's bearable part) plus one for the
    bin floor.
    """

    polygon: ConvexPolygon2D
    height: int
    owner: ItemId | None  # FLOOR for the bin base


def footprint(item: Item, placement: Placement) -> Rect2:
    return Rect2(placement.x, placement.y, item.w, item.d)


def _xy_overlap(a_fp: Rect2, b_fp: Rect2) -> bool:
    return a_fp.x < b_fp.x2 and b_fp.x < a_fp.x2 and a_fp.y < b_fp.y2 and b_fp.y < a_fp.y2


def rests_on(upper: PackedItem, lower: PackedItem) -> bool:
    """True when `upper` sits in resting contact on `lower`'s top face."""
    return upper.placement.z == lower.top and _xy_overlap(
        footprint(upper.item, upper.placement), footprint(lower.item, lower.placement)
    )


class BinState:
    """Snapshot of the bin; construct with new_bin or rebuild."""

    __slots__ = ("dims", "delta_cog", "packed", "lbcps", "heightmap", "feasmap", "_seq", "_ems")

    def __init__(self, dims, delta_cog, packed, lbcps, heightmap, feasmap, seq):
        self.dims: tuple[int, int, int] = dims
        self.delta_cog: Fraction = delta_cog
        self.packed: dict[ItemId, PackedItem] = packed
        self.lbcps: dict[ItemId | None, Lbcp] = lbcps
        self.heightmap: np.ndarray = heightmap
        self.feasmap: np.ndarray = feasmap
        self._seq = seq
        self._ems = None  # lazily filled placement cache; states are frozen after creation

    def copy(self) -> "BinState":
        return BinState(
            self.dims,
            self.delta_cog,
            dict(self.packed),
            dict(self.lbcps),
            self.heightmap.copy(),
            self.feasmap.copy(),
            self._seq,
        )

    def __repr__(self) -> str:
        return f"BinState(dims={self.dims}, packed={len(self.packed)})"


def new_bin(dims: Sequence[int], delta_cog) -> BinState:
    """Empty bin: flat heightmap, fully feasible floor, floor polygon only."""
    dims = tuple(int(v) for v in dims)
    if len(dims) != 3 or any(v < 1 for v in dims):
        raise ValueError(f"bin dims must be three positive integers, got {dims}")
    delta = Fraction(exact(delta_cog))
    if not 0 <= delta < Fraction(1, 2):
        raise ValueError(f"delta_cog must lie in [0, 0.5), got {delta}")
    length, width, _ = dims
    floor = Lbcp(rect_polygon(Rect2(0, 0, length, width)), 0, FLOOR)
    return BinState(
        dims,
        delta,
        packed={},
        lbcps={FLOOR: floor},
        heightmap=np.zeros((length, width), dtype=np.int32),
        feasmap=np.ones((length, width), dtype=bool),
        seq=0,
    )


def _check_rect_in_base(state: BinState, r: Rect2) -> None:
    if r.x < 0 or r.y < 0 or r.x2 > state.dims[0] or r.y2 > state.dims[1]:
        raise OutOfBoundsError(f"rect {r} leaves the {state.dims[0]}x{state.dims[1]} base")


def footprint_slice(state: BinState, r: Rect2) -> np.ndarray:
    """The w x d sub-grid of the heightmap under r (a copy)."""
    _check_rect_in_base(state, r)
    return state.heightmap[r.x : r.x2, r.y : r.y2].copy()


def utilization(state: BinState) -> float:
    """Packed volume over bin volume, in [0, 1]."""
    packed = sum(pi.item.volume for pi in state.packed.values())
    return packed / (state.dims[0] * state.dims[1] * state.dims[2])


def pack_order(state: BinState) -> list[PackedItem]:
    """Surviving items in the order they were (last) packed."""
    return sorted(state.packed.values(), key=lambda pi: pi.seq)


def apply_pack(
    state: BinState, item: Item, placement: Placement, support_polygon: ConvexPolygon2D
) -> BinState:
    """Add a validated placement, returning the updated state.

    The support polygon must be the validator's output for this placement.
    Its cells become feasible at the new surface; footprint cells outside
    it are cleared, otherwise stale feasibility from a buried surface
    would survive under overhangs and a later contact there would be
    wrongly deemed load-bearing.
    """
    if item.id in state.packed:
        raise UnknownItemError(f"item {item.id!r} is already packed")
    fp = footprint(item, placement)
    _check_rect_in_base(state, fp)
    surface = int(state.heightmap[fp.x : fp.x2, fp.y : fp.y2].max())
    if placement.z < surface:
        raise CollisionError(
            f"item {item.id!r} at z={placement.z} intersects material up to z={surface}"
        )
    if placement.z > surface:
        raise FloatingItemError(
            f"item {item.id!r} at z={placement.z} floats above surface z={surface}"
        )
    top = placement.z + item.h
    if top > state.dims[2]:
        raise HeightOverflowError(f"item {item.id!r} tops out at {top} > {state.dims[2]}")

    out = state.copy()
    out.heightmap[fp.x : fp.x2, fp.y : fp.y2] = top
    out.feasmap[fp.x : fp.x2, fp.y : fp.y2] = covered_cells(support_polygon, fp)
    out.packed[item.id] = PackedItem(item, placement, out._seq)
    out.lbcps[item.id] = Lbcp(support_polygon, top, item.id)
    out._seq += 1
    return out


def blockers(state: BinState, item_id: ItemId) -> set[ItemId]:
    """Ids of items resting on the given item."""
    target = state.packed[item_id]
    return {
        pid
        for pid, pi in state.packed.items()
        if pid != item_id and rests_on(pi, target)
    }


def apply_unpack(state: BinState, item_id: ItemId) -> BinState:
    """Remove a directly liftable item, returning the updated state.

    Heightmap and feasibility are recomputed only under the removed
    footprint; the removed polygon cannot extend beyond it, so the rest
    of the maps is untouched.
    """
    if item_id not in state.packed:
        raise UnknownItemError(f"no packed item with id {item_id!r}")
    on_top = blockers(state, item_id)
    if on_top:
        raise BlockedItemError(f"item {item_id!r} is load-bearing for {sorted(map(str, on_top))}")

    removed = state.packed[item_id]
    fp = footprint(removed.item, removed.placement)
    out = state.copy()
    del out.packed[item_id]
    del out.lbcps[item_id]

    hm = np.zeros((fp.w, fp.d), dtype=np.int32)
    for pi in out.packed.values():
        other = footprint(pi.item, pi.placement)
        if not _xy_overlap(fp, other):
            continue
        x0, x1 = max(fp.x, other.x), min(fp.x2, other.x2)
        y0, y1 = max(fp.y, other.y), min(fp.y2, other.y2)
        region = hm[x0 - fp.x : x1 - fp.x, y0 - fp.y : y1 - fp.y]
        np.maximum(region, pi.top, out=region)
    out.heightmap[fp.x : fp.x2, fp.y : fp.y2] = hm

    fm = np.zeros((fp.w, fp.d), dtype=bool)
    for lbcp in out.lbcps.values():
        if lbcp.height in hm:
            fm |= covered_cells(lbcp.polygon, fp) & (hm == lbcp.height)
    out.feasmap[fp.x : fp.x2, fp.y : fp.y2] = fm
    return out


def rebuild(items: Iterable[PackedItem], dims: Sequence[int], delta_cog) -> BinState:
    """Reconstruct a state from scratch by replaying items in pack order.

    Every placement is re-validated against the load-bearable polygons
    accumulated so far (the polygon route, independent of the maps the
    incremental path maintains), so a corrupted history raises instead of
    producing a plausible-looking state.  This is the equivalence oracle
    for all incremental updates.
    """
    from .stability import replay_validate  # stability builds on this module

    state = new_bin(dims, delta_cog)
    for pi in items:
        result = replay_validate(state, pi.item, pi.placement)
        state = apply_pack(state, pi.item, pi.placement, result.support_polygon)
    return state


def state_diff(a: BinState, b: BinState) -> str | None:
    """Human-readable first difference between two states, or None."""
    if a.dims != b.dims:
        return f"dims differ: {a.dims} vs {b.dims}"
    if a.delta_cog != b.delta_cog:
        return f"delta_cog differs: {a.delta_cog} vs {b.delta_cog}"
    if not np.array_equal(a.heightmap, b.heightmap):
        return "heightmaps differ"
    if not np.array_equal(a.feasmap, b.feasmap):
        return "feasibility maps differ"
    if set(a.lbcps) != set(b.lbcps):
        return f"lbcp owners differ: {set(a.lbcps)} vs {set(b.lbcps)}"
    for key, la in a.lbcps.items():
        lb = b.lbcps[key]
        if la.polygon != lb.polygon or la.height != lb.height:
            return f"lbcp for {key!r} differs: {la} vs {lb}"
    if set(a.packed) != set(b.packed):
        return f"packed ids differ: {set(a.packed)} vs {set(b.packed)}"
    for pid, pa in a.packed.items():
        pb = b.packed[pid]
        if pa.item != pb.item or pa.placement != pb.placement:
            return f"item {pid!r} differs: {pa} vs {pb}"
    order_a = [pi.item.id for pi in pack_order(a)]
    order_b = [pi.item.id for pi in pack_order(b)]
    if order_a != order_b:
        return f"pack order differs: {order_a} vs {order_b}"
    return None


def states_equal(a: BinState, b: BinState) -> bool:
    return state_diff(a, b) is None


def item_to_json(item: Item) -> dict:
    return {"id": item.id, "w": item.w, "d": item.d, "h": item.h}


def item_from_json(doc: dict) -> Item:
    return Item(doc["id"], int(doc["w"]), int(doc["d"]), int(doc["h"]))


def state_to_json(state: BinState) -> dict:
    """Minimal authoritative serialization: items in pack order.

    Maps and polygons are derived data; loading replays the items through
    rebuild, so a corrupt document cannot deserialize into a state that
    the validator would reject.
    """
    return {
        "schema_version": STATE_SCHEMA_VERSION,
        "dims": list(state.dims),
        "delta_cog": str(state.delta_cog),
        "items": [
            {
                **item_to_json(pi.item),
                "x": pi.placement.x,
                "y": pi.placement.y,
                "z": pi.placement.z,
                "seq": pi.seq,
            }
            for pi in pack_order(state)
        ],
    }


def state_from_json(doc: dict) -> BinState:
    items = [
        PackedItem(
            item_from_json(entry),
            Placement(int(entry["x"]), int(entry["y"]), int(entry["z"])),
            int(entry["seq"]),
        )
        for entry in doc["items"]
    ]
    items.sort(key=lambda pi: pi.seq)
    return rebuild(items, tuple(doc["dims"]), doc["delta_cog"])


def dump_state(state: BinState) -> str:
    return json.dumps(state_to_json(state))


def load_state(text: str) -> BinState:
    return state_from_json(json.loads(text))
