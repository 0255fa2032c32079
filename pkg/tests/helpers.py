"""Independent oracles and state builders shared across the test suite.

Oracles here deliberately avoid the production code paths they check:
hull membership via triangle decomposition, heightmaps via per-cell max
over the packed list, maximal empty boxes via exhaustive enumeration.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from stablepack.binstate import BinState, Item, Placement, apply_pack, new_bin
from stablepack.geometry import Point2
from stablepack.stability import validate


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def point_in_triangle(p, a, b, c) -> bool:
    if cross(a, b, c) == 0:
        return False  # degenerate; segment membership is checked separately
    d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def on_segment(a, b, p) -> bool:
    return (
        cross(a, b, p) == 0
        and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def point_in_hull_of(points, p) -> bool:
    """Caratheodory membership: p lies in the hull of `points` iff it lies
    in some triangle, on some segment, or equals some point of the set."""
    pts = list(points)
    if any(tuple(q) == tuple(p) for q in pts):
        return True
    if any(on_segment(a, b, p) for a, b in itertools.combinations(pts, 2)):
        return True
    return any(point_in_triangle(p, a, b, c) for a, b, c in itertools.combinations(pts, 3))


def extreme_points(points) -> set:
    """A point is extreme iff it is not in the hull of the others."""
    pts = [tuple(p) for p in set(map(tuple, points))]
    return {p for p in pts if not point_in_hull_of([q for q in pts if q != p], p)}


def heightmap_oracle(state: BinState) -> np.ndarray:
    """Per-cell max of item tops, recomputed from the packed list."""
    hm = np.zeros(state.dims[:2], dtype=np.int64)
    for pi in state.packed.values():
        x, y, z = pi.placement.x, pi.placement.y, pi.placement.z
        region = hm[x : x + pi.item.w, y : y + pi.item.d]
        np.maximum(region, z + pi.item.h, out=region)
    return hm


def brute_force_ems(state: BinState) -> set:
    """Every maximal empty box of the heightmap world, by enumeration."""
    L, W, H = state.dims
    hm = state.heightmap

    def empty(x, y, z, w, d, h):
        return int(hm[x : x + w, y : y + d].max(initial=0)) <= z

    boxes = set()
    for x, y, z in itertools.product(range(L), range(W), range(H)):
        for w, d, h in itertools.product(range(1, L - x + 1), range(1, W - y + 1), range(1, H - z + 1)):
            if empty(x, y, z, w, d, h):
                boxes.add((x, y, z, w, d, h))

    def contains(big, small) -> bool:
        bx, by, bz, bw, bd, bh = big
        sx, sy, sz, sw, sd, sh = small
        return (
            bx <= sx and by <= sy and bz <= sz
            and sx + sw <= bx + bw and sy + sd <= by + bd and sz + sh <= bz + bh
        )

    return {b for b in boxes if not any(contains(o, b) for o in boxes if o != b)}


def random_filled_state(
    seed: int,
    dims=(10, 10, 10),
    delta_cog=0.1,
    n_attempts: int = 25,
    dim_range=(2, 5),
) -> BinState:
    """Seeded state built by dropping random items at random stable spots."""
    rng = random.Random(seed)
    state = new_bin(dims, delta_cog)
    for i in range(n_attempts):
        w = rng.randint(*dim_range)
        d = rng.randint(*dim_range)
        h = rng.randint(*dim_range)
        item = Item(i, w, d, h)
        x = rng.randrange(dims[0] - w + 1)
        y = rng.randrange(dims[1] - d + 1)
        try:
            result = validate(state, item, (x, y))
        except Exception:
            continue
        if result.valid:
            state = apply_pack(state, item, Placement(x, y, result.support_height), result.support_polygon)
    return state


def as_xy(points):
    return [(p.x, p.y) if isinstance(p, Point2) else tuple(p) for p in points]


def pack_stable(state, item, x, y):
    result = validate(state, item, (x, y))
    assert result.valid, f"fixture placement rejected: {result.reason}"
    return apply_pack(state, item, Placement(x, y, result.support_height), result.support_polygon)


def construct_blocked_instance(seed: int):
    """A bin where the new item fits only in a pocket occupied by a short
    stack of blockers: solvable by unpacking 1..3 identified items.

    Returns (state, new_item, blocker_ids).  Tall slabs wall off the rest
    of the floor and sit high enough that the new item cannot rest on
    them, so the pocket is the only stable destination.
    """
    rng = random.Random(seed)
    L = H = 8
    wn = rng.randint(4, 6)
    dn = rng.randint(4, 7)
    hn = rng.randint(2, 3)
    k = rng.randint(1, 3)
    tall = H - hn + 1

    state = new_bin((L, L, H), 0.1)
    state = pack_stable(state, Item("slab_a", L - wn, L, tall), wn, 0)
    state = pack_stable(state, Item("slab_b", wn, L - dn, tall), 0, dn)
    corner = (0, 0) if rng.random() < 0.5 else (wn - 2, dn - 2)
    blocker_ids = []
    for i in range(k):
        bid = f"blocker{i}"
        state = pack_stable(state, Item(bid, 2, 2, 2), *corner)
        blocker_ids.append(bid)
    new_item = Item("arrival", wn, dn, hn)
    return state, new_item, blocker_ids


def bfs_optimal_length(start, plan_target, new_item, staging_capacity=6, max_nodes=200_000):
    """Breadth-first distance to the plan's target placements over the
    unpack / pack-at-target / repack-to-target move set.

    Independent of the A* implementation: moves are derived directly from
    the state primitives.  Returns None if the target is unreachable
    within the node budget.
    """
    from collections import deque

    from stablepack.binstate import apply_unpack
    from stablepack.srp import unpackable_items
    from stablepack.stability import validate_at

    targets = {pid: pi.placement for pid, pi in plan_target.packed.items()}
    items = {pid: pi.item for pid, pi in start.packed.items()}
    items[new_item.id] = new_item

    def key_of(state, staged):
        return (
            frozenset((pid, pi.placement) for pid, pi in state.packed.items()),
            frozenset(staged),
        )

    target_key = frozenset(targets.items())
    queue = deque([(start, frozenset(), 0)])
    seen = {key_of(start, frozenset())}
    visited = 0
    while queue and visited < max_nodes:
        state, staged, dist = queue.popleft()
        visited += 1
        if frozenset((pid, pi.placement) for pid, pi in state.packed.items()) == target_key:
            return dist
        succs = []
        free = unpackable_items(state)
        if len(staged) < staging_capacity:
            for iid in free:
                succs.append((apply_unpack(state, iid), staged | {iid}))
        for iid in list(staged) + ([new_item.id] if new_item.id not in state.packed and new_item.id not in staged else []):
            tgt = targets.get(iid)
            if tgt is None:
                continue
            r = validate_at(state, items[iid], tgt)
            if r.valid:
                succs.append((apply_pack(state, items[iid], tgt, r.support_polygon), staged - {iid}))
        for iid in list(state.packed):
            tgt = targets.get(iid)
            if tgt is None or tgt == state.packed[iid].placement or iid not in free:
                continue
            lifted = apply_unpack(state, iid)
            r = validate_at(lifted, items[iid], tgt)
            if r.valid:
                succs.append((apply_pack(lifted, items[iid], tgt, r.support_polygon), staged))
        for nxt, nxt_staged in succs:
            k = key_of(nxt, nxt_staged)
            if k not in seen:
                seen.add(k)
                queue.append((nxt, nxt_staged, dist + 1))
    return None
