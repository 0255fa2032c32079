"""Placement candidate generation and the pluggable packing policy.

Candidates are the base corners of empty maximal spaces, each validated
for stability so a policy can only ever pick a safe action.  The builtin
policy is a deterministic deepest-bottom-left rule with a stability
margin tie-break; an external provider (see the bridge protocol) may
supply scores instead, but unstable candidates stay masked out no matter
what it returns.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import socket
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .binstate import (
    BinState,
    Item,
    Placement,
    apply_pack,
    item_to_json,
    state_to_json,
    utilization,
)
from .errors import NoCandidateError
from .geometry import area
from .stability import ValidationResult, validate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ems:
    """Empty maximal space: an axis-aligned empty box no other empty box
    contains."""

    x: int
    y: int
    z: int
    w: int
    d: int
    h: int

    @property
    def origin(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    @property
    def extents(self) -> tuple[int, int, int]:
        return (self.w, self.d, self.h)

    def fits(self, item: Item) -> bool:
        return item.w <= self.w and item.d <= self.d and item.h <= self.h


@dataclass(frozen=True)
class Candidate:
    x: int
    y: int
    z: int
    ems_id: int
    stable: bool
    result: ValidationResult


@dataclass(frozen=True)
class PolicyDecision:
    chosen: int
    scores: tuple[float, ...]


class PolicyProvider(Protocol):
    """External scorer seam.  Returning None falls back to the builtin
    heuristic for that call."""

    def score_candidates(self, state: BinState, item: Item, candidates: Sequence[Candidate]):
        ...

    def state_value(self, state: BinState, item: Item | None):
        ...


def _row_bits(mask: np.ndarray) -> list[int]:
    """Each mask row as an int bitset (bit j set iff mask[x, j])."""
    packed = np.packbits(mask, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def _maximal_rects(mask: np.ndarray):
    """All maximal all-True rectangles of a 2-d bool mask.

    Rows are int bitsets; a rectangle is a bit run surviving the AND of a
    row range, maximal iff neither neighbouring row covers the run.
    """
    length = mask.shape[0]
    rows = _row_bits(mask)
    rects = []
    for x0 in range(length):
        acc = rows[x0]
        for x1 in range(x0, length):
            acc &= rows[x1]
            if not acc:
                break
            bits = acc
            while bits:
                start = (bits & -bits).bit_length() - 1
                rest = bits >> start
                run_len = (~rest & (rest + 1)).bit_length() - 1
                run_mask = ((1 << run_len) - 1) << start
                bits &= ~run_mask
                if x0 > 0 and (rows[x0 - 1] & run_mask) == run_mask:
                    continue
                if x1 < length - 1 and (rows[x1 + 1] & run_mask) == run_mask:
                    continue
                rects.append((x0, start, x1 - x0 + 1, run_len))
    return rects


def generate_ems(state: BinState) -> list[Ems]:
    """Empty maximal spaces of the heightmap world.

    Space below the surface (voids under overhangs) is unreachable from
    above and counts as occupied.  Every space reaches the bin top: a
    shorter empty box is contained in the one above it.  Results are
    cached on the state and ordered lexicographically by origin.
    """
    if state._ems is not None:
        return state._ems
    hm = state.heightmap
    height = state.dims[2]
    spaces = []
    for z in np.unique(hm):
        z = int(z)
        if z >= height:
            continue
        mask = hm <= z
        for x, y, w, d in _maximal_rects(mask):
            # base must touch the surface somewhere, else the space at the
            # lower level already contains this one
            if int(hm[x : x + w, y : y + d].max()) == z:
                spaces.append(Ems(x, y, z, w, d, height - z))
    spaces.sort(key=lambda e: (e.x, e.y, e.z, e.w, e.d, e.h))
    state._ems = spaces
    return spaces


def _corner_positions(ems: Ems, item: Item):
    xs = {ems.x, ems.x + ems.w - item.w}
    ys = {ems.y, ems.y + ems.d - item.d}
    return [(x, y) for x in sorted(xs) for y in sorted(ys)]


def enumerate_candidates(state: BinState, item: Item, shrink: int = 0) -> list[Candidate]:
    """Validated corner candidates over every space the item fits.

    Items rest at the support height of their footprint, which can sit
    below the space's base level; duplicates by position are dropped.
    Every emitted candidate is in bounds and collision free, with the
    stability verdict in its mask bit.
    """
    out: list[Candidate] = []
    seen: set[tuple[int, int]] = set()
    for ems_id, ems in enumerate(generate_ems(state)):
        if not ems.fits(item):
            continue
        for x, y in _corner_positions(ems, item):
            if (x, y) in seen:
                continue
            seen.add((x, y))
            result = validate(state, item, (x, y), shrink=shrink)
            out.append(Candidate(x, y, result.support_height, ems_id, result.valid, result))
    return out


def mask(candidates: Sequence[Candidate]) -> list[Candidate]:
    """Order-preserving filter to the stable candidates.  An empty result
    is the signal that rearrangement planning is needed."""
    return [c for c in candidates if c.stable]


def _builtin_key(item: Item, cand: Candidate):
    ratio = area(cand.result.support_polygon) / (item.w * item.d)
    return (cand.z, -ratio, cand.y, cand.x)


def policy_select(
    state: BinState,
    item: Item,
    candidates: Sequence[Candidate],
    provider: PolicyProvider | None = None,
) -> PolicyDecision:
    """Choose a placement among the stable candidates.

    Builtin rule: deepest first, then largest support-polygon area ratio,
    then lowest y, lowest x; exact arithmetic, no float ties.  Builtin
    scores are negated ranks over the stable set.  Provider scores are
    used as given except that unstable candidates are forced to -inf, so
    no provider can select an unstable placement.
    """
    stable_idx = [i for i, c in enumerate(candidates) if c.stable]
    if not stable_idx:
        raise NoCandidateError(f"no stable candidate for item {item.id!r}")

    scores = None
    if provider is not None:
        raw = provider.score_candidates(state, item, candidates)
        if raw is not None and len(raw) == len(candidates):
            try:
                # non-finite provider scores can never win the argmax
                scores = [s if math.isfinite(s) else float("-inf") for s in map(float, raw)]
            except (TypeError, ValueError):
                log.warning("provider returned non-numeric scores; using builtin")
        elif raw is not None:
            log.warning("provider returned %d scores for %d candidates; using builtin", len(raw), len(candidates))

    if scores is None:
        order = sorted(stable_idx, key=lambda i: _builtin_key(item, candidates[i]))
        scores = [float("-inf")] * len(candidates)
        for rank, i in enumerate(order):
            scores[i] = float(-rank)
        chosen = order[0]
    else:
        for i, c in enumerate(candidates):
            if not c.stable:
                scores[i] = float("-inf")
        chosen = max(stable_idx, key=lambda i: scores[i])  # first max wins

    return PolicyDecision(chosen, tuple(scores))


#: Probe items for the builtin critic: the small/large extremes of each axis.
PROBE_DIMS: tuple[tuple[int, int, int], ...] = tuple(itertools.product((2, 5), repeat=3))


def has_stable_placement(state: BinState, item: Item) -> bool:
    """True iff at least one candidate placement of item is stable."""
    seen: set[tuple[int, int]] = set()
    for ems in generate_ems(state):
        if not ems.fits(item):
            continue
        for xy in _corner_positions(ems, item):
            if xy in seen:
                continue
            seen.add(xy)
            if validate(state, item, xy).valid:
                return True
    return False


def value_estimate(
    state: BinState, item: Item | None = None, provider: PolicyProvider | None = None
) -> float:
    """Scalar worth of a state, standing in for a learned critic.

    Builtin: utilization plus half the fraction of probe items that still
    have a stable placement, rewarding states that keep room usable.
    Deterministic for a fixed state; the item argument is forwarded to
    external providers only.
    """
    if provider is not None:
        v = provider.state_value(state, item)
        if v is not None:
            return float(v)
    placeable = sum(
        1 for dims in PROBE_DIMS if has_stable_placement(state, Item(f"probe{dims}", *dims))
    )
    return utilization(state) + 0.5 * (placeable / len(PROBE_DIMS))


def _ranked_with_decisions(
    state: BinState, items: Sequence[Item], provider: PolicyProvider | None = None
):
    """(item, candidates, decision) sorted best-first; decision is None
    when an item has no stable placement (those sort last)."""
    rows = []
    for it in items:
        cands = enumerate_candidates(state, it)
        stable = mask(cands)
        if not stable:
            rows.append(((1, 0.0, str(it.id)), it, cands, None))
            continue
        decision = policy_select(state, it, cands, provider)
        c = cands[decision.chosen]
        hypothetical = apply_pack(state, it, Placement(c.x, c.y, c.z), c.result.support_polygon)
        v = value_estimate(hypothetical, it, provider)
        rows.append(((0, -v, str(it.id)), it, cands, decision))
    rows.sort(key=lambda r: r[0])
    return [(it, cands, decision) for _, it, cands, decision in rows]


def rank_items(
    state: BinState, items: Sequence[Item], provider: PolicyProvider | None = None
) -> list[Item]:
    """Items ordered by the value of the state after their best placement;
    items without a stable placement go last.  Ties break on item id, so
    the result is independent of input order."""
    return [it for it, _, _ in _ranked_with_decisions(state, items, provider)]


def candidate_to_json(cand: Candidate) -> dict:
    return {
        "x": cand.x,
        "y": cand.y,
        "z": cand.z,
        "ems_id": cand.ems_id,
        "stable": cand.stable,
        "support_height": cand.result.support_height,
        "support_polygon": [[int(p.x), int(p.y)] for p in cand.result.support_polygon.vertices],
    }


class BridgePolicyClient:
    """Scores placements through an external provider speaking
    newline-delimited JSON over a TCP socket.

    One request in flight at a time.  Any transport or protocol trouble
    logs once and falls back to the builtin heuristic (both methods
    return None), so a dead provider degrades rather than breaks a run.
    """

    def __init__(self, address: str, timeout: float = 2.0):
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bridge address must be host:port, got {address!r}")
        self._addr = (host, int(port))
        self._timeout = timeout
        self._sock: socket.socket | None = None
        self._reader = None
        self._next_id = 0
        self._warned = False

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None
                self._reader = None

    def _connect(self):
        if self._sock is None:
            self._sock = socket.create_connection(self._addr, timeout=self._timeout)
            self._reader = self._sock.makefile("r", encoding="utf-8")

    def _request(self, kind: str, payload: dict) -> dict | None:
        req_id = self._next_id
        self._next_id += 1
        try:
            self._connect()
            line = json.dumps({"id": req_id, "kind": kind, "payload": payload})
            self._sock.sendall(line.encode("utf-8") + b"\n")
            reply = self._reader.readline()
            if not reply:
                raise ConnectionError("provider closed the connection")
            msg = json.loads(reply)
            if msg.get("id") != req_id or msg.get("kind") != kind.replace("request", "response"):
                raise ValueError(f"unexpected reply {msg.get('kind')!r} for id {msg.get('id')}")
            return msg["payload"]
        except Exception as exc:  # noqa: BLE001 - any provider failure degrades to builtin
            if not self._warned:
                log.warning("policy bridge unavailable (%s); using builtin heuristics", exc)
                self._warned = True
            self.close()
            return None

    def score_candidates(self, state, item, candidates):
        payload = {
            "state": state_to_json(state),
            "item": item_to_json(item),
            "candidates": [candidate_to_json(c) for c in candidates],
        }
        reply = self._request("score_request", payload)
        if reply is None:
            return None
        scores = reply.get("scores")
        return scores if isinstance(scores, list) else None

    def state_value(self, state, item):
        payload = {
            "state": state_to_json(state),
            "item": item_to_json(item) if item is not None else None,
        }
        reply = self._request("value_request", payload)
        if reply is None:
            return None
        value = reply.get("value")
        return float(value) if isinstance(value, (int, float)) else None
