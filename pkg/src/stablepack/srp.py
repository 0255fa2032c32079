"""Stable rearrangement planning.

When an arriving item has no stable placement, a tree search over
unpack-only moves looks for a small set of packed items whose removal
makes room; a rollout then packs the removed items plus the new one back
greedily.  The raw operation sequence is finally shortened by an A*
search over unpack/pack/repack moves whose every intermediate state is
stability-validated, with the admissible heuristic "number of items not
yet at their target placement".
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass, field

from .binstate import (
    BinState,
    Item,
    ItemId,
    Placement,
    apply_pack,
    apply_unpack,
    rests_on,
    utilization,
)
from .errors import (
    InconsistentStateError,
    NoExpansionError,
    UnstablePlacementError,
)
from .placement import PolicyProvider, _ranked_with_decisions, value_estimate
from .stability import validate_at

OP_UNPACK = "unpack"
OP_PACK = "pack"
OP_REPACK = "repack"


@dataclass(frozen=True)
class Operation:
    """One rearrangement step.

    unpack: bin -> staging buffer; pack: new or staged item -> bin;
    repack: direct move inside the bin.
    """

    kind: str
    item_id: ItemId
    placement: Placement | None = None

    def __post_init__(self):
        if self.kind not in (OP_UNPACK, OP_PACK, OP_REPACK):
            raise ValueError(f"unknown operation kind {self.kind!r}")
        if self.kind == OP_UNPACK and self.placement is not None:
            raise ValueError("unpack carries no placement")
        if self.kind != OP_UNPACK and self.placement is None:
            raise ValueError(f"{self.kind} requires a placement")

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "item_id": self.item_id}
        if self.placement is not None:
            doc["placement"] = [self.placement.x, self.placement.y, self.placement.z]
        return doc


def operation_from_json(doc: dict) -> Operation:
    pl = doc.get("placement")
    return Operation(
        doc["kind"], doc["item_id"], Placement(*pl) if pl is not None else None
    )


@dataclass(frozen=True)
class SrpConfig:
    max_nodes: int = 100
    max_branch: int = 3
    max_depth: int = 6
    eta: float = 1.0
    w_v: float = 5.0
    t_uti: float = 0.8
    staging_capacity: int = 6

    def __post_init__(self):
        for name in ("max_nodes", "max_branch", "max_depth", "staging_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.t_uti <= 1:
            raise ValueError("t_uti must lie in (0, 1]")
        if self.eta < 0 or self.w_v < 0:
            raise ValueError("eta and w_v must be non-negative")

    @property
    def unpack_limit(self) -> int:
        return min(self.max_depth, self.staging_capacity)


@dataclass
class RearrangementPlan:
    operations: tuple[Operation, ...]
    target: BinState
    achieved_utilization: float
    new_item_packed: bool
    raw_length: int | None = None
    refined_length: int | None = None

    def to_json(self) -> dict:
        return {
            "operations": [op.to_json() for op in self.operations],
            "achieved_utilization": self.achieved_utilization,
            "new_item_packed": self.new_item_packed,
            "raw_length": self.raw_length,
            "refined_length": self.refined_length,
        }


@dataclass(frozen=True)
class SrpFailure:
    reason: str
    nodes_added: int
    best_utilization: float


@dataclass(frozen=True)
class PrecedenceGraph:
    """Movement-block constraints: an edge a -> b means a rests on b, so a
    must move before b can be picked up."""

    nodes: frozenset
    edges: frozenset  # (a, b) pairs

    def blocked(self) -> frozenset:
        return frozenset(b for _, b in self.edges)

    def unblocked(self) -> frozenset:
        return self.nodes - self.blocked()

    def blocking(self, item_id) -> frozenset:
        return frozenset(a for a, b in self.edges if b == item_id)


def build_precedence(state: BinState) -> PrecedenceGraph:
    """Precedence graph of the packed items.

    Resting contact anywhere on the top face creates an edge, even when
    the upper item is mostly carried by something else.  Physically
    realizable stacks give acyclic graphs; a cycle means the state is
    corrupt.
    """
    items = list(state.packed.values())
    edges = set()
    for a, b in itertools.permutations(items, 2):
        if rests_on(a, b):
            edges.add((a.item.id, b.item.id))
    graph = PrecedenceGraph(frozenset(pi.item.id for pi in items), frozenset(edges))
    _check_acyclic(graph)
    return graph


def _check_acyclic(graph: PrecedenceGraph) -> None:
    indeg = {n: 0 for n in graph.nodes}
    for _, b in graph.edges:
        indeg[b] += 1
    queue = [n for n, k in indeg.items() if k == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for a, b in graph.edges:
            if a == n:
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
    if seen != len(graph.nodes):
        raise InconsistentStateError("precedence graph contains a cycle")


def unpackable_items(state: BinState) -> set:
    """Items with nothing resting on any part of their top face."""
    items = list(state.packed.values())
    blocked = {
        b.item.id for a, b in itertools.permutations(items, 2) if rests_on(a, b)
    }
    return {pi.item.id for pi in items} - blocked


class SearchNode:
    """Tree node: the ordered ids unpacked so far plus the residual bin."""

    __slots__ = ("unpacked", "state", "parent", "children", "visits", "value_sum", "_untried", "exhausted")

    def __init__(self, state: BinState, unpacked: tuple = (), parent: "SearchNode | None" = None):
        self.unpacked = unpacked
        self.state = state
        self.parent = parent
        self.children: list[SearchNode] = []
        self.visits = 0
        self.value_sum = 0.0
        self._untried: list | None = None
        self.exhausted = False

    @property
    def mean_value(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0

    def untried(self) -> list:
        if self._untried is None:
            self._untried = sorted(unpackable_items(self.state), key=str)
        return self._untried


def ucb1(node: SearchNode, parent_visits: float, eta: float = 1.0) -> float:
    """Upper confidence bound; unvisited nodes get infinite priority so
    every sibling is tried once before any is revisited."""
    if parent_visits < 1:
        raise ValueError("parent must have been visited")
    if node.visits == 0:
        return math.inf
    return node.mean_value + eta * math.sqrt(math.log(parent_visits) / node.visits)


def _can_expand(node: SearchNode, cfg: SrpConfig) -> bool:
    return (
        len(node.unpacked) < cfg.unpack_limit
        and len(node.children) < cfg.max_branch
        and bool(node.untried())
    )


def expand(node: SearchNode, rng: random.Random, cfg: SrpConfig) -> SearchNode:
    """Add one child by unpacking a uniformly chosen untried item."""
    if len(node.unpacked) >= cfg.unpack_limit:
        raise NoExpansionError("depth / staging capacity limit reached")
    if len(node.children) >= cfg.max_branch:
        raise NoExpansionError("branch limit reached")
    untried = node.untried()
    if not untried:
        raise NoExpansionError("no unpackable item left to try")
    pick = untried.pop(rng.randrange(len(untried)))
    child = SearchNode(apply_unpack(node.state, pick), node.unpacked + (pick,), node)
    node.children.append(child)
    return child


def backpropagate(node: SearchNode, reward: float) -> None:
    while node is not None:
        node.visits += 1
        node.value_sum += reward
        node = node.parent


def rollout_reward(value: float, uti: float, w_v: float) -> float:
    return w_v * value + uti


@dataclass
class RolloutResult:
    reward: float
    operations: tuple[Operation, ...]
    final_state: BinState
    new_item_packed: bool
    all_replaced: bool
    utilization: float


def rollout(
    node: SearchNode,
    new_item: Item,
    cfg: SrpConfig,
    items_by_id: dict | None = None,
    provider: PolicyProvider | None = None,
) -> RolloutResult:
    """Greedy packing simulation from a node.

    Each iteration ranks the not-yet-placed items (unpacked ones plus the
    new item, all competing equally) and packs the best; stops when
    nothing fits, everything is placed, or the utilization target is
    reached.  Reward mixes the critic value of the final state with its
    utilization.
    """
    if items_by_id is None:
        items_by_id = {}
    state = node.state
    pending: dict = {}
    for iid in node.unpacked:
        pending[iid] = items_by_id[iid]
    pending[new_item.id] = new_item

    ops: list[Operation] = []
    last_placed: Item | None = None
    while pending and utilization(state) < cfg.t_uti:
        ranked = _ranked_with_decisions(state, list(pending.values()), provider)
        item, cands, decision = ranked[0]
        if decision is None:
            break  # best item is unplaceable, so every item is
        cand = cands[decision.chosen]
        pl = Placement(cand.x, cand.y, cand.z)
        state = apply_pack(state, item, pl, cand.result.support_polygon)
        ops.append(Operation(OP_PACK, item.id, pl))
        last_placed = item
        del pending[item.id]

    uti = utilization(state)
    reward = rollout_reward(value_estimate(state, last_placed, provider), uti, cfg.w_v) if last_placed else uti
    return RolloutResult(
        reward=reward,
        operations=tuple(ops),
        final_state=state,
        new_item_packed=new_item.id not in pending,
        all_replaced=not pending,
        utilization=uti,
    )


def _select(root: SearchNode, cfg: SrpConfig) -> SearchNode | None:
    """Descend to a node that can expand, marking dead subtrees exhausted.
    Returns None once the whole tree is exhausted."""
    while not root.exhausted:
        node = root
        while True:
            if _can_expand(node, cfg):
                return node
            live = [c for c in node.children if not c.exhausted]
            if not live:
                node.exhausted = True
                break  # restart from the root; parents re-evaluate
            node = max(live, key=lambda c: ucb1(c, max(node.visits, 1), cfg.eta))
    return None


def mcts_search(
    state: BinState,
    new_item: Item,
    cfg: SrpConfig | None = None,
    seed: int = 0,
    provider: PolicyProvider | None = None,
) -> RearrangementPlan | SrpFailure:
    """Search for a stable rearrangement that packs the new item.

    Success means the rollout packed the new item and either re-placed
    every unpacked item or reached the utilization target without
    dropping below the pre-plan utilization (items may then stay in the
    staging buffer for good).  Fails once the node budget is spent or the
    tree is exhausted.  Deterministic for a given seed.
    """
    cfg = cfg or SrpConfig()
    rng = random.Random(seed)
    items_by_id = {pid: pi.item for pid, pi in state.packed.items()}
    root = SearchNode(state)
    pre_uti = utilization(state)
    best_uti = 0.0
    nodes_added = 0

    while nodes_added < cfg.max_nodes:
        node = _select(root, cfg)
        if node is None:
            return SrpFailure("search space exhausted", nodes_added, best_uti)
        child = expand(node, rng, cfg)
        nodes_added += 1
        result = rollout(child, new_item, cfg, items_by_id, provider)
        backpropagate(child, result.reward)
        best_uti = max(best_uti, result.utilization)
        success = result.new_item_packed and (
            result.all_replaced
            or (result.utilization >= cfg.t_uti and result.utilization >= pre_uti)
        )
        if success:
            ops = tuple(Operation(OP_UNPACK, iid) for iid in child.unpacked)
            ops += result.operations
            return RearrangementPlan(
                operations=ops,
                target=result.final_state,
                achieved_utilization=result.utilization,
                new_item_packed=True,
                raw_length=len(ops),
            )
    return SrpFailure("node budget exhausted", nodes_added, best_uti)


def apply_plan(state: BinState, plan: RearrangementPlan, new_item: Item, on_step=None) -> BinState:
    """Execute a plan, validating stability at every intermediate state.

    Raises if any unpack is blocked or any pack/repack target is not
    currently stable; a returned plan failing here is a planner bug.
    """
    items = {pid: pi.item for pid, pi in state.packed.items()}
    items[new_item.id] = new_item
    for op in plan.operations:
        if op.kind == OP_UNPACK:
            state = apply_unpack(state, op.item_id)
        else:
            if op.kind == OP_REPACK:
                state = apply_unpack(state, op.item_id)
            item = items[op.item_id]
            result = validate_at(state, item, op.placement)
            if not result.valid:
                raise UnstablePlacementError(
                    f"plan step {op.kind} {op.item_id!r} at {op.placement} rejected: {result.reason}"
                )
            state = apply_pack(state, item, op.placement, result.support_polygon)
        if on_step is not None:
            on_step(state, op)
    return state


@dataclass(order=True)
class _QueueEntry:
    priority: tuple
    counter: int
    ops: tuple = field(compare=False)
    placements: frozenset = field(compare=False)
    staged: frozenset = field(compare=False)
    state: BinState = field(compare=False)


def _mismatch_count(placements: dict, targets: dict) -> int:
    count = sum(1 for iid, pl in targets.items() if placements.get(iid) != pl)
    count += sum(1 for iid in placements if iid not in targets)
    return count


def astar_refine(
    start: BinState,
    plan: RearrangementPlan,
    new_item: Item,
    cfg: SrpConfig | None = None,
    max_expansions: int = 200_000,
) -> RearrangementPlan:
    """Shortest operation sequence reaching the plan's target placements.

    States are (current placements, staging set); edges are validated
    unpack / pack-at-target / repack-to-target moves, generated on the
    fly.  The heuristic counts items not yet at their target, which every
    single operation can fix at most once, so the result is optimal over
    this move set and never longer than the input plan (a witness path).
    Ties prefer lower heuristic, then fewer staged items, then the
    lexicographically smallest operation encoding.
    """
    cfg = cfg or SrpConfig()
    targets: dict = {pid: pi.placement for pid, pi in plan.target.packed.items()}
    items: dict = {pid: pi.item for pid, pi in start.packed.items()}
    items[new_item.id] = new_item

    start_placements = {pid: pi.placement for pid, pi in start.packed.items()}
    raw_len = plan.raw_length if plan.raw_length is not None else len(plan.operations)

    def encode(ops: tuple) -> tuple:
        return tuple(
            (op.kind, str(op.item_id))
            + ((op.placement.x, op.placement.y, op.placement.z) if op.placement else ())
            for op in ops
        )

    h0 = _mismatch_count(start_placements, targets)
    counter = itertools.count()
    heap = [
        _QueueEntry(
            (h0, h0, 0, ()),
            next(counter),
            (),
            frozenset(start_placements.items()),
            frozenset(),
            start,
        )
    ]
    best_g: dict = {}
    expansions = 0

    while heap and expansions < max_expansions:
        entry = heapq.heappop(heap)
        placements = dict(entry.placements)
        key = (entry.placements, entry.staged)
        g = len(entry.ops)
        if best_g.get(key, math.inf) <= g:
            continue
        best_g[key] = g
        if placements == targets:
            refined = RearrangementPlan(
                operations=entry.ops,
                target=entry.state,
                achieved_utilization=utilization(entry.state),
                new_item_packed=new_item.id in targets,
                raw_length=raw_len,
                refined_length=len(entry.ops),
            )
            return refined
        expansions += 1

        moves: list[tuple[Operation, BinState, frozenset]] = []
        state = entry.state
        staged = entry.staged
        free = unpackable_items(state)

        if len(staged) < cfg.staging_capacity:
            for iid in sorted(free, key=str):
                moves.append(
                    (Operation(OP_UNPACK, iid), apply_unpack(state, iid), staged | {iid})
                )

        packable = sorted(staged, key=str)
        if new_item.id not in placements and new_item.id not in staged:
            packable.append(new_item.id)
        for iid in packable:
            tgt = targets.get(iid)
            if tgt is None:
                continue
            result = validate_at(state, items[iid], tgt)
            if result.valid:
                nxt = apply_pack(state, items[iid], tgt, result.support_polygon)
                moves.append((Operation(OP_PACK, iid, tgt), nxt, staged - {iid}))

        for iid in sorted(placements, key=str):
            tgt = targets.get(iid)
            if tgt is None or tgt == placements[iid] or iid not in free:
                continue
            lifted = apply_unpack(state, iid)
            result = validate_at(lifted, items[iid], tgt)
            if result.valid:
                nxt = apply_pack(lifted, items[iid], tgt, result.support_polygon)
                moves.append((Operation(OP_REPACK, iid, tgt), nxt, staged))

        for op, nxt_state, nxt_staged in moves:
            nxt_placements = dict(placements)
            if op.kind == OP_UNPACK:
                del nxt_placements[op.item_id]
            else:
                nxt_placements[op.item_id] = op.placement
            nxt_key = (frozenset(nxt_placements.items()), nxt_staged)
            nxt_g = g + 1
            if best_g.get(nxt_key, math.inf) <= nxt_g:
                continue
            h = _mismatch_count(nxt_placements, targets)
            f = nxt_g + h
            if f > raw_len:
                continue  # the raw plan is a witness; never exceed it
            ops = entry.ops + (op,)
            heapq.heappush(
                heap,
                _QueueEntry(
                    (f, h, len(nxt_staged), encode(ops)),
                    next(counter),
                    ops,
                    nxt_key[0],
                    nxt_staged,
                    nxt_state,
                ),
            )

    # Unreachable target within bounds means a planner bug; fall back to
    # the original plan so callers still get a sound sequence.
    fallback = RearrangementPlan(
        operations=plan.operations,
        target=plan.target,
        achieved_utilization=plan.achieved_utilization,
        new_item_packed=plan.new_item_packed,
        raw_length=raw_len,
        refined_length=len(plan.operations),
    )
    return fallback


def plan(
    state: BinState,
    new_item: Item,
    cfg: SrpConfig | None = None,
    seed: int = 0,
    provider: PolicyProvider | None = None,
) -> RearrangementPlan | SrpFailure:
    """Full pipeline: tree search, then sequence refinement.

    Callers invoke this after direct placement produced no stable
    candidate.  Both raw and refined lengths are recorded for reporting.
    """
    cfg = cfg or SrpConfig()
    outcome = mcts_search(state, new_item, cfg, seed=seed, provider=provider)
    if isinstance(outcome, SrpFailure):
        return outcome
    return astar_refine(state, outcome, new_item, cfg)
