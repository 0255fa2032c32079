"""Walkthrough: planning a stable rearrangement out of a dead end.

A small pillar occupies the only pocket where an arriving slab could go.
Direct placement fails, the planner searches unpack-only tree edges for
items to remove, refines the raw sequence with A*, and the plan replays
with a stability check at every step.

Run:  python demos/demo_rearrangement.py
"""

from stablepack import (
    Item,
    Placement,
    apply_pack,
    apply_plan,
    enumerate_candidates,
    mask,
    new_bin,
    plan,
    utilization,
    validate,
)


def place(state, item, x, y):
    result = validate(state, item, (x, y))
    assert result.valid
    return apply_pack(state, item, Placement(x, y, result.support_height), result.support_polygon)


def main():
    state = new_bin((4, 4, 5), delta_cog=0.1)
    state = place(state, Item("pillar", 1, 1, 2), 1, 1)
    arrival = Item("slab", 4, 4, 3)

    candidates = enumerate_candidates(state, arrival)
    print(f"arrival {arrival.dims}: {len(candidates)} candidate(s), "
          f"{len(mask(candidates))} stable -> rearrangement needed")
    for c in candidates:
        print(f"  ({c.x}, {c.y}) rest height {c.z}: stable={c.stable}")

    outcome = plan(state, arrival, seed=0)
    print(f"\nplan found: {outcome.raw_length} raw ops refined to "
          f"{outcome.refined_length}")
    for i, op in enumerate(outcome.operations, 1):
        where = f" -> {op.placement}" if op.placement else ""
        print(f"  {i}. {op.kind} {op.item_id}{where}")

    def narrate(intermediate, op):
        print(f"    after {op.kind} {op.item_id}: "
              f"utilization {utilization(intermediate):.3f}, still stable")

    print("\nreplaying with per-step validation:")
    final = apply_plan(state, outcome, arrival, on_step=narrate)
    print(f"\nfinal utilization {utilization(final):.3f}, "
          f"items in bin: {sorted(map(str, final.packed))}")


if __name__ == "__main__":
    main()
