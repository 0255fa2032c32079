"""Walkthrough: load-bearable regions and placement validation.

Builds a small stack step by step and prints the heightmap and the
load-bearability map after each placement, then shows why a centred
stack is accepted while an overhanging one is rejected.

Run:  python demos/demo_stability.py
"""

import numpy as np

from stablepack import (
    Item,
    Placement,
    apply_pack,
    new_bin,
    validate,
)


def show(state, note):
    print(f"\n== {note}")
    print("heightmap (x down, y right):")
    print(np.array2string(state.heightmap))
    rows = ["".join(".#"[int(v)] for v in row) for row in state.feasmap]
    print("load-bearable surface cells (#):")
    print("\n".join(rows))


def place(state, item, x, y):
    result = validate(state, item, (x, y))
    print(f"\nvalidate {item.dims} at ({x}, {y}): valid={result.valid} "
          f"rest height={result.support_height} reason={result.reason}")
    print(f"  support polygon: {result.support_polygon}")
    if not result.valid:
        return state
    return apply_pack(state, item, Placement(x, y, result.support_height), result.support_polygon)


def main():
    # 8x8x8 bin; CoG may sit up to 10% of each dimension off centre
    state = new_bin((8, 8, 8), delta_cog=0.1)
    show(state, "empty bin: the whole floor bears load")

    state = place(state, Item("base", 4, 4, 2), 0, 0)
    show(state, "full-contact floor placement: entire top face bears load")

    # one cell of overhang: the overhanging strip of the new top face
    # cannot bear load, so it is cleared in the map
    state = place(state, Item("step", 4, 4, 2), 1, 0)
    show(state, "1-cell overhang: the strip beyond the support hull is not bearable")

    # pushing further: half the footprint hangs in the air, the CoG
    # uncertainty box leaves the support polygon, placement refused
    state = place(state, Item("too_far", 4, 4, 2), 3, 0)
    show(state, "state unchanged after the rejected placement")


if __name__ == "__main__":
    main()
