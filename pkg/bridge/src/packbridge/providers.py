"""Reference providers.

GreedyProvider re-implements the engine's documented builtin placement
rule from the wire payloads alone, so it reproduces the builtin decisions
exactly (the conformance property).  RandomProvider returns seeded noise,
useful for exercising the masking contract on the engine side.

Scoring payloads are plain dicts as defined in the protocol document:
candidates carry x, y, z, stable, and the support polygon's integer
vertices; states carry dims and the packed items.
"""

from __future__ import annotations

import random
from fractions import Fraction


def _twice_shoelace_area(vertices) -> int:
    n = len(vertices)
    if n < 3:
        return 0
    total = 0
    for i in range(n):
        (ax, ay), (bx, by) = vertices[i], vertices[(i + 1) % n]
        total += ax * by - bx * ay
    return total


def placement_key(item: dict, candidate: dict):
    """The engine's exact ordering key: deepest first, then largest
    bearable-area ratio, then lowest y, lowest x."""
    area_ratio = Fraction(
        _twice_shoelace_area(candidate["support_polygon"]),
        2 * item["w"] * item["d"],
    )
    return (candidate["z"], -area_ratio, candidate["y"], candidate["x"])


def bin_utilization(state: dict) -> float:
    dims = state["dims"]
    packed = sum(entry["w"] * entry["d"] * entry["h"] for entry in state["items"])
    return packed / (dims[0] * dims[1] * dims[2])


class GreedyProvider:
    """Scores candidates by negated rank under the documented key.

    The argmax over stable candidates then coincides with the engine's
    builtin choice.  Values are reported as plain bin utilization; the
    builtin critic's free-space term needs the engine's own placement
    machinery, which is not reachable through the wire.
    """

    def score(self, state: dict, item: dict, candidates: list) -> list:
        order = sorted(range(len(candidates)), key=lambda i: placement_key(item, candidates[i]))
        scores = [0.0] * len(candidates)
        for rank, idx in enumerate(order):
            scores[idx] = float(-rank)
        return scores

    def value(self, state: dict, item) -> float:
        return bin_utilization(state)


class RandomProvider:
    """Seeded uniform scores; deterministic for a fixed seed and request
    order."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def score(self, state: dict, item: dict, candidates: list) -> list:
        return [self.rng.random() for _ in candidates]

    def value(self, state: dict, item) -> float:
        return self.rng.random()


PROVIDERS = {"greedy": GreedyProvider, "random": RandomProvider}


def make_provider(name: str, seed: int = 0):
    if name not in PROVIDERS:
        raise ValueError(f"unknown provider {name!r} (choose from {sorted(PROVIDERS)})")
    if name == "random":
        return RandomProvider(seed)
    return GreedyProvider()
