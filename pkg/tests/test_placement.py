"""Candidate generation, masking, and the policy seam."""

import json
import socket
import socketserver
import threading

import pytest
from hypothesis import given, settings, strategies as st

from stablepack.binstate import Item, Placement, apply_pack, apply_unpack, new_bin
from stablepack.errors import NoCandidateError
from stablepack.placement import (
    BridgePolicyClient,
    enumerate_candidates,
    generate_ems,
    has_stable_placement,
    mask,
    policy_select,
    rank_items,
    value_estimate,
)
from stablepack.stability import validate, validate_at

from helpers import brute_force_ems, random_filled_state


def pack_at(state, item, x, y):
    r = validate(state, item, (x, y))
    assert r.valid, r.reason
    return apply_pack(state, item, Placement(x, y, r.support_height), r.support_polygon)


class TestGenerateEms:
    def test_empty_bin_single_space(self):
        spaces = generate_ems(new_bin((10, 10, 10), 0.1))
        assert [(e.origin, e.extents) for e in spaces] == [((0, 0, 0), (10, 10, 10))]

    def test_one_tower_three_spaces(self):
        s = pack_at(new_bin((10, 10, 10), 0.1), Item(0, 4, 4, 4), 0, 0)
        got = {(e.x, e.y, e.z, e.w, e.d, e.h) for e in generate_ems(s)}
        assert got == {(4, 0, 0, 6, 10, 10), (0, 4, 0, 10, 6, 10), (0, 0, 4, 10, 10, 6)}

    def test_full_bin_no_space(self):
        s = pack_at(new_bin((10, 10, 10), 0), Item(0, 10, 10, 10), 0, 0)
        assert generate_ems(s) == []

    def test_deterministic_order(self):
        s = random_filled_state(3, n_attempts=10)
        spaces = generate_ems(s)
        assert spaces == sorted(spaces, key=lambda e: (e.x, e.y, e.z, e.w, e.d, e.h))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_brute_force_on_small_bins(self, seed):
        s = random_filled_state(seed, dims=(5, 5, 5), n_attempts=6, dim_range=(1, 3))
        got = {(e.x, e.y, e.z, e.w, e.d, e.h) for e in generate_ems(s)}
        assert got == brute_force_ems(s)


class TestEnumerateCandidates:
    def test_empty_bin_four_corners(self):
        s = new_bin((10, 10, 10), 0.1)
        cands = enumerate_candidates(s, Item(0, 4, 4, 4))
        assert {(c.x, c.y) for c in cands} == {(0, 0), (6, 0), (0, 6), (6, 6)}
        assert all(c.stable and c.z == 0 for c in cands)

    def test_item_larger_than_bin(self):
        s = new_bin((10, 10, 10), 0.1)
        assert enumerate_candidates(s, Item(0, 11, 4, 4)) == []
        assert enumerate_candidates(s, Item(0, 4, 4, 11)) == []

    def test_unbearable_overhang_candidate_masked(self):
        # a space corner lands on a bridge overhang whose top face cannot
        # bear load: the candidate exists but is flagged unstable
        s = pack_at(new_bin((10, 10, 10), 0), Item("tower", 4, 4, 4), 2, 0)
        s = pack_at(s, Item("bridge", 6, 4, 2), 2, 0)  # overhang over x in [6, 8)
        s = pack_at(s, Item("column", 2, 4, 8), 8, 0)
        cands = enumerate_candidates(s, Item("probe", 2, 2, 2))
        by_xy = {(c.x, c.y): c for c in cands}
        over_void = by_xy[(6, 0)]
        assert over_void.z == 6
        assert not over_void.stable
        assert over_void.result.support_polygon.is_empty

    def test_candidates_deduplicated(self):
        s = new_bin((10, 10, 10), 0.1)
        cands = enumerate_candidates(s, Item(0, 10, 10, 4))
        assert [(c.x, c.y) for c in cands] == [(0, 0)]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_candidates_in_bounds_and_resting(self, seed):
        s = random_filled_state(seed, n_attempts=12)
        item = Item("x", 3, 2, 3)
        for c in enumerate_candidates(s, item):
            assert 0 <= c.x <= 10 - item.w and 0 <= c.y <= 10 - item.d
            r = validate_at(s, item, Placement(c.x, c.y, c.z))
            assert r.reason not in ("collision", "floating")
            assert c.z + item.h <= 10


class TestMask:
    def test_all_stable_identity(self):
        s = new_bin((10, 10, 10), 0.1)
        cands = enumerate_candidates(s, Item(0, 4, 4, 4))
        assert mask(cands) == cands

    def test_none_stable_empty(self):
        # full-base slab can only rest on a tiny pillar: candidates exist
        # but none are stable, the rearrangement trigger
        s = pack_at(new_bin((10, 10, 10), 0.1), Item(0, 1, 1, 2), 4, 4)
        cands = enumerate_candidates(s, Item(1, 10, 10, 2))
        assert cands and mask(cands) == []

    def test_mixed_keeps_order(self):
        s = pack_at(new_bin((10, 10, 10), 0), Item("tower", 4, 4, 4), 2, 0)
        s = pack_at(s, Item("bridge", 6, 4, 2), 2, 0)
        s = pack_at(s, Item("column", 2, 4, 8), 8, 0)
        cands = enumerate_candidates(s, Item("probe", 2, 2, 2))
        kept = mask(cands)
        assert kept == [c for c in cands if c.stable]
        assert len(kept) < len(cands)


class ScriptedProvider:
    def __init__(self, scores=None, value=None):
        self.scores = scores
        self.value = value

    def score_candidates(self, state, item, candidates):
        if callable(self.scores):
            return self.scores(candidates)
        return self.scores

    def state_value(self, state, item):
        return self.value


class TestPolicySelect:
    def test_deepest_first(self):
        s = pack_at(new_bin((10, 10, 10), 0.1), Item(0, 4, 4, 4), 0, 0)
        cands = enumerate_candidates(s, Item(1, 4, 4, 4))
        decision = policy_select(s, Item(1, 4, 4, 4), cands)
        assert cands[decision.chosen].z == 0

    def test_tie_breaks_lower_y_then_x(self):
        s = new_bin((10, 10, 10), 0.1)
        item = Item(0, 4, 4, 4)
        cands = enumerate_candidates(s, item)
        decision = policy_select(s, item, cands)
        assert (cands[decision.chosen].x, cands[decision.chosen].y) == (0, 0)

    def test_support_margin_beats_position_at_same_depth(self):
        from stablepack.geometry import Rect2, rect_polygon
        from stablepack.placement import Candidate
        from stablepack.stability import ValidationResult

        s = new_bin((10, 10, 10), 0.05)
        item = Item(0, 4, 4, 2)

        def cand(x, y, z, poly_rect):
            result = ValidationResult(True, rect_polygon(poly_rect), z)
            return Candidate(x, y, z, 0, True, result)

        half = cand(0, 0, 2, Rect2(0, 0, 2, 4))  # area ratio 1/2, better position
        full = cand(6, 0, 2, Rect2(6, 0, 4, 4))  # area ratio 1, worse position
        floor = cand(6, 6, 0, Rect2(6, 6, 4, 4))
        decision = policy_select(s, item, [half, full])
        assert decision.chosen == 1  # larger bearable area wins the z tie
        decision = policy_select(s, item, [half, full, floor])
        assert decision.chosen == 2  # depth still dominates

    def test_empty_stable_set_raises(self):
        s = new_bin((10, 10, 10), 0.1)
        with pytest.raises(NoCandidateError):
            policy_select(s, Item(0, 4, 4, 4), [])

    def test_provider_argmax_respected(self):
        s = new_bin((10, 10, 10), 0.1)
        item = Item(0, 4, 4, 4)
        cands = enumerate_candidates(s, item)
        want = len(cands) - 1
        scores = [0.0] * len(cands)
        scores[want] = 9.0
        decision = policy_select(s, item, cands, ScriptedProvider(scores=scores))
        assert decision.chosen == want
        assert decision.scores[want] == 9.0

    def test_adversarial_provider_cannot_pick_unstable(self):
        s = pack_at(new_bin((10, 10, 10), 0), Item("tower", 4, 4, 4), 2, 0)
        s = pack_at(s, Item("bridge", 6, 4, 2), 2, 0)
        s = pack_at(s, Item("column", 2, 4, 8), 8, 0)
        item = Item("probe", 2, 2, 2)
        cands = enumerate_candidates(s, item)
        assert any(not c.stable for c in cands)

        def favor_unstable(candidates):
            return [0.0 if c.stable else 1e9 for c in candidates]

        decision = policy_select(s, item, cands, ScriptedProvider(scores=favor_unstable))
        assert cands[decision.chosen].stable
        assert all(decision.scores[i] == float("-inf") for i, c in enumerate(cands) if not c.stable)

    def test_bad_score_length_falls_back_to_builtin(self):
        s = new_bin((10, 10, 10), 0.1)
        item = Item(0, 4, 4, 4)
        cands = enumerate_candidates(s, item)
        with_provider = policy_select(s, item, cands, ScriptedProvider(scores=[1.0]))
        builtin = policy_select(s, item, cands)
        assert with_provider.chosen == builtin.chosen

    def test_deterministic(self):
        s = random_filled_state(11, n_attempts=8)
        item = Item("d", 3, 3, 3)
        cands = enumerate_candidates(s, item)
        if not mask(cands):
            pytest.skip("seed produced no stable candidate")
        first = policy_select(s, item, cands)
        assert all(policy_select(s, item, cands) == first for _ in range(3))


class TestValueEstimate:
    def test_empty_bin(self):
        assert value_estimate(new_bin((10, 10, 10), 0.1)) == 0.5

    def test_full_bin(self):
        s = new_bin((10, 10, 10), 0)
        for i, (x, y) in enumerate([(0, 0), (5, 0), (0, 5), (5, 5)]):
            s = pack_at(s, Item(i, 5, 5, 5), x, y)
        for i, (x, y) in enumerate([(0, 0), (5, 0), (0, 5), (5, 5)]):
            s = pack_at(s, Item(4 + i, 5, 5, 5), x, y)
        assert value_estimate(s) == 1.0

    def test_provider_overrides(self):
        s = new_bin((10, 10, 10), 0.1)
        assert value_estimate(s, provider=ScriptedProvider(value=0.25)) == 0.25

    def test_probe_fraction_not_monotone_under_unpack(self):
        # removing an item can delete the only stable surface for a probe:
        # two 1-wide rails carry a slab; without the slab the 2x2x2 probe
        # has no placement whose CoG box stays on a rail
        s = new_bin((3, 3, 4), 0.1)
        s = pack_at(s, Item("rail_a", 1, 3, 1), 0, 0)
        s = pack_at(s, Item("rail_b", 1, 3, 1), 2, 0)
        s = pack_at(s, Item("slab", 3, 3, 1), 0, 0)
        probe = Item("probe", 2, 2, 2)
        assert has_stable_placement(s, probe)
        assert not has_stable_placement(apply_unpack(s, "slab"), probe)


class TestRankItems:
    def test_singleton(self):
        s = new_bin((10, 10, 10), 0.1)
        assert rank_items(s, [Item(0, 3, 3, 3)]) == [Item(0, 3, 3, 3)]

    def test_unplaceable_goes_last(self):
        s = new_bin((10, 10, 10), 0.1)
        giant = Item("giant", 11, 3, 3)
        small = Item("small", 3, 3, 3)
        assert rank_items(s, [giant, small]) == [small, giant]

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 1_000), st.permutations(list(range(4))))
    def test_permutation_invariant(self, seed, order):
        s = random_filled_state(seed, n_attempts=6)
        items = [Item(f"r{i}", 2 + i % 3, 2, 2) for i in range(4)]
        shuffled = [items[i] for i in order]
        assert rank_items(s, items) == rank_items(s, shuffled)


class _BridgeHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for line in self.rfile:
            msg = json.loads(line)
            kind = msg["kind"].replace("request", "response")
            if msg["kind"] == "score_request":
                n = len(msg["payload"]["candidates"])
                payload = {"scores": [float(i) for i in range(n)]}
            else:
                payload = {"value": 0.125}
            reply = {"id": msg["id"], "kind": kind, "payload": payload}
            self.wfile.write((json.dumps(reply) + "\n").encode())
            self.wfile.flush()


@pytest.fixture()
def bridge_server():
    server = socketserver.ThreadingTCPServer(("127.0.0.1", 0), _BridgeHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


class TestBridgePolicyClient:
    def test_scores_round_trip(self, bridge_server):
        s = new_bin((10, 10, 10), 0.1)
        item = Item(0, 4, 4, 4)
        cands = enumerate_candidates(s, item)
        client = BridgePolicyClient(bridge_server)
        decision = policy_select(s, item, cands, client)
        # server scores by index, so the last candidate wins
        assert decision.chosen == len(cands) - 1
        assert client.state_value(s, item) == 0.125
        client.close()

    def test_dead_endpoint_falls_back(self):
        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            free_port = sock.getsockname()[1]
        client = BridgePolicyClient(f"127.0.0.1:{free_port}", timeout=0.2)
        s = new_bin((10, 10, 10), 0.1)
        item = Item(0, 4, 4, 4)
        cands = enumerate_candidates(s, item)
        decision = policy_select(s, item, cands, client)
        assert decision == policy_select(s, item, cands)

    def test_bad_address(self):
        with pytest.raises(ValueError):
            BridgePolicyClient("nonsense")
