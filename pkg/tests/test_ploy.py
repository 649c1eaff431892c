import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_offer
from secgame.errors import ContractError, SpecError
from secgame.ploy import (PloyPool, assess_response, equiprobability_gap, load_pool, make_offer,
                          offer_entropy, select_offer, sort_pool)

POOL = PloyPool((("a", 0.1), ("b", 0.4), ("c", 0.3), ("d", 0.2)), "c")


class TestBasics:
    def test_sort(self):
        assert sort_pool(POOL).actions == (("b", 0.4), ("c", 0.3), ("d", 0.2), ("a", 0.1))
        ties = PloyPool((("z", 0.5), ("y", 0.5)), "z")
        assert sort_pool(ties).ids == ("y", "z")
        assert sort_pool(sort_pool(POOL)) == sort_pool(POOL)

    def test_gap(self):
        assert equiprobability_gap([0.5, 0.25, 0.25]) == 0.25
        assert equiprobability_gap([0.6, 0.4]) == pytest.approx(0.2)
        for y in range(2, 9):
            assert equiprobability_gap([1 / y] * y) == 0.0
        with pytest.raises(ContractError):
            equiprobability_gap([1.0])

    def test_entropy(self):
        assert offer_entropy([0.25] * 4) == 2.0
        assert offer_entropy([1.0, 0.0, 0.0]) == 0.0
        assert offer_entropy([0.5, 0.25, 0.25]) == 1.5

    def test_pool_validation(self):
        with pytest.raises(ContractError):
            PloyPool((("a", 0.5), ("b", 0.4)), "a")
        with pytest.raises(ContractError):
            PloyPool((("a", 0.5), ("b", 0.5)), "c")
        with pytest.raises(ContractError):
            PloyPool((("a", 1.0), ("b", 0.0)), "a")


class TestSelect:
    def test_reference_pool(self):
        offer = select_offer(POOL, 2, 4)
        # 0.3 is the mean of 0.4 and 0.2: exact equiprobability
        assert set(offer.actions) == {"b", "c", "d"}
        assert offer.gap < 1e-15 and offer.regime == "exhaustive"
        best_gap, best_ent, _ = brute_force_offer([0.1, 0.4, 0.3, 0.2], 2, 2, 4)
        assert offer.gap == pytest.approx(best_gap, abs=1e-12)
        assert offer.entropy == pytest.approx(best_ent, abs=1e-12)

    def test_uniform_pool_takes_largest_offer(self):
        pool = PloyPool.from_weights({k: 1.0 for k in "abcde"}, "c")
        offer = select_offer(pool, 2, 4)
        assert offer.size == 4 and offer.gap == 0.0 and offer.entropy == 2.0

    def test_bounds(self):
        with pytest.raises(ContractError):
            select_offer(POOL, 1, 3)
        with pytest.raises(ContractError):
            select_offer(POOL, 3, 5)

    def test_greedy_regime_for_large_pools(self):
        pool = PloyPool.from_weights({f"x{i:02d}": i + 1 for i in range(25)}, "x10")
        offer = select_offer(pool, 2, 6)
        assert offer.regime == "greedy" and "x10" in offer.actions and 2 <= offer.size <= 6
        assert offer.gap == pytest.approx(equiprobability_gap(offer))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 20), min_size=2, max_size=10), st.data())
    def test_matches_brute_force(self, weights, data):
        n = len(weights)
        nash = data.draw(st.integers(0, n - 1))
        lo = data.draw(st.integers(2, n))
        hi = data.draw(st.integers(lo, n))
        ids = [f"a{i}" for i in range(n)]
        pool = PloyPool.from_weights(dict(zip(ids, weights)), ids[nash])
        offer = select_offer(pool, lo, hi)
        best_gap, best_ent, _ = brute_force_offer([p for _, p in pool.actions], nash, lo, hi)
        assert offer.gap == pytest.approx(best_gap, abs=1e-12)
        assert offer.entropy == pytest.approx(best_ent, abs=1e-12)
        assert lo <= offer.size <= hi and ids[nash] in offer.actions

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 20), min_size=2, max_size=8), st.integers(2, 50))
    def test_scaling_weights_changes_nothing(self, weights, c):
        ids = [f"a{i}" for i in range(len(weights))]
        a = select_offer(PloyPool.from_weights(dict(zip(ids, weights)), ids[0]))
        b = select_offer(PloyPool.from_weights(dict(zip(ids, [w * c for w in weights])), ids[0]))
        assert a.actions == b.actions

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 20), min_size=2, max_size=8))
    def test_zero_gap_iff_equiprobable(self, weights):
        ids = [f"a{i}" for i in range(len(weights))]
        pool = PloyPool.from_weights(dict(zip(ids, weights)), ids[0])
        for size in range(2, len(ids) + 1):
            for combo in itertools.combinations(ids[1:], size - 1):
                offer = make_offer(pool, (ids[0],) + combo)
                q = offer.probabilities[offer.actions.index(ids[0])]
                assert (offer.gap < 1e-12) == (abs(q - 1 / size) < 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.lists(st.floats(0.05, 1.0), min_size=6, max_size=6))
def test_uniform_maximizes_entropy(y, noise):
    uniform = offer_entropy([1 / y] * y)
    assert uniform == pytest.approx(math.log2(y))
    assert offer_entropy(noise[:y]) <= uniform + 1e-12


class TestAssess:
    def test_confirm_and_deviation(self):
        offer = make_offer(POOL, ["a", "b", "c", "d"])
        assert assess_response(offer, "c").confirms_belief
        dev = assess_response(offer, "b")
        assert not dev.confirms_belief and dev.rank == 1
        assert assess_response(offer, "a").rank == 3

    def test_not_offered(self):
        offer = make_offer(POOL, ["b", "c"])
        with pytest.raises(ContractError):
            assess_response(offer, "a")


def test_load_pool(tmp_path):
    path = tmp_path / "pool.json"
    path.write_text(json.dumps({"ploy": {"actions": [
        {"id": "x", "probability": 0.5, "nash": True}, {"id": "y", "probability": 0.5}],
        "max_size": 2}}))
    pool, lo, hi = load_pool(path)
    assert pool.nash_action == "x" and (lo, hi) == (2, 2)
    path.write_text(json.dumps({"ploy": {"actions": [{"id": "x", "probability": 1.0}]}}))
    with pytest.raises(SpecError, match="nash"):
        load_pool(path)
    path.write_text(json.dumps({"ploy": {"actions": [], "size": 2}}))
    with pytest.raises(SpecError, match="size"):
        load_pool(path)
