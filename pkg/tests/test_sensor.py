import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from secgame.errors import ContractError, SpecError
from secgame.sensor import (StateSignature, derive_error_rows, load_signatures, min_rms_distance,
                            perception_distribution)


def sig(state, *elements, scales=None):
    return StateSignature(state, np.array(elements, dtype=float), scales)


BANDWIDTH = [sig(0, (1.0, 0.15)), sig(1, (2.0, 0.15))]


def test_bandwidth_example():
    p = perception_distribution(BANDWIDTH, (1.7, 0.15))
    assert np.allclose(p, (0.3, 0.7), atol=1e-9)


def test_rms_distance():
    d, idx = min_rms_distance(BANDWIDTH[0], (1.7, 0.15))
    assert d == pytest.approx(math.sqrt(0.49 / 2))
    assert idx == 0


def test_closest_element_and_first_tie():
    s = sig(0, (0.0, 0.0), (3.0, 0.0), (1.0, 0.0), (1.0, 0.0))
    d, idx = min_rms_distance(s, (1.2, 0.0))
    assert idx == 2 and d == pytest.approx(0.2 / math.sqrt(2))


def test_zero_distance_takes_all_mass():
    assert perception_distribution(BANDWIDTH, (2.0, 0.15)).tolist() == [0.0, 1.0]
    same = [sig(0, (1.0,)), sig(1, (1.0,)), sig(2, (5.0,))]
    assert perception_distribution(same, (1.0,)).tolist() == [0.5, 0.5, 0.0]


def test_equidistant_three_states():
    sigs = [sig(0, (1.0, 0.0)), sig(1, (-1.0, 0.0)), sig(2, (0.0, 1.0))]
    assert np.allclose(perception_distribution(sigs, (0.0, 0.0)), [1 / 3] * 3)


def test_single_state_and_dimension_mismatch():
    assert perception_distribution([sig(0, (1.0,))], (4.0,)).tolist() == [1.0]
    with pytest.raises(ContractError):
        perception_distribution(BANDWIDTH, (1.0,))


def test_scales_rebalance_units():
    scaled = [sig(0, (1.0, 150.0), scales=(1.0, 1000.0)), sig(1, (2.0, 150.0), scales=(1.0, 1000.0))]
    assert np.allclose(perception_distribution(scaled, (1.7, 150.0)), (0.3, 0.7))


class TestDeriveErrorRows:
    def test_identity_when_on_signature(self):
        rows = derive_error_rows(BANDWIDTH, {0: [(1.0, 0.15)], 1: [(2.0, 0.15)]})
        assert rows.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_mean_of_readings(self):
        # (1.7 -> 0.3/0.7) and (1.5 -> 0.5/0.5) average to (0.4, 0.6)
        rows = derive_error_rows(BANDWIDTH, {0: [(1.0, 0.15)], 1: [(1.7, 0.15), (1.5, 0.15)]})
        assert np.allclose(rows[1], (0.4, 0.6))

    def test_errors(self):
        with pytest.raises(ContractError):
            derive_error_rows(BANDWIDTH, {0: [(1.0, 0.15)]})
        with pytest.raises(ContractError):
            derive_error_rows(BANDWIDTH, {0: [(2.0, 0.15)], 1: [(2.0, 0.15)]})


def test_load_signatures(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"signatures": {"states": [
        {"state": "Low", "elements": [[1.0, 0.15]]},
        {"state": "High", "elements": [[2.0, 0.15]]}]}, "reading": [1.7, 0.15]}))
    labels, sigs, reading = load_signatures(path)
    assert labels == ["Low", "High"]
    assert np.allclose(perception_distribution(sigs, reading), (0.3, 0.7))
    path.write_text(json.dumps({"signatures": {"states": [], "extra": 1}}))
    with pytest.raises(SpecError, match="extra"):
        load_signatures(path)


# exact zeros or magnitudes >= 1e-6, so scaled copies stay clear of subnormals
coords = st.floats(-100, 100, allow_nan=False).filter(lambda x: x == 0 or abs(x) >= 1e-6)


@st.composite
def fuzz_case(draw):
    g = draw(st.integers(1, 4))
    n = draw(st.integers(2, 5))
    sigs = []
    for i in range(n):
        f = draw(st.integers(1, 3))
        el = draw(arrays(float, (f, g), elements=coords))
        sigs.append(StateSignature(i, el))
    cv = draw(arrays(float, (g,), elements=coords))
    return sigs, cv


@settings(max_examples=300, deadline=None)
@given(fuzz_case())
def test_distribution_is_valid(case):
    sigs, cv = case
    p = perception_distribution(sigs, cv)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(fuzz_case())
def test_monotone_in_distance(case):
    sigs, cv = case
    d = np.array([min_rms_distance(s, cv)[0] for s in sigs])
    p = perception_distribution(sigs, cv)
    exact_hit = bool(np.any(d == 0))
    for i in range(len(d)):
        for h in range(len(d)):
            if d[i] < d[h]:
                assert p[i] >= p[h]
                # an exact hit zeroes every other state; gaps below the resolution
                # of the distance total cannot show up in the probabilities
                if not exact_hit and d[h] - d[i] > 1e-12 * d.sum():
                    assert p[i] > p[h]


@settings(max_examples=300, deadline=None)
@given(fuzz_case(), st.integers(-10, 10))
def test_scale_invariant_exact_factors(case, k):
    sigs, cv = case
    c = 2.0**k
    scaled = [StateSignature(s.state, s.elements * c) for s in sigs]
    assert np.allclose(perception_distribution(scaled, cv * c), perception_distribution(sigs, cv),
                       atol=1e-9)


@settings(max_examples=300, deadline=None)
@given(fuzz_case(), st.floats(0.01, 100))
def test_scale_invariant(case, c):
    sigs, cv = case
    d = np.array([min_rms_distance(s, cv)[0] for s in sigs])
    # the exact-hit rule is discontinuous at 0; rounding c * x may land on either side
    assume(not np.any((d > 0) & (d < 1e-9 * d.sum())))
    scaled = [StateSignature(s.state, s.elements * c) for s in sigs]
    assert np.allclose(perception_distribution(scaled, cv * c), perception_distribution(sigs, cv),
                       atol=1e-9)
