import json
import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lacuna import (
    BadGeneratorParam,
    IndexSet,
    LacunaryWarning,
    NotStartingAtZero,
    NotStrictlyIncreasing,
    OutOfHorizon,
    block_of,
    generate_lacunary,
    make_lacunary,
    theta_density,
    theta_from_json,
)
from lacuna.lacunary import block_counts, isqrt_array

def cutoff_lists(top):
    return st.lists(st.integers(1, top), min_size=1, max_size=40, unique=True).map(lambda ks: [0] + sorted(ks))


def test_block_arithmetic():
    th = make_lacunary([0, 2, 4, 8, 16, 32])
    assert th.h == (2, 2, 4, 8, 16)
    assert th.q == (None, 2.0, 2.0, 2.0, 2.0)
    assert list(th.block(3)) == [5, 6, 7, 8]


def test_constant_block_length_warns():
    with pytest.warns(LacunaryWarning, match="h_r constant = 1"):
        make_lacunary([0, 1, 2, 3])


def test_growing_blocks_do_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make_lacunary([0, 1, 3, 7])


@pytest.mark.parametrize(
    "cutoffs, exc", [([0, 2, 1], NotStrictlyIncreasing), ([0, 2, 2], NotStrictlyIncreasing), ([1, 2, 4], NotStartingAtZero)]
)
def test_invalid_cutoffs(cutoffs, exc):
    with pytest.raises(exc):
        make_lacunary(cutoffs)


def test_generators():
    assert generate_lacunary("geometric", 5, ratio=2).cutoffs == (0, 2, 4, 8, 16, 32)
    assert generate_lacunary("power", 4, alpha=2).cutoffs == (0, 1, 4, 9, 16)
    with pytest.raises(BadGeneratorParam):
        generate_lacunary("geometric", 5, ratio=1)


def test_geometric_generator_drops_repeated_ceilings():
    th = generate_lacunary("geometric", 6, ratio=1.5)
    # ceil(1.5)=2, ceil(2.25)=3, ceil(3.375)=4, ...
    assert th.cutoffs == (0, 2, 3, 4, 6, 8, 12)


def test_horizon_fitting():
    th = generate_lacunary("geometric", ratio=2, horizon=1000)
    assert th.horizon == 512
    assert generate_lacunary("power", alpha=2, horizon=10**6).blocks == 1000


@pytest.mark.parametrize("k, r", [(1, 1), (2, 1), (3, 2), (4, 2), (8, 3)])
def test_block_of(k, r):
    assert block_of(make_lacunary([0, 2, 4, 8]), k) == r


@pytest.mark.parametrize("k", [0, 9])
def test_block_of_out_of_horizon(k):
    with pytest.raises(OutOfHorizon):
        block_of(make_lacunary([0, 2, 4, 8]), k)


@given(cutoff_lists(10**6), st.data())
def test_blocks_partition_the_horizon(cutoffs, data):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LacunaryWarning)
        th = make_lacunary(cutoffs)
    assert sum(th.h) == th.horizon
    k = data.draw(st.integers(1, th.horizon))
    r = block_of(th, k)
    assert k in th.block(r)


def test_theta_specs():
    assert theta_from_json("geom:2:5").cutoffs == (0, 2, 4, 8, 16, 32)
    assert theta_from_json({"generator": "power", "alpha": 2, "blocks": 3}).cutoffs == (0, 1, 4, 9)
    th = generate_lacunary("geometric", 7, ratio=1.5)
    assert theta_from_json(json.loads(json.dumps(th.to_json()))).cutoffs == th.cutoffs


@given(st.integers(0, 2**62))
def test_isqrt_array_matches_math(n):
    assert int(isqrt_array([n])[0]) == math.isqrt(n)


def test_density_even():
    tr = theta_density(generate_lacunary("geometric", 10, ratio=2), IndexSet.parse("even"))
    assert tr.counts.tolist() == oracles.count_in_blocks(tr.cutoffs, lambda k: k % 2 == 0)
    assert tr.estimate == 0.5 and tr.stabilized


def test_density_empty_set():
    tr = theta_density(generate_lacunary("geometric", 10, ratio=2), IndexSet.explicit([]))
    assert not tr.counts.any() and tr.estimate == 0.0


def test_density_squares_geometric_twenty_blocks():
    th = generate_lacunary("geometric", 20, ratio=2)
    tr = theta_density(th, "squares")
    assert tr.counts.tolist() == oracles.count_in_blocks(th.cutoffs, oracles.is_square)
    # fractions shrink like 2^{-r/2}; frozen tail under the default density policy
    assert tr.fractions[-1] == 300 / 2**19
    assert tr.counts[-5:].tolist() == [75, 106, 150, 212, 300]
    assert tr.estimate == pytest.approx(843 / 655360, rel=1e-12)
    assert not tr.stabilized
    assert tr.to_json()["estimate"] == "did-not-stabilize"


@given(st.lists(st.integers(1, 5000), max_size=200), cutoff_lists(5000))
def test_block_counts_explicit_sets(members, cutoffs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LacunaryWarning)
        th = make_lacunary(cutoffs)
    K = IndexSet.explicit(members)
    assert block_counts(th, K).tolist() == oracles.count_in_blocks(th.cutoffs, set(members).__contains__)


def test_index_set_descriptors_round_trip():
    for d in ("even", "odd", "squares", "multiples:7", "explicit:[1, 5, 9]"):
        assert IndexSet.parse(d).descriptor == d
