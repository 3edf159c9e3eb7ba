import math

import numpy as np
import pytest

import seprank


def test_numerical_rank():
    assert seprank.numerical_rank(np.eye(3)) == 3
    u = np.array([[1.0], [2.0], [-0.5]])
    v = np.array([[3.0, 1.0, -1.0, 2.0]])
    assert seprank.numerical_rank(u @ v) == 1
    assert seprank.numerical_rank(np.zeros((4, 2))) == 0


def test_combinatorics():
    assert seprank.multiset_coeff(2, 3) == 4
    assert seprank.multiset_coeff(3, 2) == 6
    assert seprank.multiset_coeff(0, 5) == 0
    assert seprank.composition_count(3) == 13
    assert seprank.log_multiset(2, 3) == pytest.approx(math.log(4.0), abs=1e-12)
    # Values that overflow fixed-width integers still come back exact.
    assert seprank.multiset_coeff(100, 100) == math.comb(199, 100)


def test_bounds():
    upper = seprank.upper_bound(1, 1, 1)
    assert upper["exact"] == 1280
    assert upper["log"] == pytest.approx(math.log(1280.0), rel=1e-9)

    lower = seprank.lower_bound(2, 8, 5, 1)
    assert lower["exact"] == 2
    assert lower["heads_ok"] is True

    regime = seprank.depth_regime(12, 768)
    assert regime["regime"] == "dual_contribution"
    assert regime["threshold"] == pytest.approx(math.log(768) / math.log(3))

    upper_scale, lower_scale = seprank.asymptotic_logs(12, 768, 768, 12)
    assert (upper_scale, lower_scale) == (9216.0, 9072.0)


def test_low_rank_matrix_and_network():
    mv = seprank.low_rank_vocab_matrix(6, 10, 2, seed=1)
    assert mv.shape == (6, 10)
    assert seprank.numerical_rank(mv) == 2

    net = seprank.random_network(depth=2, heads=1, width=3, attn_dim=2,
                                 vocab_size=5, seed=0)
    out = net.forward([0, 1, 4])
    assert out.shape == (3, 3)
    again = seprank.random_network(depth=2, heads=1, width=3, attn_dim=2,
                                   vocab_size=5, seed=0).forward([0, 1, 4])
    np.testing.assert_array_equal(out, again)


def test_grid_rank_sandwich():
    res = seprank.grid_rank(depth=2, width=5, rank=5, heads=1, attn_dim=3,
                            seq_len=4, templates=5, seed=0)
    assert res["empirical_rank"] >= 1
    assert math.log(res["empirical_rank"]) <= res["log_upper"]


def test_witness_search():
    a = seprank.search_hadamard_witness(2, 2, seed=0)
    assert a is not None
    assert a.shape == (3, 2)
    assert seprank.verify_hadamard_rank(a, 2)
    hand = np.array([[3, 4], [5, 0], [0, 5]], dtype=np.int64)
    assert seprank.verify_hadamard_rank(hand, 2)

    assert seprank.phi_index(5, 3) == 4


def test_diagnose():
    rep = seprank.diagnose({
        "name": "albert-like",
        "vocab_size": 30000,
        "width": 4096,
        "depth": 12,
        "heads": 64,
        "embedding_rank": 128,
    })
    assert rep["vocab_bottleneck"] is True
    assert rep["vocab_ratio"] == 128 / 4096

    with pytest.raises(ValueError):
        seprank.diagnose({"name": "bad", "vocab_size": 10, "width": 4,
                          "depth": 1, "heads": 1, "mystery": 3})
