import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateless import channel as ch
from rateless.errors import ConfigError, NegativeEntry, NonStochasticRow, SymbolOutOfRange


def h2(p):
    return 0.0 if p in (0, 1) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_make_dmc_examples():
    assert np.array_equal(ch.make_dmc(np.eye(2)).forward, ch.noiseless(2).forward)
    assert np.allclose(ch.make_dmc([[0.75, 0.25], [0.25, 0.75]]).forward, ch.bsc(0.25).forward)
    with pytest.raises(NonStochasticRow):
        ch.make_dmc([[0.5, 0.6], [0.5, 0.4]])
    with pytest.raises(NegativeEntry):
        ch.make_dmc([[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(ConfigError):
        ch.make_dmc([])


def test_mutual_information_examples():
    u = ch.uniform_prior(2)
    assert ch.mutual_information(ch.noiseless(2), u) == pytest.approx(1.0)
    assert ch.mutual_information(ch.bec(0.25), u) == pytest.approx(0.75)
    assert ch.mutual_information(ch.bsc(0.11), u) == pytest.approx(0.50008, abs=1e-4)


@pytest.mark.parametrize("p", [0.0, 0.05, 0.11, 0.25, 0.4, 0.5])
def test_capacity_bsc_closed_form(p):
    res = ch.capacity(ch.bsc(p))
    assert res.capacity_bits == pytest.approx(1 - h2(p), abs=1e-8)
    assert np.allclose(res.optimal_prior.probs, [0.5, 0.5], atol=1e-6)


def test_capacity_bec_and_z():
    assert ch.capacity(ch.bec(0.5)).capacity_bits == pytest.approx(0.5, abs=1e-8)
    # Z(1/2) has the closed form log2(5/4)
    assert ch.capacity(ch.z_channel(0.5)).capacity_bits == pytest.approx(math.log2(1.25), abs=1e-6)
    assert ch.capacity(ch.noiseless(4)).capacity_bits == pytest.approx(2.0)


def _grid_capacity(dmc, n=20001):
    a = np.linspace(0, 1, n)
    best = 0.0
    for q0 in a[:: max(1, n // 4000)]:
        best = max(best, ch.mutual_information(dmc, ch.make_prior([q0, 1 - q0])))
    return best


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6))
def test_capacity_matches_grid_search_on_binary_input(w):
    rows = np.array(w).reshape(2, 3)
    dmc = ch.make_dmc(rows / rows.sum(axis=1, keepdims=True))
    res = ch.capacity(dmc)
    grid = _grid_capacity(dmc)
    assert res.capacity_bits >= grid - 1e-6
    assert res.capacity_bits <= grid + 1e-4
    assert ch.mutual_information(dmc, res.optimal_prior) == pytest.approx(res.capacity_bits, abs=1e-8)


def test_backward_channel_examples():
    u = ch.uniform_prior(2)
    assert np.allclose(ch.backward_channel(ch.noiseless(2), u).posterior, np.eye(2))
    assert np.allclose(ch.backward_channel(ch.bsc(0.25), u).posterior, [[0.75, 0.25], [0.25, 0.75]])
    bw = ch.backward_channel(ch.bec(0.3), u)
    assert np.allclose(bw.posterior[:, 2], [0.5, 0.5])
    assert np.allclose(bw.posterior.sum(axis=0), 1.0)


def test_backward_channel_zero_output_column():
    bw = ch.backward_channel(ch.z_channel(0.5), ch.make_prior([1.0, 0.0]))
    assert bw.zero_columns.tolist() == [False, True]
    assert np.allclose(bw.posterior[:, 1], [0.5, 0.5])


def test_score_table_is_log_ratio():
    t = ch.score_table(ch.bsc(0.25), ch.uniform_prior(2))
    assert t[0, 0] == pytest.approx(math.log2(1.5))
    assert t[0, 1] == pytest.approx(-1.0)
    assert ch.score_table(ch.noiseless(2), ch.uniform_prior(2))[0, 1] == -math.inf


def test_sample_output_examples(rng):
    assert all(ch.sample_output(ch.noiseless(2), 1, rng) == 1 for _ in range(50))
    assert all(ch.sample_output(ch.bsc(0.0), 0, rng) == 0 for _ in range(50))
    flips = sum(ch.sample_output(ch.bsc(0.25), 0, rng) for _ in range(1_000_000))
    assert abs(flips / 1e6 - 0.25) <= 0.002
    with pytest.raises(SymbolOutOfRange):
        ch.sample_output(ch.bsc(0.25), 2, rng)


def test_information_measures():
    assert ch.entropy_bits([0.5, 0.5]) == pytest.approx(1.0)
    assert ch.entropy_bits([1.0, 0.0]) == 0.0
    assert ch.kl_bits([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert ch.kl_bits([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert ch.kl_bits([0.25, 0.75], [0.75, 0.25]) == pytest.approx(0.5 * math.log2(3))


def test_awgn_scores(rng):
    unit = ch.AwgnChannel(1.0, 1.0)
    assert ch.awgn_log_score(unit, 0.0, 0.0) == pytest.approx(0.5)
    assert unit.capacity_bits == pytest.approx(0.5)
    noisy = ch.AwgnChannel(1.0, 1e9)
    for x, y in [(0.3, -1.0), (1.5, 2.0), (-1.0, 0.5)]:
        assert abs(ch.awgn_log_score(noisy, x, y)) < 1e-3
    x = rng.normal(size=1_000_000)
    y = x + rng.normal(size=x.size)
    assert np.mean(ch.awgn_log_score(unit, x, y)) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ConfigError):
        ch.AwgnChannel(1.0, 0.0)


def test_channel_from_spec():
    assert ch.channel_from_spec({"type": "bsc", "p": 0.1}).forward[0, 1] == pytest.approx(0.1)
    assert ch.channel_from_spec({"type": "noiseless"}).input_size == 2
    assert isinstance(ch.channel_from_spec({"type": "awgn", "signal_power": 1, "noise_variance": 2}), ch.AwgnChannel)
    with pytest.raises(ConfigError):
        ch.channel_from_spec({"type": "bsc"})
    with pytest.raises(ConfigError):
        ch.channel_from_spec({"type": "warp"})
