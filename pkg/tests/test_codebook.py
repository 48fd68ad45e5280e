import numpy as np
import pytest

from rateless import codebook as cbm
from rateless.channel import make_prior, uniform_prior
from rateless.errors import ConfigError, IndexOutOfRange

GOLDEN_W3 = "1001001110100100101100011010001101101001000000111100010100000111"


def test_golden_binary_codeword():
    cb = cbm.Codebook(12345, 8, uniform_prior(2))
    assert "".join(map(str, cbm.codeword_prefix(cb, 3, 64))) == GOLDEN_W3


def test_golden_gaussian_symbols():
    cb = cbm.Codebook(12345, 8, gaussian_power=2.0)
    assert np.allclose(cbm.codeword_block(cb, [0], 0, 3)[0], [1.46663971, 1.33415357, -0.28427738])


def test_degenerate_prior_always_zero():
    cb = cbm.Codebook(7, 4, make_prior([1.0, 0.0]))
    assert not cbm.codeword_block(cb, np.arange(4), 0, 100).any()


def test_symbol_is_pure_and_block_agrees():
    cb = cbm.Codebook(11, 16, make_prior([0.2, 0.3, 0.5]))
    block = cbm.codeword_block(cb, np.arange(16), 5, 20)
    for w in (0, 7, 15):
        for k in (5, 13, 24):
            s = cbm.codeword_symbol(cb, w, k)
            assert s == cbm.codeword_symbol(cb, w, k) == block[w, k - 5]


def test_gaussian_symbol_agrees_with_block():
    cb = cbm.Codebook(3, 4, gaussian_power=0.5)
    assert cbm.codeword_symbol(cb, 2, 9) == pytest.approx(cbm.codeword_block(cb, [2], 9, 1)[0, 0], rel=1e-12)


def test_uniform_frequency():
    cb = cbm.Codebook(1, 2, uniform_prior(2))
    assert abs(cbm.codeword_prefix(cb, 0, 100_000).mean() - 0.5) <= 0.005


def test_prior_frequencies_follow_prior():
    q = [0.1, 0.6, 0.3]
    cb = cbm.Codebook(5, 1, make_prior(q))
    counts = np.bincount(cbm.codeword_prefix(cb, 0, 200_000), minlength=3) / 200_000
    assert np.allclose(counts, q, atol=0.005)


def test_prefix_consistency_and_independence():
    cb = cbm.Codebook(2, 4, uniform_prior(2))
    assert cbm.codeword_prefix(cb, 1, 0).size == 0
    assert np.array_equal(cbm.codeword_prefix(cb, 1, 9)[:5], cbm.codeword_prefix(cb, 1, 5))
    a, b = cbm.codeword_prefix(cb, 0, 10_000), cbm.codeword_prefix(cb, 1, 10_000)
    assert abs(np.mean(a == b) - 0.5) <= 0.015


def test_gaussian_moments():
    cb = cbm.Codebook(9, 1, gaussian_power=4.0)
    x = cbm.codeword_prefix(cb, 0, 200_000)
    assert abs(x.mean()) < 0.02
    assert x.var() == pytest.approx(4.0, rel=0.02)


def test_index_errors():
    cb = cbm.Codebook(1, 4, uniform_prior(2))
    with pytest.raises(IndexOutOfRange):
        cbm.codeword_symbol(cb, 4, 0)
    with pytest.raises(IndexOutOfRange):
        cbm.codeword_symbol(cb, 0, -1)
    with pytest.raises(IndexOutOfRange):
        cbm.codeword_block(cb, [5], 0, 3)
    with pytest.raises(ConfigError):
        cbm.Codebook(1, 4)


def test_codebook_from_spec():
    cb = cbm.codebook_from_spec({"seed": 3, "M": 8, "prior": [0.5, 0.5]})
    assert cb.message_count == 8
    with pytest.raises(ConfigError):
        cbm.codebook_from_spec({"seed": 3})
