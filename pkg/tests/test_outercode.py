import numpy as np
import pytest

from tcmnoma.outercode import MEMORY, conv_encode, viterbi_decode


def test_lengths_and_rate():
    coded = conv_encode(np.zeros(494, dtype=np.int64))
    assert coded.size == 2 * (494 + MEMORY) == 1000


def test_all_zero_input_codes_to_zero():
    assert not conv_encode(np.zeros(20, dtype=np.int64)).any()


def test_noiseless_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(10, 200))
        bits = rng.integers(0, 2, size=n)
        assert np.array_equal(viterbi_decode(conv_encode(bits)), bits)


def test_corrects_scattered_flips():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=300)
    coded = conv_encode(bits)
    # two flips far apart stay within half the free distance per span
    coded[40] ^= 1
    coded[400] ^= 1
    assert np.array_equal(viterbi_decode(coded), bits)


def test_corrects_adjacent_double_flip():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, size=100)
    coded = conv_encode(bits)
    coded[50] ^= 1
    coded[51] ^= 1
    assert np.array_equal(viterbi_decode(coded), bits)


def test_rejects_odd_or_tiny_streams():
    with pytest.raises(ValueError):
        viterbi_decode(np.zeros(7, dtype=np.int64))
    with pytest.raises(ValueError):
        viterbi_decode(np.zeros(2 * MEMORY, dtype=np.int64))


def test_termination_returns_to_zero_state():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, size=64)
    coded = conv_encode(bits)
    # re-encoding the decoded bits reproduces the stream exactly
    assert np.array_equal(conv_encode(viterbi_decode(coded)), coded)
