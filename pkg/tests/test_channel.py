import numpy as np
import pytest

from erasot.channel import ERASED, ChannelParams, erasure_fraction, transmit
from erasot.rng import generator


def test_params_validated():
    with pytest.raises(ValueError):
        ChannelParams(-0.1, 0.5)
    with pytest.raises(ValueError):
        ChannelParams(0.5, 1.2)


def test_noiseless_cascade():
    x = np.array([1, 0, 1], dtype=np.uint8)
    y, z = transmit(x, ChannelParams(0.0, 0.0), generator(0))
    assert np.array_equal(y, x)
    assert np.array_equal(z, x)


def test_full_erasure_forces_eve_erased():
    x = np.array([1, 0], dtype=np.uint8)
    y, z = transmit(x, ChannelParams(1.0, 0.0), generator(0))
    assert np.all(y == ERASED)
    assert np.all(z == ERASED)


def test_eve_marginal_matches_stage_composition():
    # oracle: the two stage laws compose to eps1 + (1-eps1)*eps2 = 0.65
    params = ChannelParams(0.3, 0.5)
    assert params.eve_erasure_prob == pytest.approx(0.65)
    x = np.zeros(10**6, dtype=np.uint8)
    _, z = transmit(x, params, generator(1234))
    assert float(np.mean(z == ERASED)) == pytest.approx(0.65, abs=0.002)


def test_marginal_rates_within_four_sigma():
    n = 200_000
    params = ChannelParams(0.3, 0.5)
    x = np.ones(n, dtype=np.uint8)
    y, z = transmit(x, params, generator(99))
    p_z = params.eve_erasure_prob
    assert abs(np.mean(y == ERASED) - 0.3) <= 4 * np.sqrt(0.3 * 0.7 / n)
    assert abs(np.mean(z == ERASED) - p_z) <= 4 * np.sqrt(p_z * (1 - p_z) / n)


def test_degradedness_on_every_block():
    x = generator(5).integers(0, 2, size=50_000, dtype=np.uint8)
    for seed in range(5):
        y, z = transmit(x, ChannelParams(0.4, 0.3), generator(seed))
        assert np.all(z[y == ERASED] == ERASED)


def test_determinism_same_seed_same_output():
    x = generator(8).integers(0, 2, size=4096, dtype=np.uint8)
    y1, z1 = transmit(x, ChannelParams(0.25, 0.6), generator(777))
    y2, z2 = transmit(x, ChannelParams(0.25, 0.6), generator(777))
    assert np.array_equal(y1, y2)
    assert np.array_equal(z1, z2)


def test_erasure_fraction_examples():
    assert erasure_fraction(np.array([ERASED] * 3, dtype=np.uint8)) == 1.0
    assert erasure_fraction(np.array([0, 1, 0, 1], dtype=np.uint8)) == 0.0
    assert erasure_fraction(np.array([0, ERASED, 1, ERASED], dtype=np.uint8)) == 0.5
    with pytest.raises(ValueError):
        erasure_fraction(np.zeros(0, dtype=np.uint8))
