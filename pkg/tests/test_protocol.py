import inspect
from fractions import Fraction

import numpy as np
import pytest

from erasot.bits import random_bits, xor
from erasot.channel import ERASED, ChannelParams, transmit
from erasot.errors import InfeasibleParams, ProtocolError
from erasot.oracle import capacity_bounds
from erasot.protocol import (
    achievable_rate,
    alice_phase,
    bob_finish,
    bob_phase,
    max_feasible_rate,
    plan,
    run_protocol,
)
from erasot.rng import generator, split, trial_seed
from erasot.sets import ProtocolAbort, partition_by_erasure


def _rate_exact(eps1: Fraction, eps2: Fraction, delta: Fraction) -> Fraction:
    eff = eps2 * (1 - delta)
    penalty = delta * (1 + 2 / eff)
    return min(eff * (1 - eps1) / 3 - penalty, eps1 - delta)


def test_plan_rate_matches_exact_arithmetic():
    # independent re-derivation with rational arithmetic
    r = achievable_rate(ChannelParams(0.5, 0.8), 0.01)
    exact = _rate_exact(Fraction(1, 2), Fraction(4, 5), Fraction(1, 100))
    assert exact == Fraction(9578, 99000)
    assert r == pytest.approx(float(exact), abs=1e-12)

    cfg = plan(1000, 0.01, ChannelParams(0.5, 0.8))
    assert cfg.rate == pytest.approx(float(exact), abs=1e-12)
    assert cfg.eps2_eff == pytest.approx(0.792)
    assert cfg.rate_penalty == pytest.approx(float(Fraction(349, 9900)), abs=1e-12)
    assert cfg.key_len == int(1000 * float(exact))


def test_plan_infeasible_when_rate_nonpositive():
    with pytest.raises(InfeasibleParams):
        plan(1000, 0.02, ChannelParams(0.01, 0.8))   # eps1 - delta < 0
    with pytest.raises(InfeasibleParams):
        plan(1000, 0.05, ChannelParams(0.5, 0.8))    # slack penalty dominates
    with pytest.raises(InfeasibleParams):
        plan(1000, 0.01, ChannelParams(0.5, 0.0))    # no second-stage erasures
    with pytest.raises(InfeasibleParams):
        plan(4, 0.01, ChannelParams(0.5, 0.8))       # m < 1


def test_rate_approaches_limit_as_delta_vanishes():
    channel = ChannelParams(0.5, 0.8)
    limit = min(channel.eps2 * (1 - channel.eps1) / 3, channel.eps1)
    assert achievable_rate(channel, 1e-9) == pytest.approx(limit, abs=1e-7)


def test_rate_always_below_lower_bound():
    for eps1 in (0.1, 0.3, 0.5, 0.7, 0.9):
        for eps2 in (0.2, 0.5, 0.8, 1.0):
            channel = ChannelParams(eps1, eps2)
            lower = capacity_bounds(channel).lower
            for delta in (0.1, 0.01, 0.001):
                r = achievable_rate(channel, delta)
                penalty = delta * (1 + 2 / (eps2 * (1 - delta)))
                assert r < lower
                assert lower - r < penalty + 2 / 50


def test_max_feasible_rate_fits_thresholds():
    channel = ChannelParams(0.5, 0.8)
    for n in (500, 1000, 2000):
        rate = max_feasible_rate(n, 0.05, channel)
        cfg = plan(n, 0.05, channel, rate=rate)
        assert cfg.good_size + cfg.pad_len + cfg.shared_len <= cfg.min_unerased
        assert cfg.good_size <= cfg.min_erased
        # one more key bit must not fit
        bigger = plan(n, 0.05, channel, rate=(cfg.key_len + 1) / n)
        assert (bigger.good_size + bigger.pad_len + bigger.shared_len > bigger.min_unerased
                or bigger.good_size > bigger.min_erased)
    with pytest.raises(InfeasibleParams):
        max_feasible_rate(500, 0.05, ChannelParams(0.7, 0.5))


def _small_cfg():
    channel = ChannelParams(0.5, 0.8)
    return plan(64, 0.05, channel, rate=max_feasible_rate(64, 0.05, channel))


def _nonaborting_run_parts(cfg, seed):
    alice_ss, ch_ss, bob_ss = split(trial_seed(seed, 0), 3)
    x = random_bits(generator(alice_ss), cfg.n)
    y, z = transmit(x, cfg.channel, generator(ch_ss))
    state, msg = bob_phase(y, 0, cfg, generator(bob_ss))
    return x, y, z, state, msg


def test_bob_phase_masks_selector_with_pad_key():
    cfg = _small_cfg()
    for seed in range(10):
        try:
            x, y, z, state, msg = _nonaborting_run_parts(cfg, seed)
        except ProtocolAbort:
            continue
        assert msg.masked_selector.shape[0] == cfg.selector_len
        from erasot.protocol import _alice_compute

        keys, slot0, slot1 = _alice_compute(x, msg, cfg)
        assert np.array_equal(xor(keys.pad_key, state.family.selector),
                              msg.masked_selector)
        assert np.array_equal(slot0, state.family.slot0)
        assert np.array_equal(slot1, state.family.slot1)
        return
    pytest.fail("all trial seeds aborted")


def test_bob_phase_abort_emits_no_message():
    cfg = plan(10, 0.1, ChannelParams(0.5, 0.9), rate=0.1)
    y = np.full(10, ERASED, dtype=np.uint8)
    y[:3] = 0
    with pytest.raises(ProtocolAbort):
        bob_phase(y, 0, cfg, generator(0))


def test_alice_never_receives_choice_bit():
    params = inspect.signature(alice_phase).parameters
    assert "u" not in params and "choice" not in params


def test_alice_rejects_malformed_messages():
    cfg = _small_cfg()
    x, y, z, state, msg = _nonaborting_run_parts(cfg, 1)
    k0 = random_bits(generator(1), cfg.key_len)
    k1 = random_bits(generator(2), cfg.key_len)
    import dataclasses

    bad = dataclasses.replace(msg, masked_selector=msg.masked_selector[:-1])
    with pytest.raises(ProtocolError):
        alice_phase(x, k0, k1, bad, cfg)
    with pytest.raises(ProtocolError):
        alice_phase(x[:-1], k0, k1, msg, cfg)
    with pytest.raises(ProtocolError):
        alice_phase(x, k0[:-1], k1, msg, cfg)


def test_cipher_xor_structure_and_corruption():
    cfg = _small_cfg()
    x, y, z, state, msg = _nonaborting_run_parts(cfg, 1)
    k0 = random_bits(generator(1), cfg.key_len)
    k1 = random_bits(generator(2), cfg.key_len)
    amsg = alice_phase(x, k0, k1, msg, cfg)
    from erasot.protocol import _alice_compute

    keys, _, _ = _alice_compute(x, msg, cfg)
    assert np.array_equal(xor(amsg.cipher0, keys.key0), k0)
    assert np.array_equal(xor(amsg.cipher1, keys.key1), k1)

    decoded = bob_finish(state, amsg)
    assert np.array_equal(decoded, k0)   # state built with choice 0

    import dataclasses

    flipped = amsg.cipher0.copy()
    flipped[1] ^= 1
    corrupted = dataclasses.replace(amsg, cipher0=flipped)
    wrong = bob_finish(state, corrupted)
    diff = np.flatnonzero(wrong != k0)
    assert np.array_equal(diff, [1])


def test_alice_and_bob_derive_identical_chosen_key():
    cfg = _small_cfg()
    decoded_runs = 0
    for t in range(1000):
        gen = generator(trial_seed(0xA11CE, t))
        k0 = random_bits(gen, cfg.key_len)
        k1 = random_bits(gen, cfg.key_len)
        u = int(gen.integers(0, 2))
        out = run_protocol(cfg, k0, k1, u, trial_seed(0xB0B, t))
        if out.aborted:
            continue
        decoded_runs += 1
        assert np.array_equal(out.decoded_key, k0 if u == 0 else k1)
        assert out.realized_rate == cfg.key_len / cfg.n
    assert decoded_runs > 400


def test_runs_replay_byte_identically():
    cfg = _small_cfg()
    k0 = random_bits(generator(1), cfg.key_len)
    k1 = random_bits(generator(2), cfg.key_len)
    a = run_protocol(cfg, k0, k1, 1, trial_seed(5, 5))
    b = run_protocol(cfg, k0, k1, 1, trial_seed(5, 5))
    assert a.aborted == b.aborted
    if not a.aborted:
        assert a.views.alice.transcript.equals(b.views.alice.transcript)
        assert np.array_equal(a.decoded_key, b.decoded_key)


def test_views_embed_single_transcript_and_eve_sees_no_bad_symbols():
    cfg = _small_cfg()
    for t in range(40):
        gen = generator(trial_seed(0xE7E, t))
        k0 = random_bits(gen, cfg.key_len)
        k1 = random_bits(gen, cfg.key_len)
        out = run_protocol(cfg, k0, k1, 0, trial_seed(0xF00, t))
        if out.aborted:
            continue
        assert out.views.share_one_transcript()
        z = out.views.eve.z
        # degradedness: every index erased for Bob is erased for Eve,
        # so Eve has no symbol of the bad (decoy) set
        assert np.all(z[out.family.erased] == ERASED)
        assert np.all(z[out.family.bad] == ERASED)
        erased, unerased = partition_by_erasure(out.views.bob.y)
        assert np.array_equal(erased, out.family.erased)
        assert np.array_equal(unerased, out.family.unerased)
