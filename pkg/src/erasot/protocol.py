"""The (n, m)-protocol: Alice, Bob, and the assembled public transcript.

One run: Alice broadcasts n uniform bits through the cascade; Bob runs his
abort test, announces the spare sets, and sends the one-time-padded selector
plus the public extractor seeds; Alice recovers the slot split, derives both
string keys, and sends both strings encrypted; Bob unmasks the one his choice
bit selects. Correctness is exact on every non-aborted run.

Alice's phase never receives the choice bit: her behavior depends on the slot
sets only through the decoded selector, which is the code-level guarantee that
her view carries no choice-bit information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bits, rng as rng_mod
from .channel import ERASED, ChannelParams, transmit
from .errors import InfeasibleParams, ProtocolError
from .extractor import UNIVERSAL_HASH, ExtractorSpec, KeyBundle, make_extractor
from .sets import (
    AbortReason,
    ProtocolAbort,
    SetFamily,
    decode_selector,
    derive_set_family,
    min_passing_count,
    partition_by_erasure,
    set_sizes,
)

_FLOAT_GUARD = 1e-9


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class ProtocolConfig:
    """Planned parameters of one protocol family member (fixed block length)."""

    n: int
    delta: float
    channel: ChannelParams
    backend: str
    eps2_eff: float        # second-stage erasure prob discounted by the slack
    rate_penalty: float    # rate loss the slack induces: delta * (1 + 2/eps2_eff)
    rate: float
    key_len: int           # string length m
    good_size: int         # |good| = |bad|
    pad_len: int           # selector-pad extractor input length
    shared_len: int        # shared suffix feeding both string keys
    min_unerased: int      # abort thresholds (smallest passing counts)
    min_erased: int
    master_seed: int | None = None

    @property
    def selector_len(self) -> int:
        return 2 * self.good_size

    @property
    def key_input_len(self) -> int:
        return self.good_size + self.shared_len

    @property
    def realized_rate(self) -> float:
        return self.key_len / self.n


def achievable_rate(channel: ChannelParams, delta: float) -> float:
    """The planned rate formula; may be non-positive when the slack penalty dominates."""
    eps2_eff = channel.eps2 * (1.0 - delta)
    if eps2_eff <= 0.0:
        raise InfeasibleParams("effective second-stage erasure probability is zero")
    penalty = delta * (1.0 + 2.0 / eps2_eff)
    return min(eps2_eff * (1.0 - channel.eps1) / 3.0 - penalty,
               channel.eps1 - delta)


def plan(n: int, delta: float, channel: ChannelParams, *,
         rate: float | None = None, backend: str = UNIVERSAL_HASH,
         master_seed: int | None = None) -> ProtocolConfig:
    """Derive a full config from (n, delta, channel).

    With ``rate=None`` the planned rate formula is used and InfeasibleParams is
    raised when it is non-positive or yields an empty key. An explicit ``rate``
    skips the formula (the abort thresholds still come from delta), which is
    how finite-n experiments pick an operating point; see max_feasible_rate.
    """
    if not (0.0 < delta < 1.0):
        raise InfeasibleParams("delta must lie in (0, 1)")
    eps2_eff = channel.eps2 * (1.0 - delta)
    if eps2_eff <= 0.0:
        raise InfeasibleParams("effective second-stage erasure probability is zero")
    penalty = delta * (1.0 + 2.0 / eps2_eff)
    if rate is None:
        rate = achievable_rate(channel, delta)
    if rate <= 0.0:
        raise InfeasibleParams(f"planned rate {rate:.6f} is not positive")
    key_len = int(math.floor(n * rate + _FLOAT_GUARD))
    if key_len < 1:
        raise InfeasibleParams(f"block length {n} too short for rate {rate:.6f}")
    good_size, pad_len, shared_len = set_sizes(n, rate, delta, eps2_eff, key_len)
    return ProtocolConfig(
        n=n, delta=delta, channel=channel, backend=backend,
        eps2_eff=eps2_eff, rate_penalty=penalty, rate=rate, key_len=key_len,
        good_size=good_size, pad_len=pad_len, shared_len=shared_len,
        min_unerased=min_passing_count(n * (1.0 - channel.eps1 - delta)),
        min_erased=min_passing_count(n * (channel.eps1 - delta)),
        master_seed=master_seed,
    )


def max_feasible_rate(n: int, delta: float, channel: ChannelParams) -> float:
    """Largest rate m/n whose integer set demands fit inside the abort thresholds.

    At this rate a run aborts exactly when an erasure count crosses its
    threshold, so the abort probability decays by the usual Chernoff argument.
    """
    if not (0.0 < delta < 1.0):
        raise InfeasibleParams("delta must lie in (0, 1)")
    eps2_eff = channel.eps2 * (1.0 - delta)
    if eps2_eff <= 0.0:
        raise InfeasibleParams("effective second-stage erasure probability is zero")
    min_unerased = min_passing_count(n * (1.0 - channel.eps1 - delta))
    min_erased = min_passing_count(n * (channel.eps1 - delta))
    best = 0
    for key_len in range(1, n + 1):
        good_size, pad_len, shared_len = set_sizes(n, key_len / n, delta,
                                                   eps2_eff, key_len)
        if good_size + pad_len + shared_len <= min_unerased and good_size <= min_erased:
            best = key_len
        else:
            break  # demands are nondecreasing in the key length
    if best == 0:
        raise InfeasibleParams(
            f"no key length fits inside the abort thresholds at n={n}, "
            f"delta={delta}, channel={channel}")
    return best / n


# --------------------------------------------------------------------------- wire


def _encode_indices(arr: np.ndarray) -> bytes:
    return len(arr).to_bytes(4, "little") + arr.astype("<u4").tobytes()


def _encode_bits(arr: np.ndarray) -> bytes:
    payload = np.packbits(arr, bitorder="big").tobytes() if arr.size else b""
    return len(arr).to_bytes(4, "little") + payload


@dataclass(frozen=True, eq=False)
class BobPublicMsg:
    spare_unerased: np.ndarray
    spare_erased: np.ndarray
    masked_selector: np.ndarray
    seeds: tuple[int, int, int]

    def canonical_bytes(self) -> bytes:
        return (_encode_indices(self.spare_unerased)
                + _encode_indices(self.spare_erased)
                + _encode_bits(self.masked_selector)
                + b"".join(int(s).to_bytes(8, "little") for s in self.seeds))


@dataclass(frozen=True, eq=False)
class AlicePublicMsg:
    cipher0: np.ndarray
    cipher1: np.ndarray

    def canonical_bytes(self) -> bytes:
        return _encode_bits(self.cipher0) + _encode_bits(self.cipher1)


@dataclass(frozen=True, eq=False)
class Transcript:
    """Everything that crossed the public channel, in message order."""

    spare_unerased: np.ndarray
    spare_erased: np.ndarray
    masked_selector: np.ndarray
    cipher0: np.ndarray
    cipher1: np.ndarray
    seeds: tuple[int, int, int]

    def canonical_bytes(self) -> bytes:
        return (_encode_indices(self.spare_unerased)
                + _encode_indices(self.spare_erased)
                + _encode_bits(self.masked_selector)
                + _encode_bits(self.cipher0)
                + _encode_bits(self.cipher1)
                + b"".join(int(s).to_bytes(8, "little") for s in self.seeds))

    def equals(self, other: "Transcript") -> bool:
        return self.canonical_bytes() == other.canonical_bytes()


@dataclass(frozen=True, eq=False)
class AliceView:
    k0: np.ndarray
    k1: np.ndarray
    x: np.ndarray
    transcript: Transcript


@dataclass(frozen=True, eq=False)
class BobView:
    u: int
    y: np.ndarray
    transcript: Transcript


@dataclass(frozen=True, eq=False)
class EveView:
    z: np.ndarray
    transcript: Transcript


@dataclass(frozen=True, eq=False)
class PartyViews:
    alice: AliceView
    bob: BobView
    eve: EveView

    def share_one_transcript(self) -> bool:
        return (self.alice.transcript is self.bob.transcript
                and self.bob.transcript is self.eve.transcript)


@dataclass(frozen=True, eq=False)
class ProtocolOutcome:
    aborted: bool
    abort_reason: AbortReason | None
    views: PartyViews | None
    decoded_key: np.ndarray | None
    family: SetFamily | None
    keys: KeyBundle | None
    realized_rate: float


# --------------------------------------------------------------------------- phases


@dataclass(frozen=True, eq=False)
class BobState:
    u: int
    y: np.ndarray
    family: SetFamily
    seeds: tuple[int, int, int]
    cfg: "ProtocolConfig"


def _extractor_specs(cfg: ProtocolConfig,
                     seeds: tuple[int, int, int]) -> tuple[ExtractorSpec, ...]:
    pad = ExtractorSpec(cfg.backend, seeds[0], cfg.pad_len, cfg.selector_len)
    k0 = ExtractorSpec(cfg.backend, seeds[1], cfg.key_input_len, cfg.key_len)
    k1 = ExtractorSpec(cfg.backend, seeds[2], cfg.key_input_len, cfg.key_len)
    return pad, k0, k1


def bob_phase(y: np.ndarray, u: int, cfg: ProtocolConfig,
              rng: np.random.Generator) -> tuple[BobState, BobPublicMsg]:
    """Bob's abort test, set sampling, seed publication, and selector masking.

    Raises ProtocolAbort before emitting any message when the erasure counts
    fail the test. Stream consumption order: good draw, bad draw, three seeds.
    """
    if y.shape[0] != cfg.n:
        raise ProtocolError(f"received block length {y.shape[0]} != n {cfg.n}")
    erased, unerased = partition_by_erasure(y)
    family = derive_set_family(erased, unerased, u, cfg, rng)
    seeds = (rng_mod.draw_seed64(rng), rng_mod.draw_seed64(rng),
             rng_mod.draw_seed64(rng))
    pad_spec, _, _ = _extractor_specs(cfg, seeds)
    pad_key = make_extractor(pad_spec).extract(y[family.pad_block].astype(np.uint8))
    masked = bits.xor(pad_key, family.selector)
    state = BobState(u=u, y=y, family=family, seeds=seeds, cfg=cfg)
    return state, BobPublicMsg(spare_unerased=family.spare_unerased,
                               spare_erased=family.spare_erased,
                               masked_selector=masked, seeds=seeds)


def _alice_compute(x: np.ndarray, msg: BobPublicMsg,
                   cfg: ProtocolConfig) -> tuple[KeyBundle, np.ndarray, np.ndarray]:
    """Shared Alice-side derivation: keys plus the decoded slot sets."""
    if x.shape[0] != cfg.n:
        raise ProtocolError(f"input block length {x.shape[0]} != n {cfg.n}")
    if msg.masked_selector.shape[0] != cfg.selector_len:
        raise ProtocolError("masked selector has the wrong length")
    if len(msg.seeds) != 3:
        raise ProtocolError("expected three extractor seeds")
    announced = np.concatenate([msg.spare_unerased, msg.spare_erased])
    if np.unique(announced).size != announced.size:
        raise ProtocolError("announced spare sets overlap")
    merged = np.setdiff1d(np.arange(cfg.n, dtype=np.int64), announced)
    if merged.size != cfg.selector_len:
        raise ProtocolError(
            f"announced sets leave {merged.size} indices, expected {cfg.selector_len}")
    if msg.spare_unerased.shape[0] < cfg.pad_len + cfg.shared_len:
        raise ProtocolError("announced unerased spare cannot cover both blocks")
    pad_block = msg.spare_unerased[:cfg.pad_len]
    shared_block = msg.spare_unerased[cfg.pad_len:cfg.pad_len + cfg.shared_len]

    pad_spec, key0_spec, key1_spec = _extractor_specs(cfg, msg.seeds)
    pad_key = make_extractor(pad_spec).extract(x[pad_block])
    selector = bits.xor(msg.masked_selector, pad_key)
    slot0, slot1 = decode_selector(merged, selector)
    raw0 = x[np.sort(np.concatenate([slot0, shared_block]))]
    raw1 = x[np.sort(np.concatenate([slot1, shared_block]))]
    key0 = make_extractor(key0_spec).extract(raw0)
    key1 = make_extractor(key1_spec).extract(raw1)
    return KeyBundle(pad_key=pad_key, key0=key0, key1=key1, seeds=msg.seeds), slot0, slot1


def alice_phase(x: np.ndarray, k0: np.ndarray, k1: np.ndarray,
                msg: BobPublicMsg, cfg: ProtocolConfig) -> AlicePublicMsg:
    """Alice recovers the slot split from the masked selector and encrypts both strings."""
    if k0.shape[0] != cfg.key_len or k1.shape[0] != cfg.key_len:
        raise ProtocolError("input strings must have the planned key length")
    keys, _, _ = _alice_compute(x, msg, cfg)
    return AlicePublicMsg(cipher0=bits.xor(k0, keys.key0),
                          cipher1=bits.xor(k1, keys.key1))


def bob_finish(state: BobState, msg: AlicePublicMsg) -> np.ndarray:
    """Bob unmasks the chosen cipher with the key only he can derive."""
    fam = state.family
    chosen_slot = fam.slot0 if state.u == 0 else fam.slot1
    raw = state.y[np.sort(np.concatenate([chosen_slot, fam.shared_block]))]
    if np.any(raw == ERASED):
        raise ProtocolError("chosen slot contains erased symbols")
    _, key0_spec, key1_spec = _extractor_specs(state.cfg, state.seeds)
    spec = key0_spec if state.u == 0 else key1_spec
    key = make_extractor(spec).extract(raw.astype(np.uint8))
    cipher = msg.cipher0 if state.u == 0 else msg.cipher1
    if cipher.shape[0] != key.shape[0]:
        raise ProtocolError("cipher length does not match the derived key")
    return bits.xor(cipher, key)


# --------------------------------------------------------------------------- runner


def run_protocol(cfg: ProtocolConfig, k0: np.ndarray, k1: np.ndarray, u: int,
                 seed: rng_mod.Seedish) -> ProtocolOutcome:
    """One full run; orchestrates transmit, both phases, and view assembly.

    ``seed`` feeds a splittable stream: child 0 samples Alice's transmission,
    child 1 the channel, child 2 Bob's choices, so replaying a seed reproduces
    the run bit for bit.
    """
    if u not in (0, 1):
        raise ProtocolError("choice bit must be 0 or 1")
    if k0.shape[0] != cfg.key_len or k1.shape[0] != cfg.key_len:
        raise ProtocolError("input strings must have the planned key length")
    alice_ss, channel_ss, bob_ss = rng_mod.split(seed, 3)
    x = bits.random_bits(rng_mod.generator(alice_ss), cfg.n)
    y, z = transmit(x, cfg.channel, rng_mod.generator(channel_ss))
    try:
        state, bob_msg = bob_phase(y, u, cfg, rng_mod.generator(bob_ss))
    except ProtocolAbort as abort:
        return ProtocolOutcome(aborted=True, abort_reason=abort.reason,
                               views=None, decoded_key=None, family=None,
                               keys=None, realized_rate=cfg.realized_rate)
    keys, _, _ = _alice_compute(x, bob_msg, cfg)
    alice_msg = AlicePublicMsg(cipher0=bits.xor(k0, keys.key0),
                               cipher1=bits.xor(k1, keys.key1))
    decoded = bob_finish(state, alice_msg)
    transcript = Transcript(
        spare_unerased=bob_msg.spare_unerased, spare_erased=bob_msg.spare_erased,
        masked_selector=bob_msg.masked_selector, cipher0=alice_msg.cipher0,
        cipher1=alice_msg.cipher1, seeds=bob_msg.seeds)
    views = PartyViews(alice=AliceView(k0=k0, k1=k1, x=x, transcript=transcript),
                       bob=BobView(u=u, y=y, transcript=transcript),
                       eve=EveView(z=z, transcript=transcript))
    return ProtocolOutcome(aborted=False, abort_reason=None, views=views,
                           decoded_key=decoded, family=state.family, keys=keys,
                           realized_rate=cfg.realized_rate)
