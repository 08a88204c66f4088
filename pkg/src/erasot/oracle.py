"""Quantitative verification: bounds, exact leakage, entropy deficits, abort rates.

The exact oracles enumerate every source of randomness of a run - Alice's
bits, Bob's erasure pattern, Eve's conditional erasures, the choice bit, both
input strings, and Bob's subset draws - with exact probability weights, build
the full joint distribution of (secret; view), and compute mutual information
per published extractor seed. They are deliberately independent of the
protocol engine: views are reassembled here from first principles so the two
paths can disagree.

Scale limits: exact enumeration requires block length <= 8, key length <= 2,
and the random-table backend (the fully random-map model).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams
from .errors import OracleScaleError, ParamError
from .extractor import RANDOM_TABLE, ExtractorSpec, make_extractor
from .protocol import ProtocolConfig, plan
from .rng import Seedish, as_seed_sequence, generator
from .sets import min_passing_count

_NONNEG_TOL = 1e-9


# ------------------------------------------------------------------ capacity bounds


@dataclass(frozen=True)
class BoundsReport:
    """Lower/upper bounds on the oblivious-transfer capacity of a channel."""

    lower: float
    upper: float
    tight: bool   # the bounds coincide and the capacity equals eps1


def capacity_bounds(channel: ChannelParams) -> BoundsReport:
    """Evaluate both capacity bounds exactly.

    lower = min{(1/3) eps2 (1-eps1), eps1}; upper = min{eps2 (1-eps1), eps1}.
    The flag marks the region eps1 <= (1/3) eps2 (1-eps1) where they coincide.
    """
    through = channel.eps2 * (1.0 - channel.eps1)
    lower = min(through / 3.0, channel.eps1)
    upper = min(through, channel.eps1)
    return BoundsReport(lower=lower, upper=upper, tight=channel.eps1 <= through / 3.0)


# ------------------------------------------------------------------ shared plumbing


def derive_table_seeds(seed: int) -> tuple[int, int, int]:
    """Expand one published seed into the three extractor seeds of a run."""
    children = as_seed_sequence(int(seed)).spawn(3)
    return tuple(int(c.generate_state(1, np.uint64)[0]) for c in children)


def _tables_for_seed(cfg: ProtocolConfig, seed: int, *, include_pad: bool = True):
    s_pad, s_k0, s_k1 = derive_table_seeds(seed)
    pad = None
    if include_pad:
        pad = make_extractor(ExtractorSpec(RANDOM_TABLE, s_pad, cfg.pad_len,
                                           cfg.selector_len)).table.astype(np.int64)
    k0 = make_extractor(ExtractorSpec(RANDOM_TABLE, s_k0, cfg.key_input_len,
                                      cfg.key_len)).table
    k1 = make_extractor(ExtractorSpec(RANDOM_TABLE, s_k1, cfg.key_input_len,
                                      cfg.key_len)).table
    return pad, k0.astype(np.int64), k1.astype(np.int64)


def _require_enumerable(cfg: ProtocolConfig) -> None:
    if cfg.backend != RANDOM_TABLE:
        raise OracleScaleError("exact oracles require the random-table backend")
    if cfg.n > 8:
        raise OracleScaleError(f"exact oracles are limited to n <= 8 (got {cfg.n})")
    if cfg.key_len > 2:
        raise OracleScaleError(f"exact oracles are limited to key_len <= 2 (got {cfg.key_len})")


def _projection(positions: np.ndarray, rank_of: dict[int, int], n_rel: int) -> np.ndarray:
    """For every relevant-bit assignment, the packed value of ``positions``' bits."""
    xs = np.arange(1 << n_rel, dtype=np.int64)
    out = np.zeros(1 << n_rel, dtype=np.int64)
    for k, p in enumerate(positions):
        out |= ((xs >> rank_of[int(p)]) & 1) << k
    return out


def _nonabort_patterns(cfg: ProtocolConfig):
    """All erasure patterns Bob's test accepts, with their probability weights."""
    eps1 = cfg.channel.eps1
    patterns = []
    abort_mass = 0.0
    for mask in range(1 << cfg.n):
        erased = [i for i in range(cfg.n) if (mask >> i) & 1]
        n_erased = len(erased)
        n_unerased = cfg.n - n_erased
        weight = (eps1 ** n_erased) * ((1.0 - eps1) ** n_unerased)
        ok = (n_unerased >= max(cfg.min_unerased, cfg.good_size)
              and n_erased >= max(cfg.min_erased, cfg.good_size)
              and n_unerased - cfg.good_size >= cfg.pad_len + cfg.shared_len)
        if ok:
            unerased = [i for i in range(cfg.n) if not (mask >> i) & 1]
            patterns.append((erased, unerased, weight))
        else:
            abort_mass += weight
    if not patterns:
        raise OracleScaleError("every erasure pattern aborts under this config")
    return patterns, abort_mass


# ------------------------------------------------------------------ exact leakage


@dataclass(frozen=True)
class LeakageReport:
    """Exact per-seed-averaged statistics of the four achievability conditions.

    All mutual informations are in bits, conditioned on not aborting, and
    averaged over the published seed set; per-seed values are retained so
    outliers stay visible. Thresholds applied to these numbers are artifact
    choices: the construction only guarantees convergence to zero with the
    block length.
    """

    mi_alice_choice: float        # I(choice bit ; Alice's final view)
    mi_bob_other_key: float       # I(unchosen string ; Bob's final view)
    mi_eve_secrets: float         # I(both strings + choice ; Eve's final view)
    decode_error_prob: float      # P[decoded != chosen string | no abort]
    method: str
    seeds_averaged: int
    seeds: tuple[int, ...]
    non_abort_prob: float
    per_seed_alice_choice: tuple[float, ...] = field(repr=False, default=())
    per_seed_bob_other_key: tuple[float, ...] = field(repr=False, default=())
    per_seed_eve_secrets: tuple[float, ...] = field(repr=False, default=())
    per_seed_decode_error: tuple[float, ...] = field(repr=False, default=())


class _Skeleton:
    """Seed-independent enumeration structure for one config (reused across seeds)."""

    def __init__(self, cfg: ProtocolConfig):
        _require_enumerable(cfg)
        self.cfg = cfg
        self.patterns, self.abort_mass = _nonabort_patterns(cfg)
        n_blocks = sum(math.comb(len(u), cfg.good_size) * math.comb(len(e), cfg.good_size)
                       for e, u, _ in self.patterns)
        if n_blocks > 20000:
            raise OracleScaleError(f"{n_blocks} subset blocks exceed the enumerable budget")
        self.groups: dict[tuple, list[dict]] = {}
        for erased, unerased, weight in self.patterns:
            p_good = 1.0 / math.comb(len(unerased), cfg.good_size)
            p_bad = 1.0 / math.comb(len(erased), cfg.good_size)
            for good in itertools.combinations(unerased, cfg.good_size):
                spare_u = [i for i in unerased if i not in good]
                for bad in itertools.combinations(erased, cfg.good_size):
                    spare_e = [i for i in erased if i not in bad]
                    block = self._build_block(erased, unerased, list(good), list(bad),
                                              spare_u, spare_e, weight * p_good * p_bad)
                    self.groups.setdefault((tuple(spare_u), tuple(spare_e)), []).append(block)

    def _build_block(self, erased, unerased, good, bad, spare_u, spare_e, weight):
        cfg = self.cfg
        merged = sorted(good + bad)
        rel = sorted(set(unerased) | set(bad))
        rank_of = {p: i for i, p in enumerate(rel)}
        n_rel = len(rel)
        size = 1 << n_rel
        xs = np.arange(size, dtype=np.int64)

        pad_block = spare_u[:cfg.pad_len]
        shared = spare_u[cfg.pad_len:cfg.pad_len + cfg.shared_len]
        pad_proj = _projection(np.array(pad_block, dtype=np.int64), rank_of, n_rel)
        proj_good = _projection(np.array(sorted(good + shared), dtype=np.int64),
                                rank_of, n_rel)
        proj_bad = _projection(np.array(sorted(bad + shared), dtype=np.int64),
                               rank_of, n_rel)

        # selector over the merged set: bit i marks membership of slot1
        sel = np.zeros(2, dtype=np.int64)
        for i, p in enumerate(merged):
            if p in bad:   # choice 0: slot1 = bad
                sel[0] |= 1 << i
            if p in good:  # choice 1: slot1 = good
                sel[1] |= 1 << i

        y_int = np.zeros(size, dtype=np.int64)
        for p in rel:
            r = rank_of[p]
            if p in bad:
                y_int |= 2 << (2 * r)
            else:
                y_int |= ((xs >> r) & 1) << (2 * r)

        n_un = len(unerased)
        zs = np.arange(1 << n_un, dtype=np.int64)
        z_int = np.zeros((1 << n_un, size), dtype=np.int64)
        for p in bad:
            z_int |= 2 << (2 * rank_of[p])
        for k, p in enumerate(unerased):
            r = rank_of[p]
            dropped = ((zs >> k) & 1).astype(bool)[:, None]
            bit = ((xs >> r) & 1)[None, :]
            z_int |= np.where(dropped, 2 << (2 * r), bit << (2 * r))
        drops = np.array([bin(z).count("1") for z in range(1 << n_un)])
        z_weight = (cfg.channel.eps2 ** drops
                    * (1.0 - cfg.channel.eps2) ** (n_un - drops))

        return {
            "n_rel": n_rel, "weight": weight,
            "pad_proj": pad_proj, "proj_good": proj_good, "proj_bad": proj_bad,
            "sel": sel, "y_int": y_int, "z_int": z_int, "z_weight": z_weight,
        }


def _group_mi_accumulate(keys, secrets, weights, n_sec, sec_tot):
    """Collapse one view-group into Sum w*log2(w/p_view); updates secret marginals."""
    combined = keys * n_sec + secrets
    uniq, inverse = np.unique(combined, return_inverse=True)
    w = np.bincount(inverse, weights=weights, minlength=uniq.size)
    view = uniq // n_sec
    sec = uniq % n_sec
    sec_tot += np.bincount(sec, weights=w, minlength=n_sec)
    starts = np.r_[0, np.flatnonzero(np.diff(view)) + 1]
    pv = np.add.reduceat(w, starts)
    counts = np.diff(np.r_[starts, view.size])
    pv_cell = np.repeat(pv, counts)
    return float(np.sum(w * np.log2(w / pv_cell))), float(w.sum())


def _mi_from_parts(contribs: list[float], sec_tot: np.ndarray, total: float) -> float:
    ps = sec_tot / total
    h_s = -math.fsum(float(p) * math.log2(p) for p in ps if p > 0)
    mi = h_s + math.fsum(contribs) / total
    if mi < -_NONNEG_TOL:
        raise OracleScaleError(f"negative mutual information {mi}: enumeration bug")
    return mi


def exact_leakage(cfg: ProtocolConfig, seed_set: list[int]) -> LeakageReport:
    """Exact joint-distribution leakage statistics at enumerable scale.

    For each published seed the full joint distribution of (secret; view) is
    enumerated and the mutual information computed; results are averaged over
    the seed set. Announced-erased spare indices touch neither any view
    component nor any key input, so their assignments are folded into the cell
    weights; every other source of randomness is enumerated explicitly.
    """
    skel = _Skeleton(cfg)
    m = cfg.key_len
    kv = 1 << m
    n_sec_c = 1 << (2 * m + 1)
    sel_len = cfg.selector_len

    per_a, per_b, per_c, per_err = [], [], [], []
    non_abort = 0.0
    for seed in seed_set:
        t_pad, t_k0, t_k1 = _tables_for_seed(cfg, seed)
        contrib_a, contrib_b, contrib_c = [], [], []
        tot_a = tot_b = tot_c = 0.0
        sec_a = np.zeros(2)
        sec_b = np.zeros(kv)
        sec_c = np.zeros(n_sec_c)
        err_mass = 0.0

        for blocks in skel.groups.values():
            acc = {name: ([], [], []) for name in ("a", "b", "c")}
            for blk in blocks:
                n_rel = blk["n_rel"]
                size = 1 << n_rel
                xs = np.arange(size, dtype=np.int64)
                s_pad = t_pad[blk["pad_proj"]]
                # key tables keyed by choice: slot0 is good under choice 0
                s0 = np.stack([t_k0[blk["proj_good"]], t_k0[blk["proj_bad"]]])
                s1 = np.stack([t_k1[blk["proj_bad"]], t_k1[blk["proj_good"]]])
                mq = blk["sel"][:, None] ^ s_pad[None, :]              # [2, R]

                u_ax = np.arange(2, dtype=np.int64)[:, None, None, None]
                a_ax = np.arange(kv, dtype=np.int64)[None, :, None, None]
                b_ax = np.arange(kv, dtype=np.int64)[None, None, :, None]
                c0 = a_ax ^ s0[:, None, None, :]                       # [2,kv,1,R]->bc
                c1 = b_ax ^ s1[:, None, None, :]
                mq4 = mq[:, None, None, :]
                x4 = xs[None, None, None, :]
                w0 = blk["weight"] * 0.5 / (size * kv * kv)

                key_a = ((((((a_ax << m) | b_ax) << n_rel) | x4) << sel_len | mq4)
                         << m | c0) << m | c1
                shape = key_a.shape
                acc["a"][0].append(key_a.ravel())
                acc["a"][1].append(np.broadcast_to(u_ax, shape).ravel())
                acc["a"][2].append(np.full(key_a.size, w0))

                y4 = blk["y_int"][None, None, None, :]
                key_b = ((((u_ax << (2 * n_rel) | y4) << sel_len | mq4)
                          << m | c0) << m | c1)
                other = np.where(np.broadcast_to(u_ax, shape) == 0,
                                 np.broadcast_to(b_ax, shape),
                                 np.broadcast_to(a_ax, shape))
                acc["b"][0].append(np.broadcast_to(key_b, shape).ravel())
                acc["b"][1].append(other.ravel())
                acc["b"][2].append(np.full(key_a.size, w0))

                decoded = np.where(np.broadcast_to(u_ax, shape) == 0,
                                   np.broadcast_to(c0 ^ s0[:, None, None, :], shape),
                                   np.broadcast_to(c1 ^ s1[:, None, None, :], shape))
                chosen = np.where(np.broadcast_to(u_ax, shape) == 0,
                                  np.broadcast_to(a_ax, shape),
                                  np.broadcast_to(b_ax, shape))
                err_mass += w0 * float(np.count_nonzero(decoded != chosen))

                n_z = blk["z_int"].shape[0]
                z5 = blk["z_int"][None, None, None, :, :]
                mq5 = mq[:, None, None, None, :]
                c05 = (a_ax[..., None] ^ s0[:, None, None, None, :])
                c15 = (b_ax[..., None] ^ s1[:, None, None, None, :])
                key_c = ((z5 << sel_len | mq5) << m | c05) << m | c15
                sec_c_ax = ((a_ax << (m + 1)) | (b_ax << 1) | u_ax)[..., None]
                w_c = np.broadcast_to(w0 * blk["z_weight"][None, None, None, :, None],
                                      key_c.shape[:3] + (n_z, size))
                key_c = np.broadcast_to(key_c, w_c.shape)
                sec_c_b = np.broadcast_to(sec_c_ax, w_c.shape)
                acc["c"][0].append(key_c.ravel())
                acc["c"][1].append(sec_c_b.ravel())
                acc["c"][2].append(w_c.ravel())

            for name, (n_sec, sec_tot, contrib) in (
                    ("a", (2, sec_a, contrib_a)),
                    ("b", (kv, sec_b, contrib_b)),
                    ("c", (n_sec_c, sec_c, contrib_c))):
                ks, ss, ws = acc[name]
                cont, tot = _group_mi_accumulate(
                    np.concatenate(ks), np.concatenate(ss), np.concatenate(ws),
                    n_sec, sec_tot)
                contrib.append(cont)
                if name == "a":
                    tot_a += tot
                elif name == "b":
                    tot_b += tot
                else:
                    tot_c += tot

        if not (abs(tot_a - tot_b) <= 1e-9 and abs(tot_a - tot_c) <= 1e-9):
            raise OracleScaleError("conditioning mass differs across statistics")
        non_abort = tot_a
        per_a.append(_mi_from_parts(contrib_a, sec_a, tot_a))
        per_b.append(_mi_from_parts(contrib_b, sec_b, tot_b))
        per_c.append(_mi_from_parts(contrib_c, sec_c, tot_c))
        per_err.append(err_mass / tot_a)

    n = len(seed_set)
    return LeakageReport(
        mi_alice_choice=math.fsum(per_a) / n,
        mi_bob_other_key=math.fsum(per_b) / n,
        mi_eve_secrets=math.fsum(per_c) / n,
        decode_error_prob=math.fsum(per_err) / n,
        method="exact-enumeration", seeds_averaged=n, seeds=tuple(seed_set),
        non_abort_prob=non_abort,
        per_seed_alice_choice=tuple(per_a), per_seed_bob_other_key=tuple(per_b),
        per_seed_eve_secrets=tuple(per_c), per_seed_decode_error=tuple(per_err))


# ------------------------------------------------------------------ key deficits


@dataclass(frozen=True)
class DeficitReport:
    """Distance of the derived keys from ideal uniformity, in bits.

    joint_deficit: 2m - H(both keys | Eve's symbols on the good and shared
    blocks); unchosen_deficit: m - H(unchosen key | the shared-block bits).
    Averaged over the published seed set, conditioned on not aborting.
    """

    joint_deficit: float
    unchosen_deficit: float
    seeds_averaged: int
    seeds: tuple[int, ...]
    typical_only: bool
    non_abort_prob: float
    per_seed_joint: tuple[float, ...] = field(repr=False, default=())
    per_seed_unchosen: tuple[float, ...] = field(repr=False, default=())


def _entropy_rows(joint: np.ndarray) -> np.ndarray:
    totals = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, joint / np.where(totals == 0, 1, totals), 0.0)
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=1)


def key_entropy_deficit(cfg: ProtocolConfig, seed_set: list[int], *,
                        typical_only: bool = False) -> DeficitReport:
    """Exact conditional-entropy deficits of the two string keys.

    With ``typical_only`` the Eve-side conditioning is restricted to erasure
    patterns whose erased fraction over the good+shared blocks is at least
    eps2*(1 - delta/2) (the typical event of the concentration argument), so
    conditioned and unconditioned deficits can both be reported.
    """
    _require_enumerable(cfg)
    patterns, _ = _nonabort_patterns(cfg)
    m = cfg.key_len
    kv = 1 << m
    n_in = cfg.key_input_len
    if 2 * cfg.good_size + cfg.shared_len > 16:
        raise OracleScaleError("key blocks too large for exact deficit enumeration")

    blocks = []
    pattern_mass = 0.0
    for erased, unerased, weight in patterns:
        pattern_mass += weight
        p_good = 1.0 / math.comb(len(unerased), cfg.good_size)
        p_bad = 1.0 / math.comb(len(erased), cfg.good_size)
        for good in itertools.combinations(unerased, cfg.good_size):
            spare_u = [i for i in unerased if i not in good]
            shared = spare_u[cfg.pad_len:cfg.pad_len + cfg.shared_len]
            for bad in itertools.combinations(erased, cfg.good_size):
                blocks.append((sorted(list(good)), sorted(list(bad)), shared,
                               weight * p_good * p_bad))

    # stage-2 erasure patterns over the good+shared positions
    n_gs = cfg.good_size + cfg.shared_len
    zs = np.arange(1 << n_gs, dtype=np.int64)
    drops = np.array([bin(z).count("1") for z in range(1 << n_gs)])
    z_w = (cfg.channel.eps2 ** drops) * ((1.0 - cfg.channel.eps2) ** (n_gs - drops))
    if typical_only:
        keep = drops / max(n_gs, 1) >= cfg.channel.eps2 * (1.0 - cfg.delta / 2.0)
        if not np.any(keep):
            raise ParamError("typical event is empty at this scale")
        z_w = np.where(keep, z_w, 0.0)
        z_w = z_w / z_w.sum()

    per_joint, per_single = [], []
    for seed in seed_set:
        _, t_k0, t_k1 = _tables_for_seed(cfg, seed, include_pad=False)
        joint_acc = 0.0
        single_acc = 0.0
        for good, bad, shared, w_blk in blocks:
            good_in = sorted(good + shared)
            bad_in = sorted(bad + shared)
            shared_rank_bad = [bad_in.index(p) for p in shared]
            all_pos = sorted(set(good_in) | set(bad_in))
            rank = {p: i for i, p in enumerate(all_pos)}
            n_all = len(all_pos)
            xs_all = np.arange(1 << n_all, dtype=np.int64)

            idx_good = np.zeros(1 << n_all, dtype=np.int64)
            for k, p in enumerate(good_in):
                idx_good |= ((xs_all >> rank[p]) & 1) << k
            idx_bad = np.zeros(1 << n_all, dtype=np.int64)
            for k, p in enumerate(bad_in):
                idx_bad |= ((xs_all >> rank[p]) & 1) << k

            for u, (t_ch, t_un) in enumerate(((t_k0, t_k1), (t_k1, t_k0))):
                s_ch = t_ch[idx_good]
                s_un = t_un[idx_bad]
                w_u = w_blk * 0.5

                # unchosen-key deficit: condition on the shared-block bits
                xs_in = np.arange(1 << n_in, dtype=np.int64)
                sh_val = np.zeros(1 << n_in, dtype=np.int64)
                for k, r in enumerate(shared_rank_bad):
                    sh_val |= ((xs_in >> r) & 1) << k
                hist = np.bincount((sh_val << m) | t_un[xs_in],
                                   minlength=(1 << cfg.shared_len) * kv)
                h_rows = _entropy_rows(hist.reshape(-1, kv).astype(np.float64))
                single_acc += w_u * float(h_rows.mean())

                # joint deficit: condition on Eve's symbols over good+shared
                for z_idx in np.flatnonzero(z_w > 0):
                    revealed = [good_in[k] for k in range(n_gs)
                                if not (int(zs[z_idx]) >> k) & 1]
                    rev_val = np.zeros(1 << n_all, dtype=np.int64)
                    for k, p in enumerate(revealed):
                        rev_val |= ((xs_all >> rank[p]) & 1) << k
                    key = (rev_val << (2 * m)) | (s_ch << m) | s_un
                    hist = np.bincount(key, minlength=(1 << len(revealed)) * kv * kv)
                    h_rows = _entropy_rows(hist.reshape(-1, kv * kv).astype(np.float64))
                    joint_acc += w_u * float(z_w[z_idx]) * float(h_rows.mean())

        per_joint.append(2 * m - joint_acc / pattern_mass)
        per_single.append(m - single_acc / pattern_mass)

    n = len(seed_set)
    return DeficitReport(
        joint_deficit=math.fsum(per_joint) / n,
        unchosen_deficit=math.fsum(per_single) / n,
        seeds_averaged=n, seeds=tuple(seed_set), typical_only=typical_only,
        non_abort_prob=pattern_mass,
        per_seed_joint=tuple(per_joint), per_seed_unchosen=tuple(per_single))


# ------------------------------------------------------------------ random-map scan


@dataclass(frozen=True)
class MapScanReport:
    """Fraction of random maps violating the conditional output-entropy floor."""

    violation_rate: float
    trials: int
    out_len: int
    fixed_len: int
    threshold: float
    subsets_enumerated: int   # capped random sample when the full count is large
    subsets_total: int
    min_entropy_seen: float


def random_map_violation_rate(n_bits: int, out_frac: float, fixed_frac: float,
                              margin_frac: float, trials: int, rng: Seedish, *,
                              subset_cap: int = 128,
                              chunk: int = 32) -> MapScanReport:
    """Sample uniformly random maps and scan H(f(X) | X|_I = y) over (I, y).

    A map violates when some index set I of floor(n_bits*fixed_frac) positions
    and some assignment y of those bits pushes the conditional output entropy
    below n_bits*out_frac - 2**(-n_bits*margin_frac). When the number of index
    sets exceeds ``subset_cap`` a random sample is scanned instead (recorded in
    the report); sampling can only miss violations, never invent them.
    """
    if not (out_frac >= 0 and fixed_frac >= 0 and margin_frac > 0):
        raise ParamError("fractions must be nonnegative (margin positive)")
    if out_frac + fixed_frac + margin_frac >= 1.0:
        raise ParamError("out_frac + fixed_frac + margin_frac must be < 1")
    if n_bits > 20:
        raise ParamError(f"n_bits {n_bits} exceeds the enumerable limit 20")
    if trials < 1:
        raise ParamError("trials must be >= 1")
    out_len = int(math.floor(n_bits * out_frac + 1e-9))
    fixed_len = int(math.floor(n_bits * fixed_frac + 1e-9))
    threshold = out_len - 2.0 ** (-n_bits * margin_frac)

    subs_ss, table_ss = as_seed_sequence(rng).spawn(2)
    total_sets = math.comb(n_bits, fixed_len)
    if total_sets <= subset_cap:
        subsets = list(itertools.combinations(range(n_bits), fixed_len))
    else:
        sub_rng = generator(subs_ss)
        seen = set()
        while len(seen) < subset_cap:
            pick = tuple(sorted(sub_rng.choice(n_bits, size=fixed_len, replace=False)))
            seen.add(pick)
        subsets = sorted(seen)

    size = 1 << n_bits
    xs = np.arange(size, dtype=np.int64)
    projections = np.zeros((len(subsets), size), dtype=np.uint8)
    for s, positions in enumerate(subsets):
        acc = np.zeros(size, dtype=np.int64)
        for k, p in enumerate(positions):
            acc |= ((xs >> p) & 1) << k
        projections[s] = acc

    from . import kernels
    table_rng = generator(table_ss)
    violations = 0
    min_seen = math.inf
    done = 0
    while done < trials:
        batch = min(chunk, trials - done)
        tables = table_rng.integers(0, 1 << out_len, size=(batch, size),
                                    dtype=np.uint32)
        mins = kernels.map_chunk_min_entropy(tables, projections,
                                             1 << fixed_len, out_len)
        per_table = mins.min(axis=1)
        violations += int(np.count_nonzero(per_table < threshold))
        min_seen = min(min_seen, float(per_table.min()))
        done += batch

    return MapScanReport(violation_rate=violations / trials, trials=trials,
                         out_len=out_len, fixed_len=fixed_len, threshold=threshold,
                         subsets_enumerated=len(subsets), subsets_total=total_sets,
                         min_entropy_seen=min_seen)


# ------------------------------------------------------------------ abort estimate


@dataclass(frozen=True)
class AbortEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    aborts: int


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson 95% score interval for a Bernoulli proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def estimate_abort_probability(cfg: ProtocolConfig, trials: int,
                               rng: Seedish) -> AbortEstimate:
    """Monte Carlo estimate of the abort probability with a Wilson 95% interval.

    Each trial runs the honest receive side: fresh transmission, erasure
    partition, and the full set derivation including the spare-size guard.
    """
    if trials < 1:
        raise ParamError("trials must be >= 1")
    from . import bits as bits_mod
    from .channel import transmit
    from .sets import ProtocolAbort, derive_set_family, partition_by_erasure

    base = as_seed_sequence(rng)
    aborts = 0
    for child in base.spawn(trials):
        alice_ss, ch_ss, bob_ss = child.spawn(3)
        x = bits_mod.random_bits(generator(alice_ss), cfg.n)
        y, _ = transmit(x, cfg.channel, generator(ch_ss))
        erased, unerased = partition_by_erasure(y)
        try:
            derive_set_family(erased, unerased, 0, cfg, generator(bob_ss))
        except ProtocolAbort:
            aborts += 1
    lo, hi = wilson_interval(aborts, trials)
    return AbortEstimate(p_hat=aborts / trials, ci_low=lo, ci_high=hi,
                         trials=trials, aborts=aborts)


# ------------------------------------------------------------------ pinned configs


def small_leakage_config(backend: str = RANDOM_TABLE) -> ProtocolConfig:
    """Enumerable config for the leakage oracle: n=8, one non-aborting class.

    Sizes derive from the planning formulas at an explicit rate of 1/8
    (m=1, good/bad size 1, pad block 3, shared block 1); the only erasure
    class passing the abort test is 3 erased / 5 unerased.
    """
    return plan(8, 0.025, ChannelParams(0.4, 0.9), rate=1.0 / 8.0, backend=backend)


def tiny_leakage_config(backend: str = RANDOM_TABLE) -> ProtocolConfig:
    """Smaller (n=6) variant of the leakage config for fast unit tests."""
    return plan(6, 1.0 / 30.0, ChannelParams(0.2, 0.9), rate=1.0 / 6.0, backend=backend)


def small_deficit_config() -> ProtocolConfig:
    """Forced config for the key-deficit oracle: disjoint key inputs, m=1.

    good/bad size 4 leaves 16 equally likely raw inputs per key, pushing the
    expected unchosen-key deficit to ~0.047 bits; with no shared block the two
    key inputs are disjoint, which makes the joint deficit provably at least
    the unchosen deficit on every seed. The selector-pad machinery is absent
    (pad_len 0), so this config drives the deficit oracle only, not full runs.
    """
    channel = ChannelParams(0.5, 0.9)
    delta = 0.05
    eps2_eff = channel.eps2 * (1.0 - delta)
    return ProtocolConfig(
        n=8, delta=delta, channel=channel, backend=RANDOM_TABLE,
        eps2_eff=eps2_eff, rate_penalty=delta * (1.0 + 2.0 / eps2_eff),
        rate=1.0 / 8.0, key_len=1, good_size=4, pad_len=0, shared_len=0,
        min_unerased=min_passing_count(8 * (1.0 - channel.eps1 - delta)),
        min_erased=min_passing_count(8 * (channel.eps1 - delta)))


def degenerate_deficit_config() -> ProtocolConfig:
    """Forced zero-length-key config: both deficits must be exactly zero."""
    base = small_deficit_config()
    return ProtocolConfig(
        n=base.n, delta=base.delta, channel=base.channel, backend=base.backend,
        eps2_eff=base.eps2_eff, rate_penalty=base.rate_penalty,
        rate=0.0, key_len=0, good_size=base.good_size, pad_len=0, shared_len=0,
        min_unerased=base.min_unerased, min_erased=base.min_erased)
