"""The bundled verification suite: every gate the artifact must satisfy.

Each check returns a CheckResult; ``erasot verify`` prints one pass/fail line
per check and the pytest suite asserts them individually. All randomness is
pinned, so results are reproducible byte for byte on either kernel lane.

Known red: the small-leakage check. Its receiver/eavesdropper thresholds are
unattainable at exactly-enumerable block lengths; finite-size analysis puts
the receiver-side statistic at >= 0.219 bits for every admissible config
(~0.5 at the pinned one) against a 0.1-bit gate. The check is implemented
faithfully and reported honestly instead of being loosened.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bits, oracle
from .channel import ERASED, ChannelParams, transmit
from .errors import InfeasibleParams
from .protocol import achievable_rate, max_feasible_rate, plan, run_protocol
from .rng import generator, trial_seed
from .sets import decode_selector, encode_selector


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: str


GRID_EPS1 = (0.3, 0.5, 0.7)
GRID_EPS2 = (0.5, 0.8)
GRID_DELTA = 0.05
CORRECTNESS_NS = (500, 2000)
CORRECTNESS_TRIALS_PER_CELL = 850       # 12 cells -> 10200 runs total
ABORT_NS = (500, 1000, 2000)
ABORT_TRIALS = 10_000
LEAKAGE_SEEDS = tuple(range(50))
DEFICIT_SEEDS = tuple(range(64))
MAP_SCAN_TRIALS = 500

_MASTER_CORRECTNESS = 0x5EED_0001
_MASTER_ABORT = 0x5EED_0002
_MASTER_STRUCT = 0x5EED_0003
_GOLDEN_SEED = 0x5EED_0064
# sha256 of the canonical transcript of the pinned n=64 replay run
GOLDEN_TRANSCRIPT_SHA256 = (
    "9385531c07bc36e3ed854611347b10de9976eed42a58696484e89dce32cfa262"
)


def _cell_config(n: int, eps1: float, eps2: float, delta: float = GRID_DELTA):
    """Operating point for experiments: the largest threshold-feasible rate.

    Cells where no key length fits under the threshold-guaranteed counts run
    at rate 1/n; their set demands exceed the worst passing counts, so they
    also exercise the spare-size abort whenever the actual counts dip.
    """
    channel = ChannelParams(eps1, eps2)
    try:
        rate = max_feasible_rate(n, delta, channel)
    except InfeasibleParams:
        rate = 1.0 / n
    return plan(n, delta, channel, rate=rate)


def _run_cell(cfg, trials: int, master: int, cell_tag: int):
    """Run ``trials`` full protocol executions; returns (non_aborted, decode_failures)."""
    ok = failures = 0
    for t in range(trials):
        ss = trial_seed(master, (cell_tag << 20) | t)
        input_ss, run_ss = ss.spawn(2)
        gen = generator(input_ss)
        k0 = bits.random_bits(gen, cfg.key_len)
        k1 = bits.random_bits(gen, cfg.key_len)
        u = int(gen.integers(0, 2))
        out = run_protocol(cfg, k0, k1, u, run_ss)
        if out.aborted:
            continue
        ok += 1
        chosen = k0 if u == 0 else k1
        if not np.array_equal(out.decoded_key, chosen):
            failures += 1
    return ok, failures


def check_perfect_correctness() -> CheckResult:
    """Zero decode failures among non-aborted runs across the channel grid."""
    total = ok = failures = 0
    cells = []
    tag = 0
    for n in CORRECTNESS_NS:
        for eps1 in GRID_EPS1:
            for eps2 in GRID_EPS2:
                cfg = _cell_config(n, eps1, eps2)
                got_ok, got_fail = _run_cell(cfg, CORRECTNESS_TRIALS_PER_CELL,
                                             _MASTER_CORRECTNESS, tag)
                tag += 1
                total += CORRECTNESS_TRIALS_PER_CELL
                ok += got_ok
                failures += got_fail
                cells.append(f"({eps1},{eps2},n={n}): m={cfg.key_len} "
                             f"decoded={got_ok} failed={got_fail}")
    passed = failures == 0 and total >= 10_000 and ok > 0
    return CheckResult(
        "perfect-correctness", passed,
        f"{total} runs, {ok} non-aborted, {failures} decode failures | "
        + "; ".join(cells))


def check_abort_decay() -> CheckResult:
    """P[abort] strictly decreases over n in {500,1000,2000} (CI-separated), <1% at 2000."""
    channel = ChannelParams(0.5, 0.8)
    estimates = []
    for n in ABORT_NS:
        cfg = plan(n, GRID_DELTA, channel,
                   rate=max_feasible_rate(n, GRID_DELTA, channel))
        estimates.append(oracle.estimate_abort_probability(
            cfg, ABORT_TRIALS, (_MASTER_ABORT, n)))
    separated = all(estimates[i].ci_low > estimates[i + 1].ci_high
                    for i in range(len(estimates) - 1))
    decreasing = all(estimates[i].p_hat > estimates[i + 1].p_hat
                     for i in range(len(estimates) - 1))
    small = estimates[-1].p_hat < 0.01
    details = "; ".join(
        f"n={n}: {e.p_hat:.5f} [{e.ci_low:.5f},{e.ci_high:.5f}]"
        for n, e in zip(ABORT_NS, estimates))
    return CheckResult("abort-decay", separated and decreasing and small, details)


def _exact_bounds(eps1: Fraction, eps2: Fraction) -> tuple[Fraction, Fraction, bool]:
    through = eps2 * (1 - eps1)
    return (min(through / 3, eps1), min(through, eps1), eps1 <= through / 3)


def check_bounds_evaluator() -> CheckResult:
    """Bound formulas match an exact-rational re-derivation; rate approaches the lower bound."""
    worst = 0.0
    for i in range(0, 101):
        for j in range(0, 101):
            e1, e2 = Fraction(i, 100), Fraction(j, 100)
            rep = oracle.capacity_bounds(ChannelParams(i / 100, j / 100))
            lo, hi, tight = _exact_bounds(e1, e2)
            worst = max(worst, abs(rep.lower - float(lo)), abs(rep.upper - float(hi)))
            if worst > 1e-12 or rep.lower > rep.upper + 1e-15 or rep.tight != tight:
                return CheckResult(
                    "bounds-evaluator", False,
                    f"mismatch at eps1={i/100}, eps2={j/100}: {rep}")

    # rate formula: monotone approach to the lower bound with gap < penalty + 2/n
    n_ref = 50
    deltas = (0.1, 0.01, 0.001)
    for i in range(1, 10, 2):
        for j in range(1, 10, 2):
            channel = ChannelParams(i / 10, j / 10)
            lower = oracle.capacity_bounds(channel).lower
            rates = [achievable_rate(channel, d) for d in deltas]
            if not (rates[2] > rates[1] > rates[0]):
                return CheckResult("bounds-evaluator", False,
                                   f"non-monotone approach at {channel}: {rates}")
            for d, r in zip(deltas, rates):
                penalty = d * (1.0 + 2.0 / (channel.eps2 * (1.0 - d)))
                gap = lower - r
                if not (0.0 < gap < penalty + 2.0 / n_ref):
                    return CheckResult(
                        "bounds-evaluator", False,
                        f"gap {gap:.6f} outside (0, {penalty + 2.0/n_ref:.6f}) "
                        f"at {channel}, delta={d}")
    return CheckResult("bounds-evaluator", True,
                       f"grid max |err|={worst:.2e}; monotone delta-approach holds")


@functools.lru_cache(maxsize=1)
def _leakage_report() -> oracle.LeakageReport:
    return oracle.exact_leakage(oracle.small_leakage_config(), list(LEAKAGE_SEEDS))


def check_alice_leakage_zero() -> CheckResult:
    """Exact I(choice ; Alice view) vanishes (numerical accumulation only)."""
    rep = _leakage_report()
    return CheckResult(
        "alice-leakage-zero", rep.mi_alice_choice <= 1e-6,
        f"I(choice; alice view) = {rep.mi_alice_choice:.3e} bits over "
        f"{rep.seeds_averaged} seeds; decode error = {rep.decode_error_prob}")


def check_small_leakage() -> CheckResult:
    """Receiver/eavesdropper leakage under the artifact thresholds (0.1 / 0.3 bits).

    Expected to fail at enumerable scale: the receiver statistic equals the
    unchosen-key deficit, which is >= 0.219 bits for every config this oracle
    can enumerate. Reported honestly; see the repository notes.
    """
    rep = _leakage_report()
    passed = rep.mi_bob_other_key <= 0.1 and rep.mi_eve_secrets <= 0.3
    per_seed = ", ".join(f"{v:.3f}" for v in rep.per_seed_bob_other_key[:8])
    return CheckResult(
        "small-leakage", passed,
        f"I(other key; bob view) = {rep.mi_bob_other_key:.4f} (gate 0.1), "
        f"I(strings+choice; eve view) = {rep.mi_eve_secrets:.4f} (gate 0.3) "
        f"over {rep.seeds_averaged} seeds; first per-seed bob values: {per_seed}")


def check_key_deficits() -> CheckResult:
    """Joint and unchosen key-entropy deficits small; per-seed chain consistency."""
    rep = oracle.key_entropy_deficit(oracle.small_deficit_config(),
                                     list(DEFICIT_SEEDS))
    chain = all(j >= s - 1e-9
                for j, s in zip(rep.per_seed_joint, rep.per_seed_unchosen))
    passed = rep.joint_deficit <= 0.3 and rep.unchosen_deficit <= 0.1 and chain
    return CheckResult(
        "key-deficits", passed,
        f"joint = {rep.joint_deficit:.4f} (gate 0.3), "
        f"unchosen = {rep.unchosen_deficit:.4f} (gate 0.1), "
        f"chain-per-seed = {chain}, seeds = {rep.seeds_averaged}")


def check_random_map_scan() -> CheckResult:
    """<1% of random maps violate the conditional output-entropy floor."""
    rep = oracle.random_map_violation_rate(16, 0.25, 0.25, 0.25,
                                           MAP_SCAN_TRIALS, 0x5EED_0007)
    return CheckResult(
        "random-map-scan", rep.violation_rate < 0.01,
        f"violations = {rep.violation_rate:.4f} over {rep.trials} maps, "
        f"threshold = {rep.threshold}, min H seen = {rep.min_entropy_seen:.4f}, "
        f"index sets = {rep.subsets_enumerated}/{rep.subsets_total}")


def _golden_config():
    channel = ChannelParams(0.5, 0.8)
    return plan(64, GRID_DELTA, channel,
                rate=max_feasible_rate(64, GRID_DELTA, channel))


def golden_run():
    cfg = _golden_config()
    gen = generator(trial_seed(_GOLDEN_SEED, 0))
    k0 = bits.random_bits(gen, cfg.key_len)
    k1 = bits.random_bits(gen, cfg.key_len)
    return run_protocol(cfg, k0, k1, 1, trial_seed(_GOLDEN_SEED, 1)), k1


def check_structural_invariants() -> CheckResult:
    """Degradedness, selector round-trips, equal slot sizes, byte-identical replay."""
    problems = []
    gen = generator(_MASTER_STRUCT)

    x = bits.random_bits(gen, 1_000_000)
    y, z = transmit(x, ChannelParams(0.3, 0.5), gen)
    if not np.all(z[y == ERASED] == ERASED):
        problems.append("degradedness violated")
    y_rate = float(np.mean(y == ERASED))
    z_rate = float(np.mean(z == ERASED))
    tol_y = 4 * np.sqrt(0.3 * 0.7 / 1e6)
    p_z = 0.3 + 0.7 * 0.5
    tol_z = 4 * np.sqrt(p_z * (1 - p_z) / 1e6)
    if abs(y_rate - 0.3) > tol_y or abs(z_rate - p_z) > tol_z:
        problems.append(f"marginal erasure rates off: {y_rate:.4f}, {z_rate:.4f}")

    for _ in range(1000):
        pool = gen.permutation(40)
        a = np.sort(pool[:gen.integers(0, 15)].astype(np.int64))
        b = np.sort(pool[15:15 + gen.integers(0, 15)].astype(np.int64))
        merged, sel = encode_selector(a, b)
        back0, back1 = decode_selector(merged, sel)
        if not (np.array_equal(back0, a) and np.array_equal(back1, b)):
            problems.append("selector round-trip failed")
            break

    cfg = _cell_config(500, 0.5, 0.8)
    for t in range(200):
        out = run_protocol(cfg, bits.random_bits(gen, cfg.key_len),
                           bits.random_bits(gen, cfg.key_len), t & 1,
                           trial_seed(_MASTER_STRUCT, t))
        if out.aborted:
            continue
        if out.family.slot0.size != out.family.slot1.size:
            problems.append("slot sizes differ")
            break
        if not out.views.share_one_transcript():
            problems.append("views embed different transcripts")
            break

    out1, _ = golden_run()
    out2, k1 = golden_run()
    if out1.aborted or out2.aborted:
        problems.append("golden run aborted")
    else:
        if not out1.views.alice.transcript.equals(out2.views.alice.transcript):
            problems.append("replay transcripts differ")
        if not np.array_equal(out1.decoded_key, out2.decoded_key):
            problems.append("replay decodes differ")
        if not np.array_equal(out1.decoded_key, k1):
            problems.append("golden run decoded the wrong string")
        digest = hashlib.sha256(out1.views.alice.transcript.canonical_bytes()).hexdigest()
        if digest != GOLDEN_TRANSCRIPT_SHA256:
            problems.append(f"golden transcript digest changed: {digest}")

    return CheckResult("structural-invariants", not problems,
                       "; ".join(problems) if problems else
                       "degradedness, round-trip, slot sizes, replay, golden digest all hold")


CHECKS: list[tuple[str, Callable[[], CheckResult]]] = [
    ("perfect-correctness", check_perfect_correctness),
    ("abort-decay", check_abort_decay),
    ("bounds-evaluator", check_bounds_evaluator),
    ("alice-leakage-zero", check_alice_leakage_zero),
    ("small-leakage", check_small_leakage),
    ("key-deficits", check_key_deficits),
    ("random-map-scan", check_random_map_scan),
    ("structural-invariants", check_structural_invariants),
]


def run_all(emit=print) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        result = fn()
        results.append(result)
        emit(f"[{'PASS' if result.passed else 'FAIL'}] {name}: {result.details}")
    return results
