"""The acceptance gate: one test per bundled check, at the pinned scales.

Every check prints its one-line summary so `pytest -v -s` (and the failure
output) double as the pass/fail table. The small-leakage gate is expected to
fail: its thresholds are unattainable at exactly-enumerable block lengths (the
receiver-side statistic equals the unchosen-key deficit, >= 0.219 bits for
every admissible config). It is asserted faithfully rather than loosened; see
the repository notes for the analysis.
"""

from erasot import acceptance


def _run(check):
    result = check()
    print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.details}")
    return result


def test_criterion_1_perfect_correctness():
    result = _run(acceptance.check_perfect_correctness)
    assert result.passed, result.details


def test_criterion_2_abort_decay():
    result = _run(acceptance.check_abort_decay)
    assert result.passed, result.details


def test_criterion_3_bounds_evaluator():
    result = _run(acceptance.check_bounds_evaluator)
    assert result.passed, result.details


def test_criterion_4_alice_leakage_zero():
    result = _run(acceptance.check_alice_leakage_zero)
    assert result.passed, result.details


def test_criterion_5_small_leakage():
    result = _run(acceptance.check_small_leakage)
    assert result.passed, result.details


def test_criterion_6_key_deficits():
    result = _run(acceptance.check_key_deficits)
    assert result.passed, result.details


def test_criterion_7_random_map_scan():
    result = _run(acceptance.check_random_map_scan)
    assert result.passed, result.details


def test_criterion_8_structural_invariants():
    result = _run(acceptance.check_structural_invariants)
    assert result.passed, result.details
