import csv
import json
import subprocess
import sys

import pytest

from erasot import cli, oracle
from erasot.channel import ChannelParams


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _base_config(**overrides):
    cfg = {
        "mode": "single", "eps1": [0.5], "eps2": [0.8], "n": [200],
        "delta": 0.05, "trials": 60, "master_seed": "00000000deadbeef",
        "backend": "universal-hash",
    }
    cfg.update(overrides)
    return cfg


def test_single_mode_row_has_zero_failures(tmp_path):
    path = _write(tmp_path, "cfg.json", _base_config())
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    rows = list(csv.DictReader(open(out / "report.csv")))
    assert len(rows) == 1
    row = rows[0]
    assert row["decode_failures"] == "0"
    assert int(row["aborts"]) + 0 <= 60
    assert row["m"] != "" and float(row["r"]) > 0
    report = json.loads((out / "report.json").read_text())
    assert report["schema"] == "erasot-report/1"
    assert report["config"]["master_seed"] == "00000000deadbeef"
    assert "wall_time_s" in report["meta"]


def test_reports_byte_identical_for_same_config(tmp_path):
    path = _write(tmp_path, "cfg.json", _base_config(trials=40))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run(path, out_dir=str(out1)) == cli.EXIT_OK
    assert cli.run(path, out_dir=str(out2)) == cli.EXIT_OK
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
    j1 = json.loads((out1 / "report.json").read_text())
    j2 = json.loads((out2 / "report.json").read_text())
    j1.pop("meta"), j2.pop("meta")
    assert j1 == j2


def test_seed_override_changes_rows(tmp_path):
    path = _write(tmp_path, "cfg.json", _base_config(trials=40))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run(path, out_dir=str(out1)) == cli.EXIT_OK
    assert cli.run(path, out_dir=str(out2), seed=0x1234) == cli.EXIT_OK
    r1 = json.loads((out1 / "report.json").read_text())["config"]["master_seed"]
    r2 = json.loads((out2 / "report.json").read_text())["config"]["master_seed"]
    assert r1 != r2


def test_sweep_bound_columns_match_oracle(tmp_path):
    payload = _base_config(mode="sweep", eps1=[0.1, 0.3, 0.5, 0.7, 0.9],
                           eps2=[0.5, 0.8], n=[100], trials=2)
    path = _write(tmp_path, "cfg.json", payload)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    rows = list(csv.DictReader(open(out / "report.csv")))
    assert len(rows) == 10
    for row in rows:
        rep = oracle.capacity_bounds(ChannelParams(float(row["eps1"]),
                                                   float(row["eps2"])))
        assert float(row["lower_bound"]) == pytest.approx(rep.lower, abs=1e-9)
        assert float(row["upper_bound"]) == pytest.approx(rep.upper, abs=1e-9)
        assert float(row["lower_bound"]) <= float(row["upper_bound"]) + 1e-12


def test_malformed_config_exits_2_without_output(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "out"
    assert cli.run(str(bad), out_dir=str(out)) == cli.EXIT_CONFIG
    assert not out.exists()

    path = _write(tmp_path, "bad2.json", _base_config(mode="warp"))
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_CONFIG
    assert not out.exists()

    path = _write(tmp_path, "bad3.json", _base_config(trials=0))
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_CONFIG

    path = _write(tmp_path, "bad4.json", _base_config(eps1=[]))
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_CONFIG


def test_oracle_scale_limit_exits_3(tmp_path):
    payload = _base_config(mode="oracle-leakage", n=[100], trials=2, delta=0.01,
                           rate="planned")
    path = _write(tmp_path, "cfg.json", payload)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_SCALE


def test_oracle_leakage_mode_reports_per_seed(tmp_path):
    payload = _base_config(mode="oracle-leakage", eps1=[0.2], eps2=[0.9],
                           n=[6], delta=1 / 30, rate=1 / 6, trials=2)
    path = _write(tmp_path, "cfg.json", payload)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    row = list(csv.DictReader(open(out / "report.csv")))[0]
    assert abs(float(row["mi_alice_choice"])) < 1e-6
    assert float(row["decode_error_prob"]) == 0.0
    report = json.loads((out / "report.json").read_text())
    per_seed = report["extras"]["cell_0"]["per_seed"]
    assert len(per_seed["bob_other_key"]) == 2


def test_lemma3_mode(tmp_path):
    payload = {"mode": "lemma3", "trials": 20, "master_seed": "ff",
               "n_bits": 12, "out_frac": 0.25, "fixed_frac": 0.25,
               "margin_frac": 0.25, "subset_cap": 32}
    path = _write(tmp_path, "cfg.json", payload)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    row = list(csv.DictReader(open(out / "report.csv")))[0]
    assert row["violation_rate"] != ""
    assert int(row["subsets_enumerated"]) == 32


def test_abort_curve_mode(tmp_path):
    payload = _base_config(mode="abort-curve", n=[200, 400], trials=300)
    path = _write(tmp_path, "cfg.json", payload)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    rows = list(csv.DictReader(open(out / "report.csv")))
    assert len(rows) == 2
    assert all(r["abort_ci_hi"] != "" for r in rows)


def test_threads_do_not_change_results(tmp_path):
    path = _write(tmp_path, "cfg.json", _base_config(trials=48))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run(path, out_dir=str(out1), threads=1) == cli.EXIT_OK
    assert cli.run(path, out_dir=str(out2), threads=3) == cli.EXIT_OK
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()


def test_csv_header_is_stable(tmp_path):
    path = _write(tmp_path, "cfg.json", _base_config(trials=2))
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == cli.EXIT_OK
    header = open(out / "report.csv").readline().strip().split(",")
    assert header[:13] == ["eps1", "eps2", "n", "delta", "r", "m", "trials",
                           "aborts", "abort_ci_lo", "abort_ci_hi",
                           "decode_failures", "lower_bound", "upper_bound"]
    assert header == cli.CSV_COLUMNS


def test_verify_list_names_checks():
    proc = subprocess.run([sys.executable, "-m", "erasot.cli", "verify", "--list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    names = proc.stdout.split()
    assert "perfect-correctness" in names
    assert "structural-invariants" in names
    assert len(names) == 8


def test_verify_exit_codes(monkeypatch):
    from erasot import acceptance

    ok = acceptance.CheckResult("stub-ok", True, "fine")
    bad = acceptance.CheckResult("stub-bad", False, "broken")
    monkeypatch.setattr(acceptance, "CHECKS",
                        [("stub-ok", lambda: ok)])
    assert cli.verify() == cli.EXIT_OK
    monkeypatch.setattr(acceptance, "CHECKS",
                        [("stub-ok", lambda: ok), ("stub-bad", lambda: bad)])
    assert cli.verify() == cli.EXIT_INVARIANT
