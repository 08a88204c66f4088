"""Batch experiment driver.

``erasot run --config cfg.json [--out DIR] [--threads N] [--seed HEX]`` loads a
JSON experiment description, runs protocol trials / sweeps / oracle checks, and
writes ``report.json`` + ``report.csv`` (one row per grid cell). Outputs are
byte-identical for identical (config, master_seed); wall time lives only in the
JSON ``meta`` section. ``erasot verify [--list]`` runs the bundled check suite.

Exit codes: 0 ok, 1 invariant failure (e.g. any decode failure), 2 config
error, 3 scale-limit violation.

Config schema (JSON object):
  mode         "single" | "sweep" | "oracle-leakage" | "lemma3" | "abort-curve"
  eps1, eps2   lists of erasure probabilities (grid axes)
  n            list of block lengths
  delta        slack in (0, 1)
  trials       runs per cell (seed count for oracle-leakage)
  master_seed  hex string, 64-bit
  backend      "universal-hash" | "random-table"
  rate         "max-feasible" (default) | "planned" | explicit number
  out          output directory (overridden by --out)
  lemma3 mode extras: n_bits, out_frac, fixed_frac, margin_frac, subset_cap
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import acceptance, bits, oracle
from ._accel import backend_name
from .channel import ChannelParams
from .errors import ErasotError, InfeasibleParams, OracleScaleError, ParamError
from .extractor import BACKENDS, UNIVERSAL_HASH
from .protocol import max_feasible_rate, plan, run_protocol
from .rng import as_seed_sequence, generator

MODES = ("single", "sweep", "oracle-leakage", "lemma3", "abort-curve")

CSV_COLUMNS = [
    "eps1", "eps2", "n", "delta", "r", "m", "trials", "aborts",
    "abort_ci_lo", "abort_ci_hi", "decode_failures", "lower_bound",
    "upper_bound", "realized_rate", "backend", "master_seed", "mode",
    "mi_alice_choice", "mi_bob_other_key", "mi_eve_secrets",
    "decode_error_prob", "joint_deficit", "unchosen_deficit",
    "violation_rate", "scan_threshold", "subsets_enumerated", "subsets_total",
]

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_SCALE = 3


class ConfigError(ErasotError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    eps1: tuple[float, ...]
    eps2: tuple[float, ...]
    n: tuple[int, ...]
    delta: float
    trials: int
    master_seed: int
    backend: str
    rate: str | float
    out: str
    n_bits: int = 16
    out_frac: float = 0.25
    fixed_frac: float = 0.25
    margin_frac: float = 0.25
    subset_cap: int = 128

    def echo(self) -> dict:
        return {
            "mode": self.mode, "eps1": list(self.eps1), "eps2": list(self.eps2),
            "n": list(self.n), "delta": self.delta, "trials": self.trials,
            "master_seed": f"{self.master_seed:016x}", "backend": self.backend,
            "rate": self.rate, "n_bits": self.n_bits, "out_frac": self.out_frac,
            "fixed_frac": self.fixed_frac, "margin_frac": self.margin_frac,
            "subset_cap": self.subset_cap,
        }


def _parse_seed(text) -> int:
    if isinstance(text, int):
        value = text
    else:
        value = int(str(text).removeprefix("0x"), 16)
    if not 0 <= value < 2**64:
        raise ConfigError("master_seed must be a 64-bit unsigned value")
    return value


def load_config(path: str, *, seed_override: int | None = None,
                out_override: str | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    def grab(key, default=None, required=False):
        if key in raw:
            return raw[key]
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default

    mode = grab("mode", required=True)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    try:
        eps1 = tuple(float(v) for v in grab("eps1", [0.5]))
        eps2 = tuple(float(v) for v in grab("eps2", [0.8]))
        ns = tuple(int(v) for v in grab("n", [500]))
        delta = float(grab("delta", 0.05))
        trials = int(grab("trials", required=True))
        master_seed = _parse_seed(grab("master_seed", required=True))
        backend = grab("backend", UNIVERSAL_HASH)
        rate = grab("rate", "max-feasible")
        out = out_override or grab("out", "out")
        cfg = ExperimentConfig(
            mode=mode, eps1=eps1, eps2=eps2, n=ns, delta=delta, trials=trials,
            master_seed=master_seed if seed_override is None else seed_override,
            backend=backend, rate=rate, out=out,
            n_bits=int(grab("n_bits", 16)), out_frac=float(grab("out_frac", 0.25)),
            fixed_frac=float(grab("fixed_frac", 0.25)),
            margin_frac=float(grab("margin_frac", 0.25)),
            subset_cap=int(grab("subset_cap", 128)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc

    if not cfg.eps1 or not cfg.eps2 or not cfg.n:
        raise ConfigError("grids must be nonempty")
    if not all(0.0 <= e <= 1.0 for e in cfg.eps1 + cfg.eps2):
        raise ConfigError("erasure probabilities must lie in [0, 1]")
    if not (0.0 < cfg.delta < 1.0):
        raise ConfigError("delta must lie in (0, 1)")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}")
    if mode == "single" and (len(cfg.eps1) != 1 or len(cfg.eps2) != 1 or len(cfg.n) != 1):
        raise ConfigError("single mode takes exactly one grid cell")
    if not isinstance(cfg.rate, (int, float)) and cfg.rate not in ("max-feasible", "planned"):
        raise ConfigError("rate must be a number, 'max-feasible', or 'planned'")
    return cfg


def _resolve_rate(cfg: ExperimentConfig, n: int, channel: ChannelParams) -> float:
    if isinstance(cfg.rate, (int, float)):
        return float(cfg.rate)
    if cfg.rate == "planned":
        return None  # plan() applies the formula itself
    try:
        return max_feasible_rate(n, cfg.delta, channel)
    except InfeasibleParams:
        return 1.0 / n  # always-aborting operating point; exercises the abort path


def _blank_row(cfg: ExperimentConfig, eps1, eps2, n) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row.update(eps1=eps1, eps2=eps2, n=n, delta=cfg.delta, trials=cfg.trials,
               backend=cfg.backend, master_seed=f"{cfg.master_seed:016x}",
               mode=cfg.mode)
    return row


def _run_trial_block(pcfg, cfg: ExperimentConfig, cell_idx: int,
                     lo: int, hi: int) -> tuple[int, int, int]:
    aborts = decoded = failures = 0
    for t in range(lo, hi):
        ss = as_seed_sequence((cfg.master_seed, cell_idx, t))
        input_ss, run_ss = ss.spawn(2)
        gen = generator(input_ss)
        k0 = bits.random_bits(gen, pcfg.key_len)
        k1 = bits.random_bits(gen, pcfg.key_len)
        u = int(gen.integers(0, 2))
        outcome = run_protocol(pcfg, k0, k1, u, run_ss)
        if outcome.aborted:
            aborts += 1
            continue
        decoded += 1
        if not np.array_equal(outcome.decoded_key, k0 if u == 0 else k1):
            failures += 1
    return aborts, decoded, failures


def _protocol_cell(cfg: ExperimentConfig, cell_idx: int, eps1: float,
                   eps2: float, n: int, threads: int) -> dict:
    channel = ChannelParams(eps1, eps2)
    rate = _resolve_rate(cfg, n, channel)
    pcfg = plan(n, cfg.delta, channel, rate=rate, backend=cfg.backend)
    bounds = oracle.capacity_bounds(channel)

    if threads > 1:
        edges = np.linspace(0, cfg.trials, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda i: _run_trial_block(pcfg, cfg, cell_idx,
                                           int(edges[i]), int(edges[i + 1])),
                range(threads)))
    else:
        parts = [_run_trial_block(pcfg, cfg, cell_idx, 0, cfg.trials)]
    aborts = sum(p[0] for p in parts)
    failures = sum(p[2] for p in parts)
    lo, hi = oracle.wilson_interval(aborts, cfg.trials)

    row = _blank_row(cfg, eps1, eps2, n)
    row.update(r=f"{pcfg.rate:.10g}", m=pcfg.key_len, aborts=aborts,
               abort_ci_lo=f"{lo:.8f}", abort_ci_hi=f"{hi:.8f}",
               decode_failures=failures, lower_bound=f"{bounds.lower:.10g}",
               upper_bound=f"{bounds.upper:.10g}",
               realized_rate=f"{pcfg.realized_rate:.10g}")
    return row


def _abort_cell(cfg: ExperimentConfig, cell_idx: int, eps1: float,
                eps2: float, n: int) -> dict:
    channel = ChannelParams(eps1, eps2)
    rate = _resolve_rate(cfg, n, channel)
    pcfg = plan(n, cfg.delta, channel, rate=rate, backend=cfg.backend)
    est = oracle.estimate_abort_probability(
        pcfg, cfg.trials, (cfg.master_seed, cell_idx))
    bounds = oracle.capacity_bounds(channel)
    row = _blank_row(cfg, eps1, eps2, n)
    row.update(r=f"{pcfg.rate:.10g}", m=pcfg.key_len, aborts=est.aborts,
               abort_ci_lo=f"{est.ci_low:.8f}", abort_ci_hi=f"{est.ci_high:.8f}",
               decode_failures=0, lower_bound=f"{bounds.lower:.10g}",
               upper_bound=f"{bounds.upper:.10g}",
               realized_rate=f"{pcfg.realized_rate:.10g}")
    return row


def _leakage_cell(cfg: ExperimentConfig, eps1: float, eps2: float,
                  n: int) -> tuple[dict, dict]:
    channel = ChannelParams(eps1, eps2)
    rate = _resolve_rate(cfg, n, channel)
    pcfg = plan(n, cfg.delta, channel, rate=rate, backend="random-table")
    seeds = list(range(cfg.trials))
    leak = oracle.exact_leakage(pcfg, seeds)
    deficit = oracle.key_entropy_deficit(pcfg, seeds)
    bounds = oracle.capacity_bounds(channel)
    row = _blank_row(cfg, eps1, eps2, n)
    row.update(r=f"{pcfg.rate:.10g}", m=pcfg.key_len, aborts="",
               decode_failures=0, lower_bound=f"{bounds.lower:.10g}",
               upper_bound=f"{bounds.upper:.10g}",
               realized_rate=f"{pcfg.realized_rate:.10g}",
               mi_alice_choice=f"{leak.mi_alice_choice:.10g}",
               mi_bob_other_key=f"{leak.mi_bob_other_key:.10g}",
               mi_eve_secrets=f"{leak.mi_eve_secrets:.10g}",
               decode_error_prob=f"{leak.decode_error_prob:.10g}",
               joint_deficit=f"{deficit.joint_deficit:.10g}",
               unchosen_deficit=f"{deficit.unchosen_deficit:.10g}")
    extras = {
        "per_seed": {
            "alice_choice": list(leak.per_seed_alice_choice),
            "bob_other_key": list(leak.per_seed_bob_other_key),
            "eve_secrets": list(leak.per_seed_eve_secrets),
            "joint_deficit": list(deficit.per_seed_joint),
            "unchosen_deficit": list(deficit.per_seed_unchosen),
        },
        "non_abort_prob": leak.non_abort_prob,
    }
    return row, extras


def _lemma3_cell(cfg: ExperimentConfig) -> dict:
    rep = oracle.random_map_violation_rate(
        cfg.n_bits, cfg.out_frac, cfg.fixed_frac, cfg.margin_frac, cfg.trials,
        (cfg.master_seed, 0xE7), subset_cap=cfg.subset_cap)
    row = _blank_row(cfg, "", "", cfg.n_bits)
    row.update(decode_failures=0, violation_rate=f"{rep.violation_rate:.10g}",
               scan_threshold=f"{rep.threshold:.10g}",
               subsets_enumerated=rep.subsets_enumerated,
               subsets_total=rep.subsets_total)
    return row


def _write_reports(out_dir: str, cfg: ExperimentConfig, rows: list[dict],
                   extras: dict, wall_time: float) -> None:
    os.makedirs(out_dir, exist_ok=True)
    csv_buf = io.StringIO()
    writer = csv.DictWriter(csv_buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _atomic_write(os.path.join(out_dir, "report.csv"), csv_buf.getvalue())

    payload = {
        "schema": "erasot-report/1",
        "config": cfg.echo(),
        "rows": rows,
        "extras": extras,
        "meta": {"wall_time_s": round(wall_time, 3), "kernel_lane": backend_name()},
    }
    _atomic_write(os.path.join(out_dir, "report.json"),
                  json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _atomic_write(path: str, content: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)


def run(config_path: str, *, out_dir: str | None = None, threads: int = 1,
        seed: int | None = None) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        cfg = load_config(config_path, seed_override=seed, out_override=out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    started = time.monotonic()
    rows: list[dict] = []
    extras: dict = {}
    try:
        if cfg.mode in ("single", "sweep"):
            cell = 0
            for n in cfg.n:
                for eps1 in cfg.eps1:
                    for eps2 in cfg.eps2:
                        rows.append(_protocol_cell(cfg, cell, eps1, eps2, n, threads))
                        cell += 1
        elif cfg.mode == "abort-curve":
            cell = 0
            for n in cfg.n:
                for eps1 in cfg.eps1:
                    for eps2 in cfg.eps2:
                        rows.append(_abort_cell(cfg, cell, eps1, eps2, n))
                        cell += 1
        elif cfg.mode == "oracle-leakage":
            for n in cfg.n:
                for eps1 in cfg.eps1:
                    for eps2 in cfg.eps2:
                        row, cell_extras = _leakage_cell(cfg, eps1, eps2, n)
                        rows.append(row)
                        extras[f"cell_{len(rows)-1}"] = cell_extras
        elif cfg.mode == "lemma3":
            rows.append(_lemma3_cell(cfg))
    except (OracleScaleError, ParamError) as exc:
        print(f"scale limit: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except InfeasibleParams as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _write_reports(cfg.out, cfg, rows, extras, time.monotonic() - started)
    failures = sum(int(r["decode_failures"] or 0) for r in rows)
    if failures > 0:
        print(f"invariant violation: {failures} decode failures", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def verify(*, list_only: bool = False) -> int:
    """Run (or list) the bundled acceptance checks; exit 1 on any failure."""
    if list_only:
        for name, _ in acceptance.CHECKS:
            print(name)
        return EXIT_OK
    results = acceptance.run_all()
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="erasot", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--seed", default=None, help="hex master seed override")

    p_verify = sub.add_parser("verify", help="run the bundled check suite")
    p_verify.add_argument("--list", action="store_true", dest="list_only",
                          help="print check names without running")

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            seed = None if args.seed is None else _parse_seed(args.seed)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return run(args.config, out_dir=args.out, threads=args.threads, seed=seed)
    return verify(list_only=args.list_only)


if __name__ == "__main__":
    sys.exit(main())
