"""Benchmark harness: seeded Monte-Carlo sweeps over the two-stage pipeline.

Three experiments are provided: a noise-robustness sweep over SNR levels, a
minimum-measurement search per sparsity level, and a runtime-scaling run
across ambient dimensions at fixed compressed size.  Every table is a pure
function of (config, base_seed): per-trial seeds derive as
``sha256(base_seed | experiment | point key | trial | role)`` truncated to
64 bits, with roles "ensemble", "signal", "noise".  Wall-clock timing
columns are the one exception to bit-reproducibility; set
``record_timings=False`` to emit byte-identical files.
"""

import csv
import hashlib
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bpdn import BpdnOptions
from .ensembles import CS_KINDS, PHASE_KINDS, add_noise, forward, make_ensemble
from .phaselift import PhaseliftOptions
from .pipeline import RecoverOptions, recover
from .signals import gen_sparse_signal

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "TrialRecord",
    "derive_trial_seed",
    "eval_m_rule",
    "eval_m_tilde_rule",
    "run_noise_sweep",
    "find_min_measurements",
    "run_runtime_scaling",
    "write_csv",
    "write_summary",
]

CSV_HEADER = [
    "experiment",
    "n",
    "s",
    "m",
    "m_tilde",
    "snr_db",
    "trial",
    "seed_ensemble",
    "seed_signal",
    "seed_noise",
    "relative_l2",
    "relative_db",
    "success",
    "stage1_seconds",
    "stage2_seconds",
    "stage1_iters",
    "stage2_iters",
    "total_seconds",
]

DEFAULT_M_RULE = "ceil(1.75*s*ln(n/s))"
DEFAULT_M_TILDE_RULE = "ceil(14*s*ln(n/s))"

_RULE_LOG = re.compile(r"^ceil\(\s*([0-9]*\.?[0-9]+)\s*\*\s*s\s*\*\s*ln\(\s*n\s*/\s*s\s*\)\s*\)$")
_RULE_MULT_M = re.compile(r"^([0-9]*\.?[0-9]+)\s*\*\s*m$")


def eval_m_rule(rule, n, s):
    """Resolve a compressed-dimension rule: an integer or ceil(A*s*ln(n/s))."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        return int(rule)
    text = str(rule).strip()
    if text.isdigit():
        return int(text)
    match = _RULE_LOG.match(text)
    if match:
        return math.ceil(float(match.group(1)) * s * math.log(n / s))
    raise ValueError(f"unrecognized m rule {rule!r}")


def eval_m_tilde_rule(rule, n, s, m):
    """Resolve a magnitude-measurement rule: integer, A*m, or ceil(A*s*ln(n/s))."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        return int(rule)
    text = str(rule).strip()
    if text.isdigit():
        return int(text)
    match = _RULE_MULT_M.match(text)
    if match:
        return math.ceil(float(match.group(1)) * m)
    match = _RULE_LOG.match(text)
    if match:
        return math.ceil(float(match.group(1)) * s * math.log(n / s))
    raise ValueError(f"unrecognized m_tilde rule {rule!r}")


@dataclass
class ExperimentConfig:
    """Shared experiment configuration; unused fields are ignored per experiment."""

    n: int = 0
    s: int | None = None
    s_list: list | None = None  # overrides s for multi-sparsity sweeps
    m_rule: object = DEFAULT_M_RULE
    m_tilde_rule: object = DEFAULT_M_TILDE_RULE
    trials: int = 100
    snr_list: list | None = None  # dB values; inf (or None) means noiseless
    success_threshold: float = 1e-5
    base_seed: int | None = None
    p_kind: str = "complex-gaussian"
    c_kind: str = "real-gaussian"
    phaselift: PhaseliftOptions = field(default_factory=PhaseliftOptions)
    bpdn: BpdnOptions = field(default_factory=BpdnOptions)
    eta: float | None = None
    oracle_eta: bool = False
    record_timings: bool = True
    fixed_ensemble: bool = False  # share one ensemble across trials of a point
    n_list: list | None = None  # runtime-scaling dimensions

    def sparsity_levels(self):
        if self.s_list is not None:
            return [int(v) for v in self.s_list]
        if self.s is None:
            raise ValueError("config requires either s or s_list")
        return [int(self.s)]

    def validate(self):
        if self.base_seed is None:
            raise ValueError("config requires base_seed: bench runs must be seeded")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.p_kind not in PHASE_KINDS:
            raise ValueError(f"unknown p_kind {self.p_kind!r}")
        if self.c_kind not in CS_KINDS:
            raise ValueError(f"unknown c_kind {self.c_kind!r}")
        for s in self.sparsity_levels():
            m = eval_m_rule(self.m_rule, self.n, s)
            if not m < self.n:
                raise ValueError(f"m={m} must be < n={self.n} (s={s})")
            mt = eval_m_tilde_rule(self.m_tilde_rule, self.n, s, m)
            if mt < m:
                raise ValueError(f"m_tilde={mt} must be >= m={m} (s={s})")


@dataclass(frozen=True)
class Point:
    """One grid point of an experiment sweep."""

    n: int
    s: int
    m: int
    m_tilde: int
    snr_db: float

    def key(self):
        return f"n={self.n};s={self.s};m={self.m};mt={self.m_tilde};snr={_fmt(self.snr_db)}"


@dataclass
class TrialRecord:
    experiment: str
    n: int
    s: int
    m: int
    m_tilde: int
    snr_db: float
    trial: int
    seed_ensemble: int
    seed_signal: int
    seed_noise: int
    relative_l2: float
    relative_db: float
    success: bool
    stage1_seconds: float
    stage2_seconds: float
    stage1_iters: int
    stage2_iters: int
    total_seconds: float


def _fmt(x):
    return repr(float(x))


def record_to_row(r):
    return [
        r.experiment,
        str(r.n),
        str(r.s),
        str(r.m),
        str(r.m_tilde),
        _fmt(r.snr_db),
        str(r.trial),
        str(r.seed_ensemble),
        str(r.seed_signal),
        str(r.seed_noise),
        _fmt(r.relative_l2),
        _fmt(r.relative_db),
        "true" if r.success else "false",
        _fmt(r.stage1_seconds),
        _fmt(r.stage2_seconds),
        str(r.stage1_iters),
        str(r.stage2_iters),
        _fmt(r.total_seconds),
    ]


def write_csv(records, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(record_to_row(record))


def write_summary(summary, path):
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def derive_trial_seed(base_seed, experiment, point_key, trial, role):
    """Stable 64-bit seed for one (trial, role); see the module docstring."""
    message = f"{base_seed}|{experiment}|{point_key}|{trial}|{role}".encode()
    return int.from_bytes(hashlib.sha256(message).digest()[:8], "big")


def _run_one_trial(experiment, config, point, trial):
    key = point.key()
    ensemble_trial = 0 if config.fixed_ensemble else trial
    seed_e = derive_trial_seed(config.base_seed, experiment, key, ensemble_trial, "ensemble")
    seed_s = derive_trial_seed(config.base_seed, experiment, key, trial, "signal")
    seed_n = derive_trial_seed(config.base_seed, experiment, key, trial, "noise")

    ensemble = make_ensemble(
        point.n, point.m, point.m_tilde, p_kind=config.p_kind, c_kind=config.c_kind, seed=seed_e
    )
    signal = gen_sparse_signal(point.n, point.s, np.random.default_rng(seed_s))
    clean = forward(ensemble, signal.values)
    measurements = add_noise(clean, point.snr_db, np.random.default_rng(seed_n))

    opts = RecoverOptions(
        phaselift=config.phaselift,
        bpdn=config.bpdn,
        eta=config.eta,
        oracle_eta=config.oracle_eta,
        success_threshold=config.success_threshold,
    )
    result = recover(ensemble, measurements.b, opts, ground_truth=signal)

    timings = config.record_timings
    return TrialRecord(
        experiment=experiment,
        n=point.n,
        s=point.s,
        m=point.m,
        m_tilde=point.m_tilde,
        snr_db=float(point.snr_db),
        trial=trial,
        seed_ensemble=seed_e,
        seed_signal=seed_s,
        seed_noise=seed_n,
        relative_l2=result.error.relative_l2,
        relative_db=result.error.relative_db,
        success=bool(result.success),
        stage1_seconds=result.stage1.seconds if timings else 0.0,
        stage2_seconds=result.stage2.seconds if timings else 0.0,
        stage1_iters=result.stage1.iterations,
        stage2_iters=result.stage2.iterations,
        total_seconds=result.total_seconds if timings else 0.0,
    )


def _trial_worker(task):
    experiment, config, point, trial = task
    return _run_one_trial(experiment, config, point, trial)


class Checkpoint:
    """Append-only JSON-lines store of finished trials, keyed for resume."""

    def __init__(self, path):
        self.path = Path(path) if path is not None else None
        self.done = {}
        if self.path is not None and self.path.exists():
            with open(self.path) as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    self.done[entry["key"]] = TrialRecord(**entry["record"])

    @staticmethod
    def key(experiment, point, trial):
        return f"{experiment}|{point.key()}|{trial}"

    def add(self, experiment, point, trial, record):
        key = self.key(experiment, point, trial)
        self.done[key] = record
        if self.path is not None:
            with open(self.path, "a") as handle:
                handle.write(json.dumps({"key": key, "record": asdict(record)}) + "\n")

    def get(self, experiment, point, trial):
        return self.done.get(self.key(experiment, point, trial))


def _run_point(experiment, config, point, checkpoint, threads, progress):
    """All trials of one grid point, in canonical trial order."""
    pending = [
        t for t in range(config.trials) if checkpoint.get(experiment, point, t) is None
    ]
    if progress and pending:
        print(f"[{experiment}] {point.key()}: {len(pending)} trials", file=sys.stderr, flush=True)
    if threads > 1 and len(pending) > 1:
        tasks = [(experiment, config, point, t) for t in pending]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for trial, record in zip(pending, pool.map(_trial_worker, tasks)):
                checkpoint.add(experiment, point, trial, record)
    else:
        for trial in pending:
            checkpoint.add(experiment, point, trial, _run_one_trial(experiment, config, point, trial))
    return [checkpoint.get(experiment, point, t) for t in range(config.trials)]


def _success_stats(records):
    successes = sum(1 for r in records if r.success)
    return successes, successes / len(records) if records else 0.0


def _point_summary(point, records):
    rel_db = np.array([r.relative_db for r in records])
    rel_l2 = np.array([r.relative_l2 for r in records])
    successes, rate = _success_stats(records)
    return {
        "n": point.n,
        "s": point.s,
        "m": point.m,
        "m_tilde": point.m_tilde,
        "snr_db": float(point.snr_db),
        "trials": len(records),
        "mean_relative_db": float(np.mean(rel_db)),
        "mean_relative_l2": float(np.mean(rel_l2)),
        "db_of_mean_relative_l2": float(20.0 * np.log10(np.mean(rel_l2)))
        if np.mean(rel_l2) > 0
        else float("-inf"),
        "success_count": successes,
        "success_rate": rate,
        "mean_stage1_seconds": float(np.mean([r.stage1_seconds for r in records])),
        "mean_stage2_seconds": float(np.mean([r.stage2_seconds for r in records])),
        "mean_total_seconds": float(np.mean([r.total_seconds for r in records])),
        "mean_stage1_iters": float(np.mean([r.stage1_iters for r in records])),
        "mean_stage2_iters": float(np.mean([r.stage2_iters for r in records])),
    }


def _config_echo(config):
    echo = asdict(config)
    echo["m_rule"] = str(config.m_rule) if not isinstance(config.m_rule, int) else config.m_rule
    return echo


def run_noise_sweep(config, checkpoint_path=None, threads=1, progress=False):
    """Noise-robustness sweep: fresh seeded trials at each (sparsity, SNR) point.

    Returns (records, summary); solver non-convergence shows up in the rows,
    never aborts the sweep.
    """
    config.validate()
    snrs = config.snr_list if config.snr_list else [float("inf")]
    points = []
    for s in config.sparsity_levels():
        m = eval_m_rule(config.m_rule, config.n, s)
        mt = eval_m_tilde_rule(config.m_tilde_rule, config.n, s, m)
        for snr in snrs:
            points.append(Point(n=config.n, s=s, m=m, m_tilde=mt, snr_db=float(snr)))
    checkpoint = Checkpoint(checkpoint_path)
    records = []
    point_summaries = []
    for point in points:
        rows = _run_point("noise", config, point, checkpoint, threads, progress)
        records.extend(rows)
        point_summaries.append(_point_summary(point, rows))
    summary = {
        "experiment": "noise",
        "config": _config_echo(config),
        "points": point_summaries,
    }
    return records, summary


def find_min_measurements(
    config,
    success_rate=0.95,
    m_tilde_start=None,
    step=1,
    m_tilde_cap_factor=40,
    checkpoint_path=None,
    threads=1,
    progress=False,
):
    """Smallest measurement count reaching the target success rate, per sparsity.

    Noiseless only.  For each s, sweeps m_tilde upward from ``m_tilde_start``
    (default: m) in increments of ``step`` until at least
    ``ceil(success_rate * trials)`` trials succeed, recording the first
    passing level and the average runtime there.  Gives up at
    ``m_tilde_cap_factor * m`` and reports the level as not found.
    """
    config.validate()
    if config.snr_list and any(np.isfinite(v) for v in config.snr_list):
        raise ValueError("minimum-measurement search is defined for noiseless trials only")
    checkpoint = Checkpoint(checkpoint_path)
    records = []
    table = []
    needed = math.ceil(success_rate * config.trials)
    for s in config.sparsity_levels():
        m = eval_m_rule(config.m_rule, config.n, s)
        start = m if m_tilde_start is None else int(m_tilde_start)
        if start < m:
            raise ValueError(f"m_tilde_start={start} must be >= m={m}")
        if needed == 0:
            table.append(
                {"s": s, "m": m, "m_tilde_min": start, "success_rate": 0.0,
                 "avg_seconds": 0.0, "found": True}
            )
            continue
        cap = m_tilde_cap_factor * m
        mt = start
        found = False
        while mt <= cap:
            point = Point(n=config.n, s=s, m=m, m_tilde=mt, snr_db=float("inf"))
            rows = _run_point("min-measurements", config, point, checkpoint, threads, progress)
            records.extend(rows)
            successes, rate = _success_stats(rows)
            if successes >= needed:
                table.append(
                    {
                        "s": s,
                        "m": m,
                        "m_tilde_min": mt,
                        "success_rate": rate,
                        "avg_seconds": float(np.mean([r.total_seconds for r in rows])),
                        "found": True,
                    }
                )
                found = True
                break
            mt += step
        if not found:
            table.append(
                {"s": s, "m": m, "m_tilde_min": None, "success_rate": None,
                 "avg_seconds": None, "found": False}
            )
    summary = {
        "experiment": "min-measurements",
        "config": _config_echo(config),
        "success_rate_target": success_rate,
        "table": table,
    }
    return records, summary


def run_runtime_scaling(config, checkpoint_path=None, threads=1, progress=False):
    """Time the pipeline across ambient dimensions at a fixed compressed size.

    The stage-1 solver never touches the ambient dimension, so its average
    time should be flat across ``config.n_list`` whenever the m rule pins a
    constant m; stage-2 cost is proportional to n per iteration.  The
    summary reports the per-n averages, the max/min ratio of stage-1 means,
    and the least-squares slope of stage-1 seconds against n.
    """
    if not config.n_list or len(config.n_list) < 2:
        raise ValueError("runtime scaling requires n_list with at least two dimensions")
    if not config.record_timings:
        raise ValueError("runtime scaling requires record_timings=True")
    if config.snr_list and any(np.isfinite(v) for v in config.snr_list):
        raise ValueError("runtime scaling is defined for noiseless trials only")
    s = config.sparsity_levels()[0]
    checkpoint = Checkpoint(checkpoint_path)
    records = []
    rows_by_n = {}
    for n in config.n_list:
        m = eval_m_rule(config.m_rule, n, s)
        if m >= n:
            raise ValueError(f"m={m} must be < n={n}")
        mt = eval_m_tilde_rule(config.m_tilde_rule, n, s, m)
        point = Point(n=int(n), s=s, m=m, m_tilde=mt, snr_db=float("inf"))
        base = ExperimentConfig(**{**asdict_config(config), "n": int(n)})
        rows = _run_point("runtime", base, point, checkpoint, threads, progress)
        records.extend(rows)
        rows_by_n[int(n)] = rows

    per_n = []
    for n, rows in sorted(rows_by_n.items()):
        per_n.append(
            {
                "n": n,
                "s": s,
                "m": rows[0].m,
                "m_tilde": rows[0].m_tilde,
                "avg_stage1_seconds": float(np.mean([r.stage1_seconds for r in rows])),
                "avg_stage2_seconds": float(np.mean([r.stage2_seconds for r in rows])),
                "avg_total_seconds": float(np.mean([r.total_seconds for r in rows])),
            }
        )
    stage1_means = [row["avg_stage1_seconds"] for row in per_n]
    ns = np.array([row["n"] for row in per_n], dtype=float)
    times = np.array(
        [r.stage1_seconds for n in sorted(rows_by_n) for r in rows_by_n[n]], dtype=float
    )
    ns_all = np.array(
        [n for n in sorted(rows_by_n) for _ in rows_by_n[n]], dtype=float
    )
    slope = float(np.polyfit(ns_all, times, 1)[0]) if ns_all.size >= 2 else 0.0
    summary = {
        "experiment": "runtime",
        "config": _config_echo(config),
        "per_n": per_n,
        "stage1_ratio_max_min": float(max(stage1_means) / max(min(stage1_means), 1e-12)),
        "stage1_slope_seconds_per_n": slope,
        "stage2_increasing": bool(
            per_n[-1]["avg_stage2_seconds"] > per_n[0]["avg_stage2_seconds"]
        ),
    }
    return records, summary


def asdict_config(config):
    """Shallow dict of config fields with nested option objects preserved."""
    return {f.name: getattr(config, f.name) for f in fields(config)}
