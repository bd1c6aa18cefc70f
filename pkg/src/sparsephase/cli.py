"""Command-line entry point: recovery runs, experiment sweeps, matrix checks.

Configuration comes from a JSON file plus ``--set key=value`` overrides
(dotted keys reach nested sections); flags win over file values.  Unknown
keys are rejected by name and every output embeds the fully resolved
config, so a run is reproducible from its artifacts alone.

Exit codes: 0 success, 1 usage or config error, 2 solver non-convergence.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench
from .analysis import brute_force_ric, check_cx_bounds, probe_nsp
from .bpdn import BpdnOptions
from .ensembles import CS_KINDS, PHASE_KINDS, add_noise, forward, gen_cs_matrix, load_ensemble, make_ensemble
from .errors import NumericalError
from .phaselift import PhaseliftOptions
from .pipeline import RecoverOptions, recover
from .signals import gen_sparse_signal

__all__ = ["main"]


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # the exit-code contract reserves 2 for solver non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_SOLVER_SCHEMA = {
    "phaselift": {
        "max_iters": None, "tol": None, "lam": None, "power_iters": None,
        "eta_floor": None, "kappa": None,
    },
    "bpdn": {"tol": None, "max_iters": None, "rho": None, "adaptive": None},
}

_RECOVER_SCHEMA = {
    "n": None, "s": None, "m_rule": None, "m_tilde_rule": None, "seed": None,
    "snr_db": None, "p_kind": None, "c_kind": None, "eta": None, "oracle_eta": None,
    "success_threshold": None, "solver": _SOLVER_SCHEMA,
    "ensemble_file": None, "measurements_file": None, "truth_file": None,
}

_BENCH_SCHEMA = {
    "n": None, "s": None, "s_list": None, "m_rule": None, "m_tilde_rule": None,
    "trials": None, "snr_list": None, "success_threshold": None, "base_seed": None,
    "p_kind": None, "c_kind": None, "eta": None, "oracle_eta": None,
    "record_timings": None, "fixed_ensemble": None, "n_list": None,
    "solver": _SOLVER_SCHEMA,
    "success_rate": None, "m_tilde_start": None, "step": None, "m_tilde_cap_factor": None,
}

_CHECK_SCHEMA = {
    "n": None, "m": None, "s": None, "rho": None, "tau": None, "probes": None,
    "c_kind": None, "seed": None, "x_samples": None, "matrix_file": None,
}


def _validate_keys(cfg, schema, path=""):
    for key, value in cfg.items():
        if key not in schema:
            raise ConfigError(f"unknown config key: {path}{key}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path}{key} must be a table")
            _validate_keys(value, sub, f"{path}{key}.")


def _require(cfg, key):
    if cfg.get(key) is None:
        raise ConfigError(f"missing required config key: {key}")
    return cfg[key]


def _load_config(args):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set key {key!r} descends into a non-table value")
        node[parts[-1]] = value
    return cfg


def _solver_options(cfg):
    solver = cfg.get("solver", {})
    pl = PhaseliftOptions(**solver.get("phaselift", {}))
    bp = BpdnOptions(**solver.get("bpdn", {}))
    return pl, bp


def _recover_options(cfg):
    pl, bp = _solver_options(cfg)
    return RecoverOptions(
        phaselift=pl,
        bpdn=bp,
        eta=cfg.get("eta"),
        oracle_eta=bool(cfg.get("oracle_eta", False)),
        success_threshold=float(cfg.get("success_threshold", 1e-5)),
    )


def _prepare_out(out, force, filenames):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name in filenames:
        target = out / name
        if target.exists() and not force:
            raise ConfigError(f"refusing to overwrite {target}; pass --force")
        if target.exists():
            target.unlink()
    return out


def _cmd_recover(args):
    cfg = _load_config(args)
    _validate_keys(cfg, _RECOVER_SCHEMA)
    opts = _recover_options(cfg)
    truth = None

    if cfg.get("ensemble_file"):
        ensemble = load_ensemble(cfg["ensemble_file"])
        measurements_file = _require(cfg, "measurements_file")
        b = np.load(measurements_file)
        if b.shape != (ensemble.m_tilde,):
            raise ConfigError(
                f"measurement file length {b.shape} does not match ensemble m_tilde={ensemble.m_tilde}"
            )
        if cfg.get("truth_file"):
            truth = np.load(cfg["truth_file"])
        seeds = {}
    else:
        n = int(_require(cfg, "n"))
        s = int(_require(cfg, "s"))
        seed = int(cfg.get("seed", 0))
        m = bench.eval_m_rule(cfg.get("m_rule", bench.DEFAULT_M_RULE), n, s)
        m_tilde = bench.eval_m_tilde_rule(cfg.get("m_tilde_rule", "8*m"), n, s, m)
        key = f"n={n};s={s};m={m};mt={m_tilde}"
        seeds = {
            role: bench.derive_trial_seed(seed, "recover", key, 0, role)
            for role in ("ensemble", "signal", "noise")
        }
        ensemble = make_ensemble(
            n, m, m_tilde,
            p_kind=cfg.get("p_kind", "complex-gaussian"),
            c_kind=cfg.get("c_kind", "real-gaussian"),
            seed=seeds["ensemble"],
        )
        truth = gen_sparse_signal(n, s, np.random.default_rng(seeds["signal"]))
        clean = forward(ensemble, truth.values)
        snr = cfg.get("snr_db", float("inf"))
        snr = float("inf") if snr is None else float(snr)
        b = add_noise(clean, snr, np.random.default_rng(seeds["noise"])).b

    result = recover(ensemble, b, opts, ground_truth=truth)
    out = _prepare_out(args.out, args.force, ["result.json", "x_hat.npy"])
    np.save(out / "x_hat.npy", result.x_hat)
    payload = {
        "config": cfg,
        "seeds": seeds,
        "eta_used": result.eta_used,
        "stage1": asdict(result.stage1),
        "stage2": asdict(result.stage2),
        "total_seconds": result.total_seconds,
        "error": asdict(result.error) if result.error is not None else None,
        "success": result.success,
    }
    (out / "result.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'result.json'}")
    if not (result.stage1.converged and result.stage2.converged):
        return 2
    return 0


def _bench_config(cfg):
    pl, bp = _solver_options(cfg)
    if cfg.get("base_seed") is None:
        raise ConfigError("missing required config key: base_seed")
    fields = {
        "n": int(_require(cfg, "n")),
        "s": cfg.get("s"),
        "s_list": cfg.get("s_list"),
        "m_rule": cfg.get("m_rule", bench.DEFAULT_M_RULE),
        "m_tilde_rule": cfg.get("m_tilde_rule", bench.DEFAULT_M_TILDE_RULE),
        "trials": int(cfg.get("trials", 100)),
        "snr_list": cfg.get("snr_list"),
        "success_threshold": float(cfg.get("success_threshold", 1e-5)),
        "base_seed": int(cfg["base_seed"]),
        "p_kind": cfg.get("p_kind", "complex-gaussian"),
        "c_kind": cfg.get("c_kind", "real-gaussian"),
        "phaselift": pl,
        "bpdn": bp,
        "eta": cfg.get("eta"),
        "oracle_eta": bool(cfg.get("oracle_eta", False)),
        "record_timings": bool(cfg.get("record_timings", True)),
        "fixed_ensemble": bool(cfg.get("fixed_ensemble", False)),
        "n_list": cfg.get("n_list"),
    }
    if fields["snr_list"] is not None:
        fields["snr_list"] = [float("inf") if v in (None, "inf") else float(v) for v in fields["snr_list"]]
    return bench.ExperimentConfig(**fields)


def _cmd_bench(args):
    cfg = _load_config(args)
    _validate_keys(cfg, _BENCH_SCHEMA)
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    config = _bench_config(cfg)
    experiment = args.experiment
    out = _prepare_out(args.out, args.force, [f"{experiment}.csv", f"{experiment}-summary.json"])
    checkpoint = out / f"{experiment}-checkpoint.jsonl"
    if args.force and checkpoint.exists():
        checkpoint.unlink()

    try:
        if experiment == "noise":
            if not config.snr_list:
                raise ConfigError("missing required config key: snr_list")
            records, summary = bench.run_noise_sweep(
                config, checkpoint_path=checkpoint, threads=args.threads, progress=True
            )
        elif experiment == "min-measurements":
            records, summary = bench.find_min_measurements(
                config,
                success_rate=float(cfg.get("success_rate", 0.95)),
                m_tilde_start=cfg.get("m_tilde_start"),
                step=int(cfg.get("step", 1)),
                m_tilde_cap_factor=int(cfg.get("m_tilde_cap_factor", 40)),
                checkpoint_path=checkpoint,
                threads=args.threads,
                progress=True,
            )
        else:
            records, summary = bench.run_runtime_scaling(
                config, checkpoint_path=checkpoint, threads=args.threads, progress=True
            )
    except ValueError as exc:
        raise ConfigError(str(exc))

    bench.write_csv(records, out / f"{experiment}.csv")
    bench.write_summary(summary, out / f"{experiment}-summary.json")
    print(f"wrote {out / (experiment + '.csv')} ({len(records)} rows)")
    return 0


def _cmd_check_matrix(args):
    cfg = _load_config(args)
    _validate_keys(cfg, _CHECK_SCHEMA)
    s = int(_require(cfg, "s"))
    rho = float(cfg.get("rho", 0.5))
    tau = float(cfg.get("tau", 2.0))
    probes = int(cfg.get("probes", 1000))
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    if cfg.get("matrix_file"):
        C = np.load(cfg["matrix_file"])
        if C.ndim != 2:
            raise ConfigError("matrix_file must hold a 2-d array")
        n = C.shape[1]
    else:
        n = int(_require(cfg, "n"))
        m = int(_require(cfg, "m"))
        c_kind = cfg.get("c_kind", "real-gaussian")
        C = gen_cs_matrix(m, n, c_kind, rng)

    try:
        ric = brute_force_ric(C, s)
    except ValueError as exc:
        raise ConfigError(str(exc))
    nsp = probe_nsp(C, s, rho, tau, probes, seed)
    bounds = []
    for _ in range(int(cfg.get("x_samples", 5))):
        x = gen_sparse_signal(n, s, rng).values
        bounds.append(asdict(check_cx_bounds(C, s, rho, tau, ric.delta, x)))
    report = {
        "config": cfg,
        "ric": asdict(ric),
        "nsp": asdict(nsp),
        "cx_bounds": bounds,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = _Parser(prog="sparsephase", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_threads=False, with_seed=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted keys reach nested sections)")
        p.add_argument("--out", default="sparsephase-out", help="output directory")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        if with_threads:
            p.add_argument("--threads", type=int, default=1, help="max concurrent trials")
        if with_seed:
            p.add_argument("--seed", type=int, default=None, help="override base_seed")

    p_recover = sub.add_parser("recover", help="run one two-stage recovery")
    common(p_recover)

    p_bench = sub.add_parser("bench", help="run a benchmark experiment")
    p_bench.add_argument("experiment", choices=["noise", "min-measurements", "runtime"])
    common(p_bench, with_threads=True, with_seed=True)

    p_check = sub.add_parser("check-matrix", help="brute-force matrix property reports")
    common(p_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    handlers = {
        "recover": _cmd_recover,
        "bench": _cmd_bench,
        "check-matrix": _cmd_check_matrix,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"sparsephase: config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"sparsephase: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
