"""Command-line entry point: ``wegnerlab <subcommand> --config PATH --out DIR``.

Exit codes: 0 when every check passes, 1 for usage, configuration or I/O
errors, 2 when a computed inequality or expectation check fails.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from importlib import resources

import numpy as np

from . import __version__, suite
from .errors import ConfigError, WegnerLabError
from .experiments import ExperimentConfig, ResultTable, experiment_checks, run_experiment

SUBCOMMANDS = ("wegner", "ids", "landau", "averaging", "tracebounds", "verify-all")
EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

CONFIG_HELP = """\
Config files are JSON. A suite file has the optional keys
  "experiments": [ExperimentConfig, ...]
  "averaging":   {"lattice_sum": {}, "self_adjoint": {"n_instances": N}, ...}
  "tracebounds": {"decay": {}, "k0": {}, "iterated_trace": {}, "k_tilde": {}, "ucp": {}}
A single ExperimentConfig object is also accepted by wegner/ids/landau:
  {"kind": "wegner"|"ids"|"landau", "model": {"dimension": 1, "points_per_cell": 1,
   "single_site": {"kind": "bump", "radius": 0.4}, "v0": null, "field_B": 0.0},
   "L_values": [32, 64], "measure": {"kind": "uniform", "lo": 0, "hi": 2},
   "energy_E0": 3.0, "epsilons": [0.05], "n_realizations": 200, "master_seed": 1}
epsilons must lie in (0, 1]; n_realizations >= 8. See docs/formats.md."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{CONFIG_HELP}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="wegnerlab", description="Random Schroedinger operator verification lab.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config (defaults to the shipped suite for "
                                        "averaging, tracebounds and verify-all)")
        s.add_argument("--out", default="wegnerlab-out", help="output directory")
        s.add_argument("--seed", type=int, help="override master_seed (unsigned 64-bit)")
        s.add_argument("--workers", type=int, help="worker processes (env WEGNERLAB_WORKERS)")
    return p


def default_config():
    text = resources.files("wegnerlab").joinpath("data/default.json").read_text()
    return json.loads(text)


def load_config(path):
    if path is None:
        return default_config()
    try:
        with open(path) as fh:
            config = json.load(fh)
    except FileNotFoundError:
        raise WegnerLabError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    return config


def experiment_configs(config, kind=None, seed=None, workers=None):
    items = config.get("experiments") if "experiments" in config else (
        [config] if "kind" in config else [])
    cfgs = []
    for item in items:
        data = dict(item)
        if seed is not None:
            data["master_seed"] = seed
        if workers is not None:
            data["workers"] = workers
        cfg = ExperimentConfig.from_dict(data)
        if kind is None or cfg.kind == kind:
            cfgs.append(cfg)
    return cfgs


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(table: ResultTable, checks, out_dir, meta=None):
    """Write ``results.csv`` and ``summary.json`` atomically; return the summary dict."""
    os.makedirs(out_dir, exist_ok=True)
    summary = {"version": __version__, **(meta or {}),
               "all_passed": all(c["passed"] for c in checks),
               "n_failed": sum(not c["passed"] for c in checks),
               "checks": checks, "summaries": table.summary}
    summary = _jsonable(summary)
    _atomic_write(os.path.join(out_dir, "results.csv"), table.to_csv())
    _atomic_write(os.path.join(out_dir, "summary.json"),
                  json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return summary


def _experiment_summaries(cfg, table):
    tag = cfg.name or cfg.kind
    for rec in table.summary:
        rec.setdefault("experiment", tag)


def run(args):
    config = load_config(args.config)
    workers = args.workers
    if workers is None and os.environ.get("WEGNERLAB_WORKERS"):
        workers = int(os.environ["WEGNERLAB_WORKERS"])
    if args.seed is not None and not (0 <= args.seed < 2 ** 64):
        raise WegnerLabError("--seed must be an unsigned 64-bit integer")
    sub = args.subcommand
    kind = sub if sub in ("wegner", "ids", "landau") else None
    cfgs = []
    if sub in ("wegner", "ids", "landau", "verify-all"):
        # validate every experiment before computing anything
        cfgs = experiment_configs(config, kind, args.seed, workers)
        if kind and not cfgs:
            raise WegnerLabError(f"config holds no {kind!r} experiment\n\n{CONFIG_HELP}")
    table, checks = ResultTable(), []
    if sub in ("averaging", "verify-all"):
        c, t = suite.run_averaging(config.get("averaging", suite.AVERAGING_DEFAULTS), args.seed)
        checks += c
        table.extend(t)
    if sub in ("tracebounds", "verify-all"):
        c, t = suite.run_tracebounds(config.get("tracebounds", suite.TRACEBOUNDS_DEFAULTS), args.seed)
        checks += c
        table.extend(t)
    for cfg in cfgs:
        t = run_experiment(cfg, workers)
        _experiment_summaries(cfg, t)
        checks += experiment_checks(cfg, t)
        table.extend(t)
    meta = {"subcommand": sub, "config": args.config or "<default>",
            "master_seed": args.seed, "experiments": [c.to_dict() for c in cfgs]}
    return emit_report(table, checks, args.out, meta)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = run(args)
    except ConfigError as exc:
        sys.stderr.write(f"wegnerlab: config error: {exc}\n\n{CONFIG_HELP}\n")
        return EXIT_USAGE
    except (WegnerLabError, OSError) as exc:
        sys.stderr.write(f"wegnerlab: error: {exc}\n")
        return EXIT_USAGE
    for c in summary["checks"]:
        if not c["passed"]:
            seed = c.get("instance_seed")
            where = f" (instance seed {seed})" if seed is not None else ""
            sys.stderr.write(f"FAILED {c['name']}: measured {c['measured']} vs {c['bound']}{where}\n")
    print(f"{len(summary['checks'])} checks, {summary['n_failed']} failed; wrote {args.out}")
    return EXIT_OK if summary["all_passed"] else EXIT_VIOLATION


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
