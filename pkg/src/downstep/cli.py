"""Command line front-end: `downstep <experiment> [--config f] [--param k=v]... [--out dir]`."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import __version__
from .errors import ConfigError, NumericalError
from .experiments import REGISTRY, Experiment, _jsonable

CONFIG_KEYS = {"experiment", "parameters", "output_dir"}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _coerce(key: str, value, default):
    """Convert a parsed value to the type of the default."""
    if default is None:
        return value
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, list):
            if not isinstance(value, list):
                value = [value]
            return [_coerce(key, v, default[0]) for v in value] if default else value
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r}: cannot use {value!r} as {type(default).__name__}") from None
    return value


def resolve(exp: Experiment, overrides: dict) -> dict:
    params = dict(exp.defaults)
    for k, v in overrides.items():
        if k not in params:
            raise ConfigError(f"unknown parameter {k!r} for {exp.name}; known: {', '.join(sorted(params))}")
        params[k] = _coerce(k, v, exp.defaults[k])
    return params


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid config: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if not isinstance(cfg.get("parameters", {}) or {}, dict):
        raise ConfigError("'parameters' must be a mapping")
    return cfg


def parse_param(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"--param expects key=value, got {item!r}")
    k, v = item.split("=", 1)
    try:
        return k.strip(), yaml.safe_load(v)
    except yaml.YAMLError:
        raise ConfigError(f"cannot parse value in {item!r}") from None


def _help_text(exp: Experiment) -> str:
    lines = [exp.description, "", "output columns:"]
    for f, cols in exp.columns.items():
        lines.append(f"  {f}: {', '.join(cols)}")
    lines += ["", "parameters (defaults):"]
    for k, v in exp.defaults.items():
        lines.append(f"  {k} = {v!r}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="downstep", description="Reproducible 1D quantum step and plateau experiments.")
    ap.add_argument("--list", action="store_true", help="list experiments and exit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="experiment", metavar="experiment")
    for exp in REGISTRY.values():
        sp = sub.add_parser(exp.name, help=exp.description, description=_help_text(exp),
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="YAML file with keys experiment, parameters, output_dir")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable, value parsed as YAML)")
        sp.add_argument("--out", help="output directory (default runs/<experiment>)")
        sp.add_argument("--workers", type=int, default=1, help="processes for independent sweep points")
        for k, v in exp.defaults.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) or v is None:
                sp.add_argument(f"--{k.replace('_', '-')}", dest=f"opt_{k}", default=None, metavar="V",
                                help=f"shorthand for --param {k}=V")
    return ap


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable_tree(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable_tree(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_tree(v) for v in obj]
    return _jsonable(obj)


def run(exp_name: str, overrides: dict, out_dir: Path, workers: int = 1) -> tuple[int, dict]:
    """Run one experiment; returns (exit code, summary)."""
    exp = REGISTRY[exp_name]
    params = resolve(exp, overrides)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        summary = exp.runner(params, out_dir, workers)
        code = EXIT_OK
        summary["all_passed"] = all(c["passed"] for c in summary["checks"])
    except NumericalError as e:
        summary = {"error": type(e).__name__, "message": str(e), "checks": [], "all_passed": False}
        code = EXIT_NUMERICAL
    summary["experiment"] = exp.name
    _write_json(out_dir / "summary.json", summary)
    outputs = sorted(f for f in exp.columns if (out_dir / f).exists())
    _write_json(out_dir / "manifest.json", {"experiment": exp.name, "parameters": params, "version": __version__,
                                            "outputs": outputs + ["summary.json", "plot.py"]})
    (out_dir / "plot.py").write_text(
        "import numpy as np\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n"
        + exp.plot)
    return code, summary


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.list:
        for exp in REGISTRY.values():
            print(f"{exp.name:16s} {exp.description}")
        return EXIT_OK
    if not args.experiment:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        overrides: dict = {}
        out = None
        if args.config:
            cfg = load_config(args.config)
            if cfg.get("experiment", args.experiment) != args.experiment:
                raise ConfigError(f"config is for {cfg['experiment']!r}, not {args.experiment!r}")
            overrides.update(cfg.get("parameters") or {})
            out = cfg.get("output_dir")
        for item in args.param:
            k, v = parse_param(item)
            overrides[k] = v
        for k in REGISTRY[args.experiment].defaults:
            v = getattr(args, f"opt_{k}", None)
            if v is not None:
                overrides[k] = yaml.safe_load(v)
        out = Path(args.out or out or Path("runs") / args.experiment)
        code, summary = run(args.experiment, overrides, out, args.workers)
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_NUMERICAL:
        print(f"{summary['error']}: {summary['message']}", file=sys.stderr)
        return code
    for c in summary["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']}")
    print(f"outputs in {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
