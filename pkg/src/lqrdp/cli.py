"""Command-line batch runner.

Usage::

    lqrdp --config run.json [--out PREFIX] [--seed N] [ALGORITHM]
    lqrdp paper_example --out results/paper

Files are written as ``<prefix>_<name>`` (for example ``run_trace.csv``).
Exit codes: 0 success, 1 configuration error, 2 infeasible or unstable
instance, 3 solver divergence or failed benchmark reproduction.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ALGORITHMS, ConfigError, ExperimentConfig, load_config, parse_config
from .errors import (
    CertificationError,
    ConvergenceError,
    DomainError,
    InvalidPlantError,
    NotPositiveDefiniteError,
    StabilityError,
)
from .experiments import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_FAILED = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lqrdp", description="Run LQR dynamic-programming experiments.")
    p.add_argument("algorithm", nargs="?", choices=ALGORITHMS,
                   help="override the algorithm named in the config")
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--out", help="output path prefix (overrides the config)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--echo-config", action="store_true",
                   help="write the parsed configuration to <prefix>_config.json")
    return p


def _resolve(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        doc = cfg.to_dict()
    elif args.algorithm:
        doc = {"algorithm": args.algorithm}
    else:
        raise ConfigError("either --config or an algorithm is required")
    if args.algorithm:
        doc["algorithm"] = args.algorithm
    if args.out:
        doc["output"] = args.out
    if args.seed is not None:
        doc["seed"] = args.seed
    return parse_config(doc)


def write_outputs(prefix: str, files: dict[str, str]) -> list[str]:
    folder = os.path.dirname(prefix)
    if folder:
        os.makedirs(folder, exist_ok=True)
    paths = []
    for name in sorted(files):
        path = f"{prefix}_{name}"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        paths.append(path)
    return paths


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        outcome = run_experiment(cfg)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"lqrdp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidPlantError, DomainError, StabilityError, NotPositiveDefiniteError) as exc:
        print(f"lqrdp: infeasible instance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConvergenceError, CertificationError) as exc:
        print(f"lqrdp: solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILED

    files = dict(outcome.files)
    if args.echo_config:
        files["config.json"] = cfg.dumps()
    for path in write_outputs(cfg.output, files):
        print(path)
    for note in outcome.notes:
        print(f"lqrdp: note: {note}", file=sys.stderr)
    if outcome.status != "ok":
        print(f"lqrdp: {outcome.message}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
