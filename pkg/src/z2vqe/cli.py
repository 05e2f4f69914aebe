"""``z2vqe`` command line.

Exit codes: 0 success, 2 config error, 3 capacity error, 4 optimizer
non-convergence or divergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .io import atomic_write

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_NONCONVERGED = 0, 2, 3, 4
OUTPUT_ENV = "Z2VQE_OUTPUT_DIR"

_EXPERIMENT_COMMANDS = ("ground-state", "string-breaking", "variance-scan", "fidelity-trace",
                        "exact")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="z2vqe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_EXPERIMENT_COMMANDS, "dump-hamiltonian", "dump-layout"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (value parsed as JSON)")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./out)")
        p.add_argument("--seed", type=int, help="global seed")
        p.add_argument("--threads", type=int, help="worker processes for independent runs")
    return parser


def _output_dir(args, cfg) -> str:
    return args.output_dir or cfg.output_dir or os.environ.get(OUTPUT_ENV) or "out"


def _load(args, command: str):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if command in _EXPERIMENT_COMMANDS:
        # the subcommand decides the experiment
        overrides.append(f"experiment={command}")
    return load_config(args.config, overrides, defaults={"experiment": "exact"})


def _dump(command: str, cfg, out_dir: str) -> None:
    from .experiments import model
    bundle = model(cfg, cfg.P[0])
    if command == "dump-layout":
        text = json.dumps({str(q): v for q, v in bundle.lattice.layout().items()}, indent=1) + "\n"
        name = "layout.json"
    else:
        text = str(bundle.h_total) + "\n"
        name = "hamiltonian.txt"
    sys.stdout.write(text)
    atomic_write(os.path.join(out_dir, name), text)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    from .oracle import CapacityError, LanczosNotConverged
    from .optimize import OptimizerDiverged
    from .experiments import emit, run_experiment
    try:
        cfg = _load(args, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _output_dir(args, cfg)
    try:
        if args.command in ("dump-hamiltonian", "dump-layout"):
            _dump(args.command, cfg, out_dir)
            return EXIT_OK
        result = run_experiment(cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (LanczosNotConverged, OptimizerDiverged) as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            emit(partial, cfg, out_dir)
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ValueError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            emit(partial, cfg, out_dir)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit(result, cfg, out_dir)
    if args.command == "exact":
        for P, sector, vacuum in result.rows:
            print(f"P={P} sector_energy={sector!r} vacuum_energy={vacuum!r}")
    else:
        print(json.dumps(result.summary(), default=str)[:2000])
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
