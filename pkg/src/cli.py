"""
Command-line entry point.

    floatsim sweep|scenario|threshold <config> --out <dir> [--seed N] [--dump-defaults]

Exit codes: 0 success, 1 configuration error, 2 numerical divergence,
3 bracketing error. FLOATSIM_THREADS caps the number of worker threads for
independent runs (unset or 0 runs sequentially).
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

import pandas as pd

from .config import FloatSimConfig, dump_config, load_config
from .errors import BracketError, ConfigError, DivergenceError, FloatSimError, GeometryError
from .scenario import MethodComparison, min_sliding_force_search
from .sim1d import SweepSummary, run_sweep

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGENCE = 2
EXIT_BRACKET = 3

FLOAT_FORMAT = "%.9e"


def worker_count() -> int:
    raw = os.environ.get("FLOATSIM_THREADS", "").strip()
    if not raw:
        return 0
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"FLOATSIM_THREADS must be an integer, got '{raw}'")
    if count < 0:
        raise ConfigError("FLOATSIM_THREADS must be nonnegative")
    return count


def write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_text(text: str, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_sweep(config: FloatSimConfig, out_dir: str, workers: int = 0) -> int:
    spec = config.sweep
    results = run_sweep(spec, workers)
    for index, (value, trace) in enumerate(results):
        LOGGER.debug("trace %d holds %s = %r", index, spec.varied_field.value, value)
        write_csv(trace, os.path.join(out_dir, f"trace_{spec.varied_field.value}_{index:02d}.csv"))
    write_csv(SweepSummary.from_results(spec, results).to_frame(), os.path.join(out_dir, "summary.csv"))
    print(f"✅ sweep complete: {len(results)} traces written to {out_dir}")
    return EXIT_OK


def cmd_scenario(config: FloatSimConfig, out_dir: str, workers: int = 0) -> int:
    comparison = MethodComparison()
    for run in config.methods:
        comparison.add_run(run)
    table = comparison.compare_methods(workers)
    for name, trace in comparison.traces.items():
        write_csv(trace, os.path.join(out_dir, f"trace_{name}.csv"))
        write_text(comparison.metrics[name].to_text(), os.path.join(out_dir, f"metrics_{name}.txt"))
    write_csv(table, os.path.join(out_dir, "comparison.csv"))

    print(table[["name", "method", "f_z_ref", "contact_break_count", "alignment_time"]].to_string(index=False))
    failures = comparison.failures
    if failures:
        for name, exc in failures.items():
            print(f"❌ {name}: {exc}", file=sys.stderr)
        if any(isinstance(exc, DivergenceError) for exc in failures.values()):
            return EXIT_DIVERGENCE
        return EXIT_CONFIG
    print(f"✅ scenario complete: {len(comparison.traces)} runs written to {out_dir}")
    return EXIT_OK


def cmd_threshold(config: FloatSimConfig, out_dir: str, workers: int = 0) -> int:
    spec = config.threshold
    templates = [config.method(name) for name in spec.methods]
    rows = []
    for template in templates:
        result = min_sliding_force_search(template, spec.f_lo, spec.f_hi, spec.resolution, workers)
        write_csv(result.log, os.path.join(out_dir, f"threshold_{result.name}_log.csv"))
        write_text(result.to_text(), os.path.join(out_dir, f"threshold_{result.name}.txt"))
        rows.append({"name": result.name, "method": template.method.value, "lo": result.lo, "hi": result.hi})
        print(f"• {result.name}: minimal f_z_ref in [{result.lo:.4f}, {result.hi:.4f}] N")
    write_csv(pd.DataFrame(rows), os.path.join(out_dir, "brackets.csv"))
    print(f"✅ threshold search complete for {len(rows)} methods")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "scenario": cmd_scenario, "threshold": cmd_threshold}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floatsim",
        description="Contact simulations of a manipulator aligning with a free-floating target")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", nargs="?", help="INI configuration file")
    parser.add_argument("--out", default="output", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the sensor-noise seed")
    parser.add_argument("--dump-defaults", action="store_true",
                        help="print the full effective configuration and exit")
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, args.seed) if args.config else FloatSimConfig()
        if args.dump_defaults:
            print(dump_config(config), end="")
            return EXIT_OK
        if not args.config:
            raise ConfigError(f"{args.command} needs a configuration file")
        workers = worker_count()
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](config, args.out, workers)
    except (ConfigError, GeometryError) as exc:
        print(f"❌ configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"❌ numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except BracketError as exc:
        print(f"❌ bracketing error: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except FloatSimError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
