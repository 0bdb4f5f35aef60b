"""Command-line entry point.

Exit codes: 0 success, 1 I/O or data error, 2 usage or configuration
error, 3 resource limit exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import blockstore
from .engine import JobConfig, Mode, run_job
from .errors import (ConfigurationError, DegeneratePopulationError, FormatError,
                     MrgaError, TaskFailure)
from .experiments import (ExperimentRow, ResourceLimitExceeded, SweepSpec, median_table,
                          parse_size, read_csv, run_baseline, run_sweep, sort_rows,
                          write_csv, write_series)
from .ga import GaParams
from .objective import ObjectiveSpec, registered_objectives

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

MODE_NAMES = {"basic": Mode.BASIC, "elite": Mode.ELITE_REDUCE}


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _size(text: str) -> int:
    try:
        return parse_size(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _bounds(text: str):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("bounds must look like LO,HI") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("lower bound must be below upper bound")
    return lo, hi


def _int_list(text: str):
    try:
        return tuple(int(x, 0) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _mode_list(text: str):
    try:
        return tuple(MODE_NAMES[x] for x in text.split(","))
    except KeyError as exc:
        raise argparse.ArgumentTypeError(f"unknown mode {exc.args[0]!r}") from None


def _add_ga_flags(p: argparse.ArgumentParser, iters_default: int = 1000):
    p.add_argument("--iters", type=_positive_int, default=iters_default,
                   help="generations per GA run (default %(default)s)")
    p.add_argument("--mutation-rate", type=float, default=0.01)
    p.add_argument("--crossover-rate", type=float, default=0.8)
    p.add_argument("--keep-fraction", type=float, default=0.5)
    p.add_argument("--elite-rate", type=float, default=0.01)
    p.add_argument("--seed", type=_seed, default=0)


def _ga_params(args, dimension, lower, upper) -> GaParams:
    return GaParams(dimension=dimension, mutation_rate=args.mutation_rate,
                    crossover_rate=args.crossover_rate, iterations=args.iters,
                    elite_rate=args.elite_rate, keep_fraction=args.keep_fraction,
                    lower_bound=lower, upper_bound=upper, master_seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrga", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genpop", help="generate a population file and its block manifest")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--dim", type=_positive_int, default=300)
    p.add_argument("--bounds", type=_bounds, default=(-100.0, 100.0), metavar="LO,HI")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--block-size", type=_size, default=blockstore.DEFAULT_BLOCK_SIZE,
                   help="bytes per block, suffixes KB/MB/GB/KiB/MiB/GiB allowed (default 128MiB)")

    p = sub.add_parser("run", help="run one MapReduce GA job over a population file")
    p.add_argument("--pop", type=Path, required=True)
    p.add_argument("--manifest", type=Path, help="defaults to <pop>.manifest")
    p.add_argument("--block-size", type=_size, help="re-split instead of reading the manifest")
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="elite")
    p.add_argument("--objective", default="sphere", choices=registered_objectives())
    p.add_argument("--parallelism", type=_positive_int, default=1)
    p.add_argument("--csv", type=Path, help="append an experiment row to this CSV")
    _add_ga_flags(p)

    p = sub.add_parser("sweep", help="run jobs over population sizes, modes and seeds")
    p.add_argument("--sizes", type=_int_list, required=True)
    p.add_argument("--modes", type=_mode_list, default=(Mode.BASIC, Mode.ELITE_REDUCE))
    p.add_argument("--seeds", type=_int_list, default=(0, 1, 2, 3, 4))
    p.add_argument("--dim", type=_positive_int, default=300)
    p.add_argument("--bounds", type=_bounds, default=(-100.0, 100.0), metavar="LO,HI")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--block-size", type=_size, default=None)
    group.add_argument("--block-capacity", type=_positive_int,
                       help="chromosomes per block (sets the block size exactly)")
    p.add_argument("--objective", default="sphere", choices=registered_objectives())
    p.add_argument("--parallelism", type=_positive_int, default=1)
    p.add_argument("--workdir", type=Path, help="where temporary population files go")
    p.add_argument("--csv", type=Path, required=True)
    _add_ga_flags(p)
    p.set_defaults(seed=0)

    p = sub.add_parser("baseline", help="run the GA on one in-memory population")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--dim", type=_positive_int, default=300)
    p.add_argument("--bounds", type=_bounds, default=(-100.0, 100.0), metavar="LO,HI")
    p.add_argument("--objective", default="sphere", choices=registered_objectives())
    p.add_argument("--mem-limit", type=_size, help="refuse populations larger than this")
    _add_ga_flags(p)

    p = sub.add_parser("report", help="turn a sweep CSV into two-column series files")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, default=Path("series"))
    return parser


def cmd_genpop(args) -> int:
    spec = ObjectiveSpec("sphere", args.dim, *args.bounds)
    header = blockstore.generate_population_file(args.out, args.count, spec, args.seed)
    manifest = blockstore.split_into_blocks(header, args.block_size)
    mpath = blockstore.manifest_path_for(args.out)
    blockstore.write_manifest(mpath, manifest)
    print(f"wrote {args.out}: {header.chromosome_count} chromosomes, D={header.dimension}, "
          f"bounds [{header.lower_bound}, {header.upper_bound}], seed {header.generator_seed}")
    print(f"  {header.file_size} bytes ({header.record_size} per record), "
          f"{len(manifest)} block(s) of {manifest.block_size_bytes} bytes -> {mpath}")
    return EXIT_OK


def cmd_run(args) -> int:
    header = blockstore.read_header(args.pop)
    if args.block_size is not None:
        manifest = blockstore.split_into_blocks(header, args.block_size)
    else:
        manifest = blockstore.read_manifest(args.manifest or blockstore.manifest_path_for(args.pop))
    params = _ga_params(args, header.dimension, header.lower_bound, header.upper_bound)
    objective = ObjectiveSpec(args.objective, header.dimension, header.lower_bound, header.upper_bound)
    config = JobConfig(args.pop, manifest, MODE_NAMES[args.mode], params, objective,
                       args.parallelism)
    result = run_job(config)
    print(f"mode      {result.mode.value}")
    print(f"mer       {result.mer!r}")
    print(f"maps      {result.map_count}")
    print(f"elites    {result.elite_count}")
    print(f"time_s    {result.total_wall_time:.3f} "
          f"(map {result.phase_timings['map']:.3f}, reduce {result.phase_timings['reduce']:.3f})")
    if args.csv:
        row = ExperimentRow(header.chromosome_count, header.data_bytes, result.map_count,
                            result.mode.value, result.mer, result.total_wall_time, args.seed)
        write_csv(args.csv, [row], append=True)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.block_capacity is not None:
        block_size = args.block_capacity * blockstore.record_size(args.dim)
    else:
        block_size = args.block_size or blockstore.DEFAULT_BLOCK_SIZE
    params = _ga_params(args, args.dim, *args.bounds)
    spec = SweepSpec(args.sizes, args.modes, args.seeds, params, block_size,
                     args.objective, args.parallelism)
    done = []

    def progress(row):
        done.append(row)
        print(f"  {row.mode:5s} n={row.population} seed={row.seed} maps={row.blocks} "
              f"mer={row.mer:.6g} t={row.wall_time_s:.2f}s", file=sys.stderr)

    try:
        rows = run_sweep(spec, args.workdir, progress)
    except BaseException:
        write_csv(args.csv, sort_rows(done))
        print(f"sweep aborted; {len(done)} row(s) flushed to {args.csv}", file=sys.stderr)
        raise
    write_csv(args.csv, rows)
    print(f"{len(rows)} rows -> {args.csv}")
    print("median mer:")
    for mode, series in median_table(rows).items():
        for pop, value in series:
            print(f"  {mode:5s} {pop:>10d} {value:.6g}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    params = _ga_params(args, args.dim, *args.bounds)
    try:
        res = run_baseline(args.count, params, args.objective, args.mem_limit)
    except MemoryError:
        required = blockstore.record_size(args.dim) * args.count
        print(f"error: out of memory; estimated footprint {required} bytes", file=sys.stderr)
        return EXIT_RESOURCE
    print(f"count     {res.count}")
    print(f"mer       {res.mer!r}")
    print(f"time_s    {res.wall_time_s:.3f}")
    print(f"footprint {res.footprint_bytes} bytes")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = read_csv(args.csv)
    for p in write_series(rows, args.out):
        print(p)
    return EXIT_OK


COMMANDS = {
    "genpop": cmd_genpop,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "baseline": cmd_baseline,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ResourceLimitExceeded as exc:
        print(f"error: resource limit exceeded: estimated {exc.required} bytes "
              f"> limit {exc.limit} bytes", file=sys.stderr)
        return EXIT_RESOURCE
    except TaskFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (ConfigurationError, DegeneratePopulationError)):
            return EXIT_USAGE
        return EXIT_DATA
    except (ConfigurationError, DegeneratePopulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MrgaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
