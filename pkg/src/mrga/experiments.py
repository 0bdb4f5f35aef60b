"""Experiment harness: population sweeps, the single-process baseline and
CSV / series reporting."""
from __future__ import annotations

import csv
import re
import statistics
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .blockstore import (DEFAULT_BLOCK_SIZE, generate_population_file, record_size,
                         split_into_blocks)
from .engine import JobConfig, Mode, run_modes
from .errors import ConfigurationError, FormatError, MrgaError
from .ga import GaParams, best_of, evaluate, random_population, run_generations
from .objective import ObjectiveSpec, lookup_objective
from .rng import make_rng, mix_seed

CSV_COLUMNS = ("population", "bytes", "blocks", "mode", "mer", "wall_time_s", "seed")


class ResourceLimitExceeded(MrgaError):
    def __init__(self, required: int, limit: int):
        super().__init__(f"estimated footprint {required} bytes exceeds limit {limit} bytes")
        self.required = required
        self.limit = limit


class CsvFormatError(FormatError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ExperimentRow:
    population: int
    bytes: int
    blocks: int
    mode: str
    mer: float
    wall_time_s: float
    seed: int


@dataclass(frozen=True)
class SweepSpec:
    sizes: Tuple[int, ...]
    modes: Tuple[Mode, ...]
    seeds: Tuple[int, ...]
    params: GaParams
    block_size_bytes: int = DEFAULT_BLOCK_SIZE
    objective: str = "sphere"
    parallelism: int = 1

    def __post_init__(self):
        if not self.sizes or not self.modes or not self.seeds:
            raise ConfigurationError("sizes, modes and seeds must all be non-empty")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigurationError(f"sizes must be strictly increasing, got {self.sizes}")

    @property
    def objective_spec(self) -> ObjectiveSpec:
        p = self.params
        return ObjectiveSpec(self.objective, p.dimension, p.lower_bound, p.upper_bound)


# -- sizes --------------------------------------------------------------------

_SIZE_UNITS = {
    "": 1, "b": 1,
    "kb": 10**3, "mb": 10**6, "gb": 10**9,
    "kib": 2**10, "mib": 2**20, "gib": 2**30,
}


def parse_size(text: str) -> int:
    """Parse ``"128MiB"``, ``"1MB"`` or a plain byte count."""
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([a-zA-Z]*)\s*", text)
    if not m or m.group(2).lower() not in _SIZE_UNITS:
        raise ValueError(f"invalid size {text!r}")
    return int(float(m.group(1)) * _SIZE_UNITS[m.group(2).lower()])


def population_footprint(count: int, dimension: int) -> int:
    return count * record_size(dimension)


# -- sweep --------------------------------------------------------------------

def sort_rows(rows: Iterable[ExperimentRow]) -> List[ExperimentRow]:
    return sorted(rows, key=lambda r: (r.mode, r.population, r.seed))


def run_sweep(spec: SweepSpec, workdir=None, on_row=None) -> List[ExperimentRow]:
    """One row per (size, mode, seed).

    Population files are generated from the seed, so size ``n`` is a prefix of
    every larger size for the same seed. Modes share one map phase.
    """
    rows: List[ExperimentRow] = []
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        for size in spec.sizes:
            for seed in spec.seeds:
                path = Path(tmp) / f"pop_{size}_{seed}.bin"
                header = generate_population_file(path, size, spec.objective_spec, seed)
                manifest = split_into_blocks(header, spec.block_size_bytes)
                params = replace(spec.params, master_seed=seed)
                config = JobConfig(path, manifest, ga_params=params,
                                   objective=spec.objective_spec,
                                   parallelism=spec.parallelism)
                results = run_modes(config, spec.modes)
                for mode, res in results.items():
                    row = ExperimentRow(size, header.data_bytes, res.map_count, mode.value,
                                        res.mer, res.total_wall_time, seed)
                    rows.append(row)
                    if on_row is not None:
                        on_row(row)
                path.unlink()
    return sort_rows(rows)


def median_table(rows: Iterable[ExperimentRow], metric: str = "mer") -> Dict[str, List[Tuple[int, float]]]:
    """Per mode, a population-sorted list of (population, median metric)."""
    groups: Dict[Tuple[str, int], List[float]] = {}
    for r in rows:
        groups.setdefault((r.mode, r.population), []).append(getattr(r, metric))
    table: Dict[str, List[Tuple[int, float]]] = {}
    for (mode, pop), values in sorted(groups.items()):
        table.setdefault(mode, []).append((pop, statistics.median(values)))
    return table


# -- baseline -----------------------------------------------------------------

@dataclass
class BaselineResult:
    count: int
    mer: float
    wall_time_s: float
    footprint_bytes: int
    history: List[float] = field(default_factory=list)


def run_baseline(count: int, params: GaParams, objective: str = "sphere",
                 mem_limit: Optional[int] = None) -> BaselineResult:
    """Evolve one in-memory population with no blocking.

    Uses the same generator seed and task seed as block 0 of a job, so a
    one-block job on a file from ``generate_population_file`` with the same
    seed reaches the same result.
    """
    footprint = population_footprint(count, params.dimension)
    if mem_limit is not None and footprint > mem_limit:
        raise ResourceLimitExceeded(footprint, mem_limit)
    t0 = time.perf_counter()
    obj = lookup_objective(ObjectiveSpec(objective, params.dimension,
                                         params.lower_bound, params.upper_bound))
    pop = random_population(count, params, make_rng(params.master_seed))
    pop = evaluate(pop, obj, params)
    history: List[float] = []
    final = run_generations(pop, params, obj, make_rng(mix_seed(params.master_seed, 0)), history)
    best = best_of(final)
    return BaselineResult(count, best.fitness, time.perf_counter() - t0, footprint, history)


# -- CSV and series -----------------------------------------------------------

def write_csv(path, rows: Iterable[ExperimentRow], append: bool = False) -> None:
    path = Path(path)
    new = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.population, r.bytes, r.blocks, r.mode, repr(r.mer),
                        repr(r.wall_time_s), r.seed])


def read_csv(path) -> List[ExperimentRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise CsvFormatError(1, "empty file") from None
        if tuple(head) != CSV_COLUMNS:
            raise CsvFormatError(1, f"expected header {','.join(CSV_COLUMNS)}")
        rows = []
        for cells in reader:
            line = reader.line_num
            if not cells:
                continue
            if len(cells) != len(CSV_COLUMNS):
                raise CsvFormatError(line, f"expected {len(CSV_COLUMNS)} fields, got {len(cells)}")
            try:
                row = ExperimentRow(int(cells[0]), int(cells[1]), int(cells[2]), cells[3],
                                    float(cells[4]), float(cells[5]), int(cells[6]))
            except ValueError as exc:
                raise CsvFormatError(line, str(exc)) from None
            if row.mode not in {m.value for m in Mode}:
                raise CsvFormatError(line, f"unknown mode {row.mode!r}")
            rows.append(row)
    if not rows:
        raise CsvFormatError(2, "no data rows")
    return rows


def write_series(rows: Sequence[ExperimentRow], outdir) -> List[Path]:
    """Write ``<mode>_mer.txt`` and ``<mode>_time.txt`` two-column files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, suffix in (("mer", "mer"), ("wall_time_s", "time")):
        for mode, series in median_table(rows, metric).items():
            p = outdir / f"{mode}_{suffix}.txt"
            with open(p, "w") as fh:
                fh.write(f"# population median_{metric}\n")
                for pop, value in series:
                    fh.write(f"{pop} {value!r}\n")
            written.append(p)
    return written
