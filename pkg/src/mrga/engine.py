"""MapReduce-shaped driver.

Each block of the population file is evolved by an independent map task.
Map tasks emit their top ``max(1, ceil(elite_rate * n))`` chromosomes under
one constant key; the shuffle collects them in (block, rank) order and a
single reducer either picks the best (``BASIC``) or evolves the mixed elite
population for another round of generations (``ELITE_REDUCE``).

Every random stream is seeded from ``mix_seed(master_seed, block_index)``
(or the reserved reduce index), so results do not depend on how many
workers run the map phase or in which order tasks finish.
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .blockstore import BlockManifest, read_block, read_header
from .errors import ConfigurationError, DegeneratePopulationError, TaskFailure
from .ga import (Chromosome, GaParams, Population, best_of, evaluate, rank,
                 run_generations)
from .objective import ObjectiveFn, ObjectiveSpec, lookup_objective
from .rng import REDUCE_INDEX, make_rng, mix_seed

log = logging.getLogger(__name__)

SHUFFLE_KEY = "elite"


class Mode(str, enum.Enum):
    BASIC = "basic"
    ELITE_REDUCE = "elite"


@dataclass(frozen=True)
class EliteRecord:
    key: str
    value: Chromosome
    origin_block: int
    rank: int


@dataclass(frozen=True)
class MapTaskReport:
    block_index: int
    input_count: int
    emitted_count: int
    best_fitness_initial: float
    best_fitness_final: float
    generations_run: int
    wall_time: float


@dataclass
class MapOutput:
    records: List[EliteRecord]
    report: MapTaskReport


@dataclass
class JobResult:
    best_chromosome: Chromosome
    mer: float
    mode: Mode
    map_count: int = 0
    total_wall_time: float = 0.0
    phase_timings: Dict[str, float] = field(default_factory=dict)
    map_reports: List[MapTaskReport] = field(default_factory=list)
    elite_count: int = 0


@dataclass(frozen=True)
class JobConfig:
    population_path: Path
    manifest: BlockManifest
    mode: Mode = Mode.ELITE_REDUCE
    ga_params: GaParams = GaParams()
    objective: ObjectiveSpec = ObjectiveSpec()
    parallelism: int = 1
    # None means "same as ga_params"
    reduce_params: Optional[GaParams] = None

    def __post_init__(self):
        if self.parallelism < 1:
            raise ConfigurationError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.ga_params.dimension != self.objective.dimension:
            raise ConfigurationError(
                f"GA dimension {self.ga_params.dimension} != objective dimension "
                f"{self.objective.dimension}")


def elite_count(block_size: int, elite_rate: float) -> int:
    # round first so that e.g. 0.07 * 100 counts as 7, not 8
    return max(1, math.ceil(round(elite_rate * block_size, 9)))


def _as_objective(objective) -> ObjectiveFn:
    return lookup_objective(objective) if isinstance(objective, ObjectiveSpec) else objective


def run_map_task(block: Population, params: GaParams, objective, task_seed: int,
                 block_index: int = 0) -> MapOutput:
    """Evolve one block and emit its elites."""
    t0 = time.perf_counter()
    objective = _as_objective(objective)
    n = len(block)
    if n < 4:
        raise DegeneratePopulationError(f"block {block_index} has {n} chromosomes; need at least 4")
    rng = make_rng(task_seed)
    pop = evaluate(block, objective, params)
    initial_best = float(pop.fitness.min())
    history: List[float] = []
    final = run_generations(pop, params, objective, rng, history)
    k = min(n, elite_count(n, params.elite_rate))
    records = [EliteRecord(SHUFFLE_KEY, final[i], block_index, i) for i in range(k)]
    report = MapTaskReport(
        block_index=block_index,
        input_count=n,
        emitted_count=k,
        best_fitness_initial=initial_best,
        best_fitness_final=float(final.fitness[0]),
        generations_run=len(history),
        wall_time=time.perf_counter() - t0,
    )
    return MapOutput(records, report)


def shuffle(records: Iterable[EliteRecord]) -> Population:
    """Union of all emitted chromosomes, ordered by (origin block, rank)."""
    records = sorted(records, key=lambda r: (r.origin_block, r.rank))
    if not records:
        raise DegeneratePopulationError("shuffle received no elite records")
    return Population.from_chromosomes([r.value for r in records])


def reduce_basic(elites: Population) -> JobResult:
    best = best_of(elites)
    return JobResult(best, best.fitness, Mode.BASIC, elite_count=len(elites))


def reduce_elite(elites: Population, params: GaParams, objective, reduce_seed: int) -> JobResult:
    if len(elites) < 4:
        raise DegeneratePopulationError(
            f"elite reduce needs at least 4 elites, got {len(elites)}; "
            "raise the elite rate or use more blocks")
    objective = _as_objective(objective)
    rng = make_rng(reduce_seed)
    pop = evaluate(elites, objective, params)
    final = run_generations(pop, params, objective, rng)
    best = best_of(final)
    return JobResult(best, best.fitness, Mode.ELITE_REDUCE, elite_count=len(elites))


def _map_worker(path, manifest: BlockManifest, block_index: int, params: GaParams,
                objective: ObjectiveSpec) -> MapOutput:
    block = read_block(path, manifest, block_index)
    return run_map_task(block, params, objective,
                        mix_seed(params.master_seed, block_index), block_index)


def _check_consistency(config: JobConfig):
    header = read_header(config.population_path)
    if header.dimension != config.ga_params.dimension:
        raise ConfigurationError(
            f"{config.population_path} has D={header.dimension}, "
            f"params say D={config.ga_params.dimension}")
    if config.manifest.total_count != header.chromosome_count:
        raise ConfigurationError(
            f"manifest covers {config.manifest.total_count} chromosomes, "
            f"file has {header.chromosome_count}")


def run_map_phase(config: JobConfig) -> List[MapOutput]:
    """Run every map task with at most ``config.parallelism`` workers.

    Outputs are returned in block order whatever the completion order was.
    The first failing task aborts the phase with :class:`TaskFailure`.
    """
    _check_consistency(config)
    indices = [e.block_index for e in config.manifest.entries]
    args = (config.population_path, config.manifest)
    outputs: Dict[int, MapOutput] = {}
    if config.parallelism == 1 or len(indices) == 1:
        for i in indices:
            try:
                outputs[i] = _map_worker(*args, i, config.ga_params, config.objective)
            except Exception as exc:
                raise TaskFailure(i, exc) from exc
    else:
        workers = min(config.parallelism, len(indices))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(_map_worker, *args, i, config.ga_params, config.objective)
                       for i in indices}
            for i, fut in futures.items():
                try:
                    outputs[i] = fut.result()
                except Exception as exc:
                    for other in futures.values():
                        other.cancel()
                    raise TaskFailure(i, exc) from exc
    return [outputs[i] for i in indices]


def reduce_phase(mode: Mode, outputs: Sequence[MapOutput], config: JobConfig) -> JobResult:
    elites = shuffle(r for out in outputs for r in out.records)
    if Mode(mode) is Mode.BASIC:
        return reduce_basic(elites)
    params = config.reduce_params or config.ga_params
    return reduce_elite(elites, params, config.objective,
                        mix_seed(config.ga_params.master_seed, REDUCE_INDEX))


def run_modes(config: JobConfig, modes: Sequence[Mode]) -> Dict[Mode, JobResult]:
    """Run the map phase once and reduce it under each requested mode.

    Equivalent to calling :func:`run_job` once per mode (same seeds give the
    same map outputs) but evolves each block only once.
    """
    t0 = time.perf_counter()
    outputs = run_map_phase(config)
    map_time = time.perf_counter() - t0
    results = {}
    for mode in modes:
        mode = Mode(mode)
        t1 = time.perf_counter()
        res = reduce_phase(mode, outputs, config)
        reduce_time = time.perf_counter() - t1
        results[mode] = dataclasses.replace(
            res,
            map_count=len(outputs),
            total_wall_time=map_time + reduce_time,
            phase_timings={"map": map_time, "reduce": reduce_time},
            map_reports=[o.report for o in outputs],
        )
        log.info("mode=%s maps=%d mer=%.6g", mode.value, len(outputs), res.mer)
    return results


def run_job(config: JobConfig) -> JobResult:
    return run_modes(config, [config.mode])[Mode(config.mode)]
