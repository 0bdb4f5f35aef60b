"""Real-coded GA primitives and the generation loop.

A population is stored as one (n, D) float64 gene matrix plus an (n,)
fitness vector; NaN in the fitness vector means "not evaluated yet". The
public operators return new objects; :func:`run_generations` works on
private copies in place for speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, ContractViolation, DegeneratePopulationError
from .objective import ObjectiveFn

UNSET = float("nan")


@dataclass
class Chromosome:
    genes: np.ndarray
    fitness: float = UNSET

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=np.float64)

    @property
    def evaluated(self) -> bool:
        return not math.isnan(self.fitness)

    def __eq__(self, other):
        if not isinstance(other, Chromosome):
            return NotImplemented
        return (np.array_equal(self.genes, other.genes)
                and _same_float(self.fitness, other.fitness))


def _same_float(a: float, b: float) -> bool:
    return (math.isnan(a) and math.isnan(b)) or a == b


@dataclass(frozen=True)
class GaParams:
    """Evolution knobs shared by the map phase, the reduce phase and the baseline.

    Defaults follow the reference configuration: 1% mutation, 80% crossover,
    1000 iterations, 1% elite rate, and half the population kept each
    generation. ``master_seed`` is the root of every random stream in a job.
    """

    dimension: int = 300
    mutation_rate: float = 0.01
    crossover_rate: float = 0.8
    iterations: int = 1000
    elite_rate: float = 0.01
    keep_fraction: float = 0.5
    lower_bound: float = -100.0
    upper_bound: float = 100.0
    master_seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.dimension}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        for name in ("mutation_rate", "crossover_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 < self.elite_rate <= 1.0:
            raise ConfigurationError(f"elite_rate must be in (0, 1], got {self.elite_rate}")
        if not 0.0 < self.keep_fraction < 1.0:
            raise ConfigurationError(f"keep_fraction must be in (0, 1), got {self.keep_fraction}")
        if not self.lower_bound < self.upper_bound:
            raise ConfigurationError(
                f"lower_bound must be < upper_bound, got [{self.lower_bound}, {self.upper_bound}]")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")


class Population:
    def __init__(self, genes, fitness=None, sorted_flag: bool = False):
        genes = np.array(genes, dtype=np.float64, ndmin=2)
        if genes.shape[0] < 1:
            raise DegeneratePopulationError("population must have at least one member")
        if fitness is None:
            fitness = np.full(genes.shape[0], np.nan)
        fitness = np.array(fitness, dtype=np.float64).reshape(-1)
        if fitness.shape[0] != genes.shape[0]:
            raise ConfigurationError(
                f"{genes.shape[0]} gene rows but {fitness.shape[0]} fitness values")
        self.genes = genes
        self.fitness = fitness
        self.sorted_flag = sorted_flag

    @classmethod
    def from_chromosomes(cls, members: Sequence[Chromosome]) -> "Population":
        if not members:
            raise DegeneratePopulationError("population must have at least one member")
        return cls(np.stack([m.genes for m in members]), [m.fitness for m in members])

    @property
    def dimension(self) -> int:
        return self.genes.shape[1]

    def __len__(self):
        return self.genes.shape[0]

    def __getitem__(self, i: int) -> Chromosome:
        return Chromosome(self.genes[i].copy(), float(self.fitness[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def copy(self) -> "Population":
        return Population(self.genes.copy(), self.fitness.copy(), self.sorted_flag)

    def identical_to(self, other: "Population") -> bool:
        """Bit-exact comparison of genes and fitness slots (NaN == NaN)."""
        return (self.genes.shape == other.genes.shape
                and self.genes.tobytes() == other.genes.tobytes()
                and self.fitness.tobytes() == other.fitness.tobytes())

    def __repr__(self):
        return f"Population(n={len(self)}, D={self.dimension}, sorted={self.sorted_flag})"


def random_population(count: int, params: GaParams, rng: np.random.Generator) -> Population:
    return Population(uniform_genes(count, params.dimension, params.lower_bound,
                                    params.upper_bound, rng))


def uniform_genes(count, dimension, lower, upper, rng) -> np.ndarray:
    # scaling random() explicitly keeps chunked and one-shot generation identical
    return lower + (upper - lower) * rng.random((count, dimension))


# -- evaluation ---------------------------------------------------------------

def _evaluate_inplace(genes, fitness, objective: ObjectiveFn, lower, upper):
    clamped = np.clip(genes, lower, upper)
    moved = (clamped != genes).any(axis=1)
    if moved.any():
        genes[moved] = clamped[moved]
    todo = np.isnan(fitness) | moved
    if todo.any():
        fitness[todo] = objective.evaluate_rows(genes[todo])


def evaluate(population: Population, objective: ObjectiveFn, params: GaParams) -> Population:
    """Clamp genes into bounds and fill in fitness for every member.

    Members whose fitness is already set and whose genes were in bounds keep
    their cached value, which equals the objective by construction.
    """
    if population.dimension != objective.dimension or population.dimension != params.dimension:
        raise ConfigurationError(
            f"population dimension {population.dimension} does not match "
            f"objective ({objective.dimension}) / params ({params.dimension})")
    out = population.copy()
    out.sorted_flag = False
    _evaluate_inplace(out.genes, out.fitness, objective, params.lower_bound, params.upper_bound)
    return out


# -- ranking and selection ----------------------------------------------------

def _require_evaluated(fitness: np.ndarray, what: str):
    if np.isnan(fitness).any():
        raise ContractViolation(f"{what} requires every member to be evaluated")


def rank(population: Population) -> Population:
    """Sort ascending by fitness; ties keep their original order."""
    _require_evaluated(population.fitness, "rank")
    order = np.argsort(population.fitness, kind="stable")
    return Population(population.genes[order], population.fitness[order], sorted_flag=True)


def survivor_count(size: int, keep_fraction: float) -> int:
    return math.ceil(keep_fraction * size)


def rank_weights(n_keep: int) -> np.ndarray:
    """Linear rank weights: rank n (1 = best) gets (n_keep - n + 1) / sum(1..n_keep)."""
    if n_keep < 2:
        raise DegeneratePopulationError(f"need at least 2 survivors to pair, got {n_keep}")
    w = np.arange(n_keep, 0, -1, dtype=np.float64)
    return w / (n_keep * (n_keep + 1) / 2)


def _draw_pairs(n_keep: int, n_pairs: int, rng: np.random.Generator) -> np.ndarray:
    w = rank_weights(n_keep)
    mothers = rng.choice(n_keep, size=n_pairs, p=w)
    fathers = rng.choice(n_keep, size=n_pairs, p=w)
    clash = np.flatnonzero(mothers == fathers)
    while clash.size:
        fathers[clash] = rng.choice(n_keep, size=clash.size, p=w)
        clash = clash[mothers[clash] == fathers[clash]]
    return np.stack([mothers, fathers], axis=1)


def select_parent_pairs(population: Population, rng: np.random.Generator,
                        params: GaParams) -> np.ndarray:
    """Return an (n_pairs, 2) array of distinct survivor indices.

    Survivors are the top ``ceil(keep_fraction * size)`` ranked members;
    enough pairs are drawn to refill the rest of the population.
    """
    if not population.sorted_flag:
        raise ContractViolation("select_parent_pairs requires a ranked population")
    size = len(population)
    n_keep = survivor_count(size, params.keep_fraction)
    n_pairs = math.ceil((size - n_keep) / 2)
    return _draw_pairs(n_keep, n_pairs, rng)


# -- crossover ----------------------------------------------------------------

def blend_pairs(mothers: np.ndarray, fathers: np.ndarray, alpha: np.ndarray,
                beta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Single-point blend crossover for a batch of pairs.

    Genes left of ``alpha`` come from the mother in the first child and from
    the father in the second; genes right of it are swapped. The gene at
    ``alpha`` is blended by ``beta`` and clipped to the parents' interval so
    rounding can never leave it.
    """
    m = mothers.shape[0]
    d = mothers.shape[1]
    left = np.arange(d)[None, :] < alpha[:, None]
    child1 = np.where(left, mothers, fathers)
    child2 = np.where(left, fathers, mothers)
    rows = np.arange(m)
    ma = mothers[rows, alpha]
    fa = fathers[rows, alpha]
    diff = ma - fa
    lo = np.minimum(ma, fa)
    hi = np.maximum(ma, fa)
    child1[rows, alpha] = np.clip(ma - beta * diff, lo, hi)
    child2[rows, alpha] = np.clip(fa + beta * diff, lo, hi)
    return child1, child2


def crossover_haupt(mother: Chromosome, father: Chromosome,
                    rng: np.random.Generator) -> Tuple[Chromosome, Chromosome]:
    if mother.genes.shape != father.genes.shape:
        raise ConfigurationError(
            f"parents differ in dimension: {mother.genes.shape[0]} vs {father.genes.shape[0]}")
    d = mother.genes.shape[0]
    alpha = np.array([rng.integers(0, d)])
    beta = np.array([rng.random()])
    c1, c2 = blend_pairs(mother.genes[None, :], father.genes[None, :], alpha, beta)
    return Chromosome(c1[0]), Chromosome(c2[0])


# -- mutation -----------------------------------------------------------------

def _mutate_inplace(genes, fitness, rate, lower, upper, rng) -> int:
    if rate <= 0.0 or genes.shape[0] < 2:
        return 0
    tail = genes[1:]
    mask = rng.random(tail.shape) < rate
    count = int(mask.sum())
    if count:
        tail[mask] = lower + (upper - lower) * rng.random(count)
        fitness[1:][mask.any(axis=1)] = np.nan
    return count


def mutate(population: Population, rng: np.random.Generator, params: GaParams) -> Population:
    """Uniformly reset genes with probability ``mutation_rate``; member 0 is exempt."""
    if not population.sorted_flag:
        raise ContractViolation("mutate requires a ranked population")
    out = population.copy()
    _mutate_inplace(out.genes, out.fitness, params.mutation_rate,
                    params.lower_bound, params.upper_bound, rng)
    out.sorted_flag = False if np.isnan(out.fitness).any() else out.sorted_flag
    return out


# -- generation loop ----------------------------------------------------------

def run_generations(population: Population, params: GaParams, objective: ObjectiveFn,
                    rng: np.random.Generator,
                    history: Optional[List[float]] = None) -> Population:
    """Run ``params.iterations`` generations and return the ranked result.

    Each generation ranks the population, keeps the top survivors, refills the
    bottom with children of rank-weighted pairs (blend crossover with
    probability ``crossover_rate``, plain copies otherwise), mutates every
    member but the best, and re-evaluates. If ``history`` is given, the best
    fitness after every generation is appended to it.
    """
    size = len(population)
    if size < 4:
        raise DegeneratePopulationError(f"run_generations needs at least 4 members, got {size}")
    _require_evaluated(population.fitness, "run_generations")
    n_keep = survivor_count(size, params.keep_fraction)
    n_replace = size - n_keep
    if n_keep < 2 or n_replace < 1:
        raise DegeneratePopulationError(
            f"keep_fraction {params.keep_fraction} leaves {n_keep} survivors of {size}")
    n_pairs = math.ceil(n_replace / 2)
    d = population.dimension
    lo, hi = params.lower_bound, params.upper_bound

    genes = population.genes
    fitness = population.fitness
    for _ in range(params.iterations):
        order = np.argsort(fitness, kind="stable")
        genes = genes[order]
        fitness = fitness[order]

        pairs = _draw_pairs(n_keep, n_pairs, rng)
        do_cross = rng.random(n_pairs) < params.crossover_rate
        alpha = rng.integers(0, d, size=n_pairs)
        beta = rng.random(n_pairs)

        mothers = genes[pairs[:, 0]]
        fathers = genes[pairs[:, 1]]
        c1, c2 = blend_pairs(mothers, fathers, alpha, beta)
        keep = ~do_cross
        c1[keep] = mothers[keep]
        c2[keep] = fathers[keep]
        f1 = np.where(keep, fitness[pairs[:, 0]], np.nan)
        f2 = np.where(keep, fitness[pairs[:, 1]], np.nan)

        genes[n_keep:] = np.stack([c1, c2], axis=1).reshape(-1, d)[:n_replace]
        fitness[n_keep:] = np.stack([f1, f2], axis=1).reshape(-1)[:n_replace]

        _mutate_inplace(genes, fitness, params.mutation_rate, lo, hi, rng)
        _evaluate_inplace(genes, fitness, objective, lo, hi)
        if history is not None:
            history.append(float(fitness.min()))

    order = np.argsort(fitness, kind="stable")
    return Population(genes[order], fitness[order], sorted_flag=True)


def best_of(population: Population) -> Chromosome:
    """Member with minimal fitness; the lowest index wins ties."""
    _require_evaluated(population.fitness, "best_of")
    return population[int(np.argmin(population.fitness))]
