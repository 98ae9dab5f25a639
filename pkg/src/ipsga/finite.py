"""Finite-population generational GA with per-evaluation stochastic fitness.

The simulator runs over short bitstring genomes: fitness-proportional
selection, uniform crossover applied to every child, generational replacement,
no elitism and no mutation.  Fitness is sampled fresh for every individual in
every generation from a normal around its genome's mean, with negative draws
clamped to exactly zero.

Reproducibility contract: a run is a pure function of its seed.  Draw order
per generation is fixed: one fitness sample per individual (individuals
ordered by genome index), then the first-parent indices, then the
second-parent indices, then the crossover masks.  Generators are numpy's
``default_rng`` (PCG64).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DegenerateSelectionError, DimensionError

__all__ = [
    "Population",
    "StochasticFitness",
    "RunStatistics",
    "RescueReport",
    "sample_fitness",
    "next_generation",
    "run_sfsga",
    "aggregate_runs",
    "rescue_check",
]


@dataclass(frozen=True)
class Population:
    """Genome counts over all bitstrings of length ``order``; counts sum to N."""

    order: int
    counts: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("genome length must be >= 1")
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (1 << self.order,):
            raise DimensionError(
                f"counts must have {1 << self.order} entries, got shape {arr.shape}"
            )
        if arr.min() < 0:
            raise ValueError("counts must be nonnegative")
        if arr.sum() < 1:
            raise ValueError("population must hold at least one individual")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.size

    @classmethod
    def sample_uniform(cls, order: int, size: int, rng: np.random.Generator) -> "Population":
        """Draw ``size`` individuals independently and uniformly over the genome set."""
        genomes = rng.integers(0, 1 << order, size=size)
        return cls(order, np.bincount(genomes, minlength=1 << order))


@dataclass(frozen=True)
class StochasticFitness:
    """Per-genome fitness means with a shared sampling standard deviation."""

    means: np.ndarray
    sigma: float

    def __post_init__(self):
        arr = np.asarray(self.means, dtype=float)
        if arr.ndim != 1:
            raise ValueError("means must be a vector")
        if not np.all(np.isfinite(arr)) or arr.min() < 0:
            raise ValueError("fitness means must be finite and nonnegative")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "means", arr)


def sample_fitness(fitness: StochasticFitness, genome: int, rng: np.random.Generator) -> float:
    """One fresh fitness draw for ``genome``; negative samples return exactly 0."""
    draw = float(rng.normal(fitness.means[genome], fitness.sigma))
    return draw if draw > 0.0 else 0.0


def next_generation(
    population: Population, fitness: StochasticFitness, rng: np.random.Generator
) -> Population:
    """Produce one generation of children.

    Every individual receives a fresh fitness sample; each of the N children
    draws two parents independently with replacement, proportionally to the
    sampled fitness, and applies uniform crossover.
    """
    size = 1 << population.order
    if fitness.means.shape != (size,):
        raise DimensionError("fitness means do not cover the genome set")
    genomes = np.repeat(np.arange(size), population.counts)
    draws = rng.normal(fitness.means[genomes], fitness.sigma)
    np.maximum(draws, 0.0, out=draws)
    total = draws.sum()
    if total <= 0.0:
        raise DegenerateSelectionError("every sampled fitness is zero")
    weights = draws / total
    n = population.size
    first = rng.choice(n, size=n, p=weights)
    second = rng.choice(n, size=n, p=weights)
    masks = rng.integers(0, size, size=n)
    full = size - 1
    children = (genomes[first] & ~masks & full) | (genomes[second] & masks)
    return Population(population.order, np.bincount(children, minlength=size))


def run_sfsga(
    order: int,
    size: int,
    fitness: StochasticFitness,
    generations: int,
    seed,
) -> np.ndarray:
    """Run one seeded evolution; returns frequencies, shape (generations + 1, 2**order).

    Generation 0 is drawn uniformly over the genome set.  ``seed`` is anything
    ``numpy.random.default_rng`` accepts (int, SeedSequence, Generator).
    """
    if size < 1:
        raise ValueError("population size must be >= 1")
    if generations < 0:
        raise ValueError("generations must be >= 0")
    rng = np.random.default_rng(seed)
    population = Population.sample_uniform(order, size, rng)
    table = np.empty((generations + 1, 1 << order))
    table[0] = population.frequencies()
    for step in range(1, generations + 1):
        try:
            population = next_generation(population, fitness, rng)
        except DegenerateSelectionError as err:
            raise DegenerateSelectionError(
                f"selection degenerated at generation {step}: {err}"
            ) from err
        table[step] = population.frequencies()
    return table


@dataclass(frozen=True)
class RunStatistics:
    """Per-genome, per-generation frequency mean and spread across replicate runs."""

    mean: np.ndarray
    std: np.ndarray
    runs: int


def aggregate_runs(tables: list[np.ndarray]) -> RunStatistics:
    """Cell-wise mean and sample standard deviation (ddof 1; zero for one run)."""
    if not tables:
        raise ValueError("need at least one run to aggregate")
    shape = tables[0].shape
    if any(t.shape != shape for t in tables):
        raise DimensionError("replicate frequency tables must share a shape")
    stacked = np.stack(tables)
    mean = stacked.mean(axis=0)
    if len(tables) > 1:
        std = stacked.std(axis=0, ddof=1)
    else:
        std = np.zeros(shape)
    return RunStatistics(mean=mean, std=std, runs=len(tables))


@dataclass(frozen=True)
class RescueReport:
    """Which genome dominates the final generation and how its mean fitness ranks."""

    winner: int
    winner_fvalue: float
    fvalue_mean: float
    above_average: bool
    is_top_fvalue: bool
    degenerate_tie: bool


def rescue_check(stats: RunStatistics, means) -> RescueReport:
    """Identify the final-generation frequency winner and rank its f-value.

    Ties in frequency break toward the lowest genome index.  ``above_average``
    compares strictly against the arithmetic mean of the f-values, so an
    all-equal assignment reports False and is flagged as a degenerate tie.
    """
    values = np.asarray(means, dtype=float)
    final = stats.mean[-1]
    if values.shape != final.shape:
        raise DimensionError("f-values do not cover the genome set")
    winner = int(np.argmax(final))
    winner_fvalue = float(values[winner])
    average = float(values.mean())
    return RescueReport(
        winner=winner,
        winner_fvalue=winner_fvalue,
        fvalue_mean=average,
        above_average=winner_fvalue > average,
        is_top_fvalue=winner_fvalue == float(values.max()),
        degenerate_tie=bool(np.all(values == values[0])),
    )
