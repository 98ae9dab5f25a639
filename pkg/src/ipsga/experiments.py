"""Experiment presets, configuration files, and reproducible runs to CSV.

An experiment couples one exact infinite-population trajectory on the theme
set (the reference dynamics) with ``r`` seeded finite-population runs, all
sharing per-genome fitness means (f-values).  Outputs land in the configured
directory:

- ``ipsga2.csv``      exact trajectory, rows ``generation,genome_bits,value``
- ``sfsga_mean.csv``  replicate-mean frequencies, same schema
- ``sfsga_std.csv``   replicate sample standard deviations, same schema
- ``fvalues.csv``     per-genome means, rows ``genome_bits,value``
- ``manifest.txt``    every effective parameter; feed it back via ``--config``
                      to reproduce the run byte for byte
- ``rescue_report.csv``  presets 7-12 only: final-generation winner analysis
- ``sweep.csv``       convergence sweeps only: max deviation per setting

Seed derivation: the master seed spawns one stream for random f-values and one
stream per replicate run, independently, so supplying the emitted f-values
explicitly leaves every run unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import Distribution, FitnessFunction
from .finite import RescueReport, RunStatistics, StochasticFitness, aggregate_runs, rescue_check, run_sfsga
from .machine import EvolutionMachine, trajectory
from .operators import BitstringSet, bits, projected_uniform_crossover

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "SweepRow",
    "preset",
    "PRESET_IDS",
    "resolve_fvalues",
    "reference_trajectory",
    "run_experiment",
    "run_convergence_sweep",
    "parse_config_text",
    "config_from_mapping",
]

PRESET_IDS = tuple(range(1, 13))
RESCUE_PRESETS = frozenset(range(7, 13))

_PRESET_PARAMS = {
    1: (3, 2000, 1, 30),
    2: (3, 2000, 40, 30),
    3: (3, 20000, 40, 30),
    4: (3, 100000, 40, 30),
    5: (3, 400000, 1, 30),
    6: (4, 200000, 10, 30),
}
for _pid in range(7, 13):
    _PRESET_PARAMS[_pid] = (3, 1000, 10, 300)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of one experiment.

    ``fvalues`` fixes the per-genome means explicitly; when None they are
    drawn uniformly from ``frange`` using a stream derived from ``seed``.
    """

    order: int = 3
    population: int = 2000
    replicates: int = 1
    generations: int = 30
    sigma: float = 0.8
    fvalues: tuple[float, ...] | None = None
    frange: tuple[float, float] = (2.0, 3.0)
    seed: int = 0
    out: str = "results"
    preset: int | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.order > 16:
            raise ValueError("order must be <= 16 for the exact reference trajectory")
        if self.population < 1:
            raise ValueError("population size must be >= 1")
        if self.replicates < 1:
            raise ValueError("replicate count must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        lo, hi = self.frange
        if not lo <= hi:
            raise ValueError(f"frange lower bound {lo} exceeds upper bound {hi}")
        if self.fvalues is not None:
            if len(self.fvalues) != 1 << self.order:
                raise ValueError(
                    f"need {1 << self.order} f-values for order {self.order}, "
                    f"got {len(self.fvalues)}"
                )
            if min(self.fvalues) < 0:
                raise ValueError("f-values must be nonnegative")


def preset(preset_id: int) -> ExperimentConfig:
    """The parameter tuple of one of the twelve canned experiments."""
    if preset_id not in _PRESET_PARAMS:
        raise ValueError(f"unknown preset {preset_id!r}; valid ids are 1..12")
    order, population, replicates, generations = _PRESET_PARAMS[preset_id]
    return ExperimentConfig(
        order=order,
        population=population,
        replicates=replicates,
        generations=generations,
        sigma=0.8,
        preset=preset_id,
    )


def _seed_streams(config: ExperimentConfig):
    root = np.random.SeedSequence(config.seed)
    fvalue_stream, run_stream = root.spawn(2)
    return fvalue_stream, run_stream


def resolve_fvalues(config: ExperimentConfig) -> np.ndarray:
    """The effective per-genome means: explicit values or a seeded uniform draw."""
    if config.fvalues is not None:
        return np.asarray(config.fvalues, dtype=float)
    fvalue_stream, _ = _seed_streams(config)
    rng = np.random.default_rng(fvalue_stream)
    lo, hi = config.frange
    return rng.uniform(lo, hi, size=1 << config.order)


def reference_trajectory(fvalues: np.ndarray, order: int, generations: int) -> np.ndarray:
    """Exact infinite-population frequencies on the theme set, from uniform start.

    Proportional selection on the means plus the per-locus quotient of uniform
    crossover; shape (generations + 1, 2**order).
    """
    genomes = BitstringSet(order)
    machine = EvolutionMachine(
        genomes,
        projected_uniform_crossover(order),
        FitnessFunction(genomes, fvalues),
    )
    return trajectory(machine, Distribution.uniform(genomes), generations).frequencies()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    fvalues: np.ndarray
    reference: np.ndarray
    stats: RunStatistics
    rescue: RescueReport | None
    paths: dict[str, Path] = field(default_factory=dict)


def _run_replicates(config: ExperimentConfig, fvalues: np.ndarray) -> RunStatistics:
    _, run_stream = _seed_streams(config)
    fitness = StochasticFitness(means=fvalues, sigma=config.sigma)
    tables = [
        run_sfsga(config.order, config.population, fitness, config.generations, child)
        for child in run_stream.spawn(config.replicates)
    ]
    return aggregate_runs(tables)


def _write_trajectory_csv(path: Path, table: np.ndarray, order: int) -> None:
    lines = ["generation,genome_bits,value"]
    for generation, row in enumerate(table):
        for genome, value in enumerate(row):
            lines.append(f"{generation},{bits(genome, order)},{value!r}")
    path.write_text("\n".join(lines) + "\n")


def _write_fvalues_csv(path: Path, fvalues: np.ndarray, order: int) -> None:
    lines = ["genome_bits,value"]
    for genome, value in enumerate(fvalues):
        lines.append(f"{bits(genome, order)},{value!r}")
    path.write_text("\n".join(lines) + "\n")


def _write_rescue_csv(path: Path, report: RescueReport, order: int) -> None:
    lines = [
        "winner_bits,winner_fvalue,fvalue_mean,above_average,is_top_fvalue,degenerate_tie",
        ",".join(
            [
                bits(report.winner, order),
                repr(report.winner_fvalue),
                repr(report.fvalue_mean),
                str(report.above_average).lower(),
                str(report.is_top_fvalue).lower(),
                str(report.degenerate_tie).lower(),
            ]
        ),
    ]
    path.write_text("\n".join(lines) + "\n")


def _manifest_text(config: ExperimentConfig, fvalues: np.ndarray) -> str:
    lines = [
        "# experiment manifest; rerun with: ipsga --config <this file>",
        f"version = {__version__}",
    ]
    if config.preset is not None:
        lines.append(f"preset = {config.preset}")
    lines += [
        f"o = {config.order}",
        f"n = {config.population}",
        f"r = {config.replicates}",
        f"generations = {config.generations}",
        f"sigma = {config.sigma!r}",
        f"seed = {config.seed}",
        f"frange = {config.frange[0]!r},{config.frange[1]!r}",
        f"fvalues = {','.join(repr(float(v)) for v in fvalues)}",
        f"out = {config.out}",
    ]
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Compute the reference and replicate dynamics and write all output files."""
    fvalues = resolve_fvalues(config)
    reference = reference_trajectory(fvalues, config.order, config.generations)
    stats = _run_replicates(config, fvalues)
    rescue = None
    if config.preset in RESCUE_PRESETS:
        rescue = rescue_check(stats, fvalues)

    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "ipsga2": outdir / "ipsga2.csv",
        "sfsga_mean": outdir / "sfsga_mean.csv",
        "sfsga_std": outdir / "sfsga_std.csv",
        "fvalues": outdir / "fvalues.csv",
        "manifest": outdir / "manifest.txt",
    }
    _write_trajectory_csv(paths["ipsga2"], reference, config.order)
    _write_trajectory_csv(paths["sfsga_mean"], stats.mean, config.order)
    _write_trajectory_csv(paths["sfsga_std"], stats.std, config.order)
    _write_fvalues_csv(paths["fvalues"], fvalues, config.order)
    paths["manifest"].write_text(_manifest_text(config, fvalues))
    if rescue is not None:
        paths["rescue"] = outdir / "rescue_report.csv"
        _write_rescue_csv(paths["rescue"], rescue, config.order)
    return ExperimentResult(
        config=config,
        fvalues=fvalues,
        reference=reference,
        stats=stats,
        rescue=rescue,
        paths=paths,
    )


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    max_deviation: float


def run_convergence_sweep(
    config: ExperimentConfig,
    population_sizes=None,
    sigmas=None,
) -> list[SweepRow]:
    """Sweep the population size or the fitness noise and measure tracking error.

    For each setting, runs the configured replicates against the shared
    reference trajectory (f-values are resolved once from the base config) and
    records the maximum per-generation per-genome deviation of the replicate
    mean.  Writes ``sweep.csv`` under the configured output directory.
    """
    if (population_sizes is None) == (sigmas is None):
        raise ValueError("provide exactly one of population_sizes or sigmas")
    fvalues = resolve_fvalues(config)
    base = replace(config, fvalues=tuple(float(v) for v in fvalues))
    reference = reference_trajectory(fvalues, config.order, config.generations)
    rows = []
    if population_sizes is not None:
        variants = [("n", int(v), replace(base, population=int(v))) for v in population_sizes]
    else:
        variants = [("sigma", float(v), replace(base, sigma=float(v))) for v in sigmas]
    for name, value, variant in variants:
        stats = _run_replicates(variant, fvalues)
        deviation = float(np.abs(stats.mean - reference).max())
        rows.append(SweepRow(parameter=name, value=value, max_deviation=deviation))
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = ["parameter,value,max_deviation"]
    for row in rows:
        lines.append(f"{row.parameter},{row.value!r},{row.max_deviation!r}")
    (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")
    return rows


# -- configuration files -------------------------------------------------------

_INT_KEYS = {"o", "n", "r", "generations", "seed", "preset"}
_KNOWN_KEYS = _INT_KEYS | {"sigma", "fvalues", "frange", "out", "version"}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key == "version":
            continue
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key == "sigma":
            values[key] = float(value)
        elif key == "fvalues":
            values[key] = tuple(float(v) for v in value.split(","))
        elif key == "frange":
            lo, hi = (float(v) for v in value.split(","))
            values[key] = (lo, hi)
        else:  # out
            values[key] = value
    return values


_FIELD_BY_KEY = {
    "o": "order",
    "n": "population",
    "r": "replicates",
    "generations": "generations",
    "sigma": "sigma",
    "fvalues": "fvalues",
    "frange": "frange",
    "seed": "seed",
    "out": "out",
}


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from parsed key/value pairs, applying any preset first."""
    preset_id = values.get("preset")
    config = preset(preset_id) if preset_id is not None else ExperimentConfig()
    overrides = {
        _FIELD_BY_KEY[key]: value
        for key, value in values.items()
        if key != "preset" and value is not None
    }
    return replace(config, **overrides)
