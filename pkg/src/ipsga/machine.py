"""Evolution machines: exact infinite-population dynamics and their quotients.

An evolution machine couples a genome set, a transmission function, and a
fitness function; one epoch is proportional selection followed by variation.
Quotient machines run the same dynamics on a theme set, using the theme
transmission and a prescribed theme fitness, and the coarse-graining report
measures how faithfully the quotient trajectory shadows the projected fine
trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    DegenerateSelectionError,
    DimensionError,
    Distribution,
    FitnessFunction,
    IndexedSet,
    ThemeMap,
    manhattan,
    project,
    select,
)
from .transmission import (
    CapacityError,
    TransmissionFunction,
    apply_variation,
    theme_transmission,
)

MAX_EXACT_SIZE = 1 << 16
DRIFT_TOL = 1e-12

__all__ = [
    "MAX_EXACT_SIZE",
    "EvolutionMachine",
    "Trajectory",
    "CoarseGrainReport",
    "epoch",
    "trajectory",
    "quotient_machine",
    "thematic_mean_divergence",
    "departure_monitor",
    "coarse_graining_error",
]


class EvolutionMachine:
    """A genome set, a transmission function, and a fitness function."""

    def __init__(
        self,
        genomes: IndexedSet,
        transmission: TransmissionFunction,
        fitness: FitnessFunction,
    ):
        if genomes.size > MAX_EXACT_SIZE:
            raise CapacityError(
                f"exact iteration holds dense distributions over {genomes.size} genomes; "
                f"the limit is {MAX_EXACT_SIZE}. Use the finite-population simulator "
                "(ipsga.finite) for larger genome spaces."
            )
        if transmission.base.size != genomes.size or fitness.base.size != genomes.size:
            raise DimensionError("machine components must share the genome set")
        self.genomes = genomes
        self.transmission = transmission
        self.fitness = fitness

    def __repr__(self) -> str:
        return (
            f"EvolutionMachine(size={self.genomes.size}, "
            f"arity={self.transmission.arity})"
        )


@dataclass
class Trajectory:
    """Per-generation distributions plus the logged normalization corrections.

    ``corrections[t]`` is the |sum - 1| drift removed after computing
    generation ``t`` (0 when none was needed; always 0 at generation 0).
    """

    distributions: list[Distribution]
    corrections: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.distributions)

    def __getitem__(self, index: int) -> Distribution:
        return self.distributions[index]

    def frequencies(self) -> np.ndarray:
        """Stacked masses, shape (generations + 1, size)."""
        return np.stack([p.mass for p in self.distributions])


def epoch(machine: EvolutionMachine, p: Distribution) -> Distribution:
    """One generation: proportional selection, then variation."""
    return apply_variation(machine.transmission, select(machine.fitness, p))


def trajectory(machine: EvolutionMachine, start: Distribution, generations: int) -> Trajectory:
    """Iterate the epoch operator ``generations`` times from ``start``.

    Floating drift beyond ``DRIFT_TOL`` is renormalized away and logged per
    generation, so long runs stay exactly on the simplex without masking real
    normalization bugs.
    """
    if generations < 0:
        raise ValueError("generations must be >= 0")
    if start.base.size != machine.genomes.size:
        raise DimensionError("start distribution does not live on the genome set")
    states = [start]
    corrections = [0.0]
    for step in range(1, generations + 1):
        try:
            nxt = epoch(machine, states[-1])
        except DegenerateSelectionError as err:
            raise DegenerateSelectionError(
                f"selection degenerated at generation {step}: {err}"
            ) from err
        total = float(nxt.mass.sum())
        drift = abs(total - 1.0)
        if drift > DRIFT_TOL:
            nxt = Distribution(nxt.base, nxt.mass / total)
        corrections.append(drift)
        states.append(nxt)
    return Trajectory(states, corrections)


def quotient_machine(
    machine: EvolutionMachine,
    beta: ThemeMap,
    theme_fitness: FitnessFunction,
) -> EvolutionMachine:
    """The coarse machine on the theme set: quotient transmission plus ``theme_fitness``.

    Structural operators supply their quotient in closed form; anything else
    falls back to exhaustive extraction, which certifies ambivalence and
    raises with a witness if it fails.
    """
    if beta.domain.size != machine.genomes.size:
        raise DimensionError("theme map does not cover the machine's genome set")
    if theme_fitness.base.size != beta.codomain.size:
        raise DimensionError("theme fitness must live on the theme set")
    quotient = machine.transmission.projected(beta)
    if quotient is None:
        quotient = theme_transmission(machine.transmission, beta)
    return EvolutionMachine(beta.codomain, quotient, theme_fitness)


def thematic_mean_divergence(
    fitness: FitnessFunction,
    theme_fitness: FitnessFunction,
    beta: ThemeMap,
    p: Distribution,
) -> float:
    """Worst gap between a theme class's conditional mean fitness and its target.

    Maximizes |mean fitness of the class under p-conditioning - theme value|
    over themes whose class carries mass; zero-mass themes are skipped.
    """
    if beta.domain.size != fitness.base.size:
        raise DimensionError("fitness and theme map disagree on the domain")
    if theme_fitness.base.size != beta.codomain.size:
        raise DimensionError("theme fitness must live on the theme set")
    if p.base.size != beta.domain.size:
        raise DimensionError("distribution and theme map disagree on the domain")
    class_mass = np.bincount(beta.assignment, weights=p.mass, minlength=beta.codomain.size)
    weighted = np.bincount(
        beta.assignment, weights=fitness.values * p.mass, minlength=beta.codomain.size
    )
    occupied = class_mass > 0.0
    if not occupied.any():
        return 0.0
    means = weighted[occupied] / class_mass[occupied]
    return float(np.abs(means - theme_fitness.values[occupied]).max())


def departure_monitor(beta: ThemeMap, p: Distribution) -> float:
    """Distance of the worst theme-conditional of ``p`` from uniform-on-its-class.

    Returns the maximum, over themes with mass, of the L1 distance between
    the conditional distribution on the class and the uniform distribution on
    that class; zero exactly when ``p`` is uniform within every occupied
    class.
    """
    if p.base.size != beta.domain.size:
        raise DimensionError("distribution and theme map disagree on the domain")
    class_mass = np.bincount(beta.assignment, weights=p.mass, minlength=beta.codomain.size)
    occupied = class_mass > 0.0
    if not occupied.any():
        return 0.0
    conditional = p.mass / class_mass[beta.assignment]
    gap = np.abs(conditional - 1.0 / beta.class_sizes[beta.assignment])
    # Entries in zero-mass classes are invalid; mask them out before summing.
    gap[~occupied[beta.assignment]] = 0.0
    per_theme = np.bincount(beta.assignment, weights=gap, minlength=beta.codomain.size)
    return float(per_theme[occupied].max())


@dataclass
class CoarseGrainReport:
    """Fidelity measurements between a fine machine and its quotient.

    ``distances[t]`` is the L1 gap between the projected fine state and the
    quotient state at generation ``t`` (0 at t = 0 by construction).
    ``delta`` bounds the thematic mean divergence over the uniform
    distribution and every distribution along the fine trajectory.
    ``departures[t]`` measures how far generation ``t`` strays from
    class-wise uniformity.
    """

    distances: np.ndarray
    delta: float
    departures: np.ndarray


def coarse_graining_error(
    machine: EvolutionMachine,
    quotient: EvolutionMachine,
    beta: ThemeMap,
    start: Distribution,
    generations: int,
) -> CoarseGrainReport:
    """Run both trajectories and report per-generation shadowing error."""
    if generations < 1:
        raise ValueError("generations must be >= 1")
    fine = trajectory(machine, start, generations)
    coarse = trajectory(quotient, project(beta, start), generations)
    distances = np.array(
        [
            manhattan(project(beta, fine[t]), coarse[t])
            for t in range(generations + 1)
        ]
    )
    probes = [Distribution.uniform(machine.genomes)] + list(fine.distributions)
    delta = max(
        thematic_mean_divergence(machine.fitness, quotient.fitness, beta, probe)
        for probe in probes
    )
    departures = np.array(
        [departure_monitor(beta, fine[t]) for t in range(generations + 1)]
    )
    return CoarseGrainReport(distances=distances, delta=delta, departures=departures)
