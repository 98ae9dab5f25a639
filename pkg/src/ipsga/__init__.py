"""Exact infinite-population GA dynamics with theme-map coarse-graining,
plus a finite-population stochastic-fitness GA harness."""

__version__ = "0.1.0"

from .distributions import (
    DegenerateSelectionError,
    DimensionError,
    Distribution,
    FitnessFunction,
    IndexedSet,
    ThemeMap,
    expectation,
    manhattan,
    project,
    select,
    theme_conditional,
)
from .transmission import (
    AmbivalenceError,
    CapacityError,
    DenseTransmission,
    TransmissionFunction,
    apply_variation,
    are_independent,
    cartesian_product,
    clone,
    compose,
    is_ambivalent,
    theme_transmission,
    weighted_sum,
)
from .operators import (
    BitstringSet,
    Mask,
    SchemaMap,
    bits,
    canonical_mutation,
    crossover_from_mask_distribution,
    mask_crossover,
    n_point_crossover,
    projected_mutation,
    projected_uniform_crossover,
    schema_map,
    uniform_crossover,
)
from .machine import (
    CoarseGrainReport,
    EvolutionMachine,
    Trajectory,
    coarse_graining_error,
    departure_monitor,
    epoch,
    quotient_machine,
    thematic_mean_divergence,
    trajectory,
)
from .finite import (
    Population,
    RescueReport,
    RunStatistics,
    StochasticFitness,
    aggregate_runs,
    next_generation,
    rescue_check,
    run_sfsga,
    sample_fitness,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    preset,
    run_convergence_sweep,
    run_experiment,
)
