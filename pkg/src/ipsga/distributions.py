"""Finite probability distributions and the four operators everything else builds on.

All objects live over an :class:`IndexedSet`, a finite set addressed by dense
integer indices ``0..size-1``.  Distributions are dense float64 vectors that
either sum to one (within ``NORMALIZATION_TOL``) or are identically zero (the
zero function, a legal value returned by conditioning on an empty class).

Operators never renormalize silently.  Proportional selection divides by the
total fitness because its defining formula does; nothing else touches the
mass.  This keeps commutation checks between exact and coarse-grained dynamics
honest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-9

__all__ = [
    "NORMALIZATION_TOL",
    "DimensionError",
    "DegenerateSelectionError",
    "IndexedSet",
    "Distribution",
    "FitnessFunction",
    "ThemeMap",
    "expectation",
    "select",
    "project",
    "theme_conditional",
    "manhattan",
]


class DimensionError(ValueError):
    """Operands do not live over the same base set."""


class DegenerateSelectionError(ArithmeticError):
    """Total fitness mass is zero, so proportional selection is undefined."""


@dataclass(frozen=True)
class IndexedSet:
    """A finite set whose elements are dense indices ``0..size-1``.

    ``labels`` optionally names the elements; it is cosmetic only and plays no
    role in compatibility checks (two sets are compatible iff their sizes
    match).
    """

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"set size must be >= 1, got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("labels must name every element")

    def label(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return str(index)


def _frozen_vector(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Distribution:
    """A probability vector over a finite indexed set.

    The all-zero vector is admitted as a distinct legal value (``is_zero``);
    every other vector must have entries in [0, 1] and sum to one within
    ``NORMALIZATION_TOL``.  Instances are immutable after construction.
    """

    __slots__ = ("base", "mass")

    def __init__(self, base: IndexedSet, mass):
        arr = _frozen_vector(mass)
        if arr.size != base.size:
            raise DimensionError(
                f"mass vector has {arr.size} entries for a base of size {base.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("mass entries must be finite")
        if arr.min(initial=0.0) < 0.0:
            raise ValueError("mass entries must be nonnegative")
        total = float(arr.sum())
        if total != 0.0 and abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"mass sums to {total!r}, expected 1 or exactly 0")
        if arr.max(initial=0.0) > 1.0 + NORMALIZATION_TOL:
            raise ValueError("mass entries must not exceed 1")
        self.base = base
        self.mass = arr

    @property
    def is_zero(self) -> bool:
        return not self.mass.any()

    @classmethod
    def uniform(cls, base: IndexedSet) -> "Distribution":
        return cls(base, np.full(base.size, 1.0 / base.size))

    @classmethod
    def point_mass(cls, base: IndexedSet, index: int) -> "Distribution":
        mass = np.zeros(base.size)
        mass[index] = 1.0
        return cls(base, mass)

    @classmethod
    def zero(cls, base: IndexedSet) -> "Distribution":
        return cls(base, np.zeros(base.size))

    def __repr__(self) -> str:
        return f"Distribution(size={self.base.size}, sum={self.mass.sum():.6f})"


class FitnessFunction:
    """Nonnegative per-element fitness values over a finite indexed set.

    Zero values are admitted (the stochastic fitness model clamps negative
    samples to zero); selection assigns them zero mass and raises only when
    the total fitness of a population collapses to zero.
    """

    __slots__ = ("base", "values")

    def __init__(self, base: IndexedSet, values):
        arr = _frozen_vector(values)
        if arr.size != base.size:
            raise DimensionError(
                f"fitness vector has {arr.size} entries for a base of size {base.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("fitness values must be finite")
        if arr.min(initial=0.0) < 0.0:
            raise ValueError("fitness values must be nonnegative")
        self.base = base
        self.values = arr

    def __repr__(self) -> str:
        return f"FitnessFunction(size={self.base.size})"


class ThemeMap:
    """A surjective map from a domain set onto a theme set.

    ``assignment[x]`` is the theme index of domain element ``x``.  The
    pre-image of a theme is its theme class; surjectivity (no empty class) is
    checked on construction.
    """

    def __init__(self, domain: IndexedSet, codomain: IndexedSet, assignment):
        arr = _frozen_vector(assignment, dtype=np.int64)
        if arr.size != domain.size:
            raise DimensionError(
                f"assignment has {arr.size} entries for a domain of size {domain.size}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= codomain.size):
            raise ValueError("assignment entries must be valid theme indices")
        sizes = np.bincount(arr, minlength=codomain.size)
        if (sizes == 0).any():
            empty = int(np.flatnonzero(sizes == 0)[0])
            raise ValueError(f"theme {empty} has an empty theme class (map not surjective)")
        self.domain = domain
        self.codomain = codomain
        self.assignment = arr
        self.class_sizes = sizes
        self.class_sizes.setflags(write=False)
        self._classes: list[np.ndarray] | None = None

    @classmethod
    def identity(cls, base: IndexedSet) -> "ThemeMap":
        return cls(base, base, np.arange(base.size))

    def theme_class(self, theme: int) -> np.ndarray:
        """Indices of the domain elements mapped to ``theme``."""
        if self._classes is None:
            order = np.argsort(self.assignment, kind="stable")
            bounds = np.cumsum(self.class_sizes)[:-1]
            self._classes = np.split(order, bounds)
        return self._classes[theme]

    def __repr__(self) -> str:
        return f"ThemeMap({self.domain.size} -> {self.codomain.size})"


def _check_same_base(a_size: int, b_size: int, what: str) -> None:
    if a_size != b_size:
        raise DimensionError(f"{what}: base sizes {a_size} and {b_size} differ")


def expectation(fitness: FitnessFunction, p: Distribution) -> float:
    """Mean fitness under ``p``: the sum of ``fitness(x) * p(x)``.

    Returns 0 for the zero function.
    """
    _check_same_base(fitness.base.size, p.base.size, "expectation")
    return float(fitness.values @ p.mass)


def select(fitness: FitnessFunction, p: Distribution) -> Distribution:
    """Fitness-proportional selection: reweight ``p`` by fitness and normalize.

    Raises :class:`DegenerateSelectionError` when the mean fitness is zero
    (total fitness collapse), which includes zero-function input.
    """
    total = expectation(fitness, p)
    if total <= 0.0:
        raise DegenerateSelectionError("total fitness mass is zero")
    return Distribution(p.base, fitness.values * p.mass / total)


def project(beta: ThemeMap, p: Distribution) -> Distribution:
    """Push ``p`` through ``beta``: each theme receives its class's total mass."""
    _check_same_base(beta.domain.size, p.base.size, "project")
    q = np.bincount(beta.assignment, weights=p.mass, minlength=beta.codomain.size)
    return Distribution(beta.codomain, q)


def theme_conditional(beta: ThemeMap, p: Distribution, theme: int) -> Distribution:
    """Condition ``p`` on the theme class of ``theme``.

    Returns the zero function when the class carries no mass (a defined
    value, not an error).
    """
    _check_same_base(beta.domain.size, p.base.size, "theme_conditional")
    if not 0 <= theme < beta.codomain.size:
        raise ValueError(f"theme {theme} out of range")
    members = beta.theme_class(theme)
    class_mass = float(p.mass[members].sum())
    if class_mass == 0.0:
        return Distribution.zero(p.base)
    out = np.zeros(p.base.size)
    out[members] = p.mass[members] / class_mass
    return Distribution(p.base, out)


def _as_vector(v) -> np.ndarray:
    if isinstance(v, Distribution):
        return v.mass
    if isinstance(v, FitnessFunction):
        return v.values
    return np.asarray(v, dtype=float)


def manhattan(a, b) -> float:
    """L1 distance between two equal-length real vectors (metric on functions)."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise DimensionError(f"vector lengths {va.shape} and {vb.shape} differ")
    return float(np.abs(va - vb).sum())
