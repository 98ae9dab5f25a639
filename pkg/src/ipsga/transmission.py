"""Multi-parent transmission functions and the variation-operator algebra.

A transmission function assigns each (child, parent tuple) a probability, with
the child distribution normalized for every parent tuple.  The population-level
variation operator pushes a distribution forward through a transmission
function assuming parents are drawn independently.

The central structural notion is *ambivalence* of a transmission function under
a theme map: the mass a child distribution places on a theme class must depend
only on the parents' themes, never on the specific representatives.  An
ambivalent transmission function induces a quotient transmission function on
the theme set (its theme transmission), and variation then commutes exactly
with projection.  Certification here is exhaustive and numeric: every theme
tuple and every representative tuple is enumerated on the dense tensor, so it
requires ``base.size ** (arity + 1)`` to fit in the dense budget.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import (
    NORMALIZATION_TOL,
    DimensionError,
    Distribution,
    IndexedSet,
    ThemeMap,
)

DENSE_BUDGET = 1 << 24
AMBIVALENCE_TOL = 1e-9

__all__ = [
    "DENSE_BUDGET",
    "AMBIVALENCE_TOL",
    "CapacityError",
    "AmbivalenceError",
    "AmbivalenceWitness",
    "TransmissionFunction",
    "DenseTransmission",
    "IdentityTransmission",
    "Composition",
    "WeightedSumTransmission",
    "clone",
    "apply_variation",
    "compose",
    "weighted_sum",
    "ambivalence_witness",
    "is_ambivalent",
    "theme_transmission",
    "cartesian_product",
    "ProductThemeMap",
    "are_independent",
]


class CapacityError(ValueError):
    """An exact computation would exceed its configured size budget."""


@dataclass(frozen=True)
class AmbivalenceWitness:
    """Two representative parent tuples whose child-class masses disagree."""

    parent_themes: tuple[int, ...]
    parents_a: tuple[int, ...]
    parents_b: tuple[int, ...]
    child_theme: int
    mass_a: float
    mass_b: float


class AmbivalenceError(ValueError):
    """A transmission function is not ambivalent under the given theme map."""

    def __init__(self, witness: AmbivalenceWitness):
        self.witness = witness
        super().__init__(
            "not ambivalent: parent tuples "
            f"{witness.parents_a} and {witness.parents_b} (themes "
            f"{witness.parent_themes}) place masses {witness.mass_a!r} and "
            f"{witness.mass_b!r} on theme {witness.child_theme}"
        )


class TransmissionFunction:
    """An m-parent conditional child distribution over a finite indexed set.

    Subclasses provide pointwise evaluation via :meth:`prob` and may override
    the structural fast paths: ``_apply_mass`` (push a population vector
    through variation) and ``projected`` (a closed-form quotient under a theme
    map, when one exists).  The dense tensor, child axis first, is materialized
    lazily and only within ``DENSE_BUDGET`` entries; exhaustive certification
    routines need it, structural operators do not.
    """

    def __init__(self, base: IndexedSet, arity: int):
        if arity < 1:
            raise ValueError(f"arity must be >= 1, got {arity}")
        self.base = base
        self.arity = arity
        self._dense: np.ndarray | None = None

    # -- pointwise -----------------------------------------------------------
    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        """Probability of ``child`` given the parent tuple."""
        raise NotImplementedError

    # -- dense materialization -------------------------------------------------
    def dense(self, budget: int = DENSE_BUDGET) -> np.ndarray:
        """The full tensor, shape ``(size,) * (arity + 1)``, child axis first."""
        if self._dense is None:
            size = self.base.size
            if size ** (self.arity + 1) > budget:
                raise CapacityError(
                    f"dense tensor would hold {size}**{self.arity + 1} entries, "
                    f"budget is {budget}"
                )
            tensor = self._build_dense()
            sums = tensor.reshape(size, -1).sum(axis=0)
            if np.abs(sums - 1.0).max() > NORMALIZATION_TOL:
                raise ValueError("transmission function is not normalized per parent tuple")
            tensor.setflags(write=False)
            self._dense = tensor
        return self._dense

    def _build_dense(self) -> np.ndarray:
        size = self.base.size
        tensor = np.empty((size,) * (self.arity + 1))
        for parents in np.ndindex(*(size,) * self.arity):
            for child in range(size):
                tensor[(child, *parents)] = self.prob(child, parents)
        return tensor

    # -- structural hooks ------------------------------------------------------
    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        """Push a population vector through variation; default contracts dense."""
        size = self.base.size
        flat = self.dense().reshape(size, -1)
        weights = mass
        for _ in range(self.arity - 1):
            weights = np.multiply.outer(weights, mass)
        return flat @ weights.reshape(-1)

    def projected(self, beta: ThemeMap) -> "TransmissionFunction | None":
        """Closed-form theme transmission under ``beta``, or None if unknown."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(size={self.base.size}, arity={self.arity})"


class DenseTransmission(TransmissionFunction):
    """A transmission function given explicitly by its dense tensor."""

    def __init__(self, base: IndexedSet, arity: int, tensor):
        super().__init__(base, arity)
        arr = np.array(tensor, dtype=float)
        if arr.shape != (base.size,) * (arity + 1):
            raise DimensionError(
                f"tensor shape {arr.shape} does not match (size,)*{arity + 1}"
            )
        if arr.min() < -1e-15:
            raise ValueError("transmission probabilities must be nonnegative")
        sums = arr.reshape(base.size, -1).sum(axis=0)
        if np.abs(sums - 1.0).max() > NORMALIZATION_TOL:
            raise ValueError("transmission function is not normalized per parent tuple")
        arr.setflags(write=False)
        self._dense = arr

    @classmethod
    def from_function(cls, base: IndexedSet, arity: int, fn) -> "DenseTransmission":
        """Tabulate ``fn(child, parents) -> probability`` into a dense tensor."""
        size = base.size
        tensor = np.empty((size,) * (arity + 1))
        for parents in np.ndindex(*(size,) * arity):
            for child in range(size):
                tensor[(child, *parents)] = fn(child, parents)
        return cls(base, arity, tensor)

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        return float(self._dense[(child, *parents)])


class IdentityTransmission(TransmissionFunction):
    """One-parent cloning: the child is the parent with probability one."""

    def __init__(self, base: IndexedSet):
        super().__init__(base, 1)

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        return 1.0 if child == parents[0] else 0.0

    def _build_dense(self) -> np.ndarray:
        return np.eye(self.base.size)

    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        return mass.copy()

    def projected(self, beta: ThemeMap) -> TransmissionFunction:
        # A clone's child inherits the parent's theme exactly.
        return IdentityTransmission(beta.codomain)


def clone(base: IndexedSet) -> IdentityTransmission:
    return IdentityTransmission(base)


class Composition(TransmissionFunction):
    """Apply ``inner`` to the parents, then ``outer`` to the intermediates.

    The composite has the inner arity: the outer operation's parents are
    independent applications of the inner operation to one shared parent
    tuple.  The population-level identity "vary with the composite = vary
    twice in sequence" holds exactly when the outer operator takes a single
    parent; for multi-parent outers the shared inner parents correlate the
    intermediates and only the composite form is correct.
    """

    def __init__(self, outer: TransmissionFunction, inner: TransmissionFunction):
        if outer.base.size != inner.base.size:
            raise DimensionError("composed transmission functions must share a base")
        super().__init__(inner.base, inner.arity)
        self.outer = outer
        self.inner = inner

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        size = self.base.size
        if self.outer.arity == 1:
            return float(
                sum(
                    self.outer.prob(child, (mid,)) * self.inner.prob(mid, parents)
                    for mid in range(size)
                )
            )
        return float(self.dense()[(child, *parents)])

    def _build_dense(self) -> np.ndarray:
        size = self.base.size
        m, n = self.outer.arity, self.inner.arity
        if size ** (m + n) > DENSE_BUDGET:
            raise CapacityError("intermediate tensor for composition exceeds budget")
        inner_flat = self.inner.dense().reshape(size, size**n)
        joint = inner_flat
        for _ in range(m - 1):
            joint = (joint[:, None, :] * inner_flat[None, :, :]).reshape(-1, size**n)
        out = self.outer.dense().reshape(size, size**m) @ joint
        return out.reshape((size,) * (n + 1))

    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        if self.outer.arity == 1:
            return self.outer._apply_mass(self.inner._apply_mass(mass))
        return super()._apply_mass(mass)

    def projected(self, beta: ThemeMap) -> TransmissionFunction | None:
        outer_q = self.outer.projected(beta)
        inner_q = self.inner.projected(beta)
        if outer_q is None or inner_q is None:
            return None
        return Composition(outer_q, inner_q)


class WeightedSumTransmission(TransmissionFunction):
    """A convex combination of same-arity transmission functions."""

    def __init__(self, weights, parts: list[TransmissionFunction]):
        if not parts:
            raise ValueError("weighted sum needs at least one part")
        base, arity = parts[0].base, parts[0].arity
        for part in parts[1:]:
            if part.base.size != base.size or part.arity != arity:
                raise DimensionError("weighted-sum parts must share base and arity")
        w = weights.mass if isinstance(weights, Distribution) else np.asarray(weights, float)
        if w.size != len(parts):
            raise DimensionError("one weight per part required")
        if w.min() < 0 or abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights must be a probability vector")
        super().__init__(base, arity)
        self.weights = w.copy()
        self.weights.setflags(write=False)
        self.parts = list(parts)

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        return float(
            sum(w * part.prob(child, parents) for w, part in zip(self.weights, self.parts))
        )

    def _build_dense(self) -> np.ndarray:
        out = np.zeros((self.base.size,) * (self.arity + 1))
        for w, part in zip(self.weights, self.parts):
            out += w * part.dense()
        return out

    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        out = np.zeros_like(mass)
        for w, part in zip(self.weights, self.parts):
            out += w * part._apply_mass(mass)
        return out

    def projected(self, beta: ThemeMap) -> TransmissionFunction | None:
        quotients = [part.projected(beta) for part in self.parts]
        if any(q is None for q in quotients):
            return None
        return WeightedSumTransmission(self.weights, quotients)


def apply_variation(transmission: TransmissionFunction, p: Distribution) -> Distribution:
    """Push ``p`` through the variation operator of ``transmission``.

    Parents are drawn independently from ``p``; the output is the resulting
    child distribution.
    """
    if transmission.base.size != p.base.size:
        raise DimensionError("transmission function and distribution bases differ")
    if p.is_zero:
        raise ValueError("variation requires a normalized distribution, got the zero function")
    return Distribution(transmission.base, transmission._apply_mass(p.mass))


def compose(outer: TransmissionFunction, inner: TransmissionFunction) -> Composition:
    """The transmission function of ``outer`` applied after ``inner``."""
    return Composition(outer, inner)


def weighted_sum(weights, parts: list[TransmissionFunction]) -> WeightedSumTransmission:
    """Pointwise convex combination of same-arity transmission functions."""
    return WeightedSumTransmission(weights, parts)


def _parent_tuple_theme_ids(assignment: np.ndarray, size: int, arity: int) -> np.ndarray:
    """Theme-tuple id (mixed radix over K) for every flattened parent tuple."""
    n_themes = int(assignment.max()) + 1
    ids = np.zeros(size**arity, dtype=np.int64)
    flat = np.arange(size**arity)
    for j in range(arity):
        coord = (flat // size ** (arity - 1 - j)) % size
        ids = ids * n_themes + assignment[coord]
    return ids


def _unflatten(index: int, size: int, arity: int) -> tuple[int, ...]:
    out = []
    for j in range(arity):
        out.append((index // size ** (arity - 1 - j)) % size)
    return tuple(out)


def _class_project_columns(assignment: np.ndarray, n_themes: int, columns: np.ndarray) -> np.ndarray:
    """Sum rows of ``columns`` (indexed by domain element) by theme class."""
    out = np.zeros((n_themes, columns.shape[1]))
    np.add.at(out, assignment, columns)
    return out


def ambivalence_witness(
    transmission: TransmissionFunction,
    beta: ThemeMap,
    tol: float = AMBIVALENCE_TOL,
) -> AmbivalenceWitness | None:
    """Exhaustively search for a violation of ambivalence; None means certified.

    For every parent tuple the child distribution is projected onto theme
    classes; within each group of parent tuples sharing a theme tuple, the
    projected vectors must agree entrywise within ``tol``.
    """
    if transmission.base.size != beta.domain.size:
        raise DimensionError("transmission base and theme-map domain differ")
    size = transmission.base.size
    arity = transmission.arity
    n_themes = beta.codomain.size
    flat = transmission.dense().reshape(size, size**arity)
    class_masses = _class_project_columns(beta.assignment, n_themes, flat)
    group_ids = _parent_tuple_theme_ids(beta.assignment, size, arity)
    order = np.argsort(group_ids, kind="stable")
    sorted_ids = group_ids[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    sorted_masses = class_masses[:, order]
    group_max = np.maximum.reduceat(sorted_masses, starts, axis=1)
    group_min = np.minimum.reduceat(sorted_masses, starts, axis=1)
    spread = group_max - group_min
    if spread.max(initial=0.0) <= tol:
        return None
    theme_idx, group_idx = np.unravel_index(np.argmax(spread), spread.shape)
    lo = starts[group_idx]
    hi = starts[group_idx + 1] if group_idx + 1 < starts.size else order.size
    block = sorted_masses[theme_idx, lo:hi]
    a = order[lo + int(np.argmax(block))]
    b = order[lo + int(np.argmin(block))]
    parents_a = _unflatten(int(a), size, arity)
    parents_b = _unflatten(int(b), size, arity)
    return AmbivalenceWitness(
        parent_themes=tuple(int(beta.assignment[x]) for x in parents_a),
        parents_a=parents_a,
        parents_b=parents_b,
        child_theme=int(theme_idx),
        mass_a=float(class_masses[theme_idx, a]),
        mass_b=float(class_masses[theme_idx, b]),
    )


def is_ambivalent(
    transmission: TransmissionFunction,
    beta: ThemeMap,
    tol: float = AMBIVALENCE_TOL,
) -> bool:
    """True iff child theme-class masses depend only on the parents' themes."""
    return ambivalence_witness(transmission, beta, tol) is None


def theme_transmission(
    transmission: TransmissionFunction,
    beta: ThemeMap,
    tol: float = AMBIVALENCE_TOL,
) -> DenseTransmission:
    """Extract the quotient transmission function on the theme set.

    Requires ambivalence (certified exhaustively first); the quotient is then
    read off one arbitrary representative per theme tuple.
    """
    witness = ambivalence_witness(transmission, beta, tol)
    if witness is not None:
        raise AmbivalenceError(witness)
    size = transmission.base.size
    arity = transmission.arity
    n_themes = beta.codomain.size
    _, first = np.unique(beta.assignment, return_index=True)
    reps = first.astype(np.int64)  # one representative genome per theme
    theme_tuples = np.arange(n_themes**arity)
    rep_flat = np.zeros(n_themes**arity, dtype=np.int64)
    for j in range(arity):
        coord = (theme_tuples // n_themes ** (arity - 1 - j)) % n_themes
        rep_flat = rep_flat * size + reps[coord]
    flat = transmission.dense().reshape(size, size**arity)
    columns = flat[:, rep_flat]
    projected = _class_project_columns(beta.assignment, n_themes, columns)
    tensor = projected.reshape((n_themes,) * (arity + 1))
    return DenseTransmission(beta.codomain, arity, tensor)


class ProductThemeMap(ThemeMap):
    """Cartesian product of theme maps over a shared domain.

    The codomain is the set of *reachable* theme tuples in lexicographic
    order (unreachable tuples are dropped so every class is nonempty).
    ``theme_tuples[k]`` recovers the component themes of product theme ``k``.
    """

    def __init__(self, factors: list[ThemeMap]):
        if not factors:
            raise ValueError("cartesian product needs at least one theme map")
        domain = factors[0].domain
        for factor in factors[1:]:
            if factor.domain.size != domain.size:
                raise DimensionError("theme maps in a product must share the domain")
        stacked = np.stack([factor.assignment for factor in factors], axis=1)
        tuples, assignment = np.unique(stacked, axis=0, return_inverse=True)
        super().__init__(domain, IndexedSet(tuples.shape[0]), assignment.ravel())
        self.factors = list(factors)
        self.theme_tuples = tuples
        self.theme_tuples.setflags(write=False)


def cartesian_product(maps: list[ThemeMap]) -> ProductThemeMap:
    """Combine theme maps pointwise; themes are reachable assignment tuples."""
    return ProductThemeMap(maps)


def are_independent(
    transmission: TransmissionFunction,
    maps: list[ThemeMap],
    tol: float = AMBIVALENCE_TOL,
) -> bool:
    """True iff, for every parent tuple, the child's product-class mass factorizes.

    Checked exhaustively: the joint projection of every conditional child
    distribution onto the product partition must equal the product of its
    per-map projections, including zero mass on unreachable tuples.
    """
    if not maps:
        raise ValueError("independence needs at least one theme map")
    size = transmission.base.size
    for beta in maps:
        if beta.domain.size != size:
            raise DimensionError("theme maps must share the transmission base")
    flat = transmission.dense().reshape(size, -1)
    n_tuples = flat.shape[1]
    product_map = cartesian_product(maps)
    joint = _class_project_columns(product_map.assignment, product_map.codomain.size, flat)
    # Embed the reachable-tuple rows into the full tuple lattice.
    sizes = [beta.codomain.size for beta in maps]
    full = np.zeros((int(np.prod(sizes)), n_tuples))
    flat_ids = np.zeros(product_map.codomain.size, dtype=np.int64)
    for j, k in enumerate(sizes):
        flat_ids = flat_ids * k + product_map.theme_tuples[:, j]
    full[flat_ids] = joint
    factorized = _class_project_columns(maps[0].assignment, sizes[0], flat)
    for beta, k in zip(maps[1:], sizes[1:]):
        margin = _class_project_columns(beta.assignment, k, flat)
        factorized = (factorized[:, None, :] * margin[None, :, :]).reshape(-1, n_tuples)
    return float(np.abs(full - factorized).max()) <= tol
