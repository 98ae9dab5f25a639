"""Bitstring genome sets, schema maps, and the standard variation operators.

Bit convention, fixed for reproducibility: a genome of length ``ell`` is its
dense integer index with locus 1 as the most significant bit.  Masks follow
the same layout; mask bit 1 at a locus means the child copies that locus from
parent 2, bit 0 from parent 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .distributions import DimensionError, Distribution, IndexedSet, ThemeMap
from .transmission import TransmissionFunction

MAX_MASK_ENUMERATION_LENGTH = 20

__all__ = [
    "BitstringSet",
    "Mask",
    "SchemaMap",
    "schema_map",
    "canonical_mutation",
    "ProductMutation",
    "MaskMixture",
    "mask_crossover",
    "crossover_from_mask_distribution",
    "uniform_crossover",
    "n_point_crossover",
    "projected_mutation",
    "projected_uniform_crossover",
    "bits",
]


class BitstringSet(IndexedSet):
    """All bitstrings of a given length; the dense index is the integer value."""

    def __init__(self, length: int):
        if length < 1:
            raise ValueError(f"bitstring length must be >= 1, got {length}")
        object.__setattr__(self, "length", length)
        super().__init__(size=1 << length)

    def label(self, index: int) -> str:
        return bits(index, self.length)

    def __repr__(self) -> str:
        return f"BitstringSet(length={self.length})"


def bits(value: int, length: int) -> str:
    """Render a genome or mask with locus 1 leftmost."""
    return format(value, f"0{length}b")


@dataclass(frozen=True)
class Mask:
    """A locus-exchange pattern: bit 1 takes the locus from parent 2."""

    length: int
    pattern: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("mask length must be >= 1")
        if not 0 <= self.pattern < (1 << self.length):
            raise ValueError(f"mask pattern {self.pattern} does not fit length {self.length}")

    def __str__(self) -> str:
        return bits(self.pattern, self.length)


def _extract_loci(values: np.ndarray, length: int, loci: tuple[int, ...]) -> np.ndarray:
    """Pack the bits of ``values`` at the given loci, first locus most significant."""
    order = len(loci)
    out = np.zeros_like(values)
    for position, locus in enumerate(loci):
        bit = (values >> (length - locus)) & 1
        out |= bit << (order - 1 - position)
    return out


class SchemaMap(ThemeMap):
    """Theme map extracting the bits at a fixed set of defined loci.

    Equivalent to the cartesian product of the single-locus maps, with themes
    densely indexed by the extracted bits (first defined locus most
    significant).
    """

    def __init__(self, length: int, loci):
        loci = tuple(int(j) for j in loci)
        if not loci:
            raise ValueError("a schema map needs at least one defined locus")
        if any(not 1 <= j <= length for j in loci):
            raise ValueError(f"loci {loci} out of range 1..{length}")
        if any(a >= b for a, b in zip(loci, loci[1:])):
            raise ValueError(f"loci must be strictly increasing, got {loci}")
        genomes = np.arange(1 << length, dtype=np.int64)
        assignment = _extract_loci(genomes, length, loci)
        super().__init__(BitstringSet(length), BitstringSet(len(loci)), assignment)
        self.length = length
        self.loci = loci

    def __repr__(self) -> str:
        return f"SchemaMap(length={self.length}, loci={self.loci})"


def schema_map(length: int, loci) -> SchemaMap:
    """Schema map on length-``length`` bitstrings with the given defined loci."""
    return SchemaMap(length, loci)


class ProductMutation(TransmissionFunction):
    """Canonical mutation: each locus flips independently with probability alpha."""

    def __init__(self, length: int, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"mutation rate must be in [0, 1], got {alpha}")
        super().__init__(BitstringSet(length), 1)
        self.length = length
        self.alpha = float(alpha)

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        flips = (child ^ parents[0]).bit_count()
        return self.alpha**flips * (1.0 - self.alpha) ** (self.length - flips)

    def _build_dense(self) -> np.ndarray:
        size = self.base.size
        popcount = np.array([v.bit_count() for v in range(size)])
        flips = popcount[np.bitwise_xor.outer(np.arange(size), np.arange(size))]
        return self.alpha**flips * (1.0 - self.alpha) ** (self.length - flips)

    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        # Locus-by-locus contraction with the 2x2 flip matrix, O(length * size).
        matrix = np.array(
            [[1.0 - self.alpha, self.alpha], [self.alpha, 1.0 - self.alpha]]
        )
        tensor = mass.reshape((2,) * self.length)
        for axis in range(self.length):
            tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)
        return tensor.reshape(-1)

    def projected(self, beta: ThemeMap) -> TransmissionFunction | None:
        if isinstance(beta, SchemaMap) and beta.length == self.length:
            return ProductMutation(len(beta.loci), self.alpha)
        return None


def canonical_mutation(length: int, alpha: float) -> ProductMutation:
    """Per-locus independent bit-flip mutation with rate ``alpha``."""
    return ProductMutation(length, alpha)


class MaskMixture(TransmissionFunction):
    """Two-parent crossover given by a distribution over locus-exchange masks.

    Each mask defines the deterministic crossover taking mask-0 loci from
    parent 1 and mask-1 loci from parent 2; the mixture weights the resulting
    children.  The push-forward through variation is computed exactly per
    mask: conditioned on a mask, the child's parent-1 loci and parent-2 loci
    are independent, so each mask contributes the product of two marginals of
    the parent distribution.
    """

    def __init__(self, length: int, masks, weights):
        super().__init__(BitstringSet(length), 2)
        self.length = length
        mask_arr = np.asarray(masks, dtype=np.int64)
        weight_arr = np.asarray(weights, dtype=float)
        if mask_arr.ndim != 1 or mask_arr.shape != weight_arr.shape:
            raise DimensionError("masks and weights must be equal-length vectors")
        if mask_arr.size == 0:
            raise ValueError("a mask mixture needs at least one mask")
        if mask_arr.min() < 0 or mask_arr.max() >= self.base.size:
            raise ValueError(f"mask patterns must fit {length} loci")
        if weight_arr.min() < 0 or abs(weight_arr.sum() - 1.0) > 1e-9:
            raise ValueError("mask weights must form a probability vector")
        self.masks = mask_arr
        self.weights = weight_arr
        self.masks.setflags(write=False)
        self.weights.setflags(write=False)

    def prob(self, child: int, parents: tuple[int, ...]) -> float:
        first, second = parents
        full = self.base.size - 1
        children = (first & ~self.masks & full) | (second & self.masks)
        return float(self.weights[children == child].sum())

    def _apply_mass(self, mass: np.ndarray) -> np.ndarray:
        size = self.base.size
        full = size - 1
        genomes = np.arange(size)
        out = np.zeros(size)
        for mask, weight in zip(self.masks, self.weights):
            keep = genomes & (~mask & full)
            take = genomes & mask
            from_first = np.bincount(keep, weights=mass, minlength=size)
            from_second = np.bincount(take, weights=mass, minlength=size)
            out += weight * from_first[keep] * from_second[take]
        return out

    def _build_dense(self) -> np.ndarray:
        size = self.base.size
        full = size - 1
        tensor = np.zeros((size, size, size))
        first, second = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        for mask, weight in zip(self.masks, self.weights):
            children = (first & ~mask & full) | (second & mask)
            tensor[children, first, second] += weight
        return tensor

    def projected(self, beta: ThemeMap) -> TransmissionFunction | None:
        if not (isinstance(beta, SchemaMap) and beta.length == self.length):
            return None
        # A mask acts on the defined loci exactly as its restriction does.
        restricted = _extract_loci(self.masks, self.length, beta.loci)
        order = len(beta.loci)
        grouped = np.bincount(restricted, weights=self.weights, minlength=1 << order)
        support = np.flatnonzero(grouped)
        return MaskMixture(order, support, grouped[support])


def mask_crossover(mask: Mask) -> MaskMixture:
    """The deterministic crossover of a single locus-exchange mask."""
    return MaskMixture(mask.length, [mask.pattern], [1.0])


def crossover_from_mask_distribution(mask_distribution: Distribution) -> MaskMixture:
    """Crossover mixing the deterministic mask operators with the given weights.

    The distribution's base must be the mask space, i.e. have size ``2**ell``
    with ``ell`` at most ``MAX_MASK_ENUMERATION_LENGTH``.
    """
    size = mask_distribution.base.size
    length = size.bit_length() - 1
    if 1 << length != size:
        raise DimensionError(f"mask space must have power-of-two size, got {size}")
    if length > MAX_MASK_ENUMERATION_LENGTH:
        raise ValueError(
            f"mask enumeration is limited to length {MAX_MASK_ENUMERATION_LENGTH}"
        )
    support = np.flatnonzero(mask_distribution.mass)
    if support.size == 0:
        raise ValueError("mask distribution is the zero function")
    return MaskMixture(length, support, mask_distribution.mass[support])


def uniform_crossover(length: int) -> MaskMixture:
    """Each child locus copies a uniformly chosen parent, independently per locus."""
    if length > MAX_MASK_ENUMERATION_LENGTH:
        raise ValueError(
            f"mask enumeration is limited to length {MAX_MASK_ENUMERATION_LENGTH}"
        )
    size = 1 << length
    return MaskMixture(length, np.arange(size), np.full(size, 1.0 / size))


def n_point_crossover(length: int, points: int) -> MaskMixture:
    """Crossover with ``points`` cut points, uniform over the cut-point sets.

    A cut after locus ``t`` flips which parent supplies subsequent loci; the
    first segment always comes from parent 1, so each of the ``C(length-1,
    points)`` cut-point sets yields a distinct mask with exactly ``points``
    alternation boundaries.
    """
    if points < 1:
        raise ValueError("number of crossover points must be >= 1")
    count = comb(length - 1, points)
    if count == 0:
        raise ValueError(f"{points}-point crossover needs length > {points}")
    masks = []
    for cuts in combinations(range(1, length), points):
        pattern = 0
        take_second = False
        boundaries = set(cuts)
        for locus in range(1, length + 1):
            if locus - 1 in boundaries:
                take_second = not take_second
            if take_second:
                pattern |= 1 << (length - locus)
        masks.append(pattern)
    return MaskMixture(length, masks, np.full(count, 1.0 / count))


def projected_mutation(alpha: float, order: int) -> ProductMutation:
    """Theme transmission of canonical mutation under any order-``order`` schema map.

    Mutation flips loci independently, so its quotient on the defined loci is
    the per-locus product of 2x2 flip matrices: canonical mutation on
    bitstrings of length ``order``, with no enumeration of the fine space.
    """
    if order < 1:
        raise ValueError("schema order must be >= 1")
    return ProductMutation(order, alpha)


def projected_uniform_crossover(order: int) -> MaskMixture:
    """Theme transmission of uniform crossover under any order-``order`` schema map.

    At each defined locus the child bit copies either parent's bit with
    probability one half, independently: uniform crossover on the theme set.
    """
    if order < 1:
        raise ValueError("schema order must be >= 1")
    return uniform_crossover(order)
