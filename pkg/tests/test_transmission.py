"""Tests for the variation operator and the algebra of ambivalence."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipsga import (
    AmbivalenceError,
    BitstringSet,
    CapacityError,
    DenseTransmission,
    DimensionError,
    Distribution,
    IndexedSet,
    ThemeMap,
    apply_variation,
    are_independent,
    canonical_mutation,
    cartesian_product,
    clone,
    compose,
    is_ambivalent,
    project,
    schema_map,
    theme_transmission,
    uniform_crossover,
    weighted_sum,
)
from ipsga.operators import MaskMixture, Mask, mask_crossover
from ipsga.transmission import ambivalence_witness


def random_distribution(base, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(base.size)
    return Distribution(base, w / w.sum())


def flip_iff_low_bit(length=2):
    """Flips locus 1 exactly when locus 2 is set; not ambivalent under locus 1."""
    base = BitstringSet(length)
    high = 1 << (length - 1)
    low_of = lambda y: (y >> (length - 2)) & 1
    return DenseTransmission.from_function(
        base, 1, lambda c, par: 1.0 if c == (par[0] ^ high if low_of(par[0]) else par[0]) else 0.0
    )


def correlated_copy():
    """Both child bits copy locus 1 of a uniformly chosen parent (B_2, 2-parent)."""
    base = BitstringSet(2)
    tensor = np.zeros((4, 4, 4))
    for y in range(4):
        for z in range(4):
            tensor[3 if y & 2 else 0, y, z] += 0.5
            tensor[3 if z & 2 else 0, y, z] += 0.5
    return DenseTransmission(base, 2, tensor)


# -- apply_variation ---------------------------------------------------------------


def test_clone_is_identity_operator():
    base = IndexedSet(5)
    p = random_distribution(base, 1)
    np.testing.assert_allclose(apply_variation(clone(base), p).mass, p.mass, atol=1e-15)


def test_maximal_mutation_uniformizes_one_bit():
    p = Distribution(BitstringSet(1), [0.9, 0.1])
    q = apply_variation(canonical_mutation(1, 0.5), p)
    np.testing.assert_allclose(q.mass, [0.5, 0.5], atol=1e-15)


def test_one_bit_crossover_preserves_marginals():
    p = Distribution(BitstringSet(1), [0.3, 0.7])
    q = apply_variation(uniform_crossover(1), p)
    np.testing.assert_allclose(q.mass, [0.3, 0.7], atol=1e-15)


def test_apply_variation_rejects_mismatch_and_zero():
    with pytest.raises(DimensionError):
        apply_variation(uniform_crossover(2), Distribution.uniform(BitstringSet(3)))
    with pytest.raises(ValueError):
        apply_variation(uniform_crossover(2), Distribution.zero(BitstringSet(2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2**31))
def test_variation_preserves_normalization(length, seed):
    base = BitstringSet(length)
    p = random_distribution(base, seed)
    for op in (canonical_mutation(length, 0.2), uniform_crossover(length)):
        assert abs(apply_variation(op, p).mass.sum() - 1.0) < 1e-9


def test_structural_apply_matches_dense_oracle():
    rng = np.random.default_rng(9)
    for length in (2, 3, 4):
        base = BitstringSet(length)
        p = random_distribution(base, length)
        for op in (canonical_mutation(length, 0.17), uniform_crossover(length)):
            if op.arity == 1:
                oracle = op.dense() @ p.mass
            else:
                oracle = np.einsum("xyz,y,z->x", op.dense(), p.mass, p.mass)
            got = apply_variation(op, p).mass
            np.testing.assert_allclose(got, oracle, atol=1e-12)


# -- composition --------------------------------------------------------------------


def test_identity_composition_is_pointwise_identity():
    length = 3
    base = BitstringSet(length)
    inner = uniform_crossover(length)
    composed = compose(clone(base), inner)
    np.testing.assert_allclose(composed.dense(), inner.dense(), atol=1e-12)


def test_double_mutation_collapses_to_single_rate():
    alpha = 0.1
    twice = compose(canonical_mutation(1, alpha), canonical_mutation(1, alpha))
    effective = canonical_mutation(1, 2 * alpha * (1 - alpha))
    np.testing.assert_allclose(twice.dense(), effective.dense(), atol=1e-15)


def test_mutation_after_crossover_equals_sequential_application():
    length = 2
    base = BitstringSet(length)
    mu, ux = canonical_mutation(length, 0.08), uniform_crossover(length)
    composed = compose(mu, ux)
    for seed in range(5):
        p = random_distribution(base, seed)
        lhs = apply_variation(composed, p).mass
        rhs = apply_variation(mu, apply_variation(ux, p)).mass
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_one_parent_outer_composition_factorizes_on_small_bases():
    # Population-level factorization of composed variation holds for a
    # 1-parent outer operator; the composite tensor is the oracle.
    for length in (1, 2, 3):
        base = BitstringSet(length)
        mu = canonical_mutation(length, 0.23)
        ux = uniform_crossover(length)
        composed = compose(mu, ux)
        p = random_distribution(base, 11 + length)
        oracle = np.einsum("xyz,y,z->x", composed.dense(), p.mass, p.mass)
        seq = apply_variation(mu, apply_variation(ux, p)).mass
        np.testing.assert_allclose(seq, oracle, atol=1e-9)


def test_two_parent_outer_composite_uses_shared_parent():
    # crossover-after-mutation is a 1-parent operator crossing two mutated
    # copies of the same parent; its dense tensor is the defining formula.
    length = 2
    mu = canonical_mutation(length, 0.3)
    ux = uniform_crossover(length)
    composed = compose(ux, mu)
    assert composed.arity == 1
    d_mu, d_ux = mu.dense(), ux.dense()
    oracle = np.einsum("xab,ay,by->xy", d_ux, d_mu, d_mu)
    np.testing.assert_allclose(composed.dense(), oracle, atol=1e-12)


def test_compose_requires_shared_base():
    with pytest.raises(DimensionError):
        compose(canonical_mutation(2, 0.1), uniform_crossover(3))


# -- weighted sums -------------------------------------------------------------------


def test_weighted_sum_single_part():
    part = uniform_crossover(2)
    combined = weighted_sum([1.0], [part])
    np.testing.assert_allclose(combined.dense(), part.dense(), atol=1e-15)


def test_weighted_sum_of_two_masks_splits_children():
    first = mask_crossover(Mask(2, 0b00))
    second = mask_crossover(Mask(2, 0b11))
    combined = weighted_sum([0.5, 0.5], [first, second])
    y, z = 1, 2
    assert combined.prob(y, (y, z)) == pytest.approx(0.5)
    assert combined.prob(z, (y, z)) == pytest.approx(0.5)
    assert combined.prob(0, (y, z)) == 0.0


def test_weighted_sum_preserves_ambivalence_and_projects_linearly():
    beta = schema_map(3, [1, 3])
    parts = [mask_crossover(Mask(3, 0b011)), mask_crossover(Mask(3, 0b101))]
    weights = [0.3, 0.7]
    combined = weighted_sum(weights, parts)
    assert is_ambivalent(combined, beta)
    got = theme_transmission(combined, beta).dense()
    expected = sum(
        w * theme_transmission(part, beta).dense() for w, part in zip(weights, parts)
    )
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_weighted_sum_validation():
    with pytest.raises(DimensionError):
        weighted_sum([0.5, 0.5], [uniform_crossover(2), uniform_crossover(3)])
    with pytest.raises(ValueError):
        weighted_sum([0.5, 0.4], [uniform_crossover(2), uniform_crossover(2)])


# -- ambivalence ----------------------------------------------------------------------


def test_clone_is_ambivalent_under_any_map():
    base = IndexedSet(6)
    beta = ThemeMap(base, IndexedSet(3), [0, 0, 1, 1, 2, 2])
    op = clone(base)
    assert is_ambivalent(op, beta)
    np.testing.assert_allclose(theme_transmission(op, beta).dense(), np.eye(3), atol=1e-15)


def test_conditional_flip_is_not_ambivalent():
    beta = schema_map(2, [1])
    op = flip_iff_low_bit()
    assert not is_ambivalent(op, beta)
    witness = ambivalence_witness(op, beta)
    assert witness is not None
    a, b = witness.parents_a[0], witness.parents_b[0]
    assert beta.assignment[a] == beta.assignment[b]
    assert witness.mass_a != pytest.approx(witness.mass_b)


def test_canonical_mutation_ambivalent_under_every_schema_map():
    from itertools import combinations

    for length in (2, 3, 4):
        op = canonical_mutation(length, 0.1)
        for order in range(1, length + 1):
            for loci in combinations(range(1, length + 1), order):
                assert is_ambivalent(op, schema_map(length, loci))


def test_theme_transmission_requires_ambivalence():
    with pytest.raises(AmbivalenceError) as err:
        theme_transmission(flip_iff_low_bit(), schema_map(2, [1]))
    assert err.value.witness.parents_a != err.value.witness.parents_b


def test_theme_transmission_of_mutation_single_locus():
    alpha = 0.37
    got = theme_transmission(canonical_mutation(3, alpha), schema_map(3, [2])).dense()
    np.testing.assert_allclose(got, [[1 - alpha, alpha], [alpha, 1 - alpha]], atol=1e-12)


def test_theme_transmission_of_uniform_crossover_single_locus():
    got = theme_transmission(uniform_crossover(3), schema_map(3, [3])).dense()
    expected = np.zeros((2, 2, 2))
    for child in range(2):
        for l in range(2):
            for m in range(2):
                if l == m:
                    expected[child, l, m] = 1.0 if child == l else 0.0
                else:
                    expected[child, l, m] = 0.5
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_dense_budget_is_enforced():
    with pytest.raises(CapacityError):
        uniform_crossover(12).dense()


# -- the commutation theorem -----------------------------------------------------------


def test_variation_commutes_with_projection_for_ambivalent_operators():
    rng = np.random.default_rng(5)
    for length, loci in [(3, (1,)), (3, (1, 3)), (4, (2, 4)), (4, (1, 2, 3))]:
        beta = schema_map(length, loci)
        for op in (
            canonical_mutation(length, 0.15),
            uniform_crossover(length),
            compose(canonical_mutation(length, 0.05), uniform_crossover(length)),
        ):
            quotient = theme_transmission(op, beta)
            for _ in range(10):
                w = rng.random(1 << length)
                p = Distribution(BitstringSet(length), w / w.sum())
                lhs = project(beta, apply_variation(op, p)).mass
                rhs = apply_variation(quotient, project(beta, p)).mass
                assert np.abs(lhs - rhs).max() <= 1e-9


def test_composition_of_ambivalent_is_ambivalent_with_composed_quotient():
    for length, loci in [(3, (1, 3)), (4, (2, 3))]:
        beta = schema_map(length, loci)
        t_outer = canonical_mutation(length, 0.11)
        t_inner = uniform_crossover(length)
        composed = compose(t_outer, t_inner)
        assert is_ambivalent(composed, beta)
        got = theme_transmission(composed, beta).dense()
        expected = compose(
            theme_transmission(t_outer, beta), theme_transmission(t_inner, beta)
        ).dense()
        np.testing.assert_allclose(got, expected, atol=1e-9)


# -- cartesian products and independence -------------------------------------------------


def test_product_of_one_map_is_that_map():
    beta = schema_map(3, [2])
    product = cartesian_product([beta])
    np.testing.assert_array_equal(product.assignment, beta.assignment)
    assert product.codomain.size == beta.codomain.size


def test_product_of_single_locus_maps_is_bijection():
    product = cartesian_product([schema_map(2, [1]), schema_map(2, [2])])
    assert product.codomain.size == 4
    np.testing.assert_array_equal(product.assignment, np.arange(4))


def test_product_classes_are_intersections():
    b1, b2 = schema_map(3, [1]), schema_map(3, [2, 3])
    product = cartesian_product([b1, b2])
    for theme, (k1, k2) in enumerate(product.theme_tuples):
        expected = set(b1.theme_class(k1)) & set(b2.theme_class(k2))
        assert set(product.theme_class(theme)) == expected


def test_product_drops_unreachable_tuples():
    base = IndexedSet(4)
    b1 = ThemeMap(base, IndexedSet(2), [0, 0, 1, 1])
    b2 = ThemeMap(base, IndexedSet(2), [0, 0, 1, 1])  # fully correlated with b1
    product = cartesian_product([b1, b2])
    assert product.codomain.size == 2  # (0,1) and (1,0) never occur


def test_product_requires_shared_domain():
    with pytest.raises(DimensionError):
        cartesian_product([schema_map(2, [1]), schema_map(3, [1])])


def test_mutation_independent_with_respect_to_single_locus_maps():
    op = canonical_mutation(3, 0.3)
    maps = [schema_map(3, [j]) for j in (1, 2, 3)]
    assert are_independent(op, maps)


def test_mask_crossover_independent_with_respect_to_single_locus_maps():
    op = mask_crossover(Mask(3, 0b101))
    maps = [schema_map(3, [j]) for j in (1, 2, 3)]
    assert are_independent(op, maps)


def test_correlated_child_loci_are_not_independent():
    op = correlated_copy()
    maps = [schema_map(2, [1]), schema_map(2, [2])]
    assert not are_independent(op, maps)


def test_cross_product_quotient_factorizes():
    for op in (canonical_mutation(3, 0.2), uniform_crossover(3)):
        maps = [schema_map(3, [1]), schema_map(3, [3])]
        assert are_independent(op, maps)
        product = cartesian_product(maps)
        assert is_ambivalent(op, product)
        joint = theme_transmission(op, product).dense()
        factors = [theme_transmission(op, beta).dense() for beta in maps]
        for index in np.ndindex(*joint.shape):
            tuples = [product.theme_tuples[i] for i in index]
            expected = 1.0
            for axis, factor in enumerate(factors):
                sub_index = tuple(t[axis] for t in tuples)
                expected *= factor[sub_index]
            assert joint[index] == pytest.approx(expected, abs=1e-9)
