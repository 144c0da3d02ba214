import itertools
from fractions import Fraction

import numpy as np
import pytest

import pyefc.schema.define as define
from pyefc.misc.exceptions import PartitionError, StateSpaceTooLarge
from pyefc.process.functionals import phi
from pyefc.process.paintbox import paintbox_all_distinct_prob
from pyefc.process.rates import (RateEngine, build_generator, coag_rate, compatibility_defect, frag_rate,
                                 total_fragmentation_rate, transition_rates)
from pyefc.schema.partition import Partition, PermutationMap, apply_permutation, enumerate_partitions, parse_partition


def test_two_state_rates(two_state_chars):
    assert coag_rate(two_state_chars, Partition.one(2)) == 1
    assert frag_rate(two_state_chars, Partition.zero(2)) == Fraction(1, 2)
    assert dict(transition_rates(two_state_chars, Partition.one(2))) == {Partition.zero(2): Fraction(1, 2)}
    assert dict(transition_rates(two_state_chars, Partition.zero(2))) == {Partition.one(2): 1}

    G = build_generator(two_state_chars, 2)
    assert G.states == (Partition.one(2), Partition.zero(2))
    np.testing.assert_allclose(G.dense(), [[-0.5, 0.5], [1.0, -1.0]])


def test_erosion_and_kingman_rows(erosion_kingman_chars):
    row = transition_rates(erosion_kingman_chars, parse_partition('{1,2,3}'))
    assert dict(row) == {parse_partition('{1}{2,3}'): 1, parse_partition('{1,3}{2}'): 1,
                         parse_partition('{1,2}{3}'): 1}
    row = transition_rates(erosion_kingman_chars, Partition.zero(3))
    assert dict(row) == {parse_partition('{1,2}{3}'): 1, parse_partition('{1,3}{2}'): 1,
                         parse_partition('{1}{2,3}'): 1}


def test_rows_never_hold_zero_or_self_rates(exact_mixed_chars):
    engine = RateEngine(exact_mixed_chars)
    for pi in enumerate_partitions(4):
        row = engine.transition_rates(pi)
        assert pi not in row
        assert all(rate > 0 for rate in row.values())
        assert all(isinstance(rate, Fraction) or isinstance(rate, int) for rate in row.values())
        assert list(row.keys()) == sorted(row.keys())


@pytest.mark.parametrize('n', [5, 6])
def test_total_fragmentation_rate_is_a_sum_of_phi(exact_mixed_chars, n):
    for pi in enumerate_partitions(n):
        expected = sum(phi(exact_mixed_chars, len(block) - 1) for block in pi.blocks if len(block) > 1)
        assert total_fragmentation_rate(exact_mixed_chars, pi) == expected


def test_total_coagulation_rate(exact_mixed_chars):
    engine = RateEngine(exact_mixed_chars)
    for m in range(1, 6):
        expected = exact_mixed_chars.c_k * m * (m - 1) / 2
        for weight, x in exact_mixed_chars.nu_coag:
            expected += weight * (1 - paintbox_all_distinct_prob(x, m))
        assert engine.total_coagulation_rate(m) == expected


def test_generator_rows_sum_to_zero(mixed_chars):
    G = build_generator(mixed_chars, 4)
    assert G.num_states == 15
    np.testing.assert_allclose(np.asarray(G.matrix.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    assert np.all(G.exit_rates() > 0)
    triplets = G.triplets()
    assert [(i, j) for i, j, _ in triplets] == sorted((i, j) for i, j, _ in triplets)
    assert G.row(G.index_of(Partition.one(4)))
    with pytest.raises(PartitionError):
        G.index_of(Partition.one(3))


def test_threaded_build_is_identical(mixed_chars):
    single = build_generator(mixed_chars, 5)
    threaded = build_generator(mixed_chars, 5, threads=3)
    assert (single.matrix != threaded.matrix).nnz == 0


def test_zero_characteristics_give_a_null_generator():
    G = build_generator(define.characteristics(), 3)
    assert G.matrix.nnz == 0 or np.all(G.matrix.data == 0)


def test_generator_size_bound(mixed_chars):
    with pytest.raises(StateSpaceTooLarge):
        build_generator(mixed_chars, 11)


@pytest.mark.parametrize('n', range(2, 6))
def test_rates_are_exchangeable(exact_mixed_chars, n):
    engine = RateEngine(exact_mixed_chars)
    rows = {pi: engine.transition_rates(pi) for pi in enumerate_partitions(n)}
    for image in itertools.permutations(range(1, n + 1)):
        sigma = PermutationMap(image)
        for pi, row in rows.items():
            permuted = rows[apply_permutation(pi, sigma)]
            assert dict(permuted) == {apply_permutation(target, sigma): rate for target, rate in row.items()}


@pytest.mark.parametrize('n, m', [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (5, 4)])
def test_rates_are_compatible_across_levels(exact_mixed_chars, n, m):
    report = compatibility_defect(exact_mixed_chars, n, m)
    assert report.max_defect == 0
    assert report.checked > 0


@pytest.mark.parametrize('n', range(2, 6))
def test_every_chain_projects_onto_the_trivial_one(exact_mixed_chars, n):
    report = compatibility_defect(exact_mixed_chars, n, 1)
    assert report.max_defect == 0
    assert report.checked == 0
    assert report.worst is None


def test_compatibility_in_floating_point(mixed_chars):
    assert compatibility_defect(mixed_chars, 5, 4).max_defect < 1e-12


def test_compatibility_levels_are_checked(mixed_chars):
    with pytest.raises(PartitionError):
        compatibility_defect(mixed_chars, 3, 3)
