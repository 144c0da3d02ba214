import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

import pyefc.schema.define as define
from pyefc.misc.exceptions import MultipleClosedClasses, NumericalFailure, PartitionError
from pyefc.process.equilibrium import (DistributionOnPn, closed_classes, communicating_classes, convergence_time,
                                       integer_partitions, min_fragmentation_rate, projection,
                                       stationary_distribution, tail_series, theorem_diagnostics, total_variation,
                                       transient_distribution)
from pyefc.process.rates import build_generator
from pyefc.schema.partition import Partition, PermutationMap, apply_permutation, enumerate_partitions


def test_two_state_balance(two_state_chars):
    rho = stationary_distribution(build_generator(two_state_chars, 2))
    assert rho.weight_of(Partition.one(2)) == pytest.approx(2 / 3, abs=1e-12)
    assert rho.weight_of(Partition.zero(2)) == pytest.approx(1 / 3, abs=1e-12)


@pytest.mark.parametrize('n, expected', [
    (2, (1 / 3, 2 / 3)),
    (3, (1 / 6, 1 / 2, 1 / 3)),
    (4, (7 / 75, 28 / 75, 30 / 75, 10 / 75)),
])
def test_erosion_kingman_block_counts(erosion_kingman_chars, n, expected):
    rho = stationary_distribution(build_generator(erosion_kingman_chars, n))
    np.testing.assert_allclose(rho.block_count_marginal(), expected, atol=1e-10)


def test_stationary_law_solves_the_balance_equations(mixed_chars):
    G = build_generator(mixed_chars, 5)
    rho = stationary_distribution(G)
    assert np.abs(G.matrix.T @ rho.weights).max() < 1e-10
    assert rho.weights.min() > 0
    assert rho.weights.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize('n', [3, 4, 5])
def test_stationary_laws_are_consistent_across_levels(exact_mixed_chars, n):
    upper = stationary_distribution(build_generator(exact_mixed_chars, n))
    lower = stationary_distribution(build_generator(exact_mixed_chars, n - 1))
    assert total_variation(projection(upper, n - 1), lower) < 1e-10


def test_single_block_mass_decreases_with_n(erosion_kingman_chars):
    masses = [stationary_distribution(build_generator(erosion_kingman_chars, n)).block_count_marginal()[0]
              for n in range(2, 7)]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(masses, masses[1:]))


def test_absorbing_state_gives_a_dirac_mass():
    rho = stationary_distribution(build_generator(define.characteristics(c_k=1), 4))
    assert rho.weight_of(Partition.one(4)) == 1.0
    rho = stationary_distribution(build_generator(define.characteristics(c_e=2), 4))
    assert rho.weight_of(Partition.zero(4)) == 1.0


def test_several_closed_classes_are_reported():
    G = build_generator(define.characteristics(), 3)
    assert len(closed_classes(G)) == 5
    with pytest.raises(MultipleClosedClasses) as info:
        stationary_distribution(G)
    assert len(info.value.classes) == 5


def test_communicating_classes_of_an_irreducible_chain(mixed_chars):
    G = build_generator(mixed_chars, 4)
    assert len(communicating_classes(G)) == 1
    assert len(closed_classes(G)) == 1


def test_distribution_validation():
    with pytest.raises(NumericalFailure):
        DistributionOnPn(2, [0.5, 0.6])
    with pytest.raises(NumericalFailure):
        DistributionOnPn(3, [0.5, 0.5])
    dirac = DistributionOnPn.dirac(Partition.zero(3))
    assert dirac.weight_of(Partition.zero(3)) == 1.0
    assert dirac.probability(lambda pi: pi.num_blocks == 3) == 1.0
    np.testing.assert_allclose(dirac.expected_ranked_frequencies(), [1 / 3, 1 / 3, 1 / 3])


def test_transient_two_state_law(two_state_chars):
    G = build_generator(two_state_chars, 2)
    init = DistributionOnPn.dirac(Partition.zero(2))
    assert transient_distribution(G, init, 0.0).weight_of(Partition.zero(2)) == 1.0
    for t in (0.1, 1.0, 4.0):
        law = transient_distribution(G, init, t)
        expected = 2 / 3 - 2 / 3 * math.exp(-1.5 * t)
        assert law.weight_of(Partition.one(2)) == pytest.approx(expected, abs=1e-9)
        assert law.truncation_error <= 1e-10


def test_transient_law_converges(mixed_chars):
    G = build_generator(mixed_chars, 4)
    rho = stationary_distribution(G)
    law = transient_distribution(G, DistributionOnPn.dirac(Partition.zero(4)), 50.0)
    assert total_variation(law, rho) < 1e-8
    with pytest.raises(NumericalFailure):
        transient_distribution(G, rho, -1.0)


def test_convergence_time_two_state(two_state_chars):
    G = build_generator(two_state_chars, 2)
    t, distance = convergence_time(G, DistributionOnPn.dirac(Partition.zero(2)), target=1e-6)
    assert distance <= 1e-6
    assert t == pytest.approx(math.log((2 / 3) / 1e-6) / 1.5, rel=2e-3)


def test_integer_partitions_and_minimum_rate(erosion_kingman_chars):
    assert integer_partitions(5, 2) == [(4, 1), (3, 2)]
    assert integer_partitions(4, 4) == [(1, 1, 1, 1)]
    assert integer_partitions(3, 4) == []
    assert min_fragmentation_rate(erosion_kingman_chars, 4, 2) == 3
    assert min_fragmentation_rate(erosion_kingman_chars, 4, 4) == 0


@pytest.mark.parametrize('z, start', [(0.5, 1), (2.0, 1), (2.0, 3), (6.0, 4)])
def test_tail_series_closed_form(z, start):
    direct = sum(z ** i / (2 * math.factorial(i)) for i in range(start, 80))
    assert tail_series(z, start) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize('fixture_name', ['erosion_kingman_chars', 'mixed_chars', 'exact_mixed_chars',
                                          'two_state_chars'])
def test_equilibrium_bounds_hold(request, fixture_name):
    chars = request.getfixturevalue(fixture_name)
    report = theorem_diagnostics(chars, 4, k_max=3, b=2)
    assert report.all_hold
    assert len(report.bounds) == 3
    assert len(report.dust) == 2
    assert report.dust_proxy == pytest.approx(report.rho.probability(lambda pi: pi.block_of(1) == (1,)))
    assert 'n = 4' in report.plain_str()
    assert report.to_dict()['all_hold'] is True


def test_binary_fragmentation_diagnostics(two_state_chars):
    report = theorem_diagnostics(two_state_chars, 5, k_max=2, b=1)
    assert report.binary is not None
    assert report.binary['z'] == 2.0
    assert report.binary['a_1_lower_bound'] == pytest.approx(2 / (1 + math.exp(2)))
    assert report.binary['a_1_holds']
    assert [record['K'] for record in report.binary['inequality']] == [1, 2, 3, 4]


def test_dust_bound_uses_the_pair_split_rate():
    chars = define.characteristics(c_e=Fraction(1, 2), c_k=1, nu_disl=[(1, (Fraction(1, 2), Fraction(1, 2)))])
    report = theorem_diagnostics(chars, 4, k_max=1, b=1)
    assert report.dust[0]['q_2'] == pytest.approx(1.5)
    assert report.binary is None
    assert report.flags == {'fragmentates_quickly': True, 'coalesces_quickly': True}


def test_stationary_weights_follow_enumeration_order(erosion_kingman_chars):
    rho = stationary_distribution(build_generator(erosion_kingman_chars, 3))
    assert rho.states == enumerate_partitions(3)
    # Partitions with two blocks are exchangeable images of each other.
    two_blocks = [rho.weight_of(pi) for pi in enumerate_partitions(3) if pi.num_blocks == 2]
    np.testing.assert_allclose(two_blocks, [1 / 6] * 3, atol=1e-12)


@pytest.mark.parametrize('n', [3, 4, 5])
def test_stationary_law_is_exchangeable(exact_mixed_chars, n):
    rho = stationary_distribution(build_generator(exact_mixed_chars, n))
    for pi in enumerate_partitions(n):
        for image in itertools.permutations(range(1, n + 1)):
            image_of_pi = apply_permutation(pi, PermutationMap(image))
            assert rho.weight_of(image_of_pi) == pytest.approx(rho.weight_of(pi), abs=1e-12)


def test_singleton_mass_of_one_decreases_with_n(mixed_chars):
    masses = [theorem_diagnostics(mixed_chars, n, k_max=1, b=1).dust_proxy for n in range(2, 7)]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(masses, masses[1:]))


def test_distance_to_equilibrium_decreases(mixed_chars):
    G = build_generator(mixed_chars, 4)
    rho = stationary_distribution(G)
    init = DistributionOnPn.dirac(Partition.one(4))
    distances = [total_variation(transient_distribution(G, init, t), rho) for t in np.linspace(0, 10, 21)]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(distances, distances[1:]))


def test_projection_of_diracs():
    assert projection(DistributionOnPn.dirac(Partition.one(5)), 3).weight_of(Partition.one(3)) == 1.0
    rho = DistributionOnPn.dirac(Partition.zero(4))
    assert projection(rho, 4).weight_of(Partition.zero(4)) == 1.0
    with pytest.raises(PartitionError):
        projection(rho, 5)


def test_bounds_at_six_elements(erosion_kingman_chars, two_state_chars):
    report = theorem_diagnostics(erosion_kingman_chars, 6, k_max=4, b=3)
    assert [record['holds'] for record in report.bounds] == [True] * 4
    report = theorem_diagnostics(two_state_chars, 6, k_max=5, b=1)
    assert [record['holds'] for record in report.binary['inequality']] == [True] * 5
    assert [record['holds'] for record in report.binary['tail']] == [True] * 5


def test_pure_coalescence_diagnostics():
    report = theorem_diagnostics(define.characteristics(c_k=1), 4, k_max=3, b=2)
    assert report.block_counts[0] == 1.0
    assert report.all_hold


def test_diagnostics_on_a_single_element(two_state_chars):
    report = theorem_diagnostics(two_state_chars, 1, k_max=0, b=0)
    assert list(report.block_counts) == [1.0]
    assert report.bounds == []
    assert report.dust == []
    assert report.all_hold


@pytest.mark.parametrize('n, k_max, b', [(1, 1, 0), (1, 0, 1), (4, 0, 1), (4, 4, 1), (4, 1, 0), (4, 1, 4)])
def test_diagnostic_ranges_are_checked(two_state_chars, n, k_max, b):
    with pytest.raises(PartitionError):
        theorem_diagnostics(two_state_chars, n, k_max=k_max, b=b)


def test_projections_match_every_lower_level(mixed_chars):
    rhos = {n: stationary_distribution(build_generator(mixed_chars, n)) for n in range(1, 8)}
    for low, high in itertools.combinations(range(1, 8), 2):
        assert total_variation(projection(rhos[high], low), rhos[low]) < 1e-9


@pytest.mark.parametrize('start', ['zero', 'one', 'random'])
def test_transient_law_converges_from_any_start(mixed_chars, start):
    G = build_generator(mixed_chars, 4)
    rho = stationary_distribution(G)
    if start == 'random':
        init = DistributionOnPn(4, np.random.default_rng(31).dirichlet(np.ones(G.num_states)))
    else:
        init = DistributionOnPn.dirac(Partition.zero(4) if start == 'zero' else Partition.one(4))
    assert total_variation(transient_distribution(G, init, 50.0), rho) < 1e-8


@pytest.mark.parametrize('start', ['zero', 'one'])
def test_convergence_time_is_the_first_passage_below_target(mixed_chars, start):
    G = build_generator(mixed_chars, 4)
    rho = stationary_distribution(G)
    init = DistributionOnPn.dirac(Partition.zero(4) if start == 'zero' else Partition.one(4))
    t, distance = convergence_time(G, init, target=1e-6, rho=rho)
    assert t > 0
    assert distance <= 1e-6
    assert total_variation(transient_distribution(G, init, 0.998 * t), rho) > 1e-6
    t, distance = convergence_time(G, rho, target=1e-6, rho=rho)
    assert t == 0.0
    assert distance <= 1e-12


@pytest.mark.parametrize('n', range(3, 8))
def test_dust_bound_holds_up_to_five_blocks(mixed_chars, erosion_kingman_chars, n):
    b = min(5, n - 1)
    for chars in (mixed_chars, erosion_kingman_chars):
        report = theorem_diagnostics(chars, n, k_max=1, b=b)
        assert [record['b'] for record in report.dust] == list(range(1, b + 1))
        assert all(record['holds'] for record in report.dust)
        assert all(record['rho_I_D'] <= record['rho_I'] + 1e-12 for record in report.dust)
