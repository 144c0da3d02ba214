from fractions import Fraction

import numpy as np
import pytest

import pyefc.schema.define as define
from pyefc.misc.exceptions import MeasureError, PartitionError
from pyefc.process.functionals import (VERDICT_INAPPLICABLE, VERDICT_MET, block_split_rate, coalescent_block_rates,
                                       comes_down_diagnostic, erosion_restriction_mass, kingman_restriction_mass, phi,
                                       validate_characteristics, zeta)
from pyefc.process.paintbox import (paintbox_all_distinct_prob, paintbox_block_count_distribution, paintbox_colours,
                                    paintbox_restriction_prob, paintbox_sample, partition_from_colours)
from pyefc.schema.measure import RankedMassVector, characteristics_from_dict
from pyefc.schema.partition import Partition, enumerate_partitions, parse_partition

THIRD = Fraction(1, 3)
HALF = Fraction(1, 2)


def test_mass_vector_is_ranked_and_checked():
    x = RankedMassVector([Fraction(1, 5), HALF])
    assert x.masses == (HALF, Fraction(1, 5))
    assert x.dust == Fraction(3, 10)
    assert x.num_parts == 2
    assert not x.is_proper
    assert RankedMassVector([HALF, HALF]).is_proper
    assert RankedMassVector([1.0]).is_unit
    assert RankedMassVector().is_zero
    with pytest.raises(MeasureError):
        RankedMassVector([0.7, 0.5])
    with pytest.raises(MeasureError):
        RankedMassVector([0.5, 0.0])


def test_measure_merges_equal_atoms():
    nu = define.measure((1, (0.5, 0.5)), (2, (0.5, 0.5)), (1, (0.3,)))
    assert len(nu) == 2
    assert nu.total_mass == 4
    with pytest.raises(MeasureError):
        define.measure((0, (0.5,)))


def test_characteristics_from_dict():
    chars = characteristics_from_dict({'c_k': '1/2', 'nu_disl': [{'weight': 1, 'masses': ['1/2', '1/2']}]},
                                      exact=True)
    assert chars.c_k == HALF
    assert chars.is_exact
    assert chars.is_binary_fragmentation()
    assert characteristics_from_dict(chars.to_dict(), exact=True) == chars
    with pytest.raises(MeasureError):
        characteristics_from_dict({'c_x': 1})
    with pytest.raises(MeasureError):
        characteristics_from_dict({'nu_coag': [{'weight': 1}]})


def test_two_colour_paintbox_on_pairs():
    x = RankedMassVector([HALF, HALF])
    assert paintbox_restriction_prob(x, Partition.one(2)) == HALF
    assert paintbox_restriction_prob(x, Partition.zero(2)) == HALF


def test_paintbox_with_dust_on_three_elements():
    x = RankedMassVector([THIRD, THIRD])
    assert paintbox_restriction_prob(x, Partition.one(3)) == Fraction(2, 27)
    assert paintbox_restriction_prob(x, parse_partition('{1,2}{3}')) == Fraction(4, 27)
    assert paintbox_restriction_prob(x, Partition.zero(3)) == Fraction(13, 27)
    assert paintbox_all_distinct_prob(x, 3) == Fraction(13, 27)


def test_single_mass_on_pairs():
    x = RankedMassVector([Fraction(3, 10)])
    assert paintbox_restriction_prob(x, Partition.zero(2)) == Fraction(91, 100)
    assert paintbox_restriction_prob(x, Partition.one(2)) == Fraction(9, 100)
    assert paintbox_restriction_prob(RankedMassVector([0.3]), Partition.zero(2)) == pytest.approx(0.91, abs=1e-15)


@pytest.mark.parametrize('masses', [(HALF, HALF), (Fraction(3, 5), Fraction(1, 5)), (Fraction(3, 10),),
                                    (THIRD, Fraction(1, 4), Fraction(1, 6))])
@pytest.mark.parametrize('n', range(1, 7))
def test_paintbox_law_sums_to_one(masses, n):
    x = RankedMassVector(masses)
    partitions = enumerate_partitions(n)
    probabilities = [paintbox_restriction_prob(x, pi) for pi in partitions]
    assert sum(probabilities) == 1
    assert paintbox_all_distinct_prob(x, n) == paintbox_restriction_prob(x, Partition.zero(n))

    law = paintbox_block_count_distribution(x, n)
    assert law[0] == 0
    for k in range(1, n + 1):
        assert law[k] == sum(p for pi, p in zip(partitions, probabilities) if pi.num_blocks == k)


def test_float_and_exact_laws_are_cached_apart():
    exact = paintbox_restriction_prob(RankedMassVector([HALF, HALF]), Partition.one(2))
    approximate = paintbox_restriction_prob(RankedMassVector([0.5, 0.5]), Partition.one(2))
    assert isinstance(exact, Fraction)
    assert isinstance(approximate, float)


def test_paintbox_sampling_matches_the_exact_law():
    x = RankedMassVector([0.5, 0.25])
    rng = np.random.default_rng(2024)
    samples = 20000
    counts = {}
    for _ in range(samples):
        pi = paintbox_sample(x, 3, rng)
        counts[pi] = counts.get(pi, 0) + 1
    for pi in enumerate_partitions(3):
        p = float(paintbox_restriction_prob(x, pi))
        sigma = np.sqrt(p * (1 - p) / samples)
        assert abs(counts.get(pi, 0) / samples - p) <= 4 * sigma + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize('n', range(2, 6))
def test_paintbox_profiles_over_a_million_draws(n):
    x = RankedMassVector([0.5, 0.25])
    samples = 10 ** 6
    rows, counts = np.unique(paintbox_colours(x, n, np.random.default_rng([n, 77]), size=samples), axis=0,
                             return_counts=True)
    observed = {}
    for row, count in zip(rows, counts):
        profile = tuple(sorted(partition_from_colours(row, x.num_parts).block_sizes()))
        observed[profile] = observed.get(profile, 0) + int(count)
    expected = {}
    for pi in enumerate_partitions(n):
        profile = tuple(sorted(pi.block_sizes()))
        expected[profile] = expected.get(profile, 0.0) + float(paintbox_restriction_prob(x, pi))
    assert sum(expected.values()) == pytest.approx(1.0)
    for profile, p in expected.items():
        sigma = np.sqrt(p * (1 - p) / samples)
        assert abs(observed.get(profile, 0) / samples - p) <= 3 * sigma + 1e-12


def test_erosion_restriction_mass():
    assert erosion_restriction_mass(Partition.zero(2)) == 2
    assert erosion_restriction_mass(parse_partition('{1}{2,3}')) == 1
    assert erosion_restriction_mass(parse_partition('{1,3}{2}')) == 1
    assert erosion_restriction_mass(parse_partition('{1,2}{3,4}')) == 0
    assert erosion_restriction_mass(Partition.zero(3)) == 0
    with pytest.raises(PartitionError):
        erosion_restriction_mass(Partition.one(3))


def test_kingman_restriction_mass():
    assert kingman_restriction_mass(Partition.one(2)) == 1
    assert kingman_restriction_mass(parse_partition('{1}{2,3}')) == 1
    assert kingman_restriction_mass(Partition.one(3)) == 0
    assert kingman_restriction_mass(parse_partition('{1,2}{3,4}')) == 0
    with pytest.raises(PartitionError):
        kingman_restriction_mass(Partition.zero(3))


def test_validation_reports_integrals():
    chars = define.characteristics(nu_coag=[(2, (THIRD, THIRD))])
    report = validate_characteristics(chars)
    assert report.is_valid
    assert report.scalars['int_sum_sq_nu_coag'] == Fraction(4, 9)
    assert report.scalars['int_sum_nu_coag'] == Fraction(4, 3)
    assert report.scalars['nu_coag_proper_mass'] == 0
    assert any(flag.startswith('coalesces slowly') for flag in report.flags)


def test_validation_rejects_neutral_atoms():
    report = validate_characteristics(define.characteristics(c_k=1, nu_disl=[(1, (1.0,))]))
    assert not report.is_valid
    assert report.violations == ['nu_disl has an atom at (1,0,...) with weight 1']
    report = validate_characteristics(define.characteristics(c_e=-1))
    assert not report.is_valid


def test_validation_flags_degenerate_characteristics():
    report = validate_characteristics(define.characteristics())
    assert report.is_valid
    assert 'degenerate: no dynamics' in report.flags


def test_phi_and_zeta():
    chars = define.characteristics(c_e=1, nu_disl=[(1, (HALF, HALF))], nu_coag=[(1, (HALF,))])
    assert phi(chars, 1) == 2 + HALF
    assert phi(chars, 0) == 1
    assert zeta(chars, 1) == 0
    assert zeta(chars, 3) == HALF * (1 - Fraction(1, 4))


def test_kingman_block_rates():
    rates = coalescent_block_rates(define.characteristics(c_k=1), 5)
    assert rates.lambda_b == 10
    assert rates.gamma_b == 10
    assert rates.method == 'enumeration'


def test_block_rates_methods_agree(exact_mixed_chars):
    enumeration = coalescent_block_rates(exact_mixed_chars, 6, method='enumeration')
    occupancy = coalescent_block_rates(exact_mixed_chars, 6, method='occupancy')
    assert enumeration.lambda_b == occupancy.lambda_b
    assert enumeration.gamma_b == occupancy.gamma_b

    estimate = coalescent_block_rates(exact_mixed_chars, 6, method='monte-carlo', samples=50000, seed=5)
    assert estimate.method == 'monte-carlo'
    assert abs(estimate.lambda_b - float(enumeration.lambda_b)) <= 4 * estimate.lambda_se + 1e-12
    assert abs(estimate.gamma_b - float(enumeration.gamma_b)) <= 4 * estimate.gamma_se + 1e-12


def test_kingman_comes_down_partial_sum():
    report = comes_down_diagnostic(define.characteristics(c_k=1), 100)
    assert report.total == pytest.approx(1.98, abs=1e-12)
    assert report.verdict == VERDICT_MET


def test_comes_down_inapplicable_without_coalescence():
    report = comes_down_diagnostic(define.characteristics(c_e=1), 10)
    assert report.verdict == VERDICT_INAPPLICABLE
    assert report.partial_sums == []


@pytest.mark.parametrize('m', [16, 32, 64])
def test_block_split_rate_approaches_the_logistic_rates(logistic_chars, m):
    bound = sum(float(weight) * x.num_parts * float(1 - min(x.masses)) ** m for weight, x in logistic_chars.nu_disl)
    p = {1: 1, 2: Fraction(1, 4)}
    for j, p_j in p.items():
        assert abs(float(block_split_rate(logistic_chars, m, j + 1)) - float(p_j)) <= bound


def test_block_split_rate_with_erosion():
    chars = define.characteristics(c_e=2)
    assert block_split_rate(chars, 5, 2) == 10
    assert block_split_rate(chars, 5, 3) == 0
    assert block_split_rate(chars, 2, 3) == 0


def test_phi_is_increasing_and_concave(mixed_chars):
    grid = np.linspace(0.0, 20.0, 81).tolist()
    values = np.array([phi(mixed_chars, q) for q in grid])
    assert np.all(np.diff(values) >= 0)
    assert np.all(np.diff(values, 2) <= 1e-12)
    assert values[0] == pytest.approx(0.6)


def test_zeta_is_bounded_and_nondecreasing(exact_mixed_chars, mixed_chars):
    for chars in (exact_mixed_chars, mixed_chars):
        values = [zeta(chars, b) for b in range(1, 65)]
        bound = chars.nu_coag.integrate(lambda x: sum(x.masses))
        assert values[0] == 0
        assert all(later >= earlier for earlier, later in zip(values, values[1:]))
        assert all(value <= bound for value in values)
    assert zeta(exact_mixed_chars, 64) > 0
