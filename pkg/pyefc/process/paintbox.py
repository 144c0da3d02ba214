"""
Paintbox laws. An x-paintbox on [n] paints every element independently with colour k (probability x_k) or with
private dust (probability x_0); elements sharing a colour form a block and dust-painted elements are singletons.

All exact laws below are written with generic arithmetic, so they return Fractions when x holds Fractions.
"""
import functools
from math import comb, factorial
from typing import Dict, Tuple

import numpy as np

from pyefc.schema.measure import RankedMassVector
from pyefc.schema.partition import Partition


def paintbox_probabilities(x: RankedMassVector) -> np.ndarray:
    """
    Colour probabilities (x_1, ..., x_k, x_0) as a float array summing to one. The last entry is dust.
    """
    probabilities = np.array([float(mass) for mass in x.masses] + [float(x.dust)], dtype=np.float64)
    return probabilities / probabilities.sum()


def paintbox_colours(x: RankedMassVector, n: int, rng: np.random.Generator, size: int = None) -> np.ndarray:
    """
    Draw paintbox colours for n elements.

    :param x: The mass vector.
    :param n: The number of elements.
    :param rng: The random generator.
    :param size: Number of independent draws; a single draw when None.
    :return: Integer colours in [0, x.num_parts], the value x.num_parts meaning dust. Shape (n,) or (size, n).
    """
    shape = n if size is None else (size, n)
    return rng.choice(x.num_parts + 1, size=shape, p=paintbox_probabilities(x))


def partition_from_colours(colours, dust_colour: int) -> Partition:
    labels = [('dust', element) if colour == dust_colour else ('colour', colour)
              for element, colour in enumerate(colours)]
    return Partition.from_labels(labels)


def paintbox_sample(x: RankedMassVector, n: int, rng: np.random.Generator) -> Partition:
    """
    Sample the restriction to [n] of an x-paintbox partition.

    :param x: The mass vector.
    :param n: The ground-set size.
    :param rng: The random generator.
    :return: A random partition of [n].
    """
    return partition_from_colours(paintbox_colours(x, n, rng), x.num_parts)


def block_counts(colours: np.ndarray, num_colours: int) -> np.ndarray:
    """
    Number of blocks of each row of a colour matrix (as returned by `paintbox_colours` with a size).
    """
    used = np.zeros(colours.shape[0], dtype=np.int64)
    for colour in range(num_colours):
        used += (colours == colour).any(axis=1)
    return used + (colours == num_colours).sum(axis=1)


def _kinds(x: RankedMassVector) -> Tuple[type, ...]:
    # Fraction(1, 2) and 0.5 hash alike, so cached laws are also keyed by the number types.
    return tuple(type(mass) for mass in x.masses)


@functools.lru_cache(maxsize=None)
def _profile_probability(x: RankedMassVector, sizes: Tuple[int, ...], kinds: Tuple[type, ...]):
    # Colours are assigned injectively to blocks; blocks left without a colour must be dust singletons.
    x0 = x.dust
    table: Dict[int, object] = {0: 1}
    for mass in x.masses:
        updated = dict(table)
        for mask, value in table.items():
            for position, size in enumerate(sizes):
                bit = 1 << position
                if not mask & bit:
                    updated[mask | bit] = updated.get(mask | bit, 0) + value * mass ** size
        table = updated

    total = 0
    for mask, value in table.items():
        remaining = [sizes[position] for position in range(len(sizes)) if not mask >> position & 1]
        if any(size > 1 for size in remaining):
            continue
        total += value * x0 ** len(remaining)
    return total


def paintbox_restriction_prob(x: RankedMassVector, pi: Partition):
    """
    Probability that the restriction of an x-paintbox to [n] equals pi.

    The law is exchangeable, so the value only depends on the block sizes of pi.

    :param x: The mass vector.
    :param pi: A partition of [n].
    :return: The exact probability.
    """
    return _profile_probability(x, tuple(sorted(pi.block_sizes(), reverse=True)), _kinds(x))


def _elementary_symmetric(masses, degree: int):
    values = [1] + [0] * degree
    for mass in masses:
        for j in range(degree, 0, -1):
            values[j] = values[j] + values[j - 1] * mass
    return values


def paintbox_all_distinct_prob(x: RankedMassVector, m: int):
    """
    Probability that the x-paintbox restricted to [m] is the partition into singletons:
    sum_j C(m, j) x_0^(m - j) j! e_j(x), e_j being the elementary symmetric polynomials of the masses.
    """
    return _all_distinct(x, m, _kinds(x))


@functools.lru_cache(maxsize=None)
def _all_distinct(x: RankedMassVector, m: int, kinds: Tuple[type, ...]):
    elementary = _elementary_symmetric(x.masses, m)
    x0 = x.dust
    return sum(comb(m, j) * x0 ** (m - j) * factorial(j) * elementary[j] for j in range(m + 1))


def paintbox_block_count_distribution(x: RankedMassVector, m: int) -> Tuple:
    """
    Law of the number of blocks of the x-paintbox restricted to [m].

    Given j coloured elements, the probability that they use exactly c colours is j! times the coefficient of t^j
    in the c-th elementary symmetric function of (exp(x_i t) - 1), which is inclusion-exclusion over colour sets.

    :param x: The mass vector.
    :param m: The number of elements.
    :return: A tuple whose entry k is the probability of k blocks (entry 0 is always 0).
    """
    return _block_count_law(x, m, _kinds(x))


@functools.lru_cache(maxsize=None)
def _block_count_law(x: RankedMassVector, m: int, kinds: Tuple[type, ...]) -> Tuple:
    # coefficients[c][d]: coefficient of t^d in e_c(exp(x_i t) - 1), truncated at degree m.
    coefficients = [[1] + [0] * m]
    for mass in x.masses:
        series = [0] + [mass ** d / factorial(d) for d in range(1, m + 1)]
        updated = [list(row) for row in coefficients] + [[0] * (m + 1)]
        for c, row in enumerate(coefficients):
            for d, value in enumerate(row):
                if value == 0:
                    continue
                for e in range(1, m + 1 - d):
                    updated[c + 1][d + e] = updated[c + 1][d + e] + value * series[e]
        coefficients = updated

    x0 = x.dust
    law = [0] * (m + 1)
    for j in range(m + 1):
        dust_weight = comb(m, j) * x0 ** (m - j)
        if dust_weight == 0:
            continue
        for c, row in enumerate(coefficients):
            if row[j] == 0:
                continue
            blocks = c + (m - j)
            law[blocks] = law[blocks] + dust_weight * factorial(j) * row[j]
    return tuple(law)
