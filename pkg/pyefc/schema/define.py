from numbers import Real
from typing import Iterable, Sequence, Tuple, Union

from pyefc.schema.measure import Characteristics, DiscreteMeasureOnSimplex, RankedMassVector
from pyefc.schema.partition import (Partition, PermutationMap, canonicalize, parse_partition)


def mass_vector(*masses: Real) -> RankedMassVector:
    """
    Create a ranked mass vector.

    :param masses: The positive masses, in any order.
    :return: The ranked mass vector.
    """
    return RankedMassVector(masses)


def measure(*atoms: Tuple[Real, Sequence[Real]]) -> DiscreteMeasureOnSimplex:
    """
    Create a discrete measure on the simplex.

    Examples:
        >>> measure((1, (0.5, 0.5)), (2, (0.3,)))

    :param atoms: Pairs of (weight, masses).
    :return: The measure, with atoms at equal vectors merged.
    """
    return DiscreteMeasureOnSimplex((weight, RankedMassVector(masses)) for weight, masses in atoms)


def characteristics(c_e: Real = 0, c_k: Real = 0,
                    nu_disl: Union[DiscreteMeasureOnSimplex, Iterable[Tuple[Real, Sequence[Real]]]] = (),
                    nu_coag: Union[DiscreteMeasureOnSimplex, Iterable[Tuple[Real, Sequence[Real]]]] = ()) \
        -> Characteristics:
    """
    Create the characteristics of a process.

    :param c_e: The erosion rate.
    :param c_k: The Kingman rate.
    :param nu_disl: The dislocation measure, or its atoms as (weight, masses) pairs.
    :param nu_coag: The coagulation measure, or its atoms as (weight, masses) pairs.
    :return: The characteristics.
    """
    if not isinstance(nu_disl, DiscreteMeasureOnSimplex):
        nu_disl = measure(*nu_disl)
    if not isinstance(nu_coag, DiscreteMeasureOnSimplex):
        nu_coag = measure(*nu_coag)
    return Characteristics(c_e=c_e, c_k=c_k, nu_disl=nu_disl, nu_coag=nu_coag)


def partition(blocks: Union[str, Iterable[Iterable[int]]], n: int = None) -> Partition:
    """
    Create a partition from its textual form or from a collection of blocks.

    Examples:
        >>> partition('{1,3}{2}')
        >>> partition([[3, 1], [2]])

    :param blocks: The textual form "{1,3}{2}" or the blocks.
    :param n: The ground-set size; inferred from the blocks when omitted.
    :return: The canonical partition.
    """
    if isinstance(blocks, str):
        parsed = parse_partition(blocks)
        if n is not None and parsed.n != n:
            return canonicalize(parsed.blocks, n)
        return parsed
    blocks = [list(block) for block in blocks]
    if n is None:
        n = sum(len(block) for block in blocks)
    return canonicalize(blocks, n)


def permutation(mapping: Union[Sequence[int], dict]) -> PermutationMap:
    """
    Create a permutation of [n].

    :param mapping: Either the image sequence (sigma(1), ..., sigma(n)) or a dict i -> sigma(i).
    :return: The permutation.
    """
    if isinstance(mapping, dict):
        mapping = [mapping[i] for i in range(1, len(mapping) + 1)]
    return PermutationMap(mapping)
