"""
Transition rates of the chain restricted to [n] and the sparse generator over the partitions of [n].

From a partition pi with m blocks the chain jumps to coag(pi, pi'') at rate C_m(pi'') for pi'' other than the
partition into singletons, and to frag(pi, pi'', k) at rate F_l(pi'') for every block k of size l >= 2 and pi''
other than the one-block partition. Rates to the same target add up.
"""
import functools
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from sortedcontainers import SortedDict

from pyefc.config import MAX_ENUMERATION_N
from pyefc.logging_utility.logger import rates_logger
from pyefc.logging_utility.logging_messages import (COMPATIBILITY_DEFECT, GENERATOR_BUILD_DONE,
                                                    GENERATOR_BUILD_START, KERNEL_BUILD)
from pyefc.misc.decorators import timer_decorator
from pyefc.misc.exceptions import PartitionError, StateSpaceTooLarge
from pyefc.process.functionals import erosion_restriction_mass, kingman_restriction_mass
from pyefc.process.paintbox import paintbox_restriction_prob
from pyefc.schema.measure import Characteristics
from pyefc.schema.partition import Partition, bell_number, coag, enumerate_partitions, frag, restrict
from pyefc.schema.schema import EfcElement


class RateEngine:
    """
    Computes C_m, F_l and the rows of the restricted chains for fixed characteristics.

    The nonzero part of each kernel is computed once per level and cached. When the characteristics only hold
    ints and Fractions, every rate is an exact rational.

    Attributes:
        chars: The characteristics.
    """

    def __init__(self, chars: Characteristics):
        self.chars = chars
        self._coag_kernels = {}
        self._frag_kernels = {}

    @property
    def is_exact(self) -> bool:
        return self.chars.is_exact

    def coag_rate(self, pi_prime: Partition):
        """
        C_m(pi') = c_k kappa(pi') + sum over atoms of w P_x(pi').
        """
        rate = self.chars.c_k * kingman_restriction_mass(pi_prime)
        for weight, vector in self.chars.nu_coag:
            rate += weight * paintbox_restriction_prob(vector, pi_prime)
        return rate

    def frag_rate(self, pi_prime: Partition):
        """
        F_l(pi') = c_e e(pi') + sum over atoms of w P_x(pi').
        """
        rate = self.chars.c_e * erosion_restriction_mass(pi_prime)
        for weight, vector in self.chars.nu_disl:
            rate += weight * paintbox_restriction_prob(vector, pi_prime)
        return rate

    def coag_kernel(self, m: int) -> Tuple[Tuple[Partition, object], ...]:
        """Nonzero (pi'', C_m(pi'')) pairs over the partitions of [m]."""
        if m not in self._coag_kernels:
            self._coag_kernels[m] = self._build_kernel(m, 'coagulation')
        return self._coag_kernels[m]

    def frag_kernel(self, size: int) -> Tuple[Tuple[Partition, object], ...]:
        """Nonzero (pi'', F_l(pi'')) pairs over the partitions of [l]."""
        if size not in self._frag_kernels:
            self._frag_kernels[size] = self._build_kernel(size, 'fragmentation')
        return self._frag_kernels[size]

    def _build_kernel(self, size: int, kind: str):
        if kind == 'coagulation':
            if self.chars.c_k == 0 and self.chars.nu_coag.is_empty:
                return ()
            candidates = [pi for pi in enumerate_partitions(size) if not pi.is_zero]
            rate_of = self.coag_rate
        else:
            if self.chars.c_e == 0 and self.chars.nu_disl.is_empty:
                return ()
            candidates = [pi for pi in enumerate_partitions(size) if not pi.is_one]
            rate_of = self.frag_rate

        kernel = []
        for pi in candidates:
            rate = rate_of(pi)
            if rate != 0:
                kernel.append((pi, rate))
        rates_logger.debug(KERNEL_BUILD.format(size, kind, len(kernel)))
        return tuple(kernel)

    def transition_rates(self, pi: Partition) -> SortedDict:
        """
        The off-diagonal row of pi: target partitions mapped to their accumulated rate, in enumeration order.
        Zero rates and self-transitions are never emitted.
        """
        row = SortedDict()
        for pi_prime, rate in self.coag_kernel(pi.num_blocks):
            target = coag(pi, pi_prime)
            row[target] = row.get(target, 0) + rate
        for k, block in enumerate(pi.blocks, start=1):
            if len(block) < 2:
                continue
            for pi_prime, rate in self.frag_kernel(len(block)):
                target = frag(pi, pi_prime, k)
                row[target] = row.get(target, 0) + rate
        return row

    def total_fragmentation_rate(self, pi: Partition):
        """Total rate of the fragmentations out of pi."""
        return sum(sum(rate for _, rate in self.frag_kernel(len(block))) for block in pi.blocks if len(block) > 1)

    def total_coagulation_rate(self, m: int):
        """Total rate of the coagulations out of any partition with m blocks."""
        return sum(rate for _, rate in self.coag_kernel(m))


def coag_rate(chars: Characteristics, pi_prime: Partition):
    return RateEngine(chars).coag_rate(pi_prime)


def frag_rate(chars: Characteristics, pi_prime: Partition):
    return RateEngine(chars).frag_rate(pi_prime)


def transition_rates(chars: Characteristics, pi: Partition) -> SortedDict:
    return RateEngine(chars).transition_rates(pi)


def total_fragmentation_rate(chars: Characteristics, pi: Partition):
    return RateEngine(chars).total_fragmentation_rate(pi)


class Generator(EfcElement):
    """
    Sparse rate matrix of the chain restricted to [n].

    Attributes:
        n: The ground-set size.
        states: The partitions of [n] in enumeration order; row i belongs to states[i].
        matrix: A scipy CSR matrix with the off-diagonal rates and diagonal equal to minus the row sums.
    """

    __slots__ = ('n', 'states', 'matrix', '_index')

    def __init__(self, n: int, states: Sequence[Partition], matrix: sp.csr_matrix):
        self.n = n
        self.states = tuple(states)
        self.matrix = matrix.tocsr()
        self._index = {state: i for i, state in enumerate(self.states)}

    @property
    def num_states(self) -> int:
        return len(self.states)

    def index_of(self, pi: Partition) -> int:
        try:
            return self._index[pi]
        except KeyError:
            raise PartitionError(f'{pi.plain_str()} is not a state of the chain on [{self.n}].')

    def exit_rates(self) -> np.ndarray:
        return -self.matrix.diagonal()

    def row(self, i: int) -> Dict[int, float]:
        """Off-diagonal entries of row i."""
        start, stop = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return {int(j): float(rate) for j, rate in zip(self.matrix.indices[start:stop], self.matrix.data[start:stop])
                if j != i and rate != 0}

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self) -> List[Tuple[int, int, float]]:
        """Nonzero entries (i, j, rate) in row-major order, diagonal included."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order if coo.data[k] != 0]

    def plain_str(self) -> str:
        return f'Generator on P_{self.n}: {self.num_states} states, {self.matrix.nnz} stored entries'


@timer_decorator
def build_generator(chars: Characteristics, n: int, threads: int = 1, engine: RateEngine = None) -> Generator:
    """
    Build the generator of the chain restricted to [n].

    :param chars: The characteristics.
    :param n: The ground-set size, at most `MAX_ENUMERATION_N`.
    :param threads: Number of worker threads computing rows.
    :param engine: A rate engine to reuse (its kernel cache is shared across levels).
    :return: The generator.
    """
    if n > MAX_ENUMERATION_N:
        raise StateSpaceTooLarge(f'P_{n} has {bell_number(n)} states, above the enumeration bound '
                                 f'n <= {MAX_ENUMERATION_N}.', n=n, bell=bell_number(n))
    engine = engine if engine is not None else RateEngine(chars)
    states = enumerate_partitions(n)
    index = {state: i for i, state in enumerate(states)}
    rates_logger.info(GENERATOR_BUILD_START.format(n, len(states)))

    # Kernels are built before the rows so that worker threads only read the cache.
    for size in range(1, n + 1):
        engine.coag_kernel(size)
        engine.frag_kernel(size)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(engine.transition_rates, states))
    else:
        rows = [engine.transition_rates(state) for state in states]

    row_indices, col_indices, values = [], [], []
    for i, row in enumerate(rows):
        for target, rate in row.items():
            row_indices.append(i)
            col_indices.append(index[target])
            values.append(float(rate))
    rates_logger.info(GENERATOR_BUILD_DONE.format(n, len(values)))

    off_diagonal = sp.coo_matrix((values, (row_indices, col_indices)), shape=(len(states), len(states))).tocsr()
    diagonal = sp.diags(-np.asarray(off_diagonal.sum(axis=1)).ravel())
    return Generator(n, states, (off_diagonal + diagonal).tocsr())


class CompatibilityReport(EfcElement):
    """
    Largest violation of the cross-level identity q_m(pi|[m], pi') = sum of q_n(pi, pi'') over the pi'' restricting
    to pi', taken over pi in P_n and pi' != pi|[m].

    Attributes:
        n: The upper level.
        m: The lower level.
        max_defect: The largest absolute difference (exactly 0 in exact mode when the identity holds).
        checked: Number of (pi, pi') pairs with a nonzero side.
        worst: The (pi, pi') pair attaining the maximum, or None.
    """

    __slots__ = ('n', 'm', 'max_defect', 'checked', 'worst')

    def __init__(self, n, m, max_defect, checked, worst):
        self.n = n
        self.m = m
        self.max_defect = max_defect
        self.checked = checked
        self.worst = worst

    def plain_str(self) -> str:
        return f'levels {self.m} < {self.n}: {self.checked} pairs, max defect {float(self.max_defect):.3e}'

    def to_dict(self):
        return {'n': self.n, 'm': self.m, 'max_defect': float(self.max_defect), 'checked': self.checked,
                'worst': None if self.worst is None else [self.worst[0].plain_str(), self.worst[1].plain_str()]}


def compatibility_defect(chars: Characteristics, n: int, m: int, engine: RateEngine = None) -> CompatibilityReport:
    """
    Evaluate the compatibility of the rates of the chains on [m] and [n].

    :param chars: The characteristics.
    :param n: The upper level.
    :param m: The lower level, 1 <= m < n.
    :return: The report.
    """
    if not 1 <= m < n:
        raise PartitionError(f'Compatibility needs 1 <= m < n, got m={m}, n={n}.')
    engine = engine if engine is not None else RateEngine(chars)
    lower_rows = functools.lru_cache(maxsize=None)(engine.transition_rates)

    max_defect = 0
    checked = 0
    worst = None
    for pi in enumerate_partitions(n):
        restricted = restrict(pi, m)
        aggregated = {}
        for target, rate in engine.transition_rates(pi).items():
            image = restrict(target, m)
            if image != restricted:
                aggregated[image] = aggregated.get(image, 0) + rate
        lower = lower_rows(restricted)
        for image in set(aggregated) | set(lower):
            checked += 1
            defect = abs(lower.get(image, 0) - aggregated.get(image, 0))
            if defect > max_defect:
                max_defect = defect
                worst = (pi, image)

    rates_logger.info(COMPATIBILITY_DEFECT.format(m, n, float(max_defect)))
    return CompatibilityReport(n, m, max_defect, checked, worst)
