"""
Stationary and transient laws of the restricted chains, and the equilibrium diagnostics built from them.
"""
import math
from typing import List, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
from scipy.sparse.linalg import spsolve
from scipy.special import gammainc
from scipy.stats import poisson

from pyefc.config import (DISTRIBUTION_TOLERANCE, MAX_DIRECT_SOLVE_STATES, POWER_ITERATION_MAX_STEPS,
                          RESIDUAL_TOLERANCE, UNIFORMIZATION_TOLERANCE)
from pyefc.logging_utility.logger import equilibrium_logger
from pyefc.logging_utility.logging_messages import (CLOSED_CLASSES_FOUND, CONVERGENCE_TIME, STATIONARY_DIRAC,
                                                    STATIONARY_ITERATIVE, STATIONARY_RESIDUAL, STATIONARY_SOLVE,
                                                    UNIFORMIZATION_RUN)
from pyefc.misc.decorators import timer_decorator
from pyefc.misc.exceptions import MultipleClosedClasses, NumericalFailure, PartitionError
from pyefc.process.functionals import phi, zeta
from pyefc.process.rates import Generator, RateEngine, build_generator
from pyefc.schema.measure import Characteristics
from pyefc.schema.partition import Partition, enumerate_partitions, restrict
from pyefc.schema.schema import SerializableEfcElement


class DistributionOnPn(SerializableEfcElement):
    """
    A probability vector over the partitions of [n], indexed like `enumerate_partitions(n)`.

    Attributes:
        n: The ground-set size.
        weights: Float array of length Bell(n).
        truncation_error: Mass dropped by a truncated series (0 for exact solves).
    """

    __slots__ = ('n', 'weights', 'truncation_error')

    def __init__(self, n: int, weights: Sequence[float], truncation_error: float = 0.0):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (len(enumerate_partitions(n)),):
            raise NumericalFailure(f'A distribution on P_{n} needs {len(enumerate_partitions(n))} weights, '
                                   f'got shape {weights.shape}.')
        if weights.min() < -DISTRIBUTION_TOLERANCE or abs(weights.sum() - 1) > DISTRIBUTION_TOLERANCE:
            raise NumericalFailure(f'Weights are not a probability vector (min {weights.min():.3e}, '
                                   f'sum {weights.sum():.12f}).')
        self.n = n
        self.weights = weights
        self.truncation_error = truncation_error

    @classmethod
    def dirac(cls, pi: Partition) -> 'DistributionOnPn':
        states = enumerate_partitions(pi.n)
        weights = np.zeros(len(states))
        weights[states.index(pi)] = 1.0
        return cls(pi.n, weights)

    @property
    def states(self):
        return enumerate_partitions(self.n)

    def weight_of(self, pi: Partition) -> float:
        return float(self.weights[self.states.index(pi)])

    def probability(self, predicate) -> float:
        return float(sum(weight for state, weight in zip(self.states, self.weights) if predicate(state)))

    def block_count_marginal(self) -> np.ndarray:
        """Entry K - 1 holds the mass of the partitions with K blocks."""
        marginal = np.zeros(self.n)
        for state, weight in zip(self.states, self.weights):
            marginal[state.num_blocks - 1] += weight
        return marginal

    def expected_ranked_frequencies(self) -> np.ndarray:
        """Expectation of the block frequencies |B_i| / n sorted decreasingly, padded with zeros to length n."""
        expected = np.zeros(self.n)
        for state, weight in zip(self.states, self.weights):
            sizes = sorted(state.block_sizes(), reverse=True)
            expected[:len(sizes)] += weight * np.asarray(sizes) / self.n
        return expected

    def plain_str(self) -> str:
        return '\n'.join(f'{state.plain_str()} {weight:.12g}' for state, weight in zip(self.states, self.weights))

    def to_dict(self):
        return {'n': self.n, 'truncation_error': self.truncation_error,
                'weights': {state.plain_str(): float(weight) for state, weight in zip(self.states, self.weights)}}


def total_variation(p: DistributionOnPn, q: DistributionOnPn) -> float:
    if p.n != q.n:
        raise PartitionError(f'Cannot compare distributions on P_{p.n} and P_{q.n}.')
    return 0.5 * float(np.abs(p.weights - q.weights).sum())


def communicating_classes(G: Generator) -> List[np.ndarray]:
    """Strongly connected components of the rate graph, each sorted by state index."""
    adjacency = (G.matrix - sp.diags(G.matrix.diagonal())).tocsr()
    adjacency.eliminate_zeros()
    num_classes, labels = csgraph.connected_components(adjacency, directed=True, connection='strong')
    return [np.flatnonzero(labels == label) for label in range(num_classes)]


def closed_classes(G: Generator) -> List[np.ndarray]:
    """The communicating classes that no positive rate leaves."""
    classes = communicating_classes(G)
    labels = np.empty(G.num_states, dtype=np.int64)
    for label, members in enumerate(classes):
        labels[members] = label

    coo = G.matrix.tocoo()
    leaving = (coo.data > 0) & (labels[coo.row] != labels[coo.col])
    open_labels = set(labels[coo.row[leaving]].tolist())
    closed = [members for label, members in enumerate(classes) if label not in open_labels]
    equilibrium_logger.info(CLOSED_CLASSES_FOUND.format(len(classes), len(closed)))
    return closed


def _power_iteration(sub: sp.csr_matrix) -> np.ndarray:
    rate = float(np.max(-sub.diagonal()))
    kernel = (sp.identity(sub.shape[0], format='csr') + sub / rate).T.tocsr()
    rho = np.full(sub.shape[0], 1.0 / sub.shape[0])
    for _ in range(POWER_ITERATION_MAX_STEPS):
        updated = kernel @ rho
        if np.abs(updated - rho).max() < RESIDUAL_TOLERANCE * 1e-2:
            return updated
        rho = updated
    raise NumericalFailure(f'Power iteration did not converge in {POWER_ITERATION_MAX_STEPS} steps.')


@timer_decorator
def stationary_distribution(G: Generator) -> DistributionOnPn:
    """
    The stationary law of the chain, supported on its unique closed communicating class.

    :param G: The generator.
    :return: The stationary distribution.
    :raise MultipleClosedClasses: When the rate graph has more than one closed class.
    :raise NumericalFailure: When the residual exceeds the tolerance.
    """
    closed = closed_classes(G)
    if len(closed) > 1:
        raise MultipleClosedClasses(f'The chain on P_{G.n} has {len(closed)} closed classes.',
                                    classes=[[G.states[i].plain_str() for i in members] for members in closed])
    members = closed[0]
    weights = np.zeros(G.num_states)

    if len(members) == 1:
        equilibrium_logger.info(STATIONARY_DIRAC.format(G.states[members[0]].plain_str()))
        weights[members[0]] = 1.0
        return DistributionOnPn(G.n, weights)

    sub = G.matrix[members][:, members].tocsr()
    if len(members) <= MAX_DIRECT_SOLVE_STATES:
        equilibrium_logger.info(STATIONARY_SOLVE.format(len(members)))
        system = sub.T.tolil()
        system[len(members) - 1, :] = np.ones(len(members))
        rhs = np.zeros(len(members))
        rhs[-1] = 1.0
        solution = spsolve(system.tocsc(), rhs)
    else:
        equilibrium_logger.warning(STATIONARY_ITERATIVE.format(len(members)))
        solution = _power_iteration(sub)

    if not np.all(np.isfinite(solution)) or solution.min() < -DISTRIBUTION_TOLERANCE:
        raise NumericalFailure(f'The stationary solve on P_{G.n} returned an invalid vector.')
    solution = np.clip(solution, 0.0, None)
    solution /= solution.sum()
    weights[members] = solution

    residual = float(np.abs(G.matrix.T @ weights).max())
    scale = max(1.0, float(G.exit_rates().max()))
    equilibrium_logger.info(STATIONARY_RESIDUAL.format(residual))
    if residual > RESIDUAL_TOLERANCE * scale:
        raise NumericalFailure(f'Stationary residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE * scale:.3e}.')
    return DistributionOnPn(G.n, weights)


def projection(rho: DistributionOnPn, m: int) -> DistributionOnPn:
    """
    Push the distribution forward under the restriction to [m].
    """
    if not 1 <= m <= rho.n:
        raise PartitionError(f'Cannot project a distribution on P_{rho.n} to P_{m}.')
    targets = enumerate_partitions(m)
    index = {state: i for i, state in enumerate(targets)}
    weights = np.zeros(len(targets))
    for state, weight in zip(rho.states, rho.weights):
        weights[index[restrict(state, m)]] += weight
    return DistributionOnPn(m, weights, rho.truncation_error)


@timer_decorator
def transient_distribution(G: Generator, init: DistributionOnPn, t: float,
                           tolerance: float = UNIFORMIZATION_TOLERANCE) -> DistributionOnPn:
    """
    The law at time t, init exp(tG), by uniformization.

    :param G: The generator.
    :param init: The initial law.
    :param t: The time, t >= 0.
    :param tolerance: Bound on the Poisson mass dropped by the truncation.
    :return: The law at time t; its truncation_error holds the dropped mass.
    """
    if t < 0:
        raise NumericalFailure(f'Time must be nonnegative, got {t}.')
    rate = float(G.exit_rates().max())
    if t == 0 or rate == 0:
        return DistributionOnPn(G.n, init.weights.copy())

    mean = rate * t
    terms = int(poisson.isf(tolerance, mean)) + 1
    truncation_error = float(poisson.sf(terms - 1, mean))
    probabilities = poisson.pmf(np.arange(terms), mean)
    kernel = (sp.identity(G.num_states, format='csr') + G.matrix / rate).T.tocsr()

    vector = init.weights.copy()
    result = np.zeros(G.num_states)
    for probability in probabilities:
        result += probability * vector
        vector = kernel @ vector
    equilibrium_logger.info(UNIFORMIZATION_RUN.format(rate, t, terms, truncation_error))

    result = np.clip(result, 0.0, None)
    return DistributionOnPn(G.n, result / result.sum(), truncation_error)


def convergence_time(G: Generator, init: DistributionOnPn, target: float = 1e-6, rho: DistributionOnPn = None,
                     start: float = 1.0, relative_precision: float = 1e-3):
    """
    Smallest time (up to `relative_precision`) at which the total variation distance to the stationary law falls
    below `target`, found by doubling then bisection.

    :return: The pair (t, distance at t).
    """
    rho = rho if rho is not None else stationary_distribution(G)

    def distance(t):
        return total_variation(transient_distribution(G, init, t), rho)

    if distance(0.0) <= target:
        return 0.0, distance(0.0)
    low, high = 0.0, start
    for _ in range(64):
        if distance(high) <= target:
            break
        low, high = high, 2 * high
    else:
        raise NumericalFailure(f'Total variation did not reach {target} before t = {high}.')

    while high - low > relative_precision * high:
        middle = (low + high) / 2
        if distance(middle) <= target:
            high = middle
        else:
            low = middle
    reached = distance(high)
    equilibrium_logger.info(CONVERGENCE_TIME.format(reached, high))
    return high, reached


def integer_partitions(n: int, parts: int):
    """Nonincreasing tuples of `parts` positive integers summing to n."""
    def generate(remaining, count, largest):
        if count == 0:
            if remaining == 0:
                yield ()
            return
        for first in range(min(largest, remaining - count + 1), 0, -1):
            for rest in generate(remaining - first, count - 1, first):
                yield (first,) + rest

    return list(generate(n, parts, n))


def min_fragmentation_rate(chars: Characteristics, n: int, blocks: int):
    """
    Minimum over block profiles of [n] with `blocks` blocks of the total fragmentation rate sum phi(|B| - 1).
    """
    return min(sum(phi(chars, size - 1) for size in profile if size > 1)
               for profile in integer_partitions(n, blocks))


def tail_series(z: float, start: int) -> float:
    """sum_{i >= start} z^i / (2 i!), through the regularized lower incomplete gamma function."""
    if z == 0:
        return 0.0 if start > 0 else 0.5
    return 0.5 * math.exp(z) * float(gammainc(start, z)) if start > 0 else 0.5 * math.exp(z)


class EquilibriumReport(SerializableEfcElement):
    """
    Exact stationary law of the chain on [n] and the diagnostics read from it. Statements about the unrestricted
    process are reported as trends consistent with them, never as facts.

    Attributes:
        n: The ground-set size.
        rho: The stationary distribution.
        classes: Summary of the communicating classes.
        block_counts: Array whose entry K - 1 is a_K, the stationary mass of K blocks.
        dust_proxy: Stationary mass of I_n, the partitions where 1 is a singleton.
        bounds: Records (K, a_K, tau_K, min_rate, bound, holds) for K <= K_max.
        binary: Record of the inequality a_K K p >= a_{K+1} c_k K (K + 1) / 2 and its tail series, or None.
        dust: Records (b, rho(I_n), rho(I_n and more than b blocks), q_2, f(b), bound, holds) for b' <= b.
        flags: Regime flags.
    """

    __slots__ = ('n', 'rho', 'classes', 'block_counts', 'dust_proxy', 'bounds', 'binary', 'dust', 'flags')

    def __init__(self, n, rho, classes, block_counts, dust_proxy, bounds, binary, dust, flags):
        self.n = n
        self.rho = rho
        self.classes = classes
        self.block_counts = block_counts
        self.dust_proxy = dust_proxy
        self.bounds = bounds
        self.binary = binary
        self.dust = dust
        self.flags = flags

    @property
    def all_hold(self) -> bool:
        checks = [record['holds'] for record in self.bounds] + [record['holds'] for record in self.dust]
        if self.binary is not None:
            checks += [record['holds'] for record in self.binary['inequality']]
            checks += [record['holds'] for record in self.binary['tail']]
        return all(checks)

    def plain_str(self) -> str:
        lines = [f'n = {self.n}', f'closed classes: {self.classes["closed"]} of {self.classes["total"]}',
                 f'rho(I_n) = {self.dust_proxy:.10g}', '', f'{"K":>3} {"a_K":>14} {"bound":>14} holds']
        for record in self.bounds:
            lines.append(f'{record["K"]:>3} {record["a_K"]:>14.8g} {record["bound"]:>14.8g} {record["holds"]}')
        lines += ['', f'{"b":>3} {"rho(I_n,D_b)":>14} {"q_2/f(b)":>14} holds']
        for record in self.dust:
            lines.append(f'{record["b"]:>3} {record["rho_I_D"]:>14.8g} {record["bound"]:>14.8g} {record["holds"]}')
        if self.binary is not None:
            lines += ['', f'{"K":>3} {"a_K K p":>14} {"a_K+1 c_k K(K+1)/2":>20} holds']
            for record in self.binary['inequality']:
                lines.append(f'{record["K"]:>3} {record["lhs"]:>14.8g} {record["rhs"]:>20.8g} {record["holds"]}')
        lines += [''] + [f'{name}: {value}' for name, value in self.flags.items()]
        lines.append('consistent with the unrestricted statements' if self.all_hold else 'bound check failed')
        return '\n'.join(lines)

    def to_dict(self):
        return {'n': self.n, 'classes': self.classes, 'block_counts': [float(a) for a in self.block_counts],
                'dust_proxy': self.dust_proxy, 'bounds': self.bounds, 'binary': self.binary, 'dust': self.dust,
                'flags': self.flags, 'all_hold': self.all_hold}


def _in_dust_proxy(pi: Partition) -> bool:
    return pi.block_of(1) == (1,)


@timer_decorator
def theorem_diagnostics(chars: Characteristics, n: int, k_max: int, b: int, engine: RateEngine = None,
                        generator: Generator = None, tolerance: float = 1e-12) -> EquilibriumReport:
    """
    Solve the chain on [n] and evaluate the equilibrium bounds.

    :param chars: The characteristics.
    :param n: The ground-set size.
    :param k_max: Largest block count K for the a_K bounds, 1 <= K_max < n (0 when n = 1).
    :param b: Largest block threshold for the dust bound, 1 <= b < n (0 when n = 1).
    :param engine: A rate engine to reuse.
    :param generator: A prebuilt generator on [n].
    :param tolerance: Slack allowed in every inequality.
    :return: The report.
    """
    low = min(1, n - 1)
    if not low <= k_max < n:
        raise PartitionError(f'K_max must satisfy 1 <= K_max < n, got K_max={k_max}, n={n}.')
    if not low <= b < n:
        raise PartitionError(f'b must satisfy 1 <= b < n, got b={b}, n={n}.')
    engine = engine if engine is not None else RateEngine(chars)
    G = generator if generator is not None else build_generator(chars, n, engine=engine)
    rho = stationary_distribution(G)
    classes = {'total': len(communicating_classes(G)), 'closed': len(closed_classes(G))}
    a = rho.block_count_marginal()

    bounds = []
    for k in range(1, k_max + 1):
        tau = float(engine.total_coagulation_rate(k + 1))
        min_rate = float(min_fragmentation_rate(chars, n, k))
        bound = tau / min_rate if min_rate > 0 else math.inf
        bounds.append({'K': k, 'a_K': float(a[k - 1]), 'tau_K': tau, 'min_rate': min_rate, 'bound': bound,
                       'holds': bool(a[k - 1] <= bound + tolerance)})

    binary = None
    if chars.is_binary_fragmentation() and chars.c_k > 0:
        p = float(chars.nu_disl.total_mass)
        c_k = float(chars.c_k)
        z = 2 * p / c_k
        inequality, tail = [], []
        for k in range(1, n):
            lhs = a[k - 1] * k * p
            rhs = a[k] * c_k * k * (k + 1) / 2
            inequality.append({'K': k, 'lhs': float(lhs), 'rhs': float(rhs), 'holds': bool(lhs >= rhs - tolerance)})
            remainder = float(a[k:].sum())
            series = tail_series(z, k)
            tail.append({'K': k, 'tail': remainder, 'series': series, 'holds': bool(remainder <= series + tolerance)})
        lower = 2 / (1 + math.exp(z))
        binary = {'p': p, 'z': z, 'inequality': inequality, 'tail': tail, 'a_1_lower_bound': lower,
                  'a_1_holds': bool(a[0] >= lower - tolerance)}

    in_proxy = np.array([_in_dust_proxy(state) for state in G.states])
    dust_proxy = float(rho.weights[in_proxy].sum())
    q_2 = float(engine.frag_rate(Partition.zero(2)))
    exit_rates = _exit_rates_from(G, in_proxy)
    dust = []
    for threshold in range(1, b + 1):
        above = np.array([state.num_blocks > threshold for state in G.states]) & in_proxy
        f_b = float(exit_rates[above].min()) if above.any() else math.inf
        rho_i_d = float(rho.weights[above].sum())
        rho_i_a = dust_proxy - rho_i_d
        bound = q_2 / f_b if f_b > 0 else math.inf
        dust.append({'b': threshold, 'rho_I': dust_proxy, 'rho_I_D': rho_i_d, 'rho_I_A': rho_i_a, 'q_2': q_2,
                     'f_b': f_b, 'zeta_b': float(zeta(chars, threshold)), 'kingman_exit': float(chars.c_k) * threshold,
                     'bound': bound, 'holds': bool(rho_i_d <= bound + tolerance)})

    flags = {'fragmentates_quickly': chars.fragmentates_quickly(), 'coalesces_quickly': chars.coalesces_quickly()}
    return EquilibriumReport(n, rho, classes, a, dust_proxy, bounds, binary, dust, flags)


def _exit_rates_from(G: Generator, members: np.ndarray) -> np.ndarray:
    """Rate from each state to the complement of `members` (zero outside `members`)."""
    outside = sp.diags((~members).astype(np.float64))
    off_diagonal = G.matrix - sp.diags(G.matrix.diagonal())
    rates = np.asarray((off_diagonal @ outside).sum(axis=1)).ravel()
    return np.where(members, rates, 0.0)
