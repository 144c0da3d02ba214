"""
Scalar chains attached to the EFC process: the dust chain of the restriction to [n], its limiting dust flow with
multiplicative jumps, and the logistic branching chain followed by the block count under hypothesis (H).
"""
import math
from collections import namedtuple
from math import comb
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from pyefc.config import DEFAULT_N_BIG
from pyefc.logging_utility.logger import simulator_logger
from pyefc.logging_utility.logging_messages import PATH_ABSORBED, PATH_DONE, PATH_START
from pyefc.misc.exceptions import MeasureError, NumericalFailure
from pyefc.process.simulator import exponential_increment, make_rng, pick
from pyefc.schema.measure import Characteristics
from pyefc.util.trajectory import Trajectory, TrajectoryBuilder


def _check_nu_tilde(nu_tilde) -> Tuple[Tuple[float, float], ...]:
    atoms = []
    for weight, theta in nu_tilde:
        if not weight > 0:
            raise MeasureError(f'Atoms of the dust measure need a positive weight, got {weight}.')
        if not 0 <= theta <= 1:
            raise MeasureError(f'Atoms of the dust measure lie in [0, 1], got {theta}.')
        atoms.append((weight, theta))
    return tuple(atoms)


class DustChainParams(namedtuple('DustChainParams', ['n', 'c_e', 'nu_tilde'])):
    """
    Parameters of the dust chain on {0, 1/n, ..., 1}.

    :param n: The ground-set size.
    :param c_e: The erosion coefficient.
    :param nu_tilde: (weight, theta) atoms; theta is the dust mass 1 - sum(x) of a coagulation atom x.
    """

    # noinspection PyArgumentList
    def __new__(cls, n: int, c_e, nu_tilde: Sequence[Tuple] = ()):
        if n < 1:
            raise MeasureError(f'The dust chain needs n >= 1, got {n}.')
        if c_e < 0:
            raise MeasureError(f'c_e must be nonnegative, got {c_e}.')
        return super().__new__(cls, n, c_e, _check_nu_tilde(nu_tilde))

    @classmethod
    def from_characteristics(cls, chars: Characteristics, n: int) -> 'DustChainParams':
        """
        The dust chain of the restriction to [n]. It is autonomous when c_k = 0 and dislocations are conservative.
        Coagulation atoms without colours (theta = 1) never touch the dust and are left out.
        """
        if not chars.satisfies_hypothesis_h_prime():
            raise MeasureError('The dust chain needs c_k = 0 and conservative dislocations.')
        nu_tilde = [(weight, x.dust) for weight, x in chars.nu_coag if not x.is_zero]
        return cls(n, chars.c_e, nu_tilde)

    @property
    def total_mass(self):
        return sum(weight for weight, _ in self.nu_tilde)


def dust_chain_rates(params: DustChainParams, k: int) -> Dict[int, object]:
    """
    Rates out of the state k/n, keyed by the target count: k + 1 at rate c_e (n - k), and every r < k at rate
    C(k, r) times the integral of theta^r (1 - theta)^(k - r) against nu_tilde.
    """
    if not 0 <= k <= params.n:
        raise MeasureError(f'The dust count lies in [0, {params.n}], got {k}.')
    rates = {}
    if k < params.n and params.c_e > 0:
        rates[k + 1] = params.c_e * (params.n - k)
    for r in range(k):
        rate = comb(k, r) * sum(weight * theta ** r * (1 - theta) ** (k - r) for weight, theta in params.nu_tilde)
        if rate != 0:
            rates[r] = rate
    return rates


def dust_chain_generator(params: DustChainParams) -> np.ndarray:
    """Dense (n + 1) x (n + 1) generator of the dust count."""
    size = params.n + 1
    matrix = np.zeros((size, size))
    for k in range(size):
        for target, rate in dust_chain_rates(params, k).items():
            matrix[k, target] = float(rate)
        matrix[k, k] = -matrix[k].sum()
    return matrix


def dust_chain_law(params: DustChainParams, k0: int, t: float) -> np.ndarray:
    """Law of the dust count at time t started from k0, by matrix exponential."""
    initial = np.zeros(params.n + 1)
    initial[k0] = 1.0
    law = initial @ scipy.linalg.expm(dust_chain_generator(params) * t)
    law = np.clip(law, 0.0, None)
    return law / law.sum()


def dust_mean(c_e, nu_tilde: Sequence[Tuple], d0: float, t: float) -> float:
    """
    Mean dust fraction at time t. The mean solves m' = c_e (1 - m) - m * integral (1 - theta) nu_tilde, both for
    the dust chain (divided by n) and for the limiting flow.
    """
    gain = float(c_e)
    loss = gain + sum(float(weight) * (1 - float(theta)) for weight, theta in nu_tilde)
    if loss == 0:
        return float(d0)
    limit = gain / loss
    return limit + (float(d0) - limit) * math.exp(-loss * t)


def simulate_dust_chain(params: DustChainParams, k0: int, horizon: float, seed) -> Trajectory:
    """
    Simulate the dust count on [0, horizon].

    :param params: The chain parameters.
    :param k0: The initial number of dust elements.
    :param horizon: The final time.
    :param seed: An integer or a (master_seed, path_index) pair.
    :return: A trajectory with observables `count` and `dust` (= count / n).
    """
    if not 0 <= k0 <= params.n:
        raise MeasureError(f'The initial dust count lies in [0, {params.n}], got {k0}.')
    simulator_logger.info(PATH_START.format('dust-chain', params.n, horizon, seed))
    rng = make_rng(seed)
    builder = TrajectoryBuilder(('count', 'dust'), record_states=False)
    k, t = k0, 0.0
    builder.append(t, None, ('init', str(k)), count=k, dust=k / params.n)
    absorbed = False
    end_time = horizon
    while True:
        rates = dust_chain_rates(params, k)
        if not rates:
            absorbed = True
            simulator_logger.info(PATH_ABSORBED.format(k, len(builder._times) - 1))
            break
        targets = list(rates.keys())
        weights = [float(rate) for rate in rates.values()]
        dt = exponential_increment(rng, sum(weights), t)
        if t + dt >= horizon:
            break
        t += dt
        target = targets[pick(rng, weights)]
        kind = 'erosion' if target > k else 'coagulation'
        k = target
        builder.append(t, None, (kind, str(k)), count=k, dust=k / params.n)
    simulator_logger.info(PATH_DONE.format(len(builder._times), end_time))
    return builder.build(horizon=horizon, end_time=end_time, seed=seed, mode='dust-chain', n=params.n,
                         absorbed=absorbed)


def _minus_log(d: float) -> float:
    return math.inf if d == 0 else -math.log(d)


def simulate_dust_sde(c_e, nu_tilde: Sequence[Tuple], d0: float, horizon: float, seed) -> Trajectory:
    """
    Exact event-driven simulation of the limiting dust fraction D: between jumps D follows dD/dt = c_e (1 - D), that
    is D(t) = 1 - (1 - D(s)) exp(-c_e (t - s)); at the times of a Poisson clock with rate the mass of nu_tilde an atom
    theta is drawn and D becomes D * theta. The values recorded at event times are the post-jump values; use
    `dust_sde_value` in between.

    :return: A trajectory with observables `dust` and `xi` (= -log D).
    """
    if not 0 <= d0 <= 1:
        raise MeasureError(f'The initial dust fraction lies in [0, 1], got {d0}.')
    if c_e < 0:
        raise MeasureError(f'c_e must be nonnegative, got {c_e}.')
    atoms = _check_nu_tilde(nu_tilde)
    simulator_logger.info(PATH_START.format('dust-sde', '-', horizon, seed))
    rng = make_rng(seed)
    weights = [float(weight) for weight, _ in atoms]
    total = sum(weights)
    c_e = float(c_e)

    builder = TrajectoryBuilder(('dust', 'xi'), record_states=False)
    d, t = float(d0), 0.0
    builder.append(t, None, ('init', repr(d)), dust=d, xi=_minus_log(d))
    while total > 0:
        dt = exponential_increment(rng, total, t)
        if t + dt >= horizon:
            break
        d = 1 - (1 - d) * math.exp(-c_e * dt)
        t += dt
        theta = float(atoms[pick(rng, weights)][1])
        d *= theta
        builder.append(t, None, ('jump', repr(theta)), dust=d, xi=_minus_log(d))
    simulator_logger.info(PATH_DONE.format(len(builder._times), horizon))
    return builder.build(horizon=horizon, seed=seed, mode='dust-sde', c_e=c_e, absorbed=total == 0 and c_e == 0)


def dust_sde_value(trajectory: Trajectory, t: Union[float, Sequence[float]]):
    """D(t) on a dust flow trajectory, following the flow from the last event before t."""
    c_e = trajectory.meta['c_e']
    grid = np.atleast_1d(np.asarray(t, dtype=np.float64))
    indices = np.searchsorted(trajectory.times, grid, side='right') - 1
    start = trajectory.observables['dust'][indices]
    values = 1 - (1 - start) * np.exp(-c_e * (grid - trajectory.times[indices]))
    return float(values[0]) if np.ndim(t) == 0 else values


class LogisticParams(namedtuple('LogisticParams', ['p', 'c_k'])):
    """
    Parameters of the logistic branching chain.

    :param p: Mapping j -> p_j > 0; a state i jumps to i + j at rate i p_j.
    :param c_k: The Kingman coefficient; a state i > 1 jumps to i - 1 at rate c_k i (i - 1) / 2.
    """

    # noinspection PyArgumentList
    def __new__(cls, p: Dict[int, object], c_k):
        p = {int(j): weight for j, weight in dict(p).items()}
        for j, weight in p.items():
            if j < 1 or not weight > 0:
                raise MeasureError(f'The logistic chain needs p_j > 0 for j >= 1, got p_{j} = {weight}.')
        if not c_k > 0:
            raise MeasureError(f'The logistic chain needs c_k > 0, got {c_k}.')
        return super().__new__(cls, dict(sorted(p.items())), c_k)

    @classmethod
    def from_characteristics(cls, chars: Characteristics) -> 'LogisticParams':
        """p_j is the dislocation mass of the conservative atoms with j + 1 parts."""
        if not chars.satisfies_hypothesis_h():
            raise MeasureError('The logistic chain needs c_e = 0, c_k > 0, no coagulation measure and '
                               'conservative dislocations.')
        p = {}
        for weight, x in chars.nu_disl:
            j = x.num_parts - 1
            if j >= 1:
                p[j] = p.get(j, 0) + weight
        return cls(p, chars.c_k)

    def log_moment(self) -> float:
        """sum_j p_j log(j), finite for a finite support."""
        return sum(float(weight) * math.log(j) for j, weight in self.p.items())


def logistic_rates(params: LogisticParams, i: int) -> Dict[int, object]:
    """Rates out of state i, keyed by the target state."""
    if i < 1:
        raise MeasureError(f'The logistic chain lives on i >= 1, got {i}.')
    rates = {i + j: i * weight for j, weight in params.p.items()}
    if i > 1:
        rates[i - 1] = params.c_k * i * (i - 1) / 2
    return rates


def simulate_logistic_chain(params: LogisticParams, init: Union[int, str], horizon: float, seed,
                            n_big: int = DEFAULT_N_BIG, stop_at_tau: bool = False) -> Trajectory:
    """
    Simulate the logistic branching chain.

    :param params: The chain parameters.
    :param init: The initial state, or 'large' to start from n_big as a finite stand-in for infinity.
    :param horizon: The final time.
    :param seed: An integer or a (master_seed, path_index) pair.
    :param n_big: The starting state for init='large'.
    :param stop_at_tau: End the path at the first hitting time of 1.
    :return: A trajectory with observable `state`; meta `tau` is the first hitting time of 1 or None.
    """
    if init == 'large':
        init = n_big
    if not isinstance(init, (int, np.integer)) or init < 1:
        raise NumericalFailure(f"The logistic chain starts at an integer >= 1 or 'large', got {init!r}.")
    simulator_logger.info(PATH_START.format('logistic', init, horizon, seed))
    rng = make_rng(seed)
    builder = TrajectoryBuilder(('state',), record_states=False)
    i, t = int(init), 0.0
    tau = 0.0 if i == 1 else None
    builder.append(t, None, ('init', str(i)), state=i)
    end_time = horizon
    absorbed = False
    while not (stop_at_tau and tau is not None):
        rates = logistic_rates(params, i)
        if not rates:
            absorbed = True
            break
        targets = list(rates.keys())
        weights = [float(rate) for rate in rates.values()]
        dt = exponential_increment(rng, sum(weights), t)
        if t + dt >= horizon:
            break
        t += dt
        target = targets[pick(rng, weights)]
        kind = 'branching' if target > i else 'merge'
        i = target
        builder.append(t, None, (kind, str(i)), state=i)
        if i == 1 and tau is None:
            tau = t
    if stop_at_tau and tau is not None:
        end_time = tau
    simulator_logger.info(PATH_DONE.format(len(builder._times), end_time))
    return builder.build(horizon=horizon, end_time=end_time, seed=seed, mode='logistic', tau=tau,
                         n_big=n_big, absorbed=absorbed)
