"""
Scalar functionals of the characteristics: restriction masses of the erosion and Kingman measures, validation of
the characteristics, the fragmentation exponent phi, the coalescence functional zeta, the collision rates lambda_b
and gamma_b and the comes-down-from-infinity diagnostic.
"""
import math
from numbers import Real
from typing import List

import numpy as np

from pyefc.config import DEFAULT_EXACT_THRESHOLD, DEFAULT_MC_SAMPLES, MAX_ENUMERATION_N, PLATEAU_TOLERANCE
from pyefc.logging_utility.logger import rates_logger
from pyefc.logging_utility.logging_messages import MC_FALLBACK, PLATEAU_VERDICT
from pyefc.misc.exceptions import MeasureError, PartitionError
from pyefc.process.paintbox import (block_counts, paintbox_block_count_distribution, paintbox_colours,
                                    paintbox_restriction_prob)
from pyefc.schema.measure import Characteristics
from pyefc.schema.partition import Partition, enumerate_partitions
from pyefc.schema.schema import SerializableEfcElement


def erosion_restriction_mass(pi_prime: Partition) -> int:
    """
    Number of erosion atoms (partitions isolating a single integer) whose restriction to [l] equals pi_prime.

    :param pi_prime: A partition of [l] other than the one-block partition.
    :return: 2 for the pair split, the number of singletons when pi_prime has two blocks, 0 otherwise.
    """
    if pi_prime.is_one:
        raise PartitionError(f'The one-block partition of [{pi_prime.n}] is neutral for fragmentation.')
    if pi_prime.n == 2:
        return 2
    if pi_prime.num_blocks != 2:
        return 0
    return len(pi_prime.singletons())


def kingman_restriction_mass(pi_prime: Partition) -> int:
    """
    Number of Kingman atoms (partitions merging one pair) whose restriction to [m] equals pi_prime.

    :param pi_prime: A partition of [m] other than the partition into singletons.
    :return: 1 when pi_prime has exactly one pair and singletons otherwise, else 0.
    """
    if pi_prime.is_zero:
        raise PartitionError(f'The partition of [{pi_prime.n}] into singletons is neutral for coagulation.')
    return int(pi_prime.num_blocks == pi_prime.n - 1)


class ValidationReport(SerializableEfcElement):
    """
    Outcome of `validate_characteristics`.

    Attributes:
        violations: Broken requirements; empty for valid characteristics.
        flags: Informational remarks (degenerate dynamics, regimes that are not representable).
        scalars: Derived integrals and masses.
    """

    __slots__ = ('violations', 'flags', 'scalars')

    def __init__(self, violations: List[str], flags: List[str], scalars: dict):
        self.violations = violations
        self.flags = flags
        self.scalars = scalars

    @property
    def is_valid(self) -> bool:
        return len(self.violations) == 0

    def plain_str(self) -> str:
        lines = ['valid' if self.is_valid else 'invalid']
        lines += [f'violation: {violation}' for violation in self.violations]
        lines += [f'flag: {flag}' for flag in self.flags]
        width = max((len(name) for name in self.scalars), default=0)
        lines += [f'{name.ljust(width)}  {value}' for name, value in self.scalars.items()]
        return '\n'.join(lines)

    def to_dict(self):
        return {'valid': self.is_valid, 'violations': list(self.violations), 'flags': list(self.flags),
                'scalars': {name: float(value) for name, value in self.scalars.items()}}


def validate_characteristics(chars: Characteristics) -> ValidationReport:
    """
    Check the characteristics and report derived integrals. Never raises for domain conditions.

    :param chars: The characteristics.
    :return: The validation report.
    """
    violations = []
    flags = []

    for name, value in (('c_e', chars.c_e), ('c_k', chars.c_k)):
        if not isinstance(value, Real) or isinstance(value, bool):
            violations.append(f'{name} must be a real number, got {value!r}')
        elif value < 0:
            violations.append(f'{name} must be nonnegative, got {value}')

    for weight, vector in chars.nu_disl:
        if vector.is_unit:
            violations.append(f'nu_disl has an atom at (1,0,...) with weight {weight}')
    for weight, vector in chars.nu_coag:
        if vector.is_zero:
            violations.append(f'nu_coag has an atom at (0,0,...) with weight {weight}')

    if not violations and not chars.has_fragmentation and not chars.has_coalescence:
        flags.append('degenerate: no dynamics')
    if chars.nu_disl.total_mass > 0 and chars.c_e == 0:
        flags.append('fragmentates slowly: a finite dislocation measure cannot split quickly without erosion')
    if not chars.nu_coag.is_empty and chars.c_k == 0:
        flags.append('coalesces slowly: the integral of sum(x_i) against a finite coagulation measure is finite')

    scalars = {
        'c_e': chars.c_e,
        'c_k': chars.c_k,
        'nu_disl_total_mass': chars.nu_disl.total_mass,
        'nu_coag_total_mass': chars.nu_coag.total_mass,
        'int_one_minus_sum_sq_nu_disl': chars.nu_disl.integrate(lambda x: 1 - x.power_sum(2)),
        'int_sum_sq_nu_coag': chars.nu_coag.integrate(lambda x: x.power_sum(2)),
        'int_sum_nu_coag': chars.nu_coag.integrate(lambda x: x.total),
        'nu_coag_proper_mass': chars.nu_coag.mass_of(lambda x: x.is_proper),
    }
    return ValidationReport(violations, flags, scalars)


def phi(chars: Characteristics, q):
    """
    The fragmentation exponent c_e (q + 1) + int (1 - sum x_i^(q + 1)) nu_disl(dx). phi(k - 1) is the rate at which a
    block of size k splits.
    """
    if q < 0:
        raise MeasureError(f'phi is defined for q >= 0, got {q}.')
    return chars.c_e * (q + 1) + chars.nu_disl.integrate(lambda x: 1 - x.power_sum(q + 1))


def zeta(chars: Characteristics, b: int):
    """
    int sum_i x_i (1 - (1 - x_i)^(b - 1)) nu_coag(dx), the rate of non-Kingman coalescence atoms taking 1 out of a
    singleton among b blocks.
    """
    if b < 1:
        raise MeasureError(f'zeta is defined for b >= 1, got {b}.')
    return chars.nu_coag.integrate(lambda x: sum(mass * (1 - (1 - mass) ** (b - 1)) for mass in x.masses))


class BlockRates(SerializableEfcElement):
    """
    Collision rates of the coalescent restricted to b blocks.

    Attributes:
        b: Number of blocks.
        lambda_b: Total collision rate.
        gamma_b: Rate of decrease of the number of blocks.
        zeta_b: The coalescence functional zeta(b).
        method: How the paintbox terms were obtained: 'enumeration', 'occupancy' or 'monte-carlo'.
        lambda_se: Standard error of lambda_b (0 unless estimated).
        gamma_se: Standard error of gamma_b (0 unless estimated).
    """

    __slots__ = ('b', 'lambda_b', 'gamma_b', 'zeta_b', 'method', 'lambda_se', 'gamma_se')

    def __init__(self, b, lambda_b, gamma_b, zeta_b, method, lambda_se=0.0, gamma_se=0.0):
        self.b = b
        self.lambda_b = lambda_b
        self.gamma_b = gamma_b
        self.zeta_b = zeta_b
        self.method = method
        self.lambda_se = lambda_se
        self.gamma_se = gamma_se

    def plain_str(self) -> str:
        return (f'b={self.b} lambda={float(self.lambda_b):.6g} gamma={float(self.gamma_b):.6g} '
                f'zeta={float(self.zeta_b):.6g} ({self.method})')

    def to_dict(self):
        return {'b': self.b, 'lambda_b': float(self.lambda_b), 'gamma_b': float(self.gamma_b),
                'zeta_b': float(self.zeta_b), 'method': self.method, 'lambda_se': float(self.lambda_se),
                'gamma_se': float(self.gamma_se)}


def coalescent_block_rates(chars: Characteristics, b: int, exact_threshold: int = DEFAULT_EXACT_THRESHOLD,
                           method: str = 'auto', samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> BlockRates:
    """
    The collision rates lambda_b, gamma_b and the functional zeta(b).

    :param chars: The characteristics.
    :param b: Number of blocks, at least 2.
    :param exact_threshold: Largest b summed exactly over the partitions of [b] when method is 'auto'.
    :param method: 'auto', 'enumeration', 'occupancy' (exact block-count law) or 'monte-carlo'.
    :param samples: Paintbox draws per atom for the Monte Carlo estimate.
    :param seed: Master seed; atom i uses the stream (seed, i).
    :return: The rates.
    """
    if b < 2:
        raise MeasureError(f'Collision rates need b >= 2, got {b}.')
    if method == 'auto':
        method = 'enumeration' if b <= min(exact_threshold, MAX_ENUMERATION_N) else 'monte-carlo'
    if method not in ('enumeration', 'occupancy', 'monte-carlo'):
        raise MeasureError(f'Unknown method {method!r}.')

    kingman = chars.c_k * (b * (b - 1) // 2)
    lambda_b, gamma_b = kingman, kingman
    lambda_var, gamma_var = 0.0, 0.0

    if not chars.nu_coag.is_empty:
        if method == 'enumeration':
            partitions = enumerate_partitions(b)
            for weight, vector in chars.nu_coag:
                probabilities = [paintbox_restriction_prob(vector, pi) for pi in partitions]
                lambda_b += weight * sum(p for pi, p in zip(partitions, probabilities) if not pi.is_zero)
                gamma_b += weight * sum((b - pi.num_blocks) * p for pi, p in zip(partitions, probabilities))
        elif method == 'occupancy':
            for weight, vector in chars.nu_coag:
                law = paintbox_block_count_distribution(vector, b)
                lambda_b += weight * sum(law[k] for k in range(1, b))
                gamma_b += weight * sum((b - k) * law[k] for k in range(1, b + 1))
        else:
            rates_logger.warning(MC_FALLBACK.format(b, exact_threshold, samples))
            for index, (weight, vector) in enumerate(chars.nu_coag):
                rng = np.random.default_rng([seed, index])
                counts = block_counts(paintbox_colours(vector, b, rng, size=samples), vector.num_parts)
                collided = (counts < b).astype(np.float64)
                decrease = (b - counts).astype(np.float64)
                w = float(weight)
                lambda_b += w * collided.mean()
                gamma_b += w * decrease.mean()
                lambda_var += w ** 2 * collided.var(ddof=1) / samples
                gamma_var += w ** 2 * decrease.var(ddof=1) / samples

    return BlockRates(b, lambda_b, gamma_b, zeta(chars, b), method, math.sqrt(lambda_var), math.sqrt(gamma_var))


VERDICT_MET = 'criterion met (partial sums plateau)'
VERDICT_NOT_MET = 'criterion not met at horizon B'
VERDICT_INAPPLICABLE = 'inapplicable (gamma_b = 0)'


class ComesDownReport(SerializableEfcElement):
    """
    Truncated comes-down-from-infinity diagnostic. The verdict is a heuristic reading of partial sums of an
    infinite series and is labelled as such.

    Attributes:
        horizon: The truncation B.
        rates: BlockRates for b = 2..B.
        partial_sums: Partial sums of 1/gamma_b for b = 2..B (empty when inapplicable).
        nu_coag_proper_mass: Mass of the coagulation measure on vectors of total mass one.
        verdict: One of the three verdict strings.
    """

    __slots__ = ('horizon', 'rates', 'partial_sums', 'nu_coag_proper_mass', 'verdict')

    def __init__(self, horizon, rates, partial_sums, nu_coag_proper_mass, verdict):
        self.horizon = horizon
        self.rates = rates
        self.partial_sums = partial_sums
        self.nu_coag_proper_mass = nu_coag_proper_mass
        self.verdict = verdict

    @property
    def total(self):
        return self.partial_sums[-1] if self.partial_sums else math.inf

    def plain_str(self) -> str:
        return f'B={self.horizon}: {self.verdict} (heuristic truncation), partial sum {self.total:.6g}'

    def to_dict(self):
        return {'horizon': self.horizon, 'verdict': self.verdict, 'heuristic': True,
                'nu_coag_proper_mass': float(self.nu_coag_proper_mass),
                'partial_sum': float(self.total),
                'rates': [rate.to_dict() for rate in self.rates]}


def comes_down_diagnostic(chars: Characteristics, horizon: int, exact_threshold: int = DEFAULT_EXACT_THRESHOLD,
                          method: str = 'auto', samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) \
        -> ComesDownReport:
    """
    Partial sums of 1/gamma_b up to b = horizon with a plateau verdict: the criterion is read as met when the last
    half of the horizon adds at most `PLATEAU_TOLERANCE` of the total.

    :param chars: The characteristics.
    :param horizon: The truncation B >= 2.
    :return: The report.
    """
    if horizon < 2:
        raise MeasureError(f'The horizon must be at least 2, got {horizon}.')

    rates = [coalescent_block_rates(chars, b, exact_threshold, method, samples, seed) for b in range(2, horizon + 1)]
    proper_mass = chars.nu_coag.mass_of(lambda x: x.is_proper)

    if any(rate.gamma_b == 0 for rate in rates):
        verdict = VERDICT_INAPPLICABLE
        partial_sums = []
    else:
        partial_sums = list(np.cumsum([1 / float(rate.gamma_b) for rate in rates]))
        half = math.ceil(horizon / 2)
        at_half = partial_sums[half - 2] if half >= 2 else 0.0
        tail = partial_sums[-1] - at_half
        verdict = VERDICT_MET if tail <= PLATEAU_TOLERANCE * partial_sums[-1] else VERDICT_NOT_MET

    rates_logger.info(PLATEAU_VERDICT.format(horizon, verdict))
    return ComesDownReport(horizon, rates, partial_sums, proper_mass, verdict)


def block_split_rate(chars: Characteristics, m: int, parts: int):
    """
    Rate at which a block of size m splits into exactly `parts` blocks.

    :param chars: The characteristics.
    :param m: The block size.
    :param parts: The number of resulting blocks, at least 2.
    :return: The rate.
    """
    if parts < 2:
        raise MeasureError(f'A split produces at least two blocks, got {parts}.')
    if parts > m:
        return 0
    rate = chars.c_e * m if parts == 2 else 0
    for weight, vector in chars.nu_disl:
        rate += weight * paintbox_block_count_distribution(vector, m)[parts]
    return rate
