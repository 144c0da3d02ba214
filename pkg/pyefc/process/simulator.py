"""
Path simulation of the chain restricted to [n].

Two modes are available. The 'gillespie' mode draws holding times and jumps from the rows of the rate engine, so it
needs the partitions of the block counts to be enumerable. The 'ppp' mode follows the Poisson construction of the
process: coalescence atoms act on the blocks, fragmentation atoms act on one block, and only the atoms that change
either the partition of [n] or the set of elements that are dust in the unrestricted process are drawn. It runs at any
n and keeps track of that dust set, which stays empty when a Kingman component is present.
"""
import math
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
import xarray as xr

from pyefc.config import DEFAULT_STATE_RECORD_THRESHOLD, MAX_ENUMERATION_N
from pyefc.logging_utility.logger import simulator_logger
from pyefc.logging_utility.logging_messages import (ENSEMBLE_START, PATH_ABSORBED, PATH_DONE, PATH_START,
                                                    TIME_TIE_REDRAW)
from pyefc.misc.exceptions import NumericalFailure, PartitionError, StateSpaceTooLarge
from pyefc.process.paintbox import paintbox_all_distinct_prob, paintbox_colours
from pyefc.process.rates import RateEngine
from pyefc.schema.measure import Characteristics
from pyefc.schema.partition import Partition, PartitionIndex
from pyefc.util.converter import TrajectoryConverter
from pyefc.util.trajectory import Trajectory, TrajectoryBuilder, TrajectoryOps

MODES = ('gillespie', 'ppp')
PATH_OBSERVABLES = ('blocks', 'singletons', 'dust')


def make_rng(seed) -> np.random.Generator:
    """A generator for an explicit seed: an integer or a (master_seed, stream_index) sequence."""
    if seed is None:
        raise NumericalFailure('Seeds are explicit; got None.')
    return np.random.default_rng(seed)


def exponential_increment(rng: np.random.Generator, rate: float, t: float) -> float:
    """
    Holding time of an exponential clock, by inversion of a strictly positive uniform. A draw that would not move
    the floating-point clock is redrawn.
    """
    while True:
        u = rng.random()
        if u == 0.0:
            continue
        dt = -math.log(u) / rate
        if t + dt > t:
            return dt
        simulator_logger.debug(TIME_TIE_REDRAW)


def pick(rng: np.random.Generator, rates: Sequence[float]) -> int:
    """Index i with probability rates[i] / sum(rates)."""
    cumulative = np.cumsum(rates)
    return min(int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side='right')), len(rates) - 1)


def _singleton_fraction(pi: Partition) -> float:
    return len(pi.singletons()) / pi.n


def _check_path_arguments(chars, n, init, horizon, mode):
    if mode not in MODES:
        raise NumericalFailure(f'Unknown simulation mode {mode!r}; choose among {MODES}.')
    if init.n != n:
        raise PartitionError(f'The initial partition is on [{init.n}], expected [{n}].')
    if not horizon > 0:
        raise NumericalFailure(f'The horizon must be positive, got {horizon}.')


def simulate_path(chars: Characteristics, n: int, init: Partition, horizon: float, seed, mode: str = 'gillespie',
                  max_jumps: int = None, record_threshold: int = DEFAULT_STATE_RECORD_THRESHOLD,
                  engine: RateEngine = None) -> Trajectory:
    """
    Simulate the chain restricted to [n].

    :param chars: The characteristics.
    :param n: The ground-set size.
    :param init: The initial partition.
    :param horizon: The final time (may be infinite when max_jumps is given).
    :param seed: An integer or a (master_seed, path_index) pair.
    :param mode: 'gillespie' or 'ppp'.
    :param max_jumps: Stop after this many changes of the partition.
    :param record_threshold: States are recorded only when n <= record_threshold.
    :param engine: A rate engine to reuse in gillespie mode.
    :return: The trajectory. Its observables are the block count, the fraction of singletons and, in ppp mode,
        the fraction of tracked dust.
    """
    _check_path_arguments(chars, n, init, horizon, mode)
    if math.isinf(horizon) and max_jumps is None:
        raise NumericalFailure('An infinite horizon needs max_jumps.')
    simulator_logger.info(PATH_START.format(mode, n, horizon, seed))
    rng = make_rng(seed)
    builder = TrajectoryBuilder(PATH_OBSERVABLES, record_states=n <= record_threshold)

    if mode == 'gillespie':
        meta = _run_gillespie(chars, init, horizon, rng, builder, max_jumps, engine)
    else:
        meta = _run_ppp(chars, init, horizon, rng, builder, max_jumps)

    trajectory = builder.build(horizon=horizon, seed=seed, mode=mode, n=n, **meta)
    if trajectory.absorbed:
        simulator_logger.info(PATH_ABSORBED.format(trajectory.events[-1][1], meta['jumps']))
    simulator_logger.info(PATH_DONE.format(len(trajectory), trajectory.end_time))
    return trajectory


def _run_gillespie(chars, init, horizon, rng, builder, max_jumps, engine):
    if init.n > MAX_ENUMERATION_N:
        raise StateSpaceTooLarge(f'Gillespie mode enumerates P_m for m <= {init.n}; use the ppp mode above '
                                 f'n = {MAX_ENUMERATION_N}.', n=init.n)
    engine = engine if engine is not None else RateEngine(chars)
    rows = {}

    pi = init
    t = 0.0
    jumps = 0
    builder.append(t, PartitionIndex.from_partition(pi), ('init', pi.plain_str()), blocks=pi.num_blocks,
                   singletons=_singleton_fraction(pi), dust=math.nan)
    while True:
        if pi not in rows:
            row = engine.transition_rates(pi)
            rows[pi] = (list(row.keys()), np.array([float(rate) for rate in row.values()]))
        targets, rates = rows[pi]
        total = float(rates.sum()) if len(rates) else 0.0
        if total == 0.0:
            return {'absorbed': True, 'jumps': jumps, 'end_time': horizon if math.isfinite(horizon) else t}

        dt = exponential_increment(rng, total, t)
        if t + dt >= horizon:
            return {'absorbed': False, 'jumps': jumps, 'end_time': horizon}
        if max_jumps is not None and jumps >= max_jumps:
            return {'absorbed': False, 'jumps': jumps, 'end_time': t + dt}

        t += dt
        target = targets[pick(rng, rates)]
        kind = 'coagulation' if target.num_blocks < pi.num_blocks else 'fragmentation'
        pi = target
        jumps += 1
        builder.append(t, PartitionIndex.from_partition(pi), (kind, pi.plain_str()), blocks=pi.num_blocks,
                       singletons=_singleton_fraction(pi), dust=math.nan)


def _draw_until(rng, x, count, accept):
    # Rejection sampling of the paintbox conditioned on an event of positive probability.
    while True:
        colours = paintbox_colours(x, count, rng)
        if accept(colours):
            return colours


def _keeps_dust(chars: Characteristics) -> bool:
    # A Kingman component merges a dust singleton with some block of the integers at once.
    return chars.c_k == 0


def _erodible(chars: Characteristics, pi: Partition, dust: frozenset) -> List[int]:
    if _keeps_dust(chars):
        return [element for element in range(1, pi.n + 1) if element not in dust]
    return [element for block in pi.blocks if len(block) > 1 for element in block]


def _ppp_intensities(chars: Characteristics, pi: Partition, dust: frozenset) -> List[Tuple[str, object, float]]:
    m = pi.num_blocks
    dust_blocks = [j for j, block in enumerate(pi.blocks) if block[0] in dust]
    d = len(dust_blocks)
    intensities = []
    if chars.c_k > 0 and m >= 2:
        intensities.append(('kingman', None, float(chars.c_k) * m * (m - 1) / 2))
    for weight, x in chars.nu_coag:
        # Nothing happens iff the dust blocks stay dust and the other blocks receive distinct colours or dust.
        rate = float(weight) * (1 - float(x.dust) ** d * float(paintbox_all_distinct_prob(x, m - d)))
        if rate > 0:
            intensities.append(('coagulation', x, rate))
    erodible = len(_erodible(chars, pi, dust))
    if chars.c_e > 0 and erodible > 0:
        intensities.append(('erosion', None, float(chars.c_e) * erodible))
    for weight, x in chars.nu_disl:
        for j, block in enumerate(pi.blocks):
            if block[0] in dust or (len(block) == 1 and not _keeps_dust(chars)):
                continue
            rate = float(weight) * (1 - float(x.power_sum(len(block))))
            if rate > 0:
                intensities.append(('dislocation', (x, j), rate))
    return intensities


def _apply_ppp_event(rng, chars: Characteristics, pi: Partition, dust: frozenset, kind: str, payload):
    if kind == 'kingman':
        first, second = sorted(rng.choice(pi.num_blocks, size=2, replace=False))
        labels = [first if label == second else label for label in pi.code]
        merged = set(pi.blocks[first]) | set(pi.blocks[second])
        return Partition.from_labels(labels), dust - merged

    if kind == 'coagulation':
        x = payload
        dust_colour = x.num_parts
        is_dust_block = [block[0] in dust for block in pi.blocks]

        def effective(colours):
            coloured = [c for c in colours if c != dust_colour]
            merges = len(coloured) != len(set(coloured))
            revives = any(is_dust and c != dust_colour for is_dust, c in zip(is_dust_block, colours))
            return merges or revives

        colours = _draw_until(rng, x, pi.num_blocks, effective)
        labels = [('colour', colours[label]) if colours[label] != dust_colour else ('block', label)
                  for label in pi.code]
        revived = {pi.blocks[j][0] for j in range(pi.num_blocks) if is_dust_block[j] and colours[j] != dust_colour}
        return Partition.from_labels(labels), dust - revived

    if kind == 'erosion':
        candidates = _erodible(chars, pi, dust)
        element = candidates[int(rng.integers(len(candidates)))]
        labels = [('block', label) for label in pi.code]
        labels[element - 1] = ('eroded', element)
        return Partition.from_labels(labels), dust | {element} if _keeps_dust(chars) else dust

    x, j = payload
    block = pi.blocks[j]
    dust_colour = x.num_parts
    colours = _draw_until(rng, x, len(block),
                          lambda cs: not (cs[0] != dust_colour and all(c == cs[0] for c in cs)))
    labels = [('block', label) for label in pi.code]
    new_dust = set()
    for element, colour in zip(block, colours):
        if colour == dust_colour:
            labels[element - 1] = ('dust', element)
            new_dust.add(element)
        else:
            labels[element - 1] = ('piece', colour)
    if not _keeps_dust(chars):
        new_dust.clear()
    return Partition.from_labels(labels), dust | new_dust


def _run_ppp(chars, init, horizon, rng, builder, max_jumps):
    pi = init
    # Singletons of the initial state are dust, as for the partition into singletons of the whole integers.
    # With a Kingman component the dust set stays empty.
    dust = frozenset(init.singletons()) if _keeps_dust(chars) else frozenset()
    t = 0.0
    jumps = 0
    builder.append(t, PartitionIndex.from_partition(pi), ('init', pi.plain_str()), blocks=pi.num_blocks,
                   singletons=_singleton_fraction(pi), dust=len(dust) / pi.n)
    while True:
        intensities = _ppp_intensities(chars, pi, dust)
        total = sum(rate for _, _, rate in intensities)
        if total == 0.0:
            return {'absorbed': True, 'jumps': jumps, 'end_time': horizon if math.isfinite(horizon) else t}

        dt = exponential_increment(rng, total, t)
        if t + dt >= horizon:
            return {'absorbed': False, 'jumps': jumps, 'end_time': horizon}
        if max_jumps is not None and jumps >= max_jumps:
            return {'absorbed': False, 'jumps': jumps, 'end_time': t + dt}

        t += dt
        kind, payload, _ = intensities[pick(rng, [rate for _, _, rate in intensities])]
        updated, dust = _apply_ppp_event(rng, chars, pi, dust, kind, payload)
        if updated != pi:
            jumps += 1
        pi = updated
        builder.append(t, PartitionIndex.from_partition(pi), (kind, pi.plain_str()), blocks=pi.num_blocks,
                       singletons=_singleton_fraction(pi), dust=len(dust) / pi.n)


CoupledTrajectory = namedtuple('CoupledTrajectory', ['full', 'fragmentation'])


def coupled_fragmentation(chars: Characteristics, n: int, init: Partition, horizon: float, seed,
                          engine: RateEngine = None) -> CoupledTrajectory:
    """
    Simulate an EFC path together with the pure-fragmentation path driven by the same fragmentation atoms.

    Erosion atoms are shared element by element. A dislocation atom carries a block index k and colours drawn for
    every element; each path applies them to its own k-th block. The block of 1 of the fragmentation path then stays
    inside the block of 1 of the full path, and with erosion as the only fragmentation the whole fragmentation path
    refines the full one.

    :return: The pair of trajectories, recorded at the same event times. The full path meta holds
        `first_block_contained` and `refinement_held`, evaluated at every event.
    """
    _check_path_arguments(chars, n, init, horizon, 'ppp')
    if math.isinf(horizon):
        raise NumericalFailure('Coupled paths need a finite horizon.')
    simulator_logger.info(PATH_START.format('coupled', n, horizon, seed))
    engine = engine if engine is not None else RateEngine(chars)
    rng = make_rng(seed)
    full_builder = TrajectoryBuilder(('blocks', 'first_block_contained', 'refines'), record_states=True)
    frag_builder = TrajectoryBuilder(('blocks',), record_states=True)

    pi, pi_f = init, init
    t = 0.0
    contained_always, refined_always = True, True

    def record(kind):
        nonlocal contained_always, refined_always
        contained = set(pi_f.block_of(1)) <= set(pi.block_of(1))
        refines = pi_f.is_finer_than(pi)
        contained_always &= contained
        refined_always &= refines
        full_builder.append(t, PartitionIndex.from_partition(pi), (kind, pi.plain_str()), blocks=pi.num_blocks,
                            first_block_contained=contained, refines=refines)
        frag_builder.append(t, PartitionIndex.from_partition(pi_f), (kind, pi_f.plain_str()),
                            blocks=pi_f.num_blocks)

    record('init')
    disl_mass = float(chars.nu_disl.total_mass)
    while True:
        kernel = engine.coag_kernel(pi.num_blocks)
        coag_total = sum(float(rate) for _, rate in kernel)
        slots = max(pi.num_blocks, pi_f.num_blocks)
        rates = [coag_total, float(chars.c_e) * n, disl_mass * slots]
        total = sum(rates)
        if total == 0.0:
            break
        dt = exponential_increment(rng, total, t)
        if t + dt >= horizon:
            break
        t += dt

        channel = pick(rng, rates)
        if channel == 0:
            pi_prime = kernel[pick(rng, [float(rate) for _, rate in kernel])][0]
            pi = _coagulate(pi, pi_prime)
            record('coagulation')
            continue

        if channel == 1:
            element = int(rng.integers(1, n + 1))
            updated, updated_f = _isolate(pi, element), _isolate(pi_f, element)
            kind = 'erosion'
        else:
            index = pick(rng, [float(weight) for weight, _ in chars.nu_disl])
            x = chars.nu_disl.atoms[index][1]
            k = int(rng.integers(slots))
            colours = paintbox_colours(x, n, rng)
            updated = _dislocate(pi, k, colours, x.num_parts)
            updated_f = _dislocate(pi_f, k, colours, x.num_parts)
            kind = 'dislocation'
        if updated == pi and updated_f == pi_f:
            continue
        pi, pi_f = updated, updated_f
        record(kind)

    meta = {'horizon': horizon, 'seed': seed, 'mode': 'coupled', 'n': n}
    simulator_logger.info(PATH_DONE.format(len(full_builder._times), t))
    return CoupledTrajectory(full_builder.build(first_block_contained=contained_always,
                                                refinement_held=refined_always, **meta),
                             frag_builder.build(**meta))


def _coagulate(pi: Partition, pi_prime: Partition) -> Partition:
    return Partition.from_labels(pi_prime.code[label] for label in pi.code)


def _isolate(pi: Partition, element: int) -> Partition:
    labels = [('block', label) for label in pi.code]
    labels[element - 1] = ('isolated', element)
    return Partition.from_labels(labels)


def _dislocate(pi: Partition, k: int, colours, dust_colour: int) -> Partition:
    if k >= pi.num_blocks:
        return pi
    labels = [('block', label) for label in pi.code]
    for element in pi.blocks[k]:
        colour = colours[element - 1]
        labels[element - 1] = ('dust', element) if colour == dust_colour else ('piece', colour)
    return Partition.from_labels(labels)


def observables(trajectory: Trajectory, chars: Characteristics = None) -> pd.DataFrame:
    """
    Derived series of a partition-valued trajectory, indexed by event time: the block count, the fraction of
    singletons (the finite-n dust proxy), the tracked dust fraction when available, and the block frequencies
    |B_i| / n sorted decreasingly (columns freq_1..freq_n, zero padded).
    """
    frame = TrajectoryConverter('pandas')(trajectory)
    columns = [name for name in ('blocks', 'singletons', 'dust') if name in frame.columns]
    frame = frame[columns].copy()
    if trajectory.states is not None:
        n = trajectory.meta['n']
        frequencies = np.zeros((len(trajectory), n))
        for row, pi in enumerate(trajectory.partitions()):
            sizes = sorted(pi.block_sizes(), reverse=True)
            frequencies[row, :len(sizes)] = np.asarray(sizes) / n
        for column in range(n):
            frame[f'freq_{column + 1}'] = frequencies[:, column]
    return frame


def time_fraction_above(trajectory: Trajectory, k: int) -> float:
    """Fraction of [0, end_time] spent with more than k blocks."""
    holding = trajectory.holding_times()
    total = holding.sum()
    if total == 0:
        return float(trajectory.observables['blocks'][-1] > k)
    return float(holding[trajectory.observables['blocks'] > k].sum() / total)


def occupation_frequencies(trajectory: Trajectory, states: Sequence[Partition]) -> np.ndarray:
    """Fraction of time spent in each of `states` (indexed like `states`)."""
    index = {state: i for i, state in enumerate(states)}
    occupation = np.zeros(len(states))
    for pi, holding in zip(trajectory.partitions(), trajectory.holding_times()):
        occupation[index[pi]] += holding
    return occupation / occupation.sum()


def transition_counts(trajectory: Trajectory, states: Sequence[Partition]) -> np.ndarray:
    """Matrix of counts of partition changes between `states` along the trajectory."""
    index = {state: i for i, state in enumerate(states)}
    counts = np.zeros((len(states), len(states)), dtype=np.int64)
    partitions = trajectory.partitions()
    for before, after in zip(partitions[:-1], partitions[1:]):
        if before != after:
            counts[index[before], index[after]] += 1
    return counts


def simulate_ensemble(chars: Characteristics, n: int, init: Partition, horizon: float, paths: int, seed: int,
                      grid: Sequence[float], mode: str = 'ppp', threads: int = 1,
                      record_threshold: int = DEFAULT_STATE_RECORD_THRESHOLD) -> xr.Dataset:
    """
    Simulate independent paths, path i seeded with (seed, i), and evaluate their observables on a time grid.

    :return: A dataset with, for each observable, the (path, time) values and its mean and standard error per time.
    """
    simulator_logger.info(ENSEMBLE_START.format(paths, threads))
    engine = RateEngine(chars) if mode == 'gillespie' else None

    def run(index):
        return simulate_path(chars, n, init, horizon, [seed, index], mode, record_threshold=record_threshold,
                             engine=engine)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            trajectories = list(executor.map(run, range(paths)))
    else:
        trajectories = [run(index) for index in range(paths)]

    names = list(PATH_OBSERVABLES) if mode == 'ppp' else ['blocks', 'singletons']
    values = {name: TrajectoryOps.on_grid(trajectories, name, grid).astype(np.float64) for name in names}
    return TrajectoryConverter.ensemble_to_xarray(values, grid, attrs={'n': n, 'seed': seed, 'mode': mode,
                                                                       'paths': paths, 'horizon': horizon})
