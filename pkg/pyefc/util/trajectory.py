from collections import OrderedDict, namedtuple
from typing import List, Optional, Sequence

import numpy as np

from pyefc.misc.exceptions import NumericalFailure
from pyefc.schema.partition import Partition, PartitionIndex


class Trajectory(namedtuple('TrajectoryNamedTuple', ['times', 'states', 'observables', 'events', 'meta'])):
    """
    A piecewise-constant path: the value recorded at times[i] holds on [times[i], times[i + 1]).

    :param times: Strictly increasing event times, starting at 0.
    :param states: One PartitionIndex per event, or None when states are not recorded.
    :param observables: OrderedDict mapping observable names to arrays aligned with times.
    :param events: One (event_kind, detail) pair per event; the first is ('init', ...).
    :param meta: Run metadata: horizon, end_time, seed, mode, absorbed and mode-specific entries.
    """

    # noinspection PyArgumentList
    def __new__(cls, times, states: Optional[Sequence[PartitionIndex]], observables: OrderedDict,
                events: Sequence, meta: dict):
        times = np.asarray(times, dtype=np.float64)
        if len(times) == 0 or times[0] != 0:
            raise NumericalFailure('A trajectory starts with an entry at t = 0.')
        if np.any(np.diff(times) <= 0):
            raise NumericalFailure('Trajectory times must be strictly increasing.')
        if states is not None and len(states) != len(times):
            raise NumericalFailure('A trajectory needs one state per event time.')
        for name, values in observables.items():
            if len(values) != len(times):
                raise NumericalFailure(f'Observable `{name}` has {len(values)} values for {len(times)} times.')
        if len(events) != len(times):
            raise NumericalFailure('A trajectory needs one event record per event time.')

        observables = OrderedDict((name, np.asarray(values)) for name, values in observables.items())
        return super().__new__(cls, times, None if states is None else tuple(states), observables, tuple(events),
                               dict(meta))

    @property
    def horizon(self) -> float:
        return self.meta['horizon']

    @property
    def end_time(self) -> float:
        return self.meta.get('end_time', self.horizon)

    @property
    def seed(self):
        return self.meta.get('seed')

    @property
    def mode(self) -> str:
        return self.meta.get('mode')

    @property
    def absorbed(self) -> bool:
        return self.meta.get('absorbed', False)

    def partitions(self) -> List[Partition]:
        if self.states is None:
            raise NumericalFailure('This trajectory does not record its states.')
        return [state.to_partition() for state in self.states]

    def index_at(self, t: float) -> int:
        return int(np.searchsorted(self.times, t, side='right')) - 1

    def value_at(self, name: str, t: float):
        return self.observables[name][self.index_at(t)]

    def sample(self, name: str, grid: Sequence[float]) -> np.ndarray:
        """Values of an observable on a time grid (the right-continuous step function)."""
        indices = np.searchsorted(self.times, np.asarray(grid, dtype=np.float64), side='right') - 1
        return self.observables[name][indices]

    def holding_times(self) -> np.ndarray:
        """Time spent at each entry up to the end time."""
        ends = np.append(self.times[1:], self.end_time)
        return np.clip(ends - self.times, 0.0, None)

    def __len__(self):
        return len(self.times)

    def __str__(self):
        return (f'{self.__class__.__name__}(mode={self.mode}, events={len(self)}, end_time={self.end_time}, '
                f'observables={list(self.observables.keys())})')


class TrajectoryBuilder:
    """
    Accumulates the entries of a trajectory while a path is simulated.
    """

    def __init__(self, observable_names: Sequence[str], record_states: bool = True):
        self.record_states = record_states
        self._times = []
        self._states = []
        self._events = []
        self._observables = OrderedDict((name, []) for name in observable_names)

    def append(self, t: float, state: Optional[PartitionIndex], event, /, **values):
        self._times.append(t)
        if self.record_states:
            self._states.append(state)
        self._events.append(event)
        for name, series in self._observables.items():
            series.append(values[name])

    def build(self, **meta) -> Trajectory:
        return Trajectory(self._times, self._states if self.record_states else None, self._observables,
                          self._events, meta)


class TrajectoryOps:

    @classmethod
    def on_grid(cls, trajectories: Sequence[Trajectory], name: str, grid: Sequence[float]) -> np.ndarray:
        """Stack the values of one observable of several trajectories on a common grid, shape (paths, times)."""
        if len(trajectories) == 0:
            raise NumericalFailure('The sequence of trajectories must contain at least one element.')
        return np.vstack([trajectory.sample(name, grid) for trajectory in trajectories])

