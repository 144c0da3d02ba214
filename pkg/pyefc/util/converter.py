from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict, Sequence

import numpy as np
import pandas as pd
import xarray as xr

from pyefc.misc.decorators import timer_decorator
from pyefc.misc.exceptions import OutputError
from pyefc.schema.partition import parse_rgs
from pyefc.util.trajectory import Trajectory

EVENT_COLUMNS = ('event_kind', 'detail')


class TrajectoryConverterABC(ABC):

    def __new__(cls, trajectory: Trajectory):
        return super().__new__(cls).__call__(trajectory)

    @abstractmethod
    def __call__(self, trajectory: Trajectory):
        pass


class TrajectoryToPandasDataFrame(TrajectoryConverterABC):
    """One row per event: the observables, the event record and, when recorded, the state as an RGS string."""

    def __call__(self, trajectory: Trajectory) -> pd.DataFrame:
        columns = OrderedDict((name, values) for name, values in trajectory.observables.items())
        columns['event_kind'] = [kind for kind, _ in trajectory.events]
        columns['detail'] = [detail for _, detail in trajectory.events]
        if trajectory.states is not None:
            columns['state'] = [state.plain_str() for state in trajectory.states]
        return pd.DataFrame(columns, index=pd.Index(trajectory.times, name='time'))


class TrajectoryToEventLog(TrajectoryConverterABC):
    """The time, event_kind, detail log."""

    def __call__(self, trajectory: Trajectory) -> pd.DataFrame:
        return pd.DataFrame({'time': trajectory.times,
                             'event_kind': [kind for kind, _ in trajectory.events],
                             'detail': [detail for _, detail in trajectory.events]})


class TrajectoryToXarrayDataset(TrajectoryConverterABC):

    @timer_decorator
    def __call__(self, trajectory: Trajectory) -> xr.Dataset:
        data_vars = {name: ('time', np.asarray(values)) for name, values in trajectory.observables.items()}
        data_vars['event_kind'] = ('time', np.array([kind for kind, _ in trajectory.events], dtype=object))
        attrs = {key: value for key, value in trajectory.meta.items()
                 if isinstance(value, (int, float, str, bool, np.integer, np.floating))}
        return xr.Dataset(data_vars, coords={'time': trajectory.times}, attrs=attrs)


class PandasDataFrameToTrajectory:
    """Inverse of `TrajectoryToPandasDataFrame`; metadata is supplied separately."""

    def __call__(self, data_frame: pd.DataFrame, **meta) -> Trajectory:
        if data_frame.index.name != 'time':
            if 'time' not in data_frame.columns:
                raise OutputError('A trajectory table needs a `time` index or column.')
            data_frame = data_frame.set_index('time')
        for column in EVENT_COLUMNS:
            if column not in data_frame.columns:
                raise OutputError(f'A trajectory table needs a `{column}` column.')

        states = None
        if 'state' in data_frame.columns:
            states = [parse_rgs(str(text)) for text in data_frame['state']]
        observables = OrderedDict((name, data_frame[name].values) for name in data_frame.columns
                                  if name not in EVENT_COLUMNS and name != 'state')
        events = list(zip(data_frame['event_kind'], data_frame['detail'].astype(str)))
        return Trajectory(data_frame.index.values, states, observables, events, meta)


class TrajectoryConverter:
    __slots__ = ('target_type', '__chosen_converter')
    __available_converters = {'pandas': TrajectoryToPandasDataFrame,
                              'events': TrajectoryToEventLog,
                              'xarray': TrajectoryToXarrayDataset}

    def __init__(self, target_type):
        self.target_type = target_type
        self.__set_converter()

    def __call__(self, trajectory: Trajectory):
        return self.__chosen_converter(trajectory)

    def __set_converter(self):
        try:
            self.__chosen_converter = self.__available_converters[self.target_type]
        except KeyError:
            raise OutputError(f'Unknown trajectory format {self.target_type!r}; choose among '
                              f'{sorted(self.__available_converters)}.')

    @staticmethod
    @timer_decorator
    def ensemble_to_xarray(values: Dict[str, np.ndarray], grid: Sequence[float], attrs: dict = None) -> xr.Dataset:
        """
        Stack per-path observables sampled on a grid into a dataset over (path, time), with the mean, the standard
        error and the sample count of each observable per time.
        """
        grid = np.asarray(grid, dtype=np.float64)
        data_vars = {}
        for name, matrix in values.items():
            paths = matrix.shape[0]
            data_vars[name] = (('path', 'time'), matrix)
            data_vars[f'{name}_mean'] = ('time', matrix.mean(axis=0))
            standard_error = matrix.std(axis=0, ddof=1) / np.sqrt(paths) if paths > 1 else np.full(len(grid), np.nan)
            data_vars[f'{name}_se'] = ('time', standard_error)
        first = next(iter(values.values()))
        dataset = xr.Dataset(data_vars, coords={'path': np.arange(first.shape[0]), 'time': grid},
                             attrs=dict(attrs or {}))
        dataset.attrs['samples'] = int(first.shape[0])
        return dataset
