"""
Writers and readers for the files emitted by the commands: tables (CSV or JSON records), JSON reports, generator
triplets and distributions over the partitions of [n].
"""
import hashlib
import json
import os
from typing import Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp

from pyefc.misc.exceptions import OutputError
from pyefc.process.equilibrium import DistributionOnPn
from pyefc.process.rates import Generator
from pyefc.schema.partition import enumerate_partitions

FORMATS = ('csv', 'json')
FLOAT_FORMAT = '%.17g'


def _suffix(fmt: str) -> str:
    if fmt not in FORMATS:
        raise OutputError(f'Unknown output format {fmt!r}; choose among {FORMATS}.')
    return fmt


def ensure_directory(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as error:
        raise OutputError(f'Cannot create the output directory {path}: {error}.')
    if not os.access(path, os.W_OK):
        raise OutputError(f'The output directory {path} is not writable.')
    return path


def write_table(frame: pd.DataFrame, directory: str, name: str, fmt: str = 'csv', index: bool = False) -> str:
    """
    Write a table as `<name>.csv` or `<name>.json` (a list of records).

    :return: The path of the written file.
    """
    path = os.path.join(directory, f'{name}.{_suffix(fmt)}')
    try:
        if fmt == 'csv':
            frame.to_csv(path, index=index, float_format=FLOAT_FORMAT)
        else:
            frame = frame.reset_index() if index else frame
            frame.to_json(path, orient='records', double_precision=15)
    except OSError as error:
        raise OutputError(f'Cannot write {path}: {error}.')
    return path


def read_table(path: str) -> pd.DataFrame:
    try:
        if path.endswith('.json'):
            return pd.read_json(path, orient='records')
        return pd.read_csv(path)
    except (OSError, ValueError) as error:
        raise OutputError(f'Cannot read {path}: {error}.')


def _to_plain(value):
    if isinstance(value, dict):
        return {str(key): _to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_to_plain(item) for item in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def write_report(report: dict, directory: str, name: str) -> str:
    """Write a report dictionary as sorted JSON."""
    path = os.path.join(directory, f'{name}.json')
    try:
        with open(path, 'w') as file:
            json.dump(_to_plain(report), file, indent=2, sort_keys=True)
            file.write('\n')
    except OSError as error:
        raise OutputError(f'Cannot write {path}: {error}.')
    return path


def read_report(path: str) -> dict:
    try:
        with open(path) as file:
            return json.load(file)
    except (OSError, ValueError) as error:
        raise OutputError(f'Cannot read {path}: {error}.')


def states_frame(states: Sequence) -> pd.DataFrame:
    return pd.DataFrame({'index': np.arange(len(states)),
                         'partition': [state.plain_str() for state in states],
                         'rgs': [','.join(str(label) for label in state.code) for state in states]})


def write_generator(G: Generator, directory: str, fmt: str = 'csv') -> Sequence[str]:
    """
    Write the generator as `generator.txt`, one "i j rate" line per nonzero entry in row-major order (diagonal
    included), and the state table `states.<fmt>`.
    """
    path = os.path.join(directory, 'generator.txt')
    try:
        with open(path, 'w') as file:
            for i, j, rate in G.triplets():
                file.write(f'{i} {j} {rate!r}\n')
    except OSError as error:
        raise OutputError(f'Cannot write {path}: {error}.')
    return [path, write_table(states_frame(G.states), directory, 'states', fmt)]


def read_generator(path: str, n: int) -> Generator:
    """Read a triplet file back as a generator on the partitions of [n]."""
    states = enumerate_partitions(n)
    try:
        triplets = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as error:
        raise OutputError(f'Cannot read {path}: {error}.')
    if triplets.size == 0:
        matrix = sp.csr_matrix((len(states), len(states)))
    else:
        matrix = sp.coo_matrix((triplets[:, 2], (triplets[:, 0].astype(np.int64), triplets[:, 1].astype(np.int64))),
                               shape=(len(states), len(states))).tocsr()
    return Generator(n, states, matrix)


def distribution_frame(rho: DistributionOnPn) -> pd.DataFrame:
    frame = states_frame(rho.states)
    frame['blocks'] = [state.num_blocks for state in rho.states]
    frame['weight'] = rho.weights
    return frame


def read_distribution(path: str, n: int) -> DistributionOnPn:
    frame = read_table(path)
    if 'weight' not in frame.columns or 'index' not in frame.columns:
        raise OutputError(f'{path} is not a distribution table.')
    return DistributionOnPn(n, frame.sort_values('index')['weight'].values)


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as file:
        for chunk in iter(lambda: file.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()
