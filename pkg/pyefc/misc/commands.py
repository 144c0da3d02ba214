"""
Batch commands. An experiment configuration names characteristics and command parameters; `run` executes one
command, writes its data files under the output directory and a manifest describing the run.
"""
import copy
import datetime
import hashlib
import json
import math
import os
from typing import Callable, Dict, List

import numpy as np
import pandas as pd
import yaml

from pyefc.config import (CONFIG_SCHEMA_VERSION, DEFAULT_EXACT_THRESHOLD, DEFAULT_MC_SAMPLES, DEFAULT_N_BIG,
                          DEFAULT_OUTPUT_DIR, DEFAULT_STATE_RECORD_THRESHOLD, OUTPUT_ROOT_ENV, VERSION)
from pyefc.logging_utility.logger import runner_logger
from pyefc.logging_utility.logging_messages import COMMAND_DONE, COMMAND_START, CONFIG_LOADED
from pyefc.misc.decorators import timer_decorator
from pyefc.misc.exceptions import ConfigError, MeasureError, OutputError, PartitionError
from pyefc.process.auxiliary import (DustChainParams, LogisticParams, dust_mean, dust_sde_value, simulate_dust_chain,
                                     simulate_dust_sde, simulate_logistic_chain)
from pyefc.process.equilibrium import (DistributionOnPn, convergence_time, theorem_diagnostics,
                                       transient_distribution)
from pyefc.process.functionals import comes_down_diagnostic, validate_characteristics
from pyefc.process.rates import RateEngine, build_generator, compatibility_defect
from pyefc.process.simulator import simulate_ensemble, simulate_path, time_fraction_above
from pyefc.schema.measure import Characteristics, characteristics_from_dict
from pyefc.schema.partition import Partition, parse_partition
from pyefc.util.converter import TrajectoryConverter
from pyefc.util.export import (distribution_frame, ensure_directory, sha256_of, write_generator, write_report,
                               write_table)

CONFIG_KEYS = ('schema_version', 'command', 'exact', 'characteristics', 'parameters', 'output_dir')

COMMON_PARAMETERS = {'seed': None, 'threads': 1}
COMMAND_PARAMETERS = {
    'validate': {},
    'rates': {'n': 3},
    'stationary': {'n': 4, 'k_max': None, 'b': 1},
    'transient': {'n': 4, 'init': 'zero', 'times': [0.5, 1.0, 2.0], 'tv_target': 1e-6},
    'simulate': {'n': 4, 'init': 'zero', 'horizon': 10.0, 'paths': 100, 'mode': 'ppp', 'grid_points': 101,
                 'record_threshold': DEFAULT_STATE_RECORD_THRESHOLD, 'k': 1},
    'dust-chain': {'n': 64, 'k0': 0, 'horizon': 5.0, 'paths': 1000, 'grid_points': 51},
    'dust-sde': {'d0': 0.0, 'horizon': 5.0, 'paths': 1000, 'grid_points': 51},
    'logistic': {'init': 'large', 'horizon': 100.0, 'paths': 1000, 'n_big': DEFAULT_N_BIG},
    'cdi': {'horizon': 100, 'exact_threshold': DEFAULT_EXACT_THRESHOLD, 'method': 'auto',
            'samples': DEFAULT_MC_SAMPLES},
    'compat-check': {'n': 4, 'm': None},
}
STOCHASTIC_COMMANDS = ('simulate', 'dust-chain', 'dust-sde', 'logistic')


class ExperimentConfig:
    """
    A validated experiment configuration.

    Attributes:
        command: The command name, or None when it is given on the command line.
        characteristics: The parsed characteristics.
        parameters: Command parameters merged over the command defaults (once a command is bound).
        output_dir: The configured output directory, or None.
        exact: Whether numbers were read as rationals.
        raw: The configuration mapping as read, for the run record.
    """

    __slots__ = ('command', 'characteristics', 'parameters', 'output_dir', 'exact', 'raw')

    def __init__(self, command, characteristics: Characteristics, parameters: dict, output_dir, exact: bool, raw):
        self.command = command
        self.characteristics = characteristics
        self.parameters = parameters
        self.output_dir = output_dir
        self.exact = exact
        self.raw = raw

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        if not isinstance(data, dict):
            raise ConfigError(f'A configuration is a mapping, got {type(data).__name__}.')
        unknown = set(data.keys()) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f'Unknown configuration keys: {sorted(unknown)}.')
        version = data.get('schema_version')
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f'Unsupported schema_version {version!r}; expected {CONFIG_SCHEMA_VERSION}.')
        command = data.get('command')
        if command is not None and command not in COMMAND_PARAMETERS:
            raise ConfigError(f'Unknown command {command!r}; choose among {sorted(COMMAND_PARAMETERS)}.')
        exact = bool(data.get('exact', False))
        try:
            chars = characteristics_from_dict(data.get('characteristics') or {}, exact)
        except MeasureError as error:
            raise ConfigError(f'Invalid characteristics: {error}')
        parameters = data.get('parameters') or {}
        if not isinstance(parameters, dict):
            raise ConfigError('`parameters` must be a mapping.')
        return cls(command, chars, dict(parameters), data.get('output_dir'), exact, copy.deepcopy(data))

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        try:
            with open(path) as file:
                data = yaml.safe_load(file)
        except OSError as error:
            raise OutputError(f'Cannot read the configuration {path}: {error}.')
        except yaml.YAMLError as error:
            raise ConfigError(f'Cannot parse the configuration {path}: {error}.')
        config = cls.from_dict(data)
        runner_logger.info(CONFIG_LOADED.format(path, data.get('schema_version')))
        return config

    def bind(self, command: str = None, **overrides) -> 'ExperimentConfig':
        """
        Fix the command and merge its defaults, the configured parameters and the overrides (None values ignored).
        Unknown parameters are errors.
        """
        command = command or self.command
        if command is None:
            raise ConfigError('No command given.')
        if command not in COMMAND_PARAMETERS:
            raise ConfigError(f'Unknown command {command!r}; choose among {sorted(COMMAND_PARAMETERS)}.')
        allowed = dict(COMMON_PARAMETERS, **COMMAND_PARAMETERS[command])
        unknown = set(self.parameters.keys()) - set(allowed.keys())
        if unknown:
            raise ConfigError(f'Unknown parameters for `{command}`: {sorted(unknown)}.')
        parameters = dict(allowed, **self.parameters)
        parameters.update({key: value for key, value in overrides.items() if value is not None})
        if command in STOCHASTIC_COMMANDS and parameters['seed'] is None:
            raise ConfigError(f'`{command}` needs an explicit seed.')
        return ExperimentConfig(command, self.characteristics, parameters, self.output_dir, self.exact, self.raw)

    def checksum(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class RunRecord:
    """
    Description of one command run, written as `manifest.json` next to the data files.

    Attributes:
        command: The command name.
        config: The configuration snapshot.
        parameters: The parameters actually used.
        version: The package version.
        started: ISO start timestamp.
        finished: ISO end timestamp.
        files: Written data files as (relative path, sha256) pairs.
        input_checksum: sha256 of the configuration snapshot.
    """

    __slots__ = ('command', 'config', 'parameters', 'version', 'started', 'finished', 'files', 'input_checksum')

    def __init__(self, command, config, parameters, version, started, finished, files, input_checksum):
        self.command = command
        self.config = config
        self.parameters = parameters
        self.version = version
        self.started = started
        self.finished = finished
        self.files = files
        self.input_checksum = input_checksum

    def to_dict(self):
        return {'command': self.command, 'config': self.config, 'parameters': self.parameters,
                'version': self.version, 'started': self.started, 'finished': self.finished,
                'files': [{'path': path, 'sha256': digest} for path, digest in self.files],
                'input_checksum': self.input_checksum}


def resolve_output_dir(cli_out: str = None, config_out: str = None) -> str:
    """
    The output directory: --out, then the configured one, then the default. Relative paths are placed under the
    directory named by the output-root environment variable when it is set.
    """
    out = cli_out or config_out or DEFAULT_OUTPUT_DIR
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return out


def _initial_partition(value, n: int) -> Partition:
    if value == 'zero':
        return Partition.zero(n)
    if value == 'one':
        return Partition.one(n)
    try:
        pi = parse_partition(str(value))
    except PartitionError as error:
        raise ConfigError(f'Invalid initial partition: {error}')
    if pi.n != n:
        raise ConfigError(f'The initial partition {pi.plain_str()} is not a partition of [{n}].')
    return pi


def _grid(horizon: float, points: int) -> np.ndarray:
    return np.linspace(0.0, float(horizon), int(points))


def validate(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """
    Write the validation report of the characteristics. Invalid characteristics raise a ConfigError after the
    report is written.
    """
    report = validate_characteristics(config.characteristics)
    files = [write_report(report.to_dict(), out, 'validation')]
    if not report.is_valid:
        raise ConfigError(report.plain_str())
    return files


def rates(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Dump the generator of the chain on [n] as triplets with its state table."""
    n = config.parameters['n']
    G = build_generator(config.characteristics, n, threads=config.parameters['threads'])
    files = list(write_generator(G, out, fmt))
    files.append(write_report({'n': n, 'states': G.num_states, 'nonzero': len(G.triplets()),
                               'max_exit_rate': float(G.exit_rates().max())}, out, 'rates'))
    return files


def stationary(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Solve for the stationary law on [n] and evaluate the equilibrium diagnostics."""
    n = config.parameters['n']
    k_max = config.parameters['k_max'] or n - 1
    # On [1] the chain sits at its only state and there is no bound to evaluate.
    b = config.parameters['b'] if n > 1 else 0
    G = build_generator(config.characteristics, n, threads=config.parameters['threads'])
    report = theorem_diagnostics(config.characteristics, n, k_max, b, generator=G)
    block_counts = pd.DataFrame({'blocks': np.arange(1, n + 1), 'weight': report.block_counts})
    frequencies = pd.DataFrame({'rank': np.arange(1, n + 1), 'frequency': report.rho.expected_ranked_frequencies()})
    return [write_table(distribution_frame(report.rho), out, 'stationary', fmt),
            write_table(block_counts, out, 'block_counts', fmt),
            write_table(frequencies, out, 'ranked_frequencies', fmt),
            write_report(report.to_dict(), out, 'diagnostics')]


def transient(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Laws at the requested times from the initial partition, and the time to reach the stationary law."""
    n = config.parameters['n']
    G = build_generator(config.characteristics, n, threads=config.parameters['threads'])
    init = DistributionOnPn.dirac(_initial_partition(config.parameters['init'], n))
    frames = []
    for t in sorted(float(t) for t in config.parameters['times']):
        law = transient_distribution(G, init, t)
        frame = distribution_frame(law)
        frame.insert(0, 'time', t)
        frame['truncation_error'] = law.truncation_error
        frames.append(frame)
    files = [write_table(pd.concat(frames, ignore_index=True), out, 'transient', fmt)]
    t, distance = convergence_time(G, init, config.parameters['tv_target'])
    files.append(write_report({'n': n, 'init': init.states[int(np.argmax(init.weights))].plain_str(),
                               'tv_target': config.parameters['tv_target'], 'convergence_time': t,
                               'total_variation': distance}, out, 'convergence'))
    return files


def simulate(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """An ensemble of paths: observables on a time grid with means and standard errors, plus the first path."""
    p = config.parameters
    chars = config.characteristics
    init = _initial_partition(p['init'], p['n'])
    grid = _grid(p['horizon'], p['grid_points'])
    dataset = simulate_ensemble(chars, p['n'], init, p['horizon'], p['paths'], p['seed'], grid, mode=p['mode'],
                                threads=p['threads'], record_threshold=p['record_threshold'])
    summary = pd.DataFrame({'time': grid})
    for name in dataset.data_vars:
        if name.endswith('_mean') or name.endswith('_se'):
            summary[name] = dataset[name].values
    summary['samples'] = dataset.attrs['samples']

    first = simulate_path(chars, p['n'], init, p['horizon'], [p['seed'], 0], p['mode'],
                          record_threshold=p['record_threshold'])
    path_frame = TrajectoryConverter('pandas')(first)
    files = [write_table(summary, out, 'ensemble', fmt),
             write_table(path_frame, out, 'path_0', fmt, index=True),
             write_table(TrajectoryConverter('events')(first), out, 'events_0', fmt),
             write_report({'time_fraction_above_k': time_fraction_above(first, p['k']), 'k': p['k'],
                           'jumps': first.meta['jumps'], 'absorbed': first.absorbed,
                           'end_time': first.end_time}, out, 'path_0_summary')]
    return files


def _ensemble_table(trajectories, values, grid, exact) -> pd.DataFrame:
    paths = len(trajectories)
    frame = pd.DataFrame({'time': grid, 'dust_mean': values.mean(axis=0)})
    frame['dust_se'] = values.std(axis=0, ddof=1) / math.sqrt(paths) if paths > 1 else np.nan
    frame['exact_mean'] = exact
    frame['samples'] = paths
    return frame


def dust_chain(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Ensemble of the dust chain with the exact mean for comparison."""
    p = config.parameters
    try:
        params = DustChainParams.from_characteristics(config.characteristics, p['n'])
    except MeasureError as error:
        raise ConfigError(str(error))
    grid = _grid(p['horizon'], p['grid_points'])
    trajectories = [simulate_dust_chain(params, p['k0'], p['horizon'], [p['seed'], index])
                    for index in range(p['paths'])]
    values = np.vstack([trajectory.sample('dust', grid) for trajectory in trajectories])
    exact = [dust_mean(params.c_e, params.nu_tilde, p['k0'] / params.n, t) for t in grid]
    return [write_table(_ensemble_table(trajectories, values, grid, exact), out, 'dust_chain', fmt)]


def dust_sde(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Ensemble of the limiting dust flow with the exact mean for comparison."""
    p = config.parameters
    chars = config.characteristics
    nu_tilde = [(weight, x.dust) for weight, x in chars.nu_coag if not x.is_zero]
    grid = _grid(p['horizon'], p['grid_points'])
    trajectories = [simulate_dust_sde(chars.c_e, nu_tilde, p['d0'], p['horizon'], [p['seed'], index])
                    for index in range(p['paths'])]
    values = np.vstack([dust_sde_value(trajectory, grid) for trajectory in trajectories])
    exact = [dust_mean(chars.c_e, nu_tilde, p['d0'], t) for t in grid]
    return [write_table(_ensemble_table(trajectories, values, grid, exact), out, 'dust_sde', fmt)]


def logistic(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Hitting times of 1 for the logistic branching chain under hypothesis (H)."""
    p = config.parameters
    try:
        params = LogisticParams.from_characteristics(config.characteristics)
    except MeasureError as error:
        raise ConfigError(str(error))
    taus = []
    for index in range(p['paths']):
        trajectory = simulate_logistic_chain(params, p['init'], p['horizon'], [p['seed'], index],
                                             n_big=p['n_big'], stop_at_tau=True)
        taus.append(trajectory.meta['tau'])
    frame = pd.DataFrame({'path': np.arange(p['paths']), 'tau': [math.nan if tau is None else tau for tau in taus]})
    hit = frame['tau'].dropna()
    summary = {'paths': p['paths'], 'hits': int(len(hit)), 'n_big': p['n_big'], 'log_moment': params.log_moment(),
               'tau_mean': float(hit.mean()) if len(hit) else None,
               'tau_se': float(hit.std(ddof=1) / math.sqrt(len(hit))) if len(hit) > 1 else None,
               'stand_in': 'large initial states start at n_big'}
    return [write_table(frame, out, 'logistic', fmt), write_report(summary, out, 'logistic_summary')]


def cdi(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Comes-down-from-infinity partial sums and verdict."""
    p = config.parameters
    report = comes_down_diagnostic(config.characteristics, p['horizon'], p['exact_threshold'], p['method'],
                                   p['samples'], p['seed'] or 0)
    frame = pd.DataFrame([rate.to_dict() for rate in report.rates])
    if report.partial_sums:
        frame['partial_sum'] = report.partial_sums
    return [write_table(frame, out, 'cdi', fmt), write_report(report.to_dict(), out, 'cdi_summary')]


def compat_check(config: ExperimentConfig, out: str, fmt: str) -> List[str]:
    """Compatibility defects between level n and every lower level (or the requested one)."""
    n = config.parameters['n']
    levels = [config.parameters['m']] if config.parameters['m'] else list(range(1, n))
    engine = RateEngine(config.characteristics)
    reports = [compatibility_defect(config.characteristics, n, m, engine) for m in levels]
    frame = pd.DataFrame([{'n': report.n, 'm': report.m, 'max_defect': float(report.max_defect),
                           'checked': report.checked} for report in reports])
    return [write_table(frame, out, 'compatibility', fmt)]


COMMANDS: Dict[str, Callable] = {
    'validate': validate,
    'rates': rates,
    'stationary': stationary,
    'transient': transient,
    'simulate': simulate,
    'dust-chain': dust_chain,
    'dust-sde': dust_sde,
    'logistic': logistic,
    'cdi': cdi,
    'compat-check': compat_check,
}


@timer_decorator
def run(config: ExperimentConfig, command: str = None, out: str = None, fmt: str = 'csv', **overrides) -> RunRecord:
    """
    Run one command.

    :param config: The experiment configuration.
    :param command: The command, overriding the configured one.
    :param out: The output directory, overriding the configured one.
    :param fmt: 'csv' or 'json' for tables.
    :param overrides: Parameter overrides such as seed and threads.
    :return: The run record, also written as manifest.json.
    """
    config = config.bind(command, **overrides)
    if config.command != 'validate':
        report = validate_characteristics(config.characteristics)
        if not report.is_valid:
            raise ConfigError(report.plain_str())
    directory = ensure_directory(resolve_output_dir(out, config.output_dir))
    runner_logger.info(COMMAND_START.format(config.command, directory))

    started = datetime.datetime.now().isoformat()
    try:
        files = COMMANDS[config.command](config, directory, fmt)
    finally:
        finished = datetime.datetime.now().isoformat()
    manifest = [(os.path.relpath(path, directory), sha256_of(path)) for path in files]
    record = RunRecord(config.command, config.raw, config.parameters, VERSION, started, finished, manifest,
                       config.checksum())
    write_report(record.to_dict(), directory, 'manifest')
    runner_logger.info(COMMAND_DONE.format(config.command, len(files)))
    return record
