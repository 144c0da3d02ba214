import os

import numpy as np
import pytest

import pyefc._examples
from pyefc.__main__ import EXIT_OK, EXIT_VALIDATION, main
from pyefc.misc.commands import COMMANDS, ExperimentConfig, resolve_output_dir, run
from pyefc.misc.exceptions import ConfigError, OutputError
from pyefc.process.functionals import VERDICT_MET
from pyefc.process.rates import build_generator
from pyefc.schema.partition import Partition, parse_rgs
from pyefc.util.converter import PandasDataFrameToTrajectory
from pyefc.util.export import read_distribution, read_generator, read_report, read_table

EXAMPLES = os.path.dirname(pyefc._examples.__file__)


def example(name):
    return os.path.join(EXAMPLES, name)


def configuration(characteristics, **parameters):
    return ExperimentConfig.from_dict({'schema_version': 1, 'characteristics': characteristics,
                                       'parameters': parameters})


MIXED = {'c_e': 0.5, 'c_k': 1, 'nu_disl': [{'weight': 1, 'masses': [0.5, 0.5]}],
         'nu_coag': [{'weight': 2, 'masses': [0.3]}]}
DUST = {'c_e': 0.5, 'nu_disl': [{'weight': 1, 'masses': [0.5, 0.5]}],
        'nu_coag': [{'weight': 1, 'masses': [0.5]}]}


def test_stationary_command(tmp_path):
    config = ExperimentConfig.from_file(example('two_state.yaml'))
    record = run(config, out=str(tmp_path))
    assert record.command == 'stationary'
    assert {path for path, _ in record.files} == {'stationary.csv', 'block_counts.csv', 'ranked_frequencies.csv',
                                                  'diagnostics.json'}
    rho = read_distribution(str(tmp_path / 'stationary.csv'), 2)
    assert rho.weight_of(Partition.one(2)) == pytest.approx(2 / 3, abs=1e-12)
    manifest = read_report(str(tmp_path / 'manifest.json'))
    assert manifest['parameters']['n'] == 2
    assert manifest['input_checksum'] == config.checksum()


def test_invalid_characteristics_exit_with_a_validation_code(tmp_path, capsys):
    code = main(['--config', example('invalid.yaml'), '--out', str(tmp_path)])
    assert code == EXIT_VALIDATION
    assert 'nu_disl' in capsys.readouterr().err
    report = read_report(str(tmp_path / 'validation.json'))
    assert report['valid'] is False


def test_main_prints_the_written_files(tmp_path, capsys):
    code = main(['cdi', '--config', example('kingman_cdi.yaml'), '--out', str(tmp_path)])
    assert code == EXIT_OK
    assert capsys.readouterr().out.split() == ['cdi.csv', 'cdi_summary.json']
    summary = read_report(str(tmp_path / 'cdi_summary.json'))
    assert summary['partial_sum'] == pytest.approx(1.98, abs=1e-12)
    assert summary['verdict'] == VERDICT_MET


def test_stochastic_runs_are_reproducible(tmp_path):
    config = ExperimentConfig.from_file(example('mixed.yaml'))
    overrides = dict(seed=42, n=4, paths=8, horizon=2.0, grid_points=11)
    first = run(config, 'simulate', str(tmp_path / 'first'), **overrides)
    second = run(config, 'simulate', str(tmp_path / 'second'), **overrides)
    assert first.files == second.files
    for path, _ in first.files:
        with open(tmp_path / 'first' / path, 'rb') as left, open(tmp_path / 'second' / path, 'rb') as right:
            assert left.read() == right.read()


def test_stochastic_commands_need_a_seed():
    assert ExperimentConfig.from_file(example('mixed.yaml')).bind().parameters['seed'] == 20240101
    config = configuration(MIXED)
    with pytest.raises(ConfigError):
        config.bind('simulate')
    assert config.bind('simulate', seed=1).parameters['seed'] == 1


@pytest.mark.parametrize('data', [
    {'schema_version': 1, 'colour': 'red'},
    {'schema_version': 2},
    {'schema_version': 1, 'command': 'explode'},
    {'schema_version': 1, 'characteristics': {'c_k': -1, 'c_x': 2}},
    {'schema_version': 1, 'parameters': [1, 2]},
    ['schema_version', 1],
])
def test_malformed_configurations(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_unknown_parameters_are_rejected():
    config = ExperimentConfig.from_dict({'schema_version': 1, 'parameters': {'n': 3, 'paths': 4}})
    with pytest.raises(ConfigError):
        config.bind('rates')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({'schema_version': 1}).bind()


def test_output_directory_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv('PYEFC_OUTPUT_ROOT', raising=False)
    assert resolve_output_dir('cli', 'configured') == 'cli'
    assert resolve_output_dir(None, 'configured') == 'configured'
    assert resolve_output_dir(None, None) == 'efc-runs'
    monkeypatch.setenv('PYEFC_OUTPUT_ROOT', str(tmp_path))
    assert resolve_output_dir('cli', None) == os.path.join(str(tmp_path), 'cli')
    assert resolve_output_dir(str(tmp_path / 'absolute'), None) == str(tmp_path / 'absolute')


def test_generator_files_read_back(tmp_path):
    config = configuration(MIXED, n=3)
    run(config, 'rates', str(tmp_path))
    G = read_generator(str(tmp_path / 'generator.txt'), 3)
    expected = build_generator(config.characteristics, 3)
    np.testing.assert_array_equal(G.dense(), expected.dense())
    states = read_table(str(tmp_path / 'states.csv'))
    assert [parse_rgs(code).to_partition() for code in states['rgs']] == list(expected.states)


def test_transient_command_in_json(tmp_path):
    config = ExperimentConfig.from_file(example('two_state.yaml'))
    run(config, 'transient', str(tmp_path), fmt='json', init='zero', times=[1.0])
    frame = read_table(str(tmp_path / 'transient.json'))
    one = frame[(frame['time'] == 1.0) & (frame['blocks'] == 1)]['weight'].iloc[0]
    assert one == pytest.approx(2 / 3 - 2 / 3 * np.exp(-1.5), abs=1e-9)
    assert read_report(str(tmp_path / 'convergence.json'))['total_variation'] <= 1e-6


def test_path_file_reads_back_as_a_trajectory(tmp_path):
    config = ExperimentConfig.from_file(example('mixed.yaml'))
    run(config, 'simulate', str(tmp_path), seed=3, n=4, paths=2, horizon=3.0, grid_points=4)
    frame = read_table(str(tmp_path / 'path_0.csv')).set_index('time')
    trajectory = PandasDataFrameToTrajectory()(frame, horizon=3.0, n=4)
    assert trajectory.partitions()[0] == Partition.zero(4)
    assert list(trajectory.observables['blocks']) == [pi.num_blocks for pi in trajectory.partitions()]
    ensemble = read_table(str(tmp_path / 'ensemble.csv'))
    assert list(ensemble['samples']) == [2] * 4
    assert ensemble['blocks_mean'].iloc[0] == 4


def test_auxiliary_chain_commands(tmp_path):
    config = configuration(DUST)
    run(config, 'dust-chain', str(tmp_path), seed=1, n=8, paths=50, horizon=1.0, grid_points=3)
    table = read_table(str(tmp_path / 'dust_chain.csv'))
    assert table['dust_mean'].iloc[0] == 0.0
    assert table['exact_mean'].iloc[0] == 0.0
    run(config, 'dust-sde', str(tmp_path), seed=1, paths=50, horizon=1.0, grid_points=3)
    assert len(read_table(str(tmp_path / 'dust_sde.csv'))) == 3
    with pytest.raises(ConfigError):
        run(config, 'logistic', str(tmp_path), seed=1)


@pytest.mark.parametrize('name', ['two_state.yaml', 'erosion_kingman.yaml', 'mixed.yaml', 'dust.yaml',
                                  'logistic.yaml', 'kingman_cdi.yaml', 'invalid.yaml'])
def test_shipped_configurations_bind(name):
    config = ExperimentConfig.from_file(example(name)).bind()
    assert config.command in COMMANDS


def test_unknown_table_format(tmp_path):
    config = ExperimentConfig.from_file(example('two_state.yaml'))
    with pytest.raises(OutputError):
        run(config, out=str(tmp_path), fmt='parquet')


def test_table_columns(tmp_path):
    run(ExperimentConfig.from_file(example('two_state.yaml')), out=str(tmp_path))
    assert list(read_table(str(tmp_path / 'stationary.csv')).columns) == ['index', 'partition', 'rgs', 'blocks',
                                                                          'weight']
    assert list(read_table(str(tmp_path / 'block_counts.csv')).columns) == ['blocks', 'weight']
    run(configuration(MIXED), 'simulate', str(tmp_path), seed=5, n=3, paths=2, horizon=1.0, grid_points=3)
    assert list(read_table(str(tmp_path / 'path_0.csv')).columns) == ['time', 'blocks', 'singletons', 'dust',
                                                                      'event_kind', 'detail', 'state']
    assert list(read_table(str(tmp_path / 'events_0.csv')).columns) == ['time', 'event_kind', 'detail']
    assert list(read_table(str(tmp_path / 'ensemble.csv')).columns) == [
        'time', 'blocks_mean', 'blocks_se', 'singletons_mean', 'singletons_se', 'dust_mean', 'dust_se', 'samples']


def test_stationary_on_a_single_element(tmp_path):
    record = run(configuration({'c_k': 1, 'nu_disl': [{'weight': 1, 'masses': [0.5, 0.5]}]}, n=1), 'stationary',
                 str(tmp_path))
    assert len(record.files) == 4
    rho = read_distribution(str(tmp_path / 'stationary.csv'), 1)
    assert rho.weight_of(Partition.one(1)) == 1.0
    diagnostics = read_report(str(tmp_path / 'diagnostics.json'))
    assert diagnostics['bounds'] == []
    assert diagnostics['dust'] == []
    assert diagnostics['dust_proxy'] == 1.0
