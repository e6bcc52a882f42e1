import numpy as np
import pandas as pd
import pytest

from backend.errors import DomainError, NumericError, ScheduleError
from backend.models.network import dbm_to_watts
from backend.utils import montecarlo
from backend.utils.montecarlo import (AGGREGATE_COLUMNS, TRIAL_COLUMNS, ExperimentConfig, run_experiment,
                                      run_trial)

SMALL = ExperimentConfig(n_users_list=(2, 3), p0_dbm_list=(20.0, 30.0), trials=3, seed=5)


@pytest.fixture(scope='module')
def small_run():
    return run_experiment(SMALL, workers=1)


def test_config_from_dict():
    config = ExperimentConfig.from_dict({
        'n_users_list': [2], 'p0_dbm_list': [10, 20], 'trials': '4', 'schemes': ['a', 'd'],
        'channel': {'ring_outer_m': 15.0},
    })
    assert config.p0_dbm_list == (10.0, 20.0)
    assert config.trials == 4
    assert config.channel.ring_outer_m == 15.0
    assert ExperimentConfig.from_dict(config.to_dict()) == config


@pytest.mark.parametrize('doc', [
    {'trials': 10, 'colour': 'blue'},
    {'trials': 'many'},
    {'channel': {'wavelength': 1.0}},
    [1, 2, 3],
])
def test_malformed_configs(doc):
    with pytest.raises(ScheduleError):
        ExperimentConfig.from_dict(doc)


def test_invalid_config_values():
    with pytest.raises(DomainError):
        ExperimentConfig(schemes=('a', 'z'))
    with pytest.raises(DomainError):
        ExperimentConfig(trials=0)


def test_small_run_shapes(small_run):
    frame = small_run.trials_frame
    assert list(frame.columns) == TRIAL_COLUMNS
    assert len(frame) == 2 * 2 * 3 * 6
    assert list(small_run.aggregate.columns) == AGGREGATE_COLUMNS
    assert len(small_run.aggregate) == 6 * 2 * 2
    assert (frame['status'] == 'ok').all()
    assert (small_run.aggregate['trials'] == 3).all()


def test_equal_rate_schemes_are_perfectly_fair(small_run):
    frame = small_run.trials_frame
    for scheme in ('c', 'd'):
        assert np.allclose(frame.loc[frame['scheme'] == scheme, 'jain'].astype(float), 1.0)


def test_scheme_ordering_holds_per_trial(small_run):
    frame = small_run.trials_frame.set_index(['N', 'P0_dbm', 'trial', 'scheme'])['objective_bpshz']
    for (n, p0, trial), group in frame.groupby(level=[0, 1, 2]):
        values = group.droplevel([0, 1, 2])
        assert values['a'] <= values['b'] + 1e-9
        assert values['c'] <= values['d'] + 1e-9
        assert values['tdma_common'] <= values['d'] + 1e-9


def test_energy_efficiency_uses_the_delivered_sum_rate(small_run):
    frame = small_run.trials_frame
    spent = frame['P0_dbm'].map(dbm_to_watts) * (1.0 - frame['T'].astype(float))
    expected = frame['sum_rate'].astype(float) / spent
    assert np.allclose(frame['energy_eff'].astype(float), expected, rtol=1e-9)


def test_greedy_trace(small_run):
    trace = small_run.greedy_trace
    assert set(trace['N']) == {2, 3}
    for _, cell in trace.groupby(['N', 'P0_dbm']):
        assert list(cell['iteration']) == list(range(len(cell)))
        assert np.all(np.diff(cell['mean_min_rate'].to_numpy()) >= -1e-12)


def test_power_sweep_reuses_channels():
    low = run_trial(SMALL, 3, 20.0, 1)
    high = run_trial(SMALL, 3, 30.0, 1)
    assert high.results['a']['objective'] > low.results['a']['objective']


def test_parallel_run_matches_serial(small_run, tmp_path):
    parallel = run_experiment(SMALL, workers=2)
    pd.testing.assert_frame_equal(parallel.trials_frame, small_run.trials_frame)

    serial_paths = small_run.write_csvs(tmp_path / 'serial')
    parallel_paths = parallel.write_csvs(tmp_path / 'parallel')
    for name, path in serial_paths.items():
        with open(path, 'rb') as a, open(parallel_paths[name], 'rb') as b:
            assert a.read() == b.read()


def test_failed_runs_are_recorded(monkeypatch):
    real = montecarlo.run_scheme

    def flaky(instance, scheme, **kwargs):
        if scheme == 'c':
            raise NumericError('simulated failure')
        return real(instance, scheme, **kwargs)

    monkeypatch.setattr(montecarlo, 'run_scheme', flaky)
    config = ExperimentConfig(n_users_list=(2,), p0_dbm_list=(20.0,), trials=2, schemes=('a', 'c'))
    result = run_experiment(config, workers=1)
    frame = result.trials_frame
    assert set(frame.loc[frame['scheme'] == 'c', 'status']) == {'failed:NumericError'}
    aggregate = result.aggregate.set_index('scheme')
    assert aggregate.loc['c', 'trials'] == 0
    assert np.isnan(aggregate.loc['c', 'mean_objective_bpshz'])
    assert aggregate.loc['a', 'trials'] == 2


def test_summary_lines(small_run):
    lines = list(small_run.summary_lines())
    assert len(lines) == len(small_run.aggregate)
    assert lines[0].startswith('scheme=a N=2 P0=20dBm')


@pytest.mark.slow
def test_equal_rate_grows_with_power():
    config = ExperimentConfig(n_users_list=(3,), p0_dbm_list=(10.0, 20.0, 30.0, 40.0), trials=1000)
    aggregate = run_experiment(config).aggregate
    for scheme, cell in aggregate.groupby('scheme'):
        assert np.all(np.diff(cell['mean_objective_bpshz'].to_numpy()) > 0), scheme


def _check_baseline_trends(aggregate):
    cells = aggregate.set_index(['scheme', 'P0_dbm'])
    for p0 in (10.0, 20.0, 30.0, 40.0):
        assert cells.loc[('d', p0), 'mean_objective_bpshz'] > cells.loc[('tdma_common', p0), 'mean_objective_bpshz']
        assert cells.loc[('b', p0), 'mean_jain'] > cells.loc[('tdma_sum', p0), 'mean_jain']
    efficiency = cells.loc['d', 'mean_energy_eff'].sort_index().to_numpy()
    assert np.all(np.diff(efficiency) <= 0.0)


def test_noma_beats_tdma_at_smoke_scale():
    config = ExperimentConfig(n_users_list=(3,), p0_dbm_list=(10.0, 20.0, 30.0, 40.0), trials=25,
                              schemes=('b', 'd', 'tdma-sum', 'tdma-common'), seed=11)
    _check_baseline_trends(run_experiment(config, workers=1).aggregate)


@pytest.mark.slow
def test_noma_beats_tdma_at_full_scale():
    config = ExperimentConfig(n_users_list=(3,), p0_dbm_list=(10.0, 20.0, 30.0, 40.0), trials=10_000,
                              schemes=('b', 'd', 'tdma-sum', 'tdma-common'))
    _check_baseline_trends(run_experiment(config).aggregate)
