"""Monte Carlo comparison of the schemes over random ring deployments.

Every (N, P0, trial) cell draws its channel from a generator keyed by
(seed, N, trial), so power sweeps reuse the same channels and parallel runs
reproduce serial ones exactly. Trials are reduced in (N, P0, trial) order.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from ..errors import DomainError, ScheduleError, WptNomaError
from ..models.network import dbm_to_watts, energy_efficiency, jain_index
from ..models.presets import MONTE_CARLO_PRESET
from ..models.schedulers import run_scheme
from .channel import ChannelModelParams, sample_instance, trial_rng

RESULT_SCHEMES = {
    'a': 'a', 'b': 'b', 'c': 'c', 'd': 'd',
    'tdma-sum': 'tdma_sum', 'tdma_sum': 'tdma_sum',
    'tdma-common': 'tdma_common', 'tdma_common': 'tdma_common',
}

AGGREGATE_COLUMNS = ['scheme', 'N', 'P0_dbm', 'mean_objective_bpshz', 'mean_T', 'mean_jain',
                     'mean_energy_eff', 'mean_greedy_iters', 'trials']
TRIAL_COLUMNS = ['scheme', 'N', 'P0_dbm', 'objective_bpshz', 'T', 'jain', 'energy_eff',
                 'greedy_iters', 'sum_rate', 'trial', 'status', 'seed']
EXTRA_COLUMNS = ['scheme', 'N', 'P0_dbm', 'mean_sum_rate', 'mean_harvest_fraction',
                 'mean_normalized_throughput', 'trials']
TRACE_COLUMNS = ['N', 'P0_dbm', 'iteration', 'mean_min_rate', 'trials']
FLOAT_FORMAT = '%.10g'


@dataclass(frozen=True)
class ExperimentConfig:
    n_users_list: Tuple[int, ...] = (3,)
    p0_dbm_list: Tuple[float, ...] = (10.0, 20.0, 30.0, 40.0)
    trials: int = 1000
    seed: int = 0
    schemes: Tuple[str, ...] = ('a', 'b', 'c', 'd', 'tdma-sum', 'tdma-common')
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 1e6
    antenna_gains_db: float = MONTE_CARLO_PRESET.antenna_gains_db
    eh_efficiency: float = 0.5
    amp_efficiency: float = 0.38
    # scheme (b) time-sharing search; greedy also feeds the convergence trace
    timeshare_mode: str = 'greedy'
    # run the subgradient loops of (c) and (d) next to their line searches
    dual_loops: bool = False
    channel: ChannelModelParams = field(default_factory=ChannelModelParams)

    def __post_init__(self):
        object.__setattr__(self, 'n_users_list', tuple(int(n) for n in self.n_users_list))
        object.__setattr__(self, 'p0_dbm_list', tuple(float(p) for p in self.p0_dbm_list))
        object.__setattr__(self, 'schemes', tuple(self.schemes))
        if not self.n_users_list or not self.p0_dbm_list or not self.schemes:
            raise DomainError("n_users_list, p0_dbm_list and schemes must be nonempty")
        if any(n < 1 for n in self.n_users_list):
            raise DomainError(f"every N must be >= 1, got {self.n_users_list}")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        unknown = [s for s in self.schemes if s not in RESULT_SCHEMES]
        if unknown:
            raise DomainError(f"unknown schemes {unknown}")
        if self.timeshare_mode not in ('full', 'greedy'):
            raise DomainError(f"unknown timeshare_mode {self.timeshare_mode!r}")
        if not self.bandwidth_hz > 0:
            raise DomainError("bandwidth_hz must be > 0")

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ScheduleError("experiment config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ScheduleError(f"unknown experiment config fields {unknown}")
        kwargs = dict(doc)
        try:
            if 'channel' in kwargs:
                kwargs['channel'] = ChannelModelParams(**kwargs['channel'])
            for name in ('trials', 'seed'):
                if name in kwargs:
                    kwargs[name] = int(kwargs[name])
            return cls(**kwargs)
        except WptNomaError:
            raise
        except (TypeError, ValueError) as e:
            raise ScheduleError(f"malformed experiment config: {e}") from e

    def to_dict(self):
        doc = asdict(self)
        doc['n_users_list'] = list(self.n_users_list)
        doc['p0_dbm_list'] = list(self.p0_dbm_list)
        doc['schemes'] = list(self.schemes)
        return doc


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    n_users: int
    p0_dbm: float
    seed: int
    # scheme label -> row of metrics (or a failure status)
    results: Dict[str, dict] = field(default_factory=dict)
    greedy_history: Tuple[float, ...] = ()

    def rows(self):
        for scheme, metrics in self.results.items():
            yield {
                'scheme': scheme,
                'N': self.n_users,
                'P0_dbm': self.p0_dbm,
                'objective_bpshz': metrics.get('objective'),
                'T': metrics.get('T'),
                'jain': metrics.get('jain'),
                'energy_eff': metrics.get('energy_eff'),
                'greedy_iters': metrics.get('greedy_iters'),
                'sum_rate': metrics.get('sum_rate'),
                'trial': self.trial,
                'status': metrics['status'],
                'seed': self.seed,
            }


def _metrics(result, p0_watts):
    rates = result.allocation.rates
    return {
        'objective': float(result.objective),
        'T': float(result.T),
        'jain': jain_index(rates),
        # N times the mean rate is the delivered sum rate
        'energy_eff': energy_efficiency(len(rates), float(rates.mean()), p0_watts, result.T),
        'greedy_iters': int(result.diagnostics.get('greedy_iterations', 0)),
        'sum_rate': float(rates.sum()),
        'status': 'ok',
    }


def run_trial(config, n_users, p0_dbm, trial):
    """Sample one network and run every configured scheme on it."""
    rng = trial_rng(config.seed, n_users, trial)
    instance = sample_instance(config.channel, config, rng, n_users=n_users, p0_dbm=p0_dbm)
    p0_watts = dbm_to_watts(p0_dbm)
    results = {}
    history = ()
    for scheme in config.schemes:
        label = RESULT_SCHEMES[scheme]
        try:
            result = run_scheme(instance, scheme, mode=config.timeshare_mode, dual=config.dual_loops)
            results[label] = _metrics(result, p0_watts)
            if label == 'b' and 'greedy_history' in result.diagnostics:
                history = tuple(result.diagnostics['greedy_history'])
        except (WptNomaError, ArithmeticError) as e:
            logging.warning(f"trial {trial} (N={n_users}, P0={p0_dbm} dBm) scheme {label} failed: {e}")
            results[label] = {'status': f"failed:{type(e).__name__}"}
    return TrialRecord(trial=trial, n_users=n_users, p0_dbm=p0_dbm, seed=config.seed,
                       results=results, greedy_history=history)


def _run_cell(args):
    return run_trial(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: List[TrialRecord]
    trials_frame: pd.DataFrame
    aggregate: pd.DataFrame
    aggregate_extra: pd.DataFrame
    greedy_trace: pd.DataFrame

    def summary_lines(self):
        for row in self.aggregate.itertuples(index=False):
            yield (f"scheme={row.scheme} N={row.N} P0={row.P0_dbm:g}dBm "
                   f"objective={row.mean_objective_bpshz:.6g} T={row.mean_T:.4f} "
                   f"jain={row.mean_jain:.4f} trials={row.trials}")

    def write_csvs(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        paths = {}
        for name, frame in (('trials.csv', self.trials_frame), ('aggregate.csv', self.aggregate),
                            ('aggregate_extra.csv', self.aggregate_extra),
                            ('greedy_trace.csv', self.greedy_trace)):
            path = os.path.join(out_dir, name)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            paths[name] = path
        return paths


def _cell_keys(config):
    return [(n, p) for n, p in product(config.n_users_list, config.p0_dbm_list)]


def aggregate_trials(config, frame):
    """Means per (scheme, N, P0) over successful trials, in configuration order."""
    ok = frame[frame['status'] == 'ok']
    labels = list(dict.fromkeys(RESULT_SCHEMES[s] for s in config.schemes))
    main, extra = [], []
    for label, (n, p0) in product(labels, _cell_keys(config)):
        cell = ok[(ok['scheme'] == label) & (ok['N'] == n) & (ok['P0_dbm'] == p0)]
        count = len(cell)
        mean = (lambda col: float(cell[col].astype(float).mean())) if count else (lambda col: float('nan'))
        main.append({
            'scheme': label, 'N': n, 'P0_dbm': p0,
            'mean_objective_bpshz': mean('objective_bpshz'),
            'mean_T': mean('T'),
            'mean_jain': mean('jain'),
            'mean_energy_eff': mean('energy_eff'),
            'mean_greedy_iters': mean('greedy_iters'),
            'trials': count,
        })
        harvest = float((1.0 - cell['T'].astype(float)).mean()) if count else float('nan')
        extra.append({
            'scheme': label, 'N': n, 'P0_dbm': p0,
            'mean_sum_rate': mean('sum_rate'),
            'mean_harvest_fraction': harvest,
            'mean_normalized_throughput': mean('sum_rate') / n if count else float('nan'),
            'trials': count,
        })
    return pd.DataFrame(main, columns=AGGREGATE_COLUMNS), pd.DataFrame(extra, columns=EXTRA_COLUMNS)


def greedy_trace(config, records):
    """Mean min rate after each greedy iteration; converged runs repeat their final value."""
    rows = []
    for n, p0 in _cell_keys(config):
        histories = [r.greedy_history for r in records
                     if r.n_users == n and r.p0_dbm == p0 and r.greedy_history]
        if not histories:
            continue
        depth = max(len(h) for h in histories)
        padded = np.array([list(h) + [h[-1]] * (depth - len(h)) for h in histories])
        for k, value in enumerate(padded.mean(axis=0)):
            rows.append({'N': n, 'P0_dbm': p0, 'iteration': k, 'mean_min_rate': float(value),
                         'trials': len(histories)})
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def run_experiment(config, workers=None, out_dir=None):
    """Run every (N, P0, trial) cell, optionally in a process pool, and reduce in cell order."""
    if workers is None:
        from ..config import load_settings
        workers = load_settings().workers
    tasks = [(config, n, p0, t) for n, p0 in _cell_keys(config) for t in range(config.trials)]
    logging.info(f"monte carlo: {len(tasks)} trials over {len(_cell_keys(config))} cells, {workers} worker(s)")

    if workers <= 1 or len(tasks) == 1:
        records = [_run_cell(task) for task in tasks]
    else:
        chunksize = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, tasks, chunksize=chunksize))
    records.sort(key=lambda r: (config.n_users_list.index(r.n_users),
                                config.p0_dbm_list.index(r.p0_dbm), r.trial))

    frame = pd.DataFrame([row for r in records for row in r.rows()], columns=TRIAL_COLUMNS)
    aggregate, extra = aggregate_trials(config, frame)
    result = ExperimentResult(config, records, frame, aggregate, extra, greedy_trace(config, records))
    failed = int((frame['status'] != 'ok').sum())
    if failed:
        logging.warning(f"monte carlo: {failed} scheme run(s) failed")
    if out_dir is not None:
        result.write_csvs(out_dir)
    return result
