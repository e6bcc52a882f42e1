import json
import math

import numpy as np
import pytest

from backend.errors import DegenerateInstanceError, DomainError, InconsistencyError
from backend.models.network import (NetworkInstance, UserChannel, rates_fixed_order, region_membership,
                                    sum_throughput)
from backend.models.schedulers import (_deliver_equal_rate, dual_coefficients, equal_rate_fixed, equal_rate_ts,
                                       optimal_T, prefix_bounds, run_scheme, scheme_a, scheme_b,
                                       stationarity_residual)
from backend.utils.numerics import SubgradientConfig

GRID = np.linspace(1e-4, 1 - 1e-4, 20_001)
FINE_GRID = np.arange(1e-5, 1.0, 1e-5)
SHORT_DUAL = SubgradientConfig(max_iterations=3000)


def _grid_max(f):
    return max(f(T) for T in GRID)


def _fixed_order_oracle(instance):
    coeffs = dual_coefficients(instance)
    T = FINE_GRID[:, None]
    rates = T * np.log2(1.0 + coeffs.a / (coeffs.b + T / (1.0 - T)))
    return float(rates.min(axis=1).max())


def _prefix_oracle(instance):
    coeffs = dual_coefficients(instance)
    T = FINE_GRID[:, None]
    bounds = T * np.log2(1.0 + coeffs.c * (1.0 - T) / T) / coeffs.remaining_count
    return float(bounds.min(axis=1).max())


def test_optimal_T_on_examples(example1, example2):
    assert optimal_T(example1) == pytest.approx(0.7958, abs=5e-4)
    assert optimal_T(example2) == pytest.approx(0.8895, abs=5e-4)


def test_optimal_T_against_a_grid(random_instance):
    for seed in range(20):
        instance = random_instance(3, seed)
        values = sum_throughput(instance, GRID)
        T_grid = GRID[int(np.argmax(values))]
        assert optimal_T(instance) == pytest.approx(T_grid, abs=1e-3)
        assert sum_throughput(instance, optimal_T(instance)) >= values.max() - 1e-9


def test_optimal_T_at_unit_aggregate_snr():
    base = NetworkInstance.from_path_losses([1e-6])
    instance = NetworkInstance.from_path_losses([1e-6 / math.sqrt(base.aggregate_snr)])
    assert instance.aggregate_snr == pytest.approx(1.0, abs=1e-9)
    values = sum_throughput(instance, GRID)
    assert optimal_T(instance) == pytest.approx(GRID[int(np.argmax(values))], abs=1e-3)


def test_optimal_T_needs_a_positive_gain():
    instance = NetworkInstance(users=(UserChannel(1, 1e-6, fading=0.0),), bs_power_watts=1.0,
                               noise_power_watts=1e-14, eh_efficiency=0.5, amp_efficiency=0.38)
    with pytest.raises(DegenerateInstanceError):
        optimal_T(instance)


def test_stationarity_at_the_optimum(example1, example2):
    for instance in (example1, example2):
        assert abs(stationarity_residual(instance, optimal_T(instance))) < 1e-5


def test_scheme_a_single_user():
    instance = NetworkInstance.from_path_losses([3e-6])
    result = scheme_a(instance)
    assert result.objective == pytest.approx(sum_throughput(instance, optimal_T(instance)), abs=1e-12)


def test_scheme_a_on_examples(example1, example2):
    result = scheme_a(example1)
    assert result.objective == pytest.approx(0.918, abs=5e-3)
    assert result.allocation.sum_rate == pytest.approx(5.578, abs=5e-3)
    assert scheme_a(example2).allocation.sum_rate == pytest.approx(
        sum_throughput(example2, optimal_T(example2)), abs=1e-9)


def test_scheme_a_with_fixed_T(example1):
    assert scheme_a(example1, T=0.5).T == 0.5
    with pytest.raises(DomainError):
        scheme_a(example1, T=1.0)


@pytest.mark.parametrize('mode', ['full', 'greedy'])
def test_scheme_b_example1(example1, mode):
    result = scheme_b(example1, mode=mode)
    assert result.objective == pytest.approx(2.7891, abs=2e-3)
    assert result.T == pytest.approx(0.7958, abs=5e-4)
    assert result.allocation.schedule is not None
    assert sorted(result.allocation.schedule.fractions) == pytest.approx([0.4688, 0.5312], abs=5e-3)


def test_scheme_b_rejects_unknown_mode(example1):
    with pytest.raises(DomainError):
        scheme_b(example1, mode='exhaustive')


def test_scheme_c_single_user():
    instance = NetworkInstance.from_path_losses([3e-6])
    result = equal_rate_fixed(instance, dual=False)
    assert result.objective == pytest.approx(sum_throughput(instance, optimal_T(instance)), abs=1e-8)


def test_scheme_c_against_a_grid(example1, example2):
    for instance in (example1, example2):
        result = equal_rate_fixed(instance, SHORT_DUAL)
        grid = _grid_max(lambda T: rates_fixed_order(instance, T).min_rate)
        assert result.objective >= grid - 1e-6
        assert result.objective <= grid + 1e-3
        assert result.allocation.rates == pytest.approx([result.objective] * instance.n_users)
        assert result.diagnostics['polish_objective'] <= result.objective


def test_scheme_c_is_below_time_sharing(example1):
    assert equal_rate_fixed(example1, dual=False).objective <= 2.7891 + 2e-3


def test_scheme_d_example1(example1):
    result = equal_rate_ts(example1, dual=False)
    assert result.objective == pytest.approx(2.7891, abs=2e-3)
    assert result.T == pytest.approx(0.7958, abs=2e-3)
    assert result.diagnostics['timeshare_min_rate'] >= result.objective - 1e-6
    assert region_membership(example1, result.T, result.allocation.rates * (1 - 1e-9))


def test_scheme_d_example2_against_a_grid(example2):
    result = equal_rate_ts(example2, dual=False)
    grid = _grid_max(lambda T: float(prefix_bounds(example2, T).min()))
    assert grid - 1e-9 <= result.objective <= grid + 1e-3
    # the weak user's own bound at T* is the binding one, so d moves T away from T*
    assert result.T < optimal_T(example2)


def test_scheme_d_single_user():
    instance = NetworkInstance.from_path_losses([3e-6])
    result = equal_rate_ts(instance, dual=False)
    assert result.objective == pytest.approx(sum_throughput(instance, optimal_T(instance)), abs=1e-8)


def test_scheme_d_dual_loop_agrees(example1):
    result = equal_rate_ts(example1, SHORT_DUAL)
    diagnostics = result.diagnostics
    assert diagnostics['dual_objective'] == pytest.approx(diagnostics['closed_objective'], abs=1e-5)
    assert diagnostics['dual_bound'] >= diagnostics['closed_objective'] - 1e-6
    assert np.all(np.asarray(diagnostics['multipliers']) >= 0.0)
    assert 'complementary_slackness' in diagnostics


def test_scheme_d_greedy_mode(random_instance):
    instance = random_instance(4, 7)
    full = equal_rate_ts(instance, dual=False, mode='full')
    greedy = equal_rate_ts(instance, dual=False, mode='greedy')
    assert greedy.objective == pytest.approx(full.objective, abs=1e-9)
    assert greedy.diagnostics['timeshare_min_rate'] >= greedy.objective - 1e-6


def test_scheme_b_is_strictly_below_d_on_example2(example2):
    b = scheme_b(example2).objective
    assert b == pytest.approx(0.426, abs=5e-3)
    assert b < equal_rate_ts(example2, dual=False).objective


def test_dominance_chain(random_instance):
    for seed in range(10):
        instance = random_instance(3, seed)
        a = scheme_a(instance).objective
        b = scheme_b(instance).objective
        c = equal_rate_fixed(instance, dual=False).objective
        d = equal_rate_ts(instance, dual=False).objective
        assert a <= b + 1e-9
        assert a <= c + 1e-9
        assert b <= d + 1e-9
        assert c <= d + 1e-9


def test_deliver_equal_rate_reports_inconsistency(example1):
    with pytest.raises(InconsistencyError):
        _deliver_equal_rate(example1, 0.7958, 10.0, 'full')


def test_zero_gain_users_are_left_silent():
    instance = NetworkInstance.from_path_losses([3e-6, 2e-6, 1e-6], fading=[1.0, 1.0, 0.0])
    silent_free = NetworkInstance.from_path_losses([3e-6, 2e-6])
    for scheme in ('a', 'b', 'd'):
        result = run_scheme(instance, scheme, dual=False)
        reference = run_scheme(silent_free, scheme, dual=False)
        assert result.allocation.rates[-1] == 0.0
        assert result.objective == pytest.approx(reference.objective, abs=1e-9)
        assert result.diagnostics['silent_users'] == 1
        if result.allocation.schedule is not None:
            assert all(row[-1] == 3 for row in result.allocation.schedule.permutations)


def test_run_scheme_dispatch(example1):
    assert run_scheme(example1, 'tdma-sum').scheme == 'tdma_sum'
    assert run_scheme(example1, 'tdma_common').scheme == 'tdma_common'
    with pytest.raises(DomainError):
        run_scheme(example1, 'e')
    with pytest.raises(DomainError):
        run_scheme(example1, 'd', T=0.5)
    assert run_scheme(example1, 'b', T=0.5).T == 0.5


def test_results_are_json_documents(example1):
    for scheme in ('a', 'b', 'c', 'd'):
        doc = run_scheme(example1, scheme, config=SHORT_DUAL).to_dict()
        text = json.dumps(doc)
        assert json.loads(text)['scheme'] == scheme
        assert len(doc['rates']) == 2


@pytest.mark.slow
def test_equal_rate_schemes_against_grids_on_random_instances(random_instance):
    for seed in range(100):
        instance = random_instance(3, seed)
        c = equal_rate_fixed(instance, dual=False).objective
        d = equal_rate_ts(instance, dual=False).objective
        assert c >= _grid_max(lambda T: rates_fixed_order(instance, T).min_rate) - 1e-6
        assert d >= _grid_max(lambda T: float(prefix_bounds(instance, T).min())) - 1e-6


def _check_dual_loops(random_instance, count):
    for i in range(count):
        instance = random_instance(2 + i % 3, 500 + i)
        fixed = equal_rate_fixed(instance).diagnostics
        assert fixed['dual_objective'] == pytest.approx(_fixed_order_oracle(instance), abs=1e-4)
        shared = equal_rate_ts(instance).diagnostics
        assert shared['dual_objective'] == pytest.approx(shared['closed_objective'], abs=1e-5)
        assert shared['dual_objective'] == pytest.approx(_prefix_oracle(instance), abs=1e-4)


def test_dual_loops_match_the_oracles(random_instance):
    _check_dual_loops(random_instance, 9)


@pytest.mark.slow
def test_dual_loops_match_the_oracles_on_many_instances(random_instance):
    _check_dual_loops(random_instance, 100)
