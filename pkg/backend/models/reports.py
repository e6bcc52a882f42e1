"""JSON reports over the built-in examples, shared by the CLI and the HTTP API."""
import logging
from itertools import permutations

import numpy as np

from .network import rate_matrix, sum_throughput
from .presets import example_description, example_instance
from .schedulers import equal_rate_ts, optimal_T, scheme_a, scheme_b
from .timeshare import min_rate_curve, region_boundary, solve_minrate

# second harvesting time to compare regions at, per example
COMPARISON_T = {2: 0.54}
CURVE_T = tuple(np.round(np.arange(0.1, 0.91, 0.1), 2))
REGION_SAMPLES = 5


def corner_points(instance, T):
    rows = list(permutations(range(1, instance.n_users + 1)))
    c = rate_matrix(instance, T, rows)
    return [{'order': list(row), 'rates': [float(r) for r in c[:, m]]} for m, row in enumerate(rows)]


def region_comparison(instance, T_star, T_other):
    """Is there a point of the region at T_other better for the weakest user than anything at T_star?"""
    best_star = solve_minrate(instance, T_star).min_rate
    corners = corner_points(instance, T_other)
    best_other = solve_minrate(instance, T_other).min_rate
    return {
        'T': T_other,
        'corners': corners,
        'max_min_rate_at_T_star': best_star,
        'max_min_rate': best_other,
        'not_dominated': best_other > best_star,
    }


def example_report(example_id):
    instance = example_instance(example_id)
    T_star = optimal_T(instance)
    equal = scheme_b(instance, mode='full', T=T_star)
    report = {
        'id': int(example_id),
        'description': example_description(example_id),
        'instance': instance.to_dict(),
        'aggregate_snr': instance.aggregate_snr,
        'T_star': T_star,
        'sum_throughput': sum_throughput(instance, T_star),
        'corners': corner_points(instance, T_star),
        'fixed_order': scheme_a(instance).to_dict(),
        'equal_point': {
            'rates': [float(r) for r in equal.allocation.rates],
            'min_rate': equal.objective,
            'schedule': equal.allocation.schedule.to_dict(),
        },
        'equal_rate_timeshare': equal_rate_ts(instance, dual=False).to_dict(),
        'region': [p.to_dict() for p in region_boundary(instance, T_star, REGION_SAMPLES)],
        'min_rate_curve': min_rate_curve(instance, CURVE_T),
    }
    if int(example_id) in COMPARISON_T:
        report['comparison'] = region_comparison(instance, T_star, COMPARISON_T[int(example_id)])
    logging.info(f"example {example_id}: T*={T_star:.4f} equal point={equal.objective:.4f}")
    return report
