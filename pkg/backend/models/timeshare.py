"""Time-sharing over SIC decoding permutations.

The min-rate problem at a fixed T is linear in the time fractions: maximize R
subject to C @ tau >= R for every user and sum(tau) = 1, where C[n, m] is user
n's rate under permutation m. ``greedy_timeshare`` grows the permutation set
one row at a time instead of enumerating all N! orders.
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import permutations as all_permutations
from typing import List, Optional, Tuple

import numpy as np

from ..errors import DomainError, NumericError, ProblemSizeError, ScheduleError
from ..utils.numerics import Constraint, LinearProgram, solve_lp
from .network import TimeShareSchedule, _check_fraction, rate_matrix, rates_fixed_order, sum_throughput

MAX_FULL_SPACE_USERS = 7
MAX_REGION_USERS = 3
PRICE_TOL = 1e-9
IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class GreedyState:
    iteration: int
    permutations: Tuple[Tuple[int, ...], ...]
    rates: np.ndarray
    max_iterations: int
    # min rate after the seed solve and after every added permutation
    history: Tuple[float, ...] = ()
    converged: bool = False


@dataclass(frozen=True)
class MinRateLpResult:
    min_rate: float
    schedule: TimeShareSchedule
    per_user_rates: np.ndarray
    transmit_fraction: float
    pivots: int = 0
    # LP shadow price of each user's min-rate constraint, summing to 1
    prices: Optional[np.ndarray] = None
    greedy: Optional[GreedyState] = None

    def to_dict(self):
        doc = {
            'T': self.transmit_fraction,
            'min_rate': self.min_rate,
            'rates': [float(r) for r in self.per_user_rates],
            'schedule': self.schedule.to_dict(),
        }
        if self.greedy is not None:
            doc['greedy_iterations'] = self.greedy.iteration
            doc['greedy_history'] = list(self.greedy.history)
        return doc


def _normalize_rows(instance, permutations):
    rows = [tuple(int(u) for u in row) for row in permutations]
    if not rows:
        raise ScheduleError("at least one permutation is required")
    expected = set(range(1, instance.n_users + 1))
    for row in rows:
        if len(row) != instance.n_users or set(row) != expected:
            raise ScheduleError(f"row {row} is not a permutation of 1..{instance.n_users}")
    if len(set(rows)) != len(rows):
        raise ScheduleError("duplicate permutation rows")
    return rows


def build_minrate_lp(instance, T, permutations):
    """Variables (tau_1..tau_M, R); maximize R."""
    rows = _normalize_rows(instance, permutations)
    c = rate_matrix(instance, T, rows)
    m = len(rows)
    objective = np.zeros(m + 1)
    objective[-1] = 1.0
    constraints = [Constraint(np.append(c[n], -1.0), '>=', 0.0) for n in range(instance.n_users)]
    constraints.append(Constraint(np.append(np.ones(m), 0.0), '=', 1.0))
    return LinearProgram(objective=objective, constraints=constraints)


def full_space(n_users):
    if n_users > MAX_FULL_SPACE_USERS:
        raise ProblemSizeError(
            f"full-space search needs {math.factorial(n_users)} permutations; N={n_users} > {MAX_FULL_SPACE_USERS}")
    return list(all_permutations(range(1, n_users + 1)))


def solve_minrate(instance, T, permutations=None):
    """Max-min rate over time fractions; ``permutations=None`` searches all N! orders."""
    _check_fraction(T)
    T = float(T)
    rows = full_space(instance.n_users) if permutations is None else _normalize_rows(instance, permutations)
    solution = solve_lp(build_minrate_lp(instance, T, rows))
    if not solution.optimal:
        # tau uniform with R = 0 is always feasible and R is bounded by R_tot
        raise NumericError(f"min-rate LP returned status {solution.status!r}")

    tau = np.clip(solution.values[:-1], 0.0, None)
    tau = tau / tau.sum()
    schedule = TimeShareSchedule(permutations=tuple(rows), fractions=tau)
    rates = rate_matrix(instance, T, rows) @ schedule.fractions
    logging.debug(f"min-rate LP: T={T:.6f} M={len(rows)} R_min={rates.min():.8g} pivots={solution.pivots}")
    return MinRateLpResult(
        min_rate=float(rates.min()),
        schedule=schedule,
        per_user_rates=rates,
        transmit_fraction=T,
        pivots=solution.pivots,
        prices=_user_prices(solution.duals[:instance.n_users]),
    )


def _user_prices(duals):
    # tightening C tau - R >= 0 can only lower R, so these duals are <= 0
    w = np.where(np.isfinite(duals), -duals, 0.0)
    w = np.where(w > PRICE_TOL, w, 0.0)
    total = w.sum()
    return w / total if total > 0.0 else w


def _decode_order(rates, prices=None):
    """Higher rate decoded first.

    Users tied at the minimum rate are ordered by the LP shadow price of their
    rate constraint, the most constrained decoded last; remaining exact ties
    go to the lower position first.
    """
    n = len(rates)
    prices = np.zeros(n) if prices is None else prices
    positions = range(1, n + 1)
    return tuple(sorted(positions, key=lambda p: (prices[p - 1], -rates[p - 1], p)))


def _order_value(instance, T, order, prices):
    return float(prices @ rate_matrix(instance, T, [order])[:, 0])


def greedy_timeshare(instance, T, K=None):
    """Grow the permutation set from the descending-gain order until an order repeats or K is reached.

    A candidate order that cannot raise the LP optimum (its price-weighted
    rate does not beat the current min rate) also ends the search; with the
    price tie-break that order maximizes the weighted rate over all N!
    orders, so either stop certifies the full-space optimum.
    """
    n = instance.n_users
    K = n + 1 if K is None else int(K)
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")

    rows: List[Tuple[int, ...]] = [tuple(range(1, n + 1))]
    result = solve_minrate(instance, T, rows)
    history = [result.min_rate]
    added = 0
    converged = False
    for k in range(1, K + 1):
        candidate = _decode_order(result.per_user_rates, result.prices)
        if candidate in rows:
            converged = True
            break
        if result.prices.sum() > 0.0 and (
                _order_value(instance, T, candidate, result.prices)
                <= result.min_rate + IMPROVEMENT_TOL * max(1.0, result.min_rate)):
            logging.debug(f"greedy k={k}: {candidate} cannot raise R_min={result.min_rate:.8g}")
            converged = True
            break
        rows.append(candidate)
        result = solve_minrate(instance, T, rows)
        # an extra column cannot lower the LP optimum; guard against round-off
        history.append(max(result.min_rate, history[-1]))
        added = k
        logging.debug(f"greedy k={k}: added {candidate}, R_min={result.min_rate:.8g}")

    state = GreedyState(
        iteration=added,
        permutations=tuple(rows),
        rates=result.per_user_rates,
        max_iterations=K,
        history=tuple(history),
        converged=converged,
    )
    return MinRateLpResult(
        min_rate=result.min_rate,
        schedule=result.schedule,
        per_user_rates=result.per_user_rates,
        transmit_fraction=result.transmit_fraction,
        pivots=result.pivots,
        prices=result.prices,
        greedy=state,
    )


def min_rate_curve(instance, T_values, mode='full'):
    """Fixed-order min rate, time-sharing max-min rate and R_tot/N at each T."""
    if mode not in ('full', 'greedy'):
        raise DomainError(f"unknown mode {mode!r}")
    rows = []
    for T in T_values:
        T = float(T)
        fixed = rates_fixed_order(instance, T)
        shared = solve_minrate(instance, T) if mode == 'full' else greedy_timeshare(instance, T)
        rows.append({
            'T': T,
            'fixed_order_min': fixed.min_rate,
            'timeshare_min': shared.min_rate,
            'sum_per_user': sum_throughput(instance, T) / instance.n_users,
        })
    return rows


def _cyclic_corners(n_users):
    if n_users == 1:
        return [(1,)]
    if n_users == 2:
        return [(1, 2), (2, 1)]
    # adjacent corners of the dominant face differ by one adjacent swap
    return [(1, 2, 3), (2, 1, 3), (2, 3, 1), (3, 2, 1), (3, 1, 2), (1, 3, 2)]


@dataclass(frozen=True)
class RegionPoint:
    rates: Tuple[float, ...]
    permutations: Tuple[Tuple[int, ...], ...]
    fractions: Tuple[float, ...] = field(default=())

    def to_dict(self):
        return {
            'rates': list(self.rates),
            'permutations': [list(p) for p in self.permutations],
            'fractions': list(self.fractions),
        }


def region_boundary(instance, T, samples=2):
    """Corner points of the rate region plus points interpolated along the dominant face's edges.

    Every point saturates the full-set sum constraint. ``samples`` counts the
    points per edge including both corners.
    """
    _check_fraction(T)
    T = float(T)
    n = instance.n_users
    if n > MAX_REGION_USERS:
        raise ProblemSizeError(f"region export is limited to N <= {MAX_REGION_USERS}, got N={n}")
    samples = int(samples)
    if samples < 1:
        raise DomainError("samples must be >= 1")

    corners = _cyclic_corners(n)
    c = rate_matrix(instance, T, corners)
    points = [RegionPoint(tuple(float(r) for r in c[:, m]), (corners[m],), (1.0,))
              for m in range(len(corners))]
    if samples <= 2 or len(corners) == 1:
        return points

    weights = np.linspace(0.0, 1.0, samples)[1:-1]
    edges = [(0, 1)] if len(corners) == 2 else [(m, (m + 1) % len(corners)) for m in range(len(corners))]
    for i, j in edges:
        for w in weights:
            rates = (1.0 - w) * c[:, i] + w * c[:, j]
            points.append(RegionPoint(tuple(float(r) for r in rates),
                                      (corners[i], corners[j]), (float(1.0 - w), float(w))))
    return points
