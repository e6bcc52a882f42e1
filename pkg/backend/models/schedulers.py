"""The four resource-allocation schemes.

(a) optimal T with the descending-gain SIC order; (b) optimal T with
time-sharing over decoding orders; (c) equal individual rate with the fixed
order, T chosen jointly; (d) equal individual rate with time-sharing, T chosen
jointly. (c) and (d) are solved through their Lagrangian duals with the
projected-subgradient driver, and each is cross-checked against a
golden-section search on the equivalent one-dimensional problem.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import wraps

import numpy as np

from ..errors import DegenerateInstanceError, DomainError, InconsistencyError
from ..utils.numerics import (CLAMP_HIGH, CLAMP_LOW, SubgradientConfig, bisect_root, expand_bracket,
                              golden_section_max, lambert_w0, projected_subgradient)
from .network import (LN2, NetworkInstance, RateAllocation, TimeShareSchedule, _check_fraction,
                      permutation_rates, rates_fixed_order, sum_throughput)
from .timeshare import MAX_FULL_SPACE_USERS, greedy_timeshare, solve_minrate

MODES = ('full', 'greedy')
FIXED_T_SCHEMES = ('a', 'b')
S_SINGULAR_TOL = 1e-9
AGREEMENT_TOL = 1e-5
DELIVERY_TOL = 1e-6
X_LOW = 1e-12


@dataclass(frozen=True)
class DualCoefficients:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    remaining_count: np.ndarray


def dual_coefficients(instance):
    """a_n = eta rho g_n, b_n = sum of a over later users, c_n = a_n + b_n, d_n = N+1-n."""
    a = np.asarray(instance.snr_gains, dtype=float)
    c = np.cumsum(a[::-1])[::-1]
    b = c - a
    n = instance.n_users
    return DualCoefficients(a=a, b=b, c=c, remaining_count=np.arange(n, 0, -1, dtype=float))


@dataclass(frozen=True)
class SchemeResult:
    scheme: str
    T: float
    allocation: RateAllocation
    objective: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return int(self.diagnostics.get('iterations', 0))

    def to_dict(self):
        doc = {
            'scheme': self.scheme,
            'T': self.T,
            'rates': [float(r) for r in self.allocation.rates],
            'objective': self.objective,
            'iterations': self.iterations,
        }
        if self.allocation.schedule is not None:
            doc['schedule'] = self.allocation.schedule.to_dict()
        doc['diagnostics'] = _jsonable(self.diagnostics)
        return doc


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _clamp(T):
    return min(max(T, CLAMP_LOW), CLAMP_HIGH)


# ---------------------------------------------------------------------------
# Zero-gain users transmit nothing; schemes run on the rest and pad the result
# ---------------------------------------------------------------------------

def _silent_users(instance):
    return int(np.count_nonzero(instance.gains <= 0.0))


def _active_part(instance):
    active = tuple(u for u, g in zip(instance.users, instance.gains) if g > 0.0)
    if not active:
        raise DegenerateInstanceError("every user has zero effective gain")
    return NetworkInstance(active, instance.bs_power_watts, instance.noise_power_watts,
                           instance.eh_efficiency, instance.amp_efficiency, instance.antenna_gain_bs)


def _pad_result(result, n_users):
    allocation = result.allocation
    active = len(allocation.rates)
    if active == n_users:
        return result
    tail = tuple(range(active + 1, n_users + 1))
    schedule = None
    if allocation.schedule is not None:
        schedule = TimeShareSchedule(
            permutations=tuple(row + tail for row in allocation.schedule.permutations),
            fractions=allocation.schedule.fractions,
        )
    rates = np.concatenate([allocation.rates, np.zeros(n_users - active)])
    diagnostics = dict(result.diagnostics, silent_users=n_users - active)
    return SchemeResult(result.scheme, result.T, RateAllocation(rates, allocation.transmit_fraction, schedule),
                        result.objective, diagnostics)


def _over_active_users(solver):
    @wraps(solver)
    def run(instance, *args, **kwargs):
        if _silent_users(instance) == 0:
            return solver(instance, *args, **kwargs)
        logging.debug(f"scheme {solver.__name__}: {_silent_users(instance)} zero-gain user(s) left out")
        return _pad_result(solver(_active_part(instance), *args, **kwargs), instance.n_users)
    return run


# ---------------------------------------------------------------------------
# Optimal harvesting time
# ---------------------------------------------------------------------------

def optimal_T(instance):
    """Closed-form maximizer of the sum throughput T log2(1 + S(1-T)/T).

    T* = S / (S + (S-1)/W0((S-1)/e) - 1) with S = eta rho sum(g). At S = 1 the
    expression is 0/0, so a golden-section search is used near that point.
    """
    S = instance.aggregate_snr
    if not S > 0.0:
        raise DegenerateInstanceError(f"aggregate SNR must be > 0, got {S}")
    if abs(S - 1.0) < S_SINGULAR_TOL:
        logging.warning(f"S={S!r} is at the removable singularity of the closed form; using a line search")
        T, _ = golden_section_max(lambda t: sum_throughput(instance, t), CLAMP_LOW, CLAMP_HIGH)
        return _clamp(T)
    w = lambert_w0((S - 1.0) / math.e)
    return _clamp(S / (S + (S - 1.0) / w - 1.0))


def stationarity_residual(instance, T, step=1e-7):
    """Central-difference derivative of the sum throughput at T."""
    lo, hi = _clamp(T - step), _clamp(T + step)
    return (sum_throughput(instance, hi) - sum_throughput(instance, lo)) / (hi - lo)


# ---------------------------------------------------------------------------
# Schemes (a) and (b)
# ---------------------------------------------------------------------------

def _resolve_T(instance, T):
    if T is None:
        return optimal_T(instance)
    _check_fraction(T)
    return float(T)


@_over_active_users
def scheme_a(instance, T=None):
    T = _resolve_T(instance, T)
    allocation = rates_fixed_order(instance, T)
    objective = allocation.min_rate
    logging.info(f"scheme a: T={T:.6f} min rate={objective:.6g}")
    return SchemeResult('a', T, allocation, objective, {
        'iterations': 0,
        'stationarity': stationarity_residual(instance, T),
    })


@_over_active_users
def scheme_b(instance, mode='full', T=None, K=None):
    """Max-min rate at T* by time-sharing; the system throughput is unchanged."""
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; choose from {MODES}")
    T = _resolve_T(instance, T)
    if mode == 'full':
        lp = solve_minrate(instance, T)
        diagnostics = {'iterations': 0, 'pivots': lp.pivots, 'permutations': len(lp.schedule)}
    else:
        lp = greedy_timeshare(instance, T, K)
        diagnostics = {
            'iterations': lp.greedy.iteration,
            'greedy_iterations': lp.greedy.iteration,
            'pivots': lp.pivots,
            'permutations': len(lp.schedule),
            'greedy_history': lp.greedy.history,
            'greedy_converged': lp.greedy.converged,
        }
    allocation = RateAllocation(lp.per_user_rates, T, lp.schedule)
    logging.info(f"scheme b ({mode}): T={T:.6f} min rate={lp.min_rate:.6g} M={len(lp.schedule)}")
    return SchemeResult('b', T, allocation, lp.min_rate, diagnostics)


# ---------------------------------------------------------------------------
# Equal-rate schemes (c) and (d)
# ---------------------------------------------------------------------------

def _weighted_stationarity(weights, a, b):
    """Derivative in T of sum_n w_n T ln(1 + a_n/(b_n + x)), written in x = T/(1-T).

    Decreasing in x, so its root gives the inner maximizer over T.
    """
    mask = (weights > 0.0) & (a > 0.0)
    w, a, b = weights[mask], a[mask], b[mask]

    def residual(x):
        return float(np.sum(w * (np.log1p(a / (b + x)) - a * x * (1.0 + x) / ((b + x) * (a + b + x)))))
    return residual


def _inner_T(weights, a, b):
    residual = _weighted_stationarity(weights, a, b)
    if residual(X_LOW) <= 0.0:
        return CLAMP_LOW
    lo, hi = expand_bracket(residual, X_LOW)
    x = bisect_root(residual, lo, hi, tol=1e-12 * max(1.0, hi))
    return _clamp(x / (1.0 + x))


def _kkt_residual(multipliers, slacks):
    return float(np.dot(multipliers, slacks))


def _dual_loop(bounds_at, weights_for, a, b, config, dimension, target=None):
    """Run the subgradient driver; ``bounds_at(T)`` gives the constraint functions g_n(T).

    Besides the inner maximizer T(lam), each step also scores the mean of the
    last ``config.window`` inner maximizers, which damps the oscillation of
    T(lam) around the optimum. ``target`` is a feasible rate found by the line
    search; the Polyak steps aim at it.
    """
    tracker = {'T': None, 'objective': -math.inf}
    recent = deque(maxlen=config.window)

    def evaluate(lam):
        R = 1.0 / lam.sum()
        T = _inner_T(weights_for(lam), a, b)
        recent.append(T)
        g = bounds_at(T)
        objective, T_best = float(g.min()), T
        T_mean = _clamp(float(np.mean(recent)))
        averaged = float(bounds_at(T_mean).min())
        if averaged > objective:
            objective, T_best = averaged, T_mean
        if objective > tracker['objective']:
            tracker['T'], tracker['objective'] = T_best, objective
        return objective, g - R

    result = projected_subgradient(evaluate, config, dimension, target if target and target > 0.0 else None)
    return result, tracker['T']


def _polish(bounds_at):
    T, value = golden_section_max(lambda t: float(bounds_at(t).min()), CLAMP_LOW, CLAMP_HIGH)
    return _clamp(T), float(value)


@_over_active_users
def equal_rate_fixed(instance, config=None, dual=True):
    """Scheme (c): largest rate every user reaches with the fixed descending-gain order."""
    config = config or SubgradientConfig()
    coeffs = dual_coefficients(instance)
    order = tuple(range(1, instance.n_users + 1))

    def rates_at(T):
        return permutation_rates(coeffs.a, order, T)

    T_polish, R_polish = _polish(rates_at)
    diagnostics = {'polish_T': T_polish, 'polish_objective': R_polish, 'iterations': 0}
    T, R = T_polish, R_polish
    if dual:
        result, T_dual = _dual_loop(rates_at, lambda lam: lam, coeffs.a, coeffs.b, config, instance.n_users,
                                    target=R_polish)
        diagnostics.update(_dual_diagnostics(result, T_dual, rates_at, R_polish))
        if result.objective > R:
            T, R = T_dual, result.objective

    fixed = rates_fixed_order(instance, T)
    diagnostics['fixed_order_rates'] = fixed.rates
    allocation = RateAllocation(np.full(instance.n_users, R), T, fixed.schedule)
    logging.info(f"scheme c: T={T:.6f} R_eq={R:.8g}")
    return SchemeResult('c', T, allocation, R, diagnostics)


def _dual_diagnostics(result, T_dual, bounds_at, reference):
    slacks = bounds_at(T_dual) - result.objective
    agree = abs(result.objective - reference) <= AGREEMENT_TOL
    if not agree:
        logging.warning(f"dual loop ({result.objective:.8g}) and line search ({reference:.8g}) disagree")
    return {
        'iterations': result.iterations,
        'converged': result.converged,
        'dual_T': T_dual,
        'dual_objective': result.objective,
        'dual_bound': result.dual_bound,
        'multipliers': result.best_multipliers,
        'complementary_slackness': _kkt_residual(result.best_multipliers, slacks),
        'agree': agree,
    }


def prefix_bounds(instance, T):
    """Per-size bound on the equal rate: T log2(1 + c_n (1-T)/T) / d_n."""
    coeffs = dual_coefficients(instance)
    x = T / (1.0 - T)
    return T * np.log1p(coeffs.c / x) / LN2 / coeffs.remaining_count


@_over_active_users
def equal_rate_ts(instance, config=None, mode=None, dual=True):
    """Scheme (d): equal rate with time-sharing.

    (T*, R*) comes from the per-size bounds alone; a min-rate LP over decoding
    orders then finds time fractions that deliver R* to every user at T*.
    """
    config = config or SubgradientConfig()
    n = instance.n_users
    if mode is None:
        mode = 'full' if n <= MAX_FULL_SPACE_USERS else 'greedy'
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; choose from {MODES}")
    coeffs = dual_coefficients(instance)

    def bounds_at(T):
        return prefix_bounds(instance, T)

    T, R = _polish(bounds_at)
    diagnostics = {'closed_T': T, 'closed_objective': R, 'iterations': 0}
    if dual:
        result, T_dual = _dual_loop(bounds_at, lambda lam: lam / coeffs.remaining_count,
                                    coeffs.c, np.zeros(n), config, n, target=R)
        diagnostics.update(_dual_diagnostics(result, T_dual, bounds_at, R))
    diagnostics['active_bounds'] = int(np.count_nonzero(bounds_at(T) - R <= 1e-6))

    lp = _deliver_equal_rate(instance, T, R, mode)
    diagnostics['timeshare_rates'] = lp.per_user_rates
    diagnostics['timeshare_min_rate'] = lp.min_rate
    diagnostics['permutations'] = len(lp.schedule)
    if lp.greedy is not None:
        diagnostics['greedy_iterations'] = lp.greedy.iteration

    allocation = RateAllocation(np.full(n, R), T, lp.schedule)
    logging.info(f"scheme d: T={T:.6f} R_eq={R:.8g} M={len(lp.schedule)}")
    return SchemeResult('d', T, allocation, R, diagnostics)


def _deliver_equal_rate(instance, T, R, mode):
    lp = greedy_timeshare(instance, T) if mode == 'greedy' else solve_minrate(instance, T)
    if lp.min_rate >= R - DELIVERY_TOL:
        return lp
    if mode == 'greedy' and instance.n_users <= MAX_FULL_SPACE_USERS:
        logging.warning(f"greedy time-sharing reached {lp.min_rate:.8g} < {R:.8g}; retrying over all orders")
        lp = solve_minrate(instance, T)
        if lp.min_rate >= R - DELIVERY_TOL:
            return lp
    raise InconsistencyError(
        f"no time-sharing configuration delivers R_eq={R:.10g} at T={T:.10g} "
        f"(best min rate {lp.min_rate:.10g})")


def run_scheme(instance, scheme, mode=None, T=None, config=None, dual=True):
    """Dispatch by scheme name; also accepts the TDMA baselines."""
    from .baseline_tdma import tdma_common_throughput, tdma_sum_throughput

    if T is not None and scheme not in FIXED_T_SCHEMES:
        raise DomainError(f"scheme {scheme!r} chooses its own T; a fixed T applies only to {FIXED_T_SCHEMES}")
    if scheme == 'a':
        return scheme_a(instance, T=T)
    if scheme == 'b':
        return scheme_b(instance, mode=mode or 'full', T=T)
    if scheme == 'c':
        return equal_rate_fixed(instance, config, dual=dual)
    if scheme == 'd':
        return equal_rate_ts(instance, config, mode=mode, dual=dual)
    if scheme in ('tdma-sum', 'tdma_sum'):
        return tdma_sum_throughput(instance).as_scheme_result()
    if scheme in ('tdma-common', 'tdma_common'):
        return tdma_common_throughput(instance).as_scheme_result()
    raise DomainError(f"unknown scheme {scheme!r}")
