"""Harvest-then-transmit TDMA baseline.

Each user spends its whole harvested energy inside its own slot tau_n, so its
rate is tau_n log2(1 + A_n / tau_n) with A_n = eta rho g_n (1 - T), and the
slots share the uplink phase: sum(tau) = T.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

from ..errors import DegenerateInstanceError
from ..utils.numerics import CLAMP_HIGH, CLAMP_LOW, golden_section_max
from .network import LN2, RateAllocation

RATE_TOL = 1e-13
NEWTON_STEPS = 1


@dataclass(frozen=True)
class TdmaAllocation:
    mode: str  # 'sum' | 'common'
    T: float
    slots: np.ndarray
    rates: np.ndarray
    objective: float

    def as_scheme_result(self):
        from .schedulers import SchemeResult

        scheme = 'tdma_sum' if self.mode == 'sum' else 'tdma_common'
        allocation = RateAllocation(self.rates, self.T)
        return SchemeResult(scheme, self.T, allocation, self.objective, {
            'iterations': 0,
            'slots': self.slots,
        })


def slot_rates(snr_gains, T, slots):
    """tau log2(1 + A/tau), continued by 0 at tau = 0."""
    A = np.asarray(snr_gains, dtype=float) * (1.0 - T)
    tau = np.asarray(slots, dtype=float)
    safe = np.where(tau > 0.0, tau, 1.0)
    return np.where(tau > 0.0, tau * np.log1p(A / safe) / LN2, 0.0)


def _check_gains(snr_gains):
    if not float(np.sum(snr_gains)) > 0.0:
        raise DegenerateInstanceError("TDMA needs at least one user with positive gain")


def _sum_split(snr_gains, T):
    # equal marginal rates force equal A_n / tau_n, i.e. slots proportional to A_n
    a = np.asarray(snr_gains, dtype=float)
    return T * a / a.sum()


def sum_rate_at(snr_gains, T):
    return float(slot_rates(snr_gains, T, _sum_split(snr_gains, T)).sum())


def tdma_sum_throughput(instance):
    """Maximize the TDMA sum rate over T and the slot split."""
    a = instance.snr_gains
    _check_gains(a)

    T, value = golden_section_max(lambda t: sum_rate_at(a, t), CLAMP_LOW, CLAMP_HIGH)
    slots = _sum_split(a, T)
    rates = slot_rates(a, T, slots)
    logging.info(f"tdma sum: T={T:.6f} sum rate={value:.6g}")
    return TdmaAllocation('sum', float(T), slots, rates, float(rates.sum()))


def minimal_slots(snr_gains, T, target):
    """Smallest slot per user reaching ``target``; inf where no slot length reaches it.

    tau log2(1 + A/tau) = R inverts through the lower Lambert branch: with
    c = R ln2 / A < 1, A/tau = -W_{-1}(-c e^-c)/c - 1. A Newton step cleans
    up the rounding near the branch point.
    """
    A = np.asarray(snr_gains, dtype=float) * (1.0 - T)
    r = float(target) * LN2
    if r <= 0.0:
        return np.zeros_like(A)
    safe = np.where(A > 0.0, A, 1.0)
    c = np.where(A > 0.0, r / safe, np.inf)
    reachable = c < 1.0
    cr = np.where(reachable, c, 0.5)
    w = lambertw(-cr * np.exp(-cr), k=-1).real
    u = -w / cr - 1.0
    tau = np.where(reachable & (u > 0.0), safe / np.where(u > 0.0, u, 1.0), np.inf)
    for _ in range(NEWTON_STEPS):
        finite = np.isfinite(tau) & (tau > 0.0)
        t = np.where(finite, tau, 1.0)
        h = t * np.log1p(safe / t) - r
        dh = np.log1p(safe / t) - safe / (t + safe)
        tau = np.where(finite, np.maximum(t - h / dh, 0.5 * t), tau)
    return tau


def common_rate_at(snr_gains, T):
    a = np.asarray(snr_gains, dtype=float)
    # each user alone over the whole uplink phase bounds the common rate
    high = float(np.min(T * np.log1p(a * (1.0 - T) / T) / LN2))
    if not high > 0.0:
        return 0.0

    def excess(rate):
        return float(minimal_slots(a, T, rate).sum()) - T

    if excess(high) <= 0.0:
        return high
    return brentq(excess, 0.0, high, xtol=RATE_TOL * max(1.0, high), rtol=4 * np.finfo(float).eps)


def tdma_common_throughput(instance):
    """Maximize the rate every user reaches under TDMA, over T and the slots."""
    a = instance.snr_gains
    _check_gains(a)
    T, value = golden_section_max(lambda t: common_rate_at(a, t), CLAMP_LOW, CLAMP_HIGH)
    slots = minimal_slots(a, T, value)
    # hand the unused part of the uplink phase out in proportion to the slots
    slots = slots * (T / slots.sum()) if slots.sum() > 0.0 else np.full(len(a), T / len(a))
    rates = slot_rates(a, T, slots)
    logging.info(f"tdma common: T={T:.6f} R_eq={value:.6g}")
    return TdmaAllocation('common', float(T), slots, rates, float(value))
