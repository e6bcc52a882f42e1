"""Network instances and the closed-form rate, energy and fairness formulas.

Users are stored sorted by effective gain, strongest first. Every solver and
every schedule refers to users by their 1-based position in that order; the
caller's own numbering is kept in ``UserChannel.index`` for reporting.
"""
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from ..errors import DomainError, ProblemSizeError, ScheduleError, UndefinedMetricError, WptNomaError

LN2 = math.log(2.0)
MAX_REGION_USERS = 20


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(ratio):
    return 10.0 * math.log10(ratio)


def noise_power_dbm(psd_dbm_hz, bandwidth_hz):
    """Thermal noise power over a band, e.g. -174 dBm/Hz over 1 MHz -> -114 dBm."""
    return psd_dbm_hz + 10.0 * math.log10(bandwidth_hz)


@dataclass(frozen=True)
class UserChannel:
    index: int
    path_loss: float
    fading: complex = 1.0 + 0.0j
    antenna_gain_user: float = 1.0
    distance: Optional[float] = None

    def __post_init__(self):
        if self.index < 1:
            raise DomainError(f"user index must be 1-based, got {self.index}")
        if not self.path_loss > 0:
            raise DomainError(f"user {self.index}: path_loss must be > 0")
        if not self.antenna_gain_user > 0:
            raise DomainError(f"user {self.index}: antenna gain must be > 0")
        if self.distance is not None and not self.distance > 0:
            raise DomainError(f"user {self.index}: distance must be > 0")
        object.__setattr__(self, 'fading', complex(self.fading))


@dataclass(frozen=True)
class EffectiveGains:
    g: np.ndarray

    def __len__(self):
        return len(self.g)


def _effective_gain(user, antenna_gain_bs):
    return (antenna_gain_bs ** 2 * user.antenna_gain_user ** 2
            * user.path_loss ** 2 * abs(user.fading) ** 4)


@dataclass(frozen=True)
class NetworkInstance:
    users: Tuple[UserChannel, ...]
    bs_power_watts: float
    noise_power_watts: float
    eh_efficiency: float
    amp_efficiency: float
    antenna_gain_bs: float = 1.0

    def __post_init__(self):
        users = tuple(self.users)
        if not users:
            raise DomainError("an instance needs at least one user")
        if not self.bs_power_watts > 0 or not self.noise_power_watts > 0:
            raise DomainError("BS power and noise power must be > 0")
        if not 0.0 < self.eh_efficiency < 1.0:
            raise DomainError(f"eh_efficiency must be in (0,1), got {self.eh_efficiency}")
        if not 0.0 < self.amp_efficiency < 1.0:
            raise DomainError(f"amp_efficiency must be in (0,1), got {self.amp_efficiency}")
        if not self.antenna_gain_bs > 0:
            raise DomainError("antenna_gain_bs must be > 0")
        ids = [u.index for u in users]
        if len(set(ids)) != len(ids):
            raise ScheduleError(f"duplicate user ids {ids}")
        ordered = sorted(users, key=lambda u: (-_effective_gain(u, self.antenna_gain_bs), u.index))
        object.__setattr__(self, 'users', tuple(ordered))

    @property
    def n_users(self):
        return len(self.users)

    @property
    def eta(self):
        return self.eh_efficiency * self.amp_efficiency

    @property
    def rho(self):
        return self.bs_power_watts / self.noise_power_watts

    @cached_property
    def gains(self):
        g = np.array([_effective_gain(u, self.antenna_gain_bs) for u in self.users], dtype=float)
        g.setflags(write=False)
        return g

    @cached_property
    def snr_gains(self):
        """a_n = eta * rho * g_n, the per-user receive SNR scale."""
        a = self.eta * self.rho * self.gains
        a.setflags(write=False)
        return a

    @property
    def aggregate_snr(self):
        """S = eta * rho * sum(g)."""
        return float(self.snr_gains.sum())

    @property
    def user_ids(self):
        return [u.index for u in self.users]

    @classmethod
    def from_path_losses(cls, path_losses, fading=None, bs_power_dbm=30.0, noise_power_dbm=-114.0,
                         eh_efficiency=0.5, amp_efficiency=0.38, antenna_gain_db=0.0,
                         antenna_gain_bs_db=0.0, distances=None):
        fading = [1.0] * len(path_losses) if fading is None else fading
        distances = [None] * len(path_losses) if distances is None else distances
        users = tuple(
            UserChannel(index=i + 1, path_loss=float(pl), fading=h,
                        antenna_gain_user=db_to_linear(antenna_gain_db), distance=d)
            for i, (pl, h, d) in enumerate(zip(path_losses, fading, distances))
        )
        return cls(users, dbm_to_watts(bs_power_dbm), dbm_to_watts(noise_power_dbm),
                   eh_efficiency, amp_efficiency, db_to_linear(antenna_gain_bs_db))

    @classmethod
    def from_dict(cls, doc):
        from ..utils.channel import ChannelModelParams, path_loss

        try:
            params = ChannelModelParams()
            users = []
            for i, entry in enumerate(doc['users']):
                has_distance = entry.get('distance_m') is not None
                has_loss = entry.get('path_loss') is not None
                if has_distance == has_loss:
                    raise ScheduleError(
                        f"user {i + 1}: exactly one of distance_m or path_loss is required")
                distance = float(entry['distance_m']) if has_distance else None
                loss = path_loss(params, distance) if has_distance else float(entry['path_loss'])
                users.append(UserChannel(
                    index=i + 1,
                    path_loss=loss,
                    fading=complex(float(entry.get('fading_re', 1.0)), float(entry.get('fading_im', 0.0))),
                    antenna_gain_user=db_to_linear(float(entry.get('antenna_gain_db', 0.0))),
                    distance=distance,
                ))
            return cls(
                users=tuple(users),
                bs_power_watts=dbm_to_watts(float(doc['bs_power_dbm'])),
                noise_power_watts=dbm_to_watts(float(doc['noise_power_dbm'])),
                eh_efficiency=float(doc['eh_efficiency']),
                amp_efficiency=float(doc['amp_efficiency']),
                antenna_gain_bs=db_to_linear(float(doc.get('antenna_gain_bs_db', 0.0))),
            )
        except WptNomaError:
            raise
        except KeyError as e:
            raise ScheduleError(f"instance document is missing field {e}") from e
        except (TypeError, AttributeError, ValueError) as e:
            raise ScheduleError(f"malformed instance document: {e}") from e

    def to_dict(self):
        users = sorted(self.users, key=lambda u: u.index)
        return {
            'bs_power_dbm': watts_to_dbm(self.bs_power_watts),
            'noise_power_dbm': watts_to_dbm(self.noise_power_watts),
            'eh_efficiency': self.eh_efficiency,
            'amp_efficiency': self.amp_efficiency,
            'antenna_gain_bs_db': linear_to_db(self.antenna_gain_bs),
            'users': [
                {
                    'path_loss': u.path_loss,
                    'fading_re': u.fading.real,
                    'fading_im': u.fading.imag,
                    'antenna_gain_db': linear_to_db(u.antenna_gain_user),
                }
                for u in users
            ],
        }

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class TimeShareSchedule:
    """M decoding permutations (rows of user positions, first decoded first) with time fractions."""
    permutations: Tuple[Tuple[int, ...], ...]
    fractions: np.ndarray

    def __post_init__(self):
        rows = tuple(tuple(int(u) for u in row) for row in self.permutations)
        if not rows:
            raise ScheduleError("a schedule needs at least one permutation")
        n = len(rows[0])
        expected = set(range(1, n + 1))
        for row in rows:
            if len(row) != n or set(row) != expected:
                raise ScheduleError(f"row {row} is not a permutation of 1..{n}")
        if len(set(rows)) != len(rows):
            raise ScheduleError("permutation rows must be pairwise distinct")
        tau = np.asarray(self.fractions, dtype=float).reshape(-1)
        if tau.shape[0] != len(rows):
            raise ScheduleError(f"{len(rows)} permutations but {tau.shape[0]} fractions")
        if np.any(tau < -1e-9) or abs(tau.sum() - 1.0) > 1e-9:
            raise ScheduleError(f"fractions {tau} are not on the simplex")
        tau = np.clip(tau, 0.0, None)
        tau = tau / tau.sum()
        tau.setflags(write=False)
        object.__setattr__(self, 'permutations', rows)
        object.__setattr__(self, 'fractions', tau)

    @property
    def n_users(self):
        return len(self.permutations[0])

    def __len__(self):
        return len(self.permutations)

    def to_dict(self):
        return {
            'permutations': [list(row) for row in self.permutations],
            'fractions': [float(t) for t in self.fractions],
        }


@dataclass(frozen=True)
class RateAllocation:
    rates: np.ndarray
    transmit_fraction: float
    schedule: Optional[TimeShareSchedule] = None

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if np.any(rates < -1e-12):
            raise DomainError(f"rates must be nonnegative, got {rates}")
        if not 0.0 < self.transmit_fraction < 1.0:
            raise DomainError(f"T must be in (0,1), got {self.transmit_fraction}")
        rates = np.clip(rates, 0.0, None)
        rates.setflags(write=False)
        object.__setattr__(self, 'rates', rates)

    @property
    def harvest_fraction(self):
        return 1.0 - self.transmit_fraction

    @property
    def min_rate(self):
        return float(self.rates.min())

    @property
    def sum_rate(self):
        return float(self.rates.sum())

    def to_dict(self):
        doc = {
            'T': self.transmit_fraction,
            'harvest_fraction': self.harvest_fraction,
            'rates': [float(r) for r in self.rates],
        }
        if self.schedule is not None:
            doc['schedule'] = self.schedule.to_dict()
        return doc


def _check_fraction(T):
    T_arr = np.asarray(T, dtype=float)
    if np.any(~np.isfinite(T_arr)) or np.any(T_arr <= 0.0) or np.any(T_arr >= 1.0):
        raise DomainError(f"T must lie in the open interval (0,1), got {T}")
    return T_arr


def effective_gains(instance):
    return EffectiveGains(g=instance.gains)


def harvested_energy(instance, user, T):
    """E_n = G0 Gn eta1 L0n |h0n|^2 P0 (1-T), in joules per unit frame."""
    if not 0.0 <= T <= 1.0:
        raise DomainError(f"T must lie in [0,1], got {T}")
    return (instance.antenna_gain_bs * user.antenna_gain_user * instance.eh_efficiency
            * user.path_loss * abs(user.fading) ** 2 * instance.bs_power_watts * (1.0 - T))


def transmit_power(instance, user, T):
    """P_n = E_n / T."""
    if T == 0.0:
        raise DomainError("transmit power is undefined when no time is left for uplink (T=0)")
    return harvested_energy(instance, user, T) / T


def permutation_rates(snr_gains, order, T):
    """Per-user rates (stored order) when users are decoded in ``order``.

    ``order`` lists 1-based positions, first decoded first; each user is
    interfered by every user decoded after it.
    """
    a = np.asarray(snr_gains, dtype=float)
    idx = np.asarray(order, dtype=int) - 1
    x = T / (1.0 - T)
    a_ordered = a[idx]
    # interference from users decoded later
    later = np.concatenate([np.cumsum(a_ordered[::-1])[::-1][1:], [0.0]])
    ordered_rates = T * np.log1p(a_ordered / (later + x)) / LN2
    rates = np.empty_like(a)
    rates[idx] = ordered_rates
    return rates


def rates_fixed_order(instance, T, order=None):
    """Fixed SIC order; by default decode in stored order so user N is interference-free."""
    _check_fraction(T)
    T = float(T)
    n = instance.n_users
    order = tuple(range(1, n + 1)) if order is None else tuple(order)
    schedule = TimeShareSchedule(permutations=(order,), fractions=np.ones(1))
    rates = permutation_rates(instance.snr_gains, order, T)
    return RateAllocation(rates=rates, transmit_fraction=T, schedule=schedule)


def rates_ascending_order(instance, T):
    """Weakest user decoded first, strongest interference-free."""
    return rates_fixed_order(instance, T, order=tuple(range(instance.n_users, 0, -1)))


def rate_matrix(instance, T, permutations):
    """c[n, m]: rate of user n under permutation m at T."""
    _check_fraction(T)
    a = instance.snr_gains
    return np.column_stack([permutation_rates(a, row, float(T)) for row in permutations])


def rates_timeshare(instance, T, schedule):
    if schedule.n_users != instance.n_users:
        raise ScheduleError(
            f"schedule is for {schedule.n_users} users, instance has {instance.n_users}")
    rates = rate_matrix(instance, T, schedule.permutations) @ schedule.fractions
    return RateAllocation(rates=rates, transmit_fraction=float(T), schedule=schedule)


def sum_throughput(instance, T):
    """R_tot(T) = T log2(1 + S (1-T)/T); accepts scalars or arrays of T."""
    T_arr = _check_fraction(T)
    value = T_arr * np.log1p(instance.aggregate_snr * (1.0 - T_arr) / T_arr) / LN2
    return float(value) if value.ndim == 0 else value


def subset_bound(instance, T, gain_sum):
    return T * np.log1p(instance.eta * instance.rho * gain_sum * (1.0 - T) / T) / LN2


def region_membership(instance, T, rates, tol=1e-9):
    """Exhaustive check of every subset sum-rate constraint of the uplink region."""
    _check_fraction(T)
    T = float(T)
    r = np.asarray(rates, dtype=float).reshape(-1)
    n = instance.n_users
    if n > MAX_REGION_USERS:
        raise ProblemSizeError(f"region membership enumerates 2^N subsets; N={n} > {MAX_REGION_USERS}")
    if r.shape[0] != n:
        raise DomainError(f"expected {n} rates, got {r.shape[0]}")
    if np.any(r < 0):
        raise DomainError("rates must be nonnegative")

    g = instance.gains
    bits = np.arange(n)
    total = 1 << n
    chunk = 1 << 14
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total))
        member = ((masks[:, None] >> bits) & 1).astype(float)
        bound = subset_bound(instance, T, member @ g)
        if np.any(member @ r > bound + tol * np.maximum(1.0, bound)):
            return False
    return True


def jain_index(rates):
    r = np.asarray(rates, dtype=float).reshape(-1)
    if r.size == 0 or np.any(r < 0):
        raise DomainError("Jain index needs a nonempty nonnegative rate vector")
    squares = float(np.sum(r ** 2))
    if squares == 0.0:
        raise UndefinedMetricError("Jain index is undefined for an all-zero rate vector")
    return float(r.sum() ** 2 / (r.size * squares))


def energy_efficiency(n_users, r_eq, p0_watts, T):
    """N * R_eq / (P0 (1-T)), bps/Hz per watt of transmitted BS energy."""
    _check_fraction(T)
    if not p0_watts > 0:
        raise DomainError("P0 must be > 0")
    return n_users * r_eq / (p0_watts * (1.0 - T))
