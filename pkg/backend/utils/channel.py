import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..models.network import (NetworkInstance, UserChannel, db_to_linear, dbm_to_watts,
                              noise_power_dbm)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ChannelModelParams:
    """Indoor two-slope path loss (free space up to the breakpoint) and ring deployment."""
    carrier_hz: float = 470e6
    breakpoint_m: float = 5.0
    slope_before: float = 2.0
    slope_after: float = 3.5
    ring_inner_m: float = 5.0
    ring_outer_m: float = 20.0

    def __post_init__(self):
        if not self.carrier_hz > 0 or not self.breakpoint_m > 0:
            raise DomainError("carrier frequency and breakpoint must be > 0")
        if not 0 < self.ring_inner_m <= self.ring_outer_m:
            raise DomainError("ring radii must satisfy 0 < inner <= outer")

    @property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.carrier_hz


def path_loss(params, distance_m):
    """Linear power ratio; free-space up to the breakpoint, steeper slope beyond it."""
    if not distance_m > 0:
        raise DomainError(f"distance must be > 0, got {distance_m}")
    reference = (params.wavelength_m / (4.0 * math.pi * params.breakpoint_m)) ** params.slope_before
    ratio = distance_m / params.breakpoint_m
    if distance_m <= params.breakpoint_m:
        return reference * ratio ** (-params.slope_before)
    return reference * ratio ** (-params.slope_after)


def ring_distances(params, rng, size):
    """Area-uniform radii on the ring, by inverse CDF."""
    u = rng.random(size)
    r1, r2 = params.ring_inner_m, params.ring_outer_m
    return np.sqrt(r1 ** 2 + u * (r2 ** 2 - r1 ** 2))


def rayleigh_fading(rng, size):
    """CN(0,1) coefficients."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def trial_rng(seed, n_users, trial):
    # keyed without P0 so every power level sees the same channel draws
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n_users), int(trial)]))


def sample_instance(params, config, rng, n_users=None, p0_dbm=None):
    """Draw one network: ring positions, two-slope path loss, Rayleigh fading."""
    n_users = config.n_users_list[0] if n_users is None else n_users
    p0_dbm = config.p0_dbm_list[0] if p0_dbm is None else p0_dbm
    distances = ring_distances(params, rng, n_users)
    fading = rayleigh_fading(rng, n_users)
    user_gain = db_to_linear(config.antenna_gains_db)
    users = tuple(
        UserChannel(index=i + 1, path_loss=path_loss(params, float(d)), fading=complex(h),
                    antenna_gain_user=user_gain, distance=float(d))
        for i, (d, h) in enumerate(zip(distances, fading))
    )
    return NetworkInstance(
        users=users,
        bs_power_watts=dbm_to_watts(p0_dbm),
        noise_power_watts=dbm_to_watts(noise_power_dbm(config.noise_psd_dbm_hz, config.bandwidth_hz)),
        eh_efficiency=config.eh_efficiency,
        amp_efficiency=config.amp_efficiency,
        antenna_gain_bs=db_to_linear(config.antenna_gains_db),
    )
