"""Built-in instances and antenna-gain presets.

The two worked examples are embedded so ``example`` runs without any input
file. Their path losses are taken as listed rather than recomputed from the
distances; the distances are kept for reporting only.
"""
from dataclasses import dataclass

from ..errors import DomainError
from .network import NetworkInstance


@dataclass(frozen=True)
class AntennaPreset:
    name: str
    antenna_gains_db: float


EXAMPLE_PRESET = AntennaPreset(name='example', antenna_gains_db=0.0)
MONTE_CARLO_PRESET = AntennaPreset(name='monte-carlo', antenna_gains_db=7.5)

EXAMPLE_BS_POWER_DBM = 30.0
EXAMPLE_NOISE_POWER_DBM = -114.0

# id -> (path losses, distances in meters, description)
EXAMPLES = {
    1: ((2.4067e-6, 2.156e-6), (9.9, 10.1), 'similar distance'),
    2: ((3.7808e-5, 2.5786e-7), (6.0, 14.0), 'double near-far'),
}


def example_instance(example_id, preset=EXAMPLE_PRESET):
    try:
        losses, distances, _ = EXAMPLES[int(example_id)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(f"unknown example id {example_id!r}; choose from {sorted(EXAMPLES)}")
    return NetworkInstance.from_path_losses(
        losses,
        bs_power_dbm=EXAMPLE_BS_POWER_DBM,
        noise_power_dbm=EXAMPLE_NOISE_POWER_DBM,
        antenna_gain_db=preset.antenna_gains_db,
        antenna_gain_bs_db=preset.antenna_gains_db,
        distances=distances,
    )


def example_description(example_id):
    return EXAMPLES[int(example_id)][2]
