"""
Scenario module for the bdris-wideband project.
This module draws random multipath realizations around a fixed TX / RIS / RX
geometry: clustered exponential delay profile, Rician LOS split and an optional
weak static channel between TX and RX.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.constants import speed_of_light

from src.channel.models import ElementGrid, Path, PathSet

logger = logging.getLogger(__name__)

# kappa at or above this value is treated as a pure LOS link
LOS_ONLY_KAPPA = 1e6


class ScenarioError(ValueError):
    """Invalid scenario parameters."""


class ScenarioConfig(BaseModel):
    """Geometry and multipath statistics of one experiment."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tx_position_m: Tuple[float, float, float] = (40.0, -40.0, 0.0)
    rx_position_m: Tuple[float, float, float] = (20.0, 0.0, 0.0)
    ris_center_m: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    carrier_freq_hz: float = Field(3e9, gt=0)
    ris_rows: int = Field(8, ge=1)
    ris_cols: int = Field(8, ge=1)
    element_spacing_wavelengths: float = Field(0.25, gt=0)
    num_tx_paths: int = Field(6, ge=1)
    num_rx_paths: int = Field(6, ge=1)
    num_static_paths: int = Field(0, ge=0)
    rician_kappa: float = Field(0.0, ge=0)
    static_gain_offset_db: float = -40.0
    static_reference: Literal["direct", "cascade"] = "direct"
    delay_spread_s: float = Field(100e-9, gt=0)
    angular_spread_deg: float = Field(60.0, gt=0, lt=90)
    master_seed: int = Field(0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def _distinct_positions(self):
        points = {self.tx_position_m, self.rx_position_m, self.ris_center_m}
        if len(points) != 3:
            raise ValueError("tx_position_m, rx_position_m and ris_center_m must be distinct")
        return self

    @property
    def wavelength(self):
        return speed_of_light / self.carrier_freq_hz

    @property
    def num_elements(self):
        return self.ris_rows * self.ris_cols

    def element_grid(self):
        return ElementGrid(self.ris_rows, self.ris_cols, self.element_spacing_wavelengths * self.wavelength)


@dataclass(frozen=True)
class Realization:
    """One multipath draw and the seed of the stream that produced it."""

    paths: PathSet
    seed: int


def free_space_gain(distance, carrier_freq):
    """Friis amplitude lambda / (4 pi d) with unit antenna gains."""
    if not distance > 0:
        raise ScenarioError(f"distance must be positive, got {distance}")
    return speed_of_light / carrier_freq / (4 * math.pi * distance)


def realization_seed(master_seed, index):
    """64-bit seed of realization `index`, derived from the master seed."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _angles_towards(origin, target):
    """Azimuth/elevation of target seen from origin, azimuth from +x in the xy-plane."""
    v = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    return math.atan2(v[1], v[0]), math.asin(v[2] / np.linalg.norm(v))


def _nlos_paths(rng, count, power, los_delay, delay_spread, spread, with_angles=True):
    """Exponential excess delays; powers follow exp(-excess / delay_spread), normalized to `power`."""
    if count == 0:
        return []
    excess = rng.exponential(delay_spread, size=count)
    weights = np.exp(-excess / delay_spread)
    amplitudes = np.sqrt(power * weights / weights.sum())
    if with_angles:
        azimuths = rng.uniform(-spread, spread, size=count)
        elevations = rng.uniform(-spread, spread, size=count)
    else:
        azimuths = elevations = np.zeros(count)
    return [
        Path(float(a), float(los_delay + e), float(az), float(el))
        for a, e, az, el in zip(amplitudes, excess, azimuths, elevations)
    ]


def _ris_link(rng, config: ScenarioConfig, count, distance, los_angles):
    """Paths of one RIS link; the first is the LOS path when kappa > 0."""
    kappa = config.rician_kappa
    reference = free_space_gain(distance, config.carrier_freq_hz)
    los_delay = distance / speed_of_light
    spread = math.radians(config.angular_spread_deg)

    if kappa >= LOS_ONLY_KAPPA:
        return [Path(reference, los_delay, *los_angles)]
    if kappa == 0:
        return _nlos_paths(rng, count, reference ** 2, los_delay, config.delay_spread_s, spread)
    if count < 2:
        raise ScenarioError(f"rician_kappa={kappa} needs at least 2 paths per RIS link, got {count}")

    los = Path(reference * math.sqrt(kappa / (kappa + 1)), los_delay, *los_angles)
    nlos_power = reference ** 2 / (kappa + 1)
    return [los] + _nlos_paths(rng, count - 1, nlos_power, los_delay, config.delay_spread_s, spread)


def generate(config: ScenarioConfig, realization_index) -> Realization:
    """Draw realization `realization_index` of the scenario."""
    # model_copy(update=...) skips pydantic validation
    if config.rician_kappa < 0:
        raise ScenarioError(f"rician_kappa must be >= 0, got {config.rician_kappa}")
    if config.num_tx_paths < 1 or config.num_rx_paths < 1:
        raise ScenarioError(
            f"RIS links need at least one path, got num_tx_paths={config.num_tx_paths}, "
            f"num_rx_paths={config.num_rx_paths}"
        )
    if config.delay_spread_s <= 0:
        raise ScenarioError(f"delay_spread_s must be positive, got {config.delay_spread_s}")

    seed = realization_seed(config.master_seed, realization_index)
    rng = np.random.default_rng(seed)

    ris = np.asarray(config.ris_center_m)
    tx = np.asarray(config.tx_position_m)
    rx = np.asarray(config.rx_position_m)
    d_tx = float(np.linalg.norm(tx - ris))
    d_rx = float(np.linalg.norm(rx - ris))
    d_direct = float(np.linalg.norm(tx - rx))

    tx_paths = _ris_link(rng, config, config.num_tx_paths, d_tx, _angles_towards(ris, tx))
    rx_paths = _ris_link(rng, config, config.num_rx_paths, d_rx, _angles_towards(ris, rx))

    static_paths = []
    if config.num_static_paths > 0:
        if config.static_reference == "direct":
            reference = free_space_gain(d_direct, config.carrier_freq_hz)
        else:
            reference = free_space_gain(d_tx, config.carrier_freq_hz) * free_space_gain(d_rx, config.carrier_freq_hz)
        power = reference ** 2 * 10 ** (config.static_gain_offset_db / 10)
        static_paths = _nlos_paths(
            rng, config.num_static_paths, power, d_direct / speed_of_light,
            config.delay_spread_s, 0.0, with_angles=False,
        )

    logger.debug(f"Realization {realization_index}: seed {seed}, "
                 f"{len(tx_paths)}/{len(rx_paths)}/{len(static_paths)} paths")
    return Realization(PathSet(static_paths, tx_paths, rx_paths), seed)
