"""
Capacity module for the bdris-wideband project.
This module allocates power over the OFDM subcarriers by water-filling and
evaluates the achievable rate of a reflection matrix.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from src.channel.frequency import subcarrier_gains
from src.channel.models import SubcarrierChannel, SystemParams

logger = logging.getLogger(__name__)

ALLOCATIONS = ("waterfill", "equal")


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-subcarrier powers q_nu, water level mu and the average power q."""

    powers: np.ndarray
    water_level: float
    total_power: float
    zero_capacity: bool = False


@dataclass(frozen=True, eq=False)
class CapacityResult:
    capacity: float
    per_subcarrier_rate: np.ndarray
    gains: np.ndarray
    allocation: PowerAllocation


def _check_inputs(gains, total_power, noise):
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1 or gains.size == 0:
        raise ValueError(f"gains must be a nonempty vector, got shape {gains.shape}")
    if np.any(gains < 0) or not np.all(np.isfinite(gains)):
        raise ValueError("gains must be finite and nonnegative")
    if not total_power > 0:
        raise ValueError(f"total_power must be positive, got {total_power}")
    if not noise > 0:
        raise ValueError(f"noise must be positive, got {noise}")
    return gains


def waterfill(gains, total_power, noise) -> PowerAllocation:
    """
    q_nu = max(mu - N0 / g_nu, 0) with sum_nu q_nu = q S.

    mu is bracketed by geometric widening and found with brentq; the active set
    it identifies then fixes mu in closed form.
    """
    gains = _check_inputs(gains, total_power, noise)
    budget = total_power * gains.size
    positive = gains > 0
    if not np.any(positive):
        logger.warning("All subcarrier gains are zero, returning a zero allocation")
        return PowerAllocation(np.zeros_like(gains), 0.0, float(total_power), zero_capacity=True)

    floors = noise / gains[positive]

    def excess(mu):
        return float(np.sum(np.maximum(mu - floors, 0.0))) - budget

    lo = float(floors.min())
    hi = total_power + noise * gains.size / float(gains[positive].min())
    while excess(hi) < 0:
        hi *= 2
    mu = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    active = floors < mu
    for _ in range(gains.size):
        mu = (budget + float(floors[active].sum())) / int(active.sum())
        updated = floors < mu
        if np.array_equal(updated, active):
            break
        active = updated

    powers = np.zeros_like(gains)
    powers[positive] = np.maximum(mu - floors, 0.0)
    return PowerAllocation(powers, float(mu), float(total_power))


def equal_allocation(gains, total_power, noise) -> PowerAllocation:
    """q_nu = q on every subcarrier."""
    gains = _check_inputs(gains, total_power, noise)
    if not np.any(gains > 0):
        return PowerAllocation(np.zeros_like(gains), 0.0, float(total_power), zero_capacity=True)
    return PowerAllocation(np.full_like(gains, float(total_power)), float("nan"), float(total_power))


def rates(gains, allocation: PowerAllocation, noise, bandwidth, num_taps):
    """B / (T + S) log2(1 + q_nu g_nu / N0) per subcarrier, bit/s."""
    gains = np.asarray(gains, dtype=float)
    prefactor = bandwidth / (num_taps + gains.size)
    return prefactor * np.log2(1 + allocation.powers * gains / noise)


def capacity(reflection, chan: SubcarrierChannel, params: SystemParams, total_power,
             allocation="waterfill") -> CapacityResult:
    """Capacity of Psi with water-filling (default) or equal power over the subcarriers."""
    if allocation not in ALLOCATIONS:
        raise ValueError(f"allocation must be one of {ALLOCATIONS}, got {allocation!r}")
    gains = subcarrier_gains(reflection, chan)
    allocate = waterfill if allocation == "waterfill" else equal_allocation
    powers = allocate(gains, total_power, params.noise_psd)
    per_subcarrier = rates(gains, powers, params.noise_psd, params.bandwidth, params.num_taps)
    return CapacityResult(float(per_subcarrier.sum()), per_subcarrier, gains, powers)


def equal_power_capacity(reflection, chan: SubcarrierChannel, params: SystemParams, total_power):
    return capacity(reflection, chan, params, total_power, allocation="equal").capacity
