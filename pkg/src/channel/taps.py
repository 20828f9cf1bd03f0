"""
Discrete-time channel module for the bdris-wideband project.
This module turns a multipath PathSet into array responses and sinc-sampled
channel taps.
"""

import logging
import math

import numpy as np
from scipy.constants import speed_of_light

from src.channel.models import ChannelError, ElementGrid, PathSet, SystemParams, TapSet

logger = logging.getLogger(__name__)


def direction_vector(azimuth, elevation):
    """Unit vector of the angle pair, azimuth measured from broadside (+x) in the xy-plane."""
    return np.array([
        math.cos(elevation) * math.cos(azimuth),
        math.cos(elevation) * math.sin(azimuth),
        math.sin(elevation),
    ])


def element_delays(azimuth, elevation, grid: ElementGrid):
    """Plane-wave delay of every element relative to element 1, in seconds."""
    positions = grid.positions()
    return (positions - positions[0]) @ direction_vector(azimuth, elevation) / speed_of_light


def array_response(azimuth, elevation, grid: ElementGrid, carrier_freq):
    """Entry n is exp(-j 2 pi f_c (tau_n - tau_1)) for a plane wave from the given direction."""
    return np.exp(-2j * np.pi * carrier_freq * element_delays(azimuth, elevation, grid))


def link_responses(paths, grid: ElementGrid, carrier_freq):
    """Array responses of a list of RIS-side paths, shape (L, N)."""
    return np.array([array_response(p.azimuth, p.elevation, grid, carrier_freq) for p in paths])


def _end_to_end(paths: PathSet):
    """Attenuations and delays of static paths and cascaded path pairs."""
    tx_alpha = np.array([p.attenuation for p in paths.tx_paths])
    tx_delay = np.array([p.delay for p in paths.tx_paths])
    rx_alpha = np.array([p.attenuation for p in paths.rx_paths])
    rx_delay = np.array([p.delay for p in paths.rx_paths])
    static_alpha = np.array([p.attenuation for p in paths.static_paths])
    static_delay = np.array([p.delay for p in paths.static_paths])
    # cascaded arrays are indexed (i, j)
    cascaded_alpha = tx_alpha[:, None] * rx_alpha[None, :]
    cascaded_delay = tx_delay[:, None] + rx_delay[None, :]
    return static_alpha, static_delay, cascaded_alpha, cascaded_delay


def _sinc_taps(alpha, delay, carrier_freq, bandwidth, clock_delay, num_taps):
    """alpha exp(-j2pi f_c (tau - eta)) sinc(l + B (eta - tau)) for l = 0..T, last axis l."""
    ell = np.arange(num_taps + 1)
    phase = alpha * np.exp(-2j * np.pi * carrier_freq * (delay - clock_delay))
    return phase[..., None] * np.sinc(ell + bandwidth * (clock_delay - delay)[..., None])


def choose_clock_and_length(paths: PathSet, bandwidth, energy_tol=1e-6, max_taps=None):
    """
    Pick the receiver clock delay and the channel length.

    eta is the earliest end-to-end delay over static and cascaded paths. T is the
    smallest index such that the tap energy beyond T is below energy_tol of the
    total tap energy, capped at max_taps when given.
    """
    if paths is None:
        raise ChannelError("cannot choose a clock delay for an empty PathSet")
    if not 0 < energy_tol < 1:
        raise ChannelError(f"energy_tol must lie in (0, 1), got {energy_tol}")

    static_alpha, static_delay, cascaded_alpha, cascaded_delay = _end_to_end(paths)
    all_delays = np.concatenate([static_delay, cascaded_delay.ravel()])
    all_alpha = np.concatenate([static_alpha, cascaded_alpha.ravel()])
    clock_delay = float(all_delays.min())

    excess = bandwidth * (all_delays.max() - clock_delay)
    horizon = int(math.ceil(excess)) + int(math.ceil(1.0 / (math.pi ** 2 * energy_tol)))
    if max_taps is not None:
        horizon = min(horizon, int(max_taps))

    ell = np.arange(horizon + 1)
    energy = (all_alpha[:, None] ** 2
              * np.sinc(ell[None, :] + bandwidth * (clock_delay - all_delays)[:, None]) ** 2).sum(axis=0)
    total = energy.sum()
    if total <= 0:
        return clock_delay, 0

    # tail[T] = energy in taps T+1..horizon
    tail = total - np.cumsum(energy)
    below = np.nonzero(tail < energy_tol * total)[0]
    num_taps = int(below[0]) if below.size else horizon
    if max_taps is not None and num_taps >= max_taps:
        logger.debug(f"Tap count capped at {max_taps} (tail energy {tail[max_taps] / total:.2e})")
        num_taps = int(max_taps)
    return clock_delay, num_taps


def compute_taps(paths: PathSet, params: SystemParams) -> TapSet:
    """Static taps c_s[l] and cascaded taps c_ij[l] for l = 0..T."""
    static_alpha, static_delay, cascaded_alpha, cascaded_delay = _end_to_end(paths)
    args = (params.carrier_freq, params.bandwidth, params.clock_delay, params.num_taps)
    static = _sinc_taps(static_alpha, static_delay, *args).sum(axis=0)
    cascaded = _sinc_taps(cascaded_alpha, cascaded_delay, *args)
    return TapSet(static, cascaded)


def tap_matrices(taps: TapSet, tx_responses, rx_responses):
    """Per-tap cascaded matrices H^(l) = sum_ij c_ij[l] a_i a_o^T, shape (T+1, N, N)."""
    return np.einsum("ijl,in,jm->lnm", taps.cascaded_taps, tx_responses, rx_responses)


def impulse_response(reflection, taps: TapSet, tx_responses, rx_responses):
    """End-to-end taps h_Psi[l] = c_s[l] + sum_ij c_ij[l] a_o^T Psi a_i."""
    gains = np.einsum("jn,nm,im->ij", rx_responses, np.asarray(reflection), tx_responses)
    return taps.static_taps + np.einsum("ijl,ij->l", taps.cascaded_taps, gains)


def element_taps(paths: PathSet, params: SystemParams, grid: ElementGrid, reflection=None):
    """
    Unfactored tap evaluation, element pair by element pair.

    Per-element delays enter the carrier phase; the sinc is evaluated at the
    element-1 delays (narrowband array). reflection defaults to the identity.
    """
    n = grid.num_elements
    reflection = np.eye(n, dtype=complex) if reflection is None else np.asarray(reflection)
    ell = np.arange(params.num_taps + 1)
    fc, bw, eta = params.carrier_freq, params.bandwidth, params.clock_delay

    out = np.zeros(params.num_taps + 1, dtype=complex)
    for s in paths.static_paths:
        out = out + s.attenuation * np.exp(-2j * np.pi * fc * (s.delay - eta)) \
            * np.sinc(ell + bw * (eta - s.delay))
    for t in paths.tx_paths:
        tx_elem = t.delay + element_delays(t.azimuth, t.elevation, grid)
        for r in paths.rx_paths:
            rx_elem = r.delay + element_delays(r.azimuth, r.elevation, grid)
            envelope = np.sinc(ell + bw * (eta - r.delay - t.delay))
            # [n, m] = Psi_nm exp(-j2pi f_c (tau_r,n + tau_t,m - eta))
            phases = np.exp(-2j * np.pi * fc * (rx_elem[:, None] + tx_elem[None, :] - eta))
            out = out + r.attenuation * t.attenuation * np.sum(reflection * phases) * envelope
    return out
