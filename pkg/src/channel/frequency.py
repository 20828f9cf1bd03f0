"""
Frequency-domain channel module for the bdris-wideband project.
This module builds the per-subcarrier OFDM channel and the quadratic
total-gain aggregates consumed by the optimizer.
"""

import logging

import numpy as np

from src.channel.models import (
    ChannelError,
    ElementGrid,
    PathSet,
    QuadraticAggregates,
    SubcarrierChannel,
    SystemParams,
    TapSet,
    atom_basis,
)
from src.channel.taps import compute_taps, link_responses

logger = logging.getLogger(__name__)


def vec(matrix):
    """Column-major vectorization."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector, n):
    """Inverse of vec for an n x n matrix."""
    return np.asarray(vector).reshape(n, n, order="F")


def dft_coeffs(taps: TapSet, num_subcarriers):
    """S-point DFTs of the zero-padded tap sequences: h_bar (S,) and c_bar (S, L_t, L_r)."""
    if num_subcarriers <= taps.num_taps:
        raise ChannelError(
            f"num_subcarriers ({num_subcarriers}) must exceed the tap count T ({taps.num_taps})"
        )
    static = np.fft.fft(taps.static_taps, n=num_subcarriers)
    cascaded = np.fft.fft(taps.cascaded_taps, n=num_subcarriers, axis=-1)
    return static, np.moveaxis(cascaded, -1, 0)


def cascaded_matrices(cascaded_coeffs, tx_responses, rx_responses, static_coeffs=None):
    """
    Assemble H_nu = sum_j sum_i c_bar_ij[nu] a(incident_i) a(outgoing_j)^T.

    cascaded_coeffs has shape (S, L_t, L_r); the responses have shapes (L_t, N)
    and (L_r, N). The incident response is the column, the outgoing one is transposed.
    """
    cascaded_coeffs = np.asarray(cascaded_coeffs, dtype=complex)
    tx_responses = np.atleast_2d(tx_responses)
    rx_responses = np.atleast_2d(rx_responses)
    num_subcarriers, num_tx, num_rx = cascaded_coeffs.shape
    if tx_responses.shape[0] != num_tx or rx_responses.shape[0] != num_rx:
        raise ChannelError(
            f"responses {tx_responses.shape}/{rx_responses.shape} do not match "
            f"coefficients {cascaded_coeffs.shape}"
        )
    if static_coeffs is None:
        static_coeffs = np.zeros(num_subcarriers, dtype=complex)
    # atom (i, j) flattened row-major
    incident = np.repeat(tx_responses, num_rx, axis=0)
    outgoing = np.tile(rx_responses, (num_tx, 1))
    coeffs = cascaded_coeffs.reshape(num_subcarriers, num_tx * num_rx)
    return SubcarrierChannel(static_coeffs, coeffs, incident, outgoing)


def channel_at(reflection, chan: SubcarrierChannel, nu):
    """h_bar_nu + tr(Psi H_nu)."""
    reflection = getattr(reflection, "entries", reflection)
    reflection = np.asarray(reflection)
    n = chan.num_elements
    if reflection.shape != (n, n):
        raise ChannelError(f"reflection matrix must be {n}x{n}, got {reflection.shape}")
    per_atom = np.einsum("kn,nm,km->k", chan.outgoing, reflection, chan.incident)
    return complex(chan.static_coeffs[nu] + chan.atom_coeffs[nu] @ per_atom)


def subcarrier_gains(reflection, chan: SubcarrierChannel):
    """|h_bar_nu + tr(Psi H_nu)|^2 for every subcarrier."""
    reflection = getattr(reflection, "entries", reflection)
    return np.abs(chan.static_coeffs + chan.trace_products(reflection)) ** 2


def total_gain(reflection, chan: SubcarrierChannel):
    """Total channel gain over all subcarriers."""
    return float(subcarrier_gains(reflection, chan).sum())


def aggregate_quadratic(chan: SubcarrierChannel) -> QuadraticAggregates:
    """
    A = sum_nu h_nu^* h_nu^T, b = sum_nu h_bar_nu h_nu^*, const = sum_nu |h_bar_nu|^2.

    With h_nu = basis^T coeffs[nu], A = basis^H (coeffs^H coeffs) basis and
    b = basis^H coeffs^H h_bar.
    """
    basis = atom_basis(chan.incident, chan.outgoing)
    coeffs = chan.atom_coeffs
    gram = coeffs.conj().T @ coeffs
    b = basis.conj().T @ (coeffs.conj().T @ chan.static_coeffs)
    const_term = float(np.sum(np.abs(chan.static_coeffs) ** 2))
    return QuadraticAggregates(basis, gram, b, const_term, chan.num_elements)


def build_channel(paths: PathSet, params: SystemParams, grid: ElementGrid):
    """Array responses, taps and the SubcarrierChannel of one realization."""
    if grid.num_elements != params.num_elements:
        raise ChannelError(
            f"grid has {grid.num_elements} elements, params declare {params.num_elements}"
        )
    tx_responses = link_responses(paths.tx_paths, grid, params.carrier_freq)
    rx_responses = link_responses(paths.rx_paths, grid, params.carrier_freq)
    taps = compute_taps(paths, params)
    static, cascaded = dft_coeffs(taps, params.num_subcarriers)
    chan = cascaded_matrices(cascaded, tx_responses, rx_responses, static)
    return taps, chan, tx_responses, rx_responses
