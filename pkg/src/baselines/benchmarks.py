"""
Benchmark module for the bdris-wideband project.
This module implements the comparison configurations: the power-iteration
optimized conventional (diagonal) RIS, strongest-tap maximization and a random
BD-RIS with refined phases.
"""

import logging

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from src.channel.frequency import aggregate_quadratic, total_gain, unvec
from src.channel.models import ReflectionMatrix, SubcarrierChannel, TapSet
from src.channel.taps import tap_matrices
from src.solver.optimizer import DEFAULT_ITERATIONS, phase_power_iteration, refine_diagonal
from src.solver.relaxed import solve_relaxed
from src.solver.takagi import nearest_symmetric_unitary

logger = logging.getLogger(__name__)

SELECTIONS = ("tap", "principal", "total")


def diagonal_power_iteration(chan: SubcarrierChannel, iterations=DEFAULT_ITERATIONS) -> ReflectionMatrix:
    """Conventional RIS: unit-modulus diagonal phases from f_nu = [h_bar_nu, diag(H_nu)]."""
    n = chan.num_elements
    features = np.column_stack([chan.static_coeffs, chan.diagonal_products(np.eye(n))])
    gram = features.conj().T @ features
    d, objective, run = phase_power_iteration(gram, iterations)
    logger.debug(f"Diagonal baseline: objective {objective:.6e} after {run} iterations")
    return ReflectionMatrix.diagonal(d[1:])


def rank_one_configuration(matrix):
    """
    Symmetric unitary Psi maximizing |tr(Psi sigma_1 u v^T)| for the principal
    component of `matrix`. Returns (Psi, sigma_1, attained |tr(Psi sigma_1 u v^T)|).
    """
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    left, singular_values, right_h = scipy.linalg.svd(matrix)
    sigma, u, v = float(singular_values[0]), left[:, 0], right_h[0]

    principal = SubcarrierChannel(np.zeros(1), [[sigma]], u[None, :], v[None, :])
    relaxed = solve_relaxed(aggregate_quadratic(principal), n)
    reflection = nearest_symmetric_unitary(unvec(relaxed.psi, n))
    attained = abs(sigma * (v @ reflection.entries @ u))
    return reflection, sigma, attained


def strongest_tap(taps: TapSet, tx_responses, rx_responses, chan: SubcarrierChannel = None,
                  selection="tap") -> ReflectionMatrix:
    """
    Best of the per-tap rank-one configurations.

    selection 'tap' scores Psi_l by |tr(Psi_l H^(l))|^2, 'principal' by sigma_1(H^(l))^2
    and 'total' by the total gain over all subcarriers (needs chan).
    """
    if selection not in SELECTIONS:
        raise ValueError(f"selection must be one of {SELECTIONS}, got {selection!r}")
    if selection == "total" and chan is None:
        raise ValueError("selection='total' needs the SubcarrierChannel")

    matrices = tap_matrices(taps, tx_responses, rx_responses)
    best, best_score, best_tap = None, -np.inf, None
    for ell, matrix in enumerate(matrices):
        if not np.any(matrix):
            continue
        reflection, sigma, attained = rank_one_configuration(matrix)
        if selection == "tap":
            score = abs(np.trace(reflection.entries @ matrix)) ** 2
        elif selection == "principal":
            score = attained ** 2
        else:
            score = total_gain(reflection, chan)
        if score > best_score:
            best, best_score, best_tap = reflection, score, ell

    if best is None:
        logger.warning("All cascaded taps are zero, strongest_tap falls back to the identity")
        return ReflectionMatrix(np.eye(matrices.shape[1]))
    logger.debug(f"Strongest tap {best_tap} selected ({selection} score {best_score:.6e})")
    return best


def random_unitary(n, rng):
    """Haar-distributed n x n unitary."""
    if n == 1:
        return np.exp(2j * np.pi * rng.uniform(size=(1, 1)))
    return unitary_group.rvs(n, random_state=rng)


def random_bd(chan: SubcarrierChannel, seed, iterations=DEFAULT_ITERATIONS) -> ReflectionMatrix:
    """Random unitary S, refined D, Psi = S D S^T."""
    rng = np.random.default_rng(seed)
    unitary = random_unitary(chan.num_elements, rng)
    refinement = refine_diagonal(unitary, chan, iterations)
    entries = (unitary * refinement.phases) @ unitary.T
    return ReflectionMatrix((entries + entries.T) / 2)
