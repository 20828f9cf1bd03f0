"""
Takagi factorization module for the bdris-wideband project.
This module factors complex symmetric matrices as S Sigma S^T and projects
arbitrary matrices onto the nearest symmetric unitary matrix.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.channel.models import ReflectionMatrix

logger = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-9
UNITARITY_TOL = 1e-10
# singular values below NULL_TOL * sigma_1 form the null cluster
NULL_TOL = 1e-13


class TakagiError(RuntimeError):
    """The Takagi reconstruction residual is beyond tolerance."""


@dataclass(frozen=True, eq=False)
class TakagiFactors:
    """M = S diag(singular_values) S^T with S unitary."""

    unitary: np.ndarray
    singular_values: np.ndarray

    def reconstruct(self):
        return (self.unitary * self.singular_values) @ self.unitary.T


def _clusters(singular_values, cluster_tol):
    """Index groups of consecutive singular values closer than cluster_tol * sigma_1."""
    groups = [[0]]
    for k in range(1, singular_values.size):
        if singular_values[k - 1] - singular_values[k] <= cluster_tol * singular_values[0]:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def _block_takagi(block):
    """
    Takagi factors of a small nonsingular symmetric block K.

    The real symmetric matrix [[Re K, Im K], [Im K, -Re K]] has eigenvalues +-sigma;
    an eigenvector [x; y] of +sigma gives K conj(x + jy) = sigma (x + jy).
    """
    m = block.shape[0]
    auxiliary = np.block([[block.real, block.imag], [block.imag, -block.real]])
    values, vectors = scipy.linalg.eigh(auxiliary)
    top = vectors[:, m:]
    return top[:m] + 1j * top[m:], values[m:]


def _factor(matrix, left, singular_values, right_h, cluster_tol):
    n = matrix.shape[0]
    right = right_h.conj().T
    unitary = np.empty((n, n), dtype=complex)
    sigma = singular_values.copy()

    null = singular_values <= NULL_TOL * singular_values[0]
    active = int(np.count_nonzero(~null))
    unitary[:, active:] = left[:, active:]

    for group in _clusters(singular_values[:active], cluster_tol):
        if len(group) == 1:
            k = group[0]
            phase = left[:, k] @ right[:, k]
            unitary[:, k] = left[:, k] * np.conj(np.sqrt(phase))
        else:
            cols = left[:, group]
            block = cols.conj().T @ matrix @ cols.conj()
            block = (block + block.T) / 2
            inner, values = _block_takagi(block)
            unitary[:, group] = cols @ inner
            sigma[group] = values
    return TakagiFactors(unitary, sigma)


def takagi(matrix, cluster_tol=1e-8) -> TakagiFactors:
    """
    Takagi factorization of a complex symmetric matrix.

    Singleton singular values get a phase correction of the left singular vector;
    clusters closer than cluster_tol * sigma_1 are factored blockwise. When the
    reconstruction misses the tolerance, neighbouring clusters are merged with a
    looser tolerance before giving up.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"takagi needs a square matrix, got shape {matrix.shape}")
    n = matrix.shape[0]
    norm = float(np.linalg.norm(matrix))
    if norm == 0:
        return TakagiFactors(np.eye(n, dtype=complex), np.zeros(n))
    if np.linalg.norm(matrix - matrix.T) > RECONSTRUCTION_TOL * norm:
        raise ValueError("takagi needs a complex symmetric matrix")

    left, singular_values, right_h = scipy.linalg.svd(matrix)

    tol = cluster_tol
    while True:
        factors = _factor(matrix, left, singular_values, right_h, tol)
        residual = np.linalg.norm(factors.reconstruct() - matrix)
        unitarity = np.linalg.norm(factors.unitary.conj().T @ factors.unitary - np.eye(n))
        if residual <= RECONSTRUCTION_TOL * norm and unitarity <= UNITARITY_TOL * n:
            return factors
        if tol >= 1.0:
            raise TakagiError(
                f"Takagi reconstruction residual {residual / norm:.3e}, unitarity {unitarity:.3e}"
            )
        logger.debug(f"Takagi residual {residual / norm:.3e} at cluster_tol={tol:.0e}, merging clusters")
        tol = min(tol * 100, 1.0)


def symmetric_unitary_factor(target):
    """Unitary Takagi factor S of the symmetric part (X + X^T)/2."""
    target = np.asarray(getattr(target, "entries", target), dtype=complex)
    return takagi((target + target.T) / 2).unitary


def nearest_symmetric_unitary(target) -> ReflectionMatrix:
    """Frobenius-nearest symmetric unitary matrix S S^T."""
    unitary = symmetric_unitary_factor(target)
    return ReflectionMatrix(unitary @ unitary.T)
