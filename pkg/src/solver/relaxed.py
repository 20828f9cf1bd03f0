"""
Relaxed solver module for the bdris-wideband project.
This module maximizes psi^H A psi + 2 Re(psi^H b) over the sphere ||psi||^2 = N
through the eigendecomposition of A and the secular equation.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import bisect

from src.channel.models import QuadraticAggregates

logger = logging.getLogger(__name__)

# relative residual accepted from the eigensolver
EIGEN_RESIDUAL_TOL = 1e-8


class EigenSolverError(RuntimeError):
    """The eigendecomposition failed or its residual is too large."""


class SecularHardCase(RuntimeError):
    """The secular equation has no root above the largest eigenvalue."""


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """
    Eigenpairs of A, eigenvalues descending.

    Only the range of A is stored: the remaining dimension - len(eigenvalues)
    eigenvalues are zero.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dimension: int

    @property
    def max_eigenvalue(self):
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    @property
    def frobenius_norm(self):
        return float(np.linalg.norm(self.eigenvalues))


@dataclass(frozen=True, eq=False)
class RelaxedSolution:
    psi: np.ndarray
    gamma: float
    hard_case: bool
    eigen: EigenSystem
    objective: float


def eigen_system(agg: QuadraticAggregates) -> EigenSystem:
    """
    Eigendecomposition of A = W^H G W.

    With the economic QR W^H = QR, A = Q (R G R^H) Q^H, so the eigenvectors of A
    spanning its range are Q times those of the small matrix R G R^H.
    """
    basis_h = agg.basis.conj().T
    try:
        q, r = scipy.linalg.qr(basis_h, mode="economic")
        reduced = r @ agg.gram @ r.conj().T
        reduced = (reduced + reduced.conj().T) / 2
        values, vectors = scipy.linalg.eigh(reduced)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"eigendecomposition failed: {e}") from e

    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = q @ vectors[:, order]

    # residual ||A U - U diag(values)|| without forming A
    applied = basis_h @ (agg.gram @ (agg.basis @ vectors))
    residual = np.linalg.norm(applied - vectors * values)
    scale = max(np.linalg.norm(values), np.finfo(float).tiny)
    if not np.isfinite(residual) or residual > EIGEN_RESIDUAL_TOL * scale * math.sqrt(values.size):
        raise EigenSolverError(f"eigen residual {residual:.3e} exceeds tolerance (scale {scale:.3e})")
    return EigenSystem(values, vectors, agg.basis.shape[1])


def secular_function(gamma, eigenvalues, projections):
    """f(gamma) = sum_d |u_d^H b|^2 / (gamma - lambda_d)^2"""
    weights = np.abs(np.asarray(projections)) ** 2
    return float(np.sum(weights / (gamma - np.asarray(eigenvalues, dtype=float)) ** 2))


def secular_root(eigenvalues, projections, num_elements):
    """
    Root gamma* > max lambda_d of f(gamma) = N.

    Bisection on t = (gamma - lambda_max) / scale over (eps, ||b|| / (sqrt(N) scale)];
    f is decreasing there and f <= N at the upper end.
    Raises SecularHardCase when f(lambda_max + eps) < N.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    weights = np.abs(np.asarray(projections)) ** 2
    if not np.any(weights > 0):
        raise ValueError("secular_root needs at least one nonzero projection")

    lambda_max = float(eigenvalues.max()) if eigenvalues.size else 0.0
    b_norm = math.sqrt(float(weights.sum()))
    upper = b_norm / math.sqrt(num_elements)
    scale = max(lambda_max, upper)

    gaps = (lambda_max - eigenvalues) / scale
    scaled_weights = weights / scale ** 2

    def excess(t):
        return float(np.sum(scaled_weights / (t + gaps) ** 2)) - num_elements

    lo = 1e-12 * (1 + lambda_max / scale)
    hi = upper / scale
    if lo >= hi or excess(lo) < 0:
        raise SecularHardCase(
            f"no secular root above lambda_max={lambda_max:.6e} (f(lambda_max+) < N={num_elements})"
        )
    if excess(hi) >= 0:
        t = hi
    else:
        t = bisect(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return lambda_max + t * scale


def _hard_case(eigen: EigenSystem, projections, num_elements):
    """gamma = lambda_max; non-dominant sum plus a dominant eigenvector component."""
    values = eigen.eigenvalues
    lambda_max = eigen.max_eigenvalue
    dominant = values >= lambda_max - 1e-10 * max(lambda_max, np.finfo(float).tiny)

    coeffs = np.zeros_like(projections)
    coeffs[~dominant] = projections[~dominant] / (lambda_max - values[~dominant])
    psi = eigen.eigenvectors @ coeffs
    remaining = num_elements - float(np.vdot(psi, psi).real)
    if remaining > 0:
        psi = psi + math.sqrt(remaining) * eigen.eigenvectors[:, np.argmax(dominant)]
    logger.debug(f"Secular hard case: {int(dominant.sum())} dominant eigenvectors, "
                 f"dominant component norm^2 {max(remaining, 0.0):.3e}")
    return psi, lambda_max


def solve_relaxed(agg: QuadraticAggregates, num_elements=None, eigen: EigenSystem = None) -> RelaxedSolution:
    """
    Maximize psi^H A psi + 2 Re(psi^H b) subject to ||psi||^2 = N.

    b ~ 0 gives sqrt(N) times the dominant eigenvector. Otherwise
    psi = sum_d u_d u_d^H b / (gamma* - lambda_d) with gamma* the secular root,
    falling back to the hard-case construction when no root exists.
    """
    n = agg.num_elements if num_elements is None else int(num_elements)
    if n * n != agg.basis.shape[1]:
        raise ValueError(f"aggregates of dimension {agg.basis.shape[1]} do not match N={n}")
    eigen = eigen_system(agg) if eigen is None else eigen
    target = math.sqrt(n)

    b = agg.b
    b_norm = float(np.linalg.norm(b))
    b_zero_tol = 1e-12 * eigen.frobenius_norm * target
    hard_case = False

    if b_norm <= b_zero_tol:
        psi = target * eigen.eigenvectors[:, 0]
        gamma = eigen.max_eigenvalue
    else:
        projections = eigen.eigenvectors.conj().T @ b
        try:
            gamma = secular_root(eigen.eigenvalues, projections, n)
            psi = eigen.eigenvectors @ (projections / (gamma - eigen.eigenvalues))
        except SecularHardCase:
            hard_case = True
            psi, gamma = _hard_case(eigen, projections, n)

    psi = psi * (target / np.linalg.norm(psi))
    return RelaxedSolution(psi, float(gamma), hard_case, eigen, agg.objective(psi))
