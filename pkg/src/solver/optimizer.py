"""
Optimizer module for the bdris-wideband project.
This module chains the relaxed solution, the symmetric-unitary projection and
the diagonal phase refinement into the full BD-RIS configuration pipeline.
"""

import csv
import logging
import time
from dataclasses import dataclass

import numpy as np

from src.channel.frequency import aggregate_quadratic, total_gain, unvec
from src.channel.models import ReflectionMatrix, SubcarrierChannel
from src.solver.relaxed import solve_relaxed
from src.solver.takagi import symmetric_unitary_factor

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 100
DEFAULT_STOP_TOL = 1e-10
DIAGNOSTIC_FIELDS = ["relaxed_objective", "projected_objective", "refined_objective",
                     "hard_case", "iterations", "runtime_s"]


@dataclass(frozen=True, eq=False)
class RefinementVector:
    """d = [1; diag(D)] with unit-modulus entries."""

    d: np.ndarray
    objective: float
    iterations: int

    def __post_init__(self):
        d = np.array(self.d, dtype=complex)
        if d.ndim != 1 or d.size < 2 or d[0] != 1:
            raise ValueError("refinement vector must have length >= 2 and first entry 1")
        if np.max(np.abs(np.abs(d) - 1)) > 1e-12:
            raise ValueError("refinement vector entries must have unit modulus")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def phases(self):
        """The diagonal of D."""
        return self.d[1:]


def phase_power_iteration(gram, iterations=DEFAULT_ITERATIONS, stop_tol=DEFAULT_STOP_TOL):
    """
    Maximize d^H gram d over unit-modulus d with d[0] = 1.

    Starting from all-ones: w = gram d / ||gram d||, subtract arg(w[0]) from every
    phase and project to unit modulus. The best iterate is kept, d0 included.
    A 2x2 gram has one free phase and is solved directly.
    Returns (d, objective, iterations run).
    """
    gram = np.asarray(gram, dtype=complex)
    d = np.ones(gram.shape[0], dtype=complex)
    best_d = d
    best = previous = float(np.real(np.vdot(d, gram @ d)))

    if gram.shape[0] == 2 and iterations > 0:
        # d1 = exp(-j arg gram[0, 1])
        d = np.array([1.0, np.exp(-1j * np.angle(gram[0, 1]))])
        return d, float(np.real(gram[0, 0] + gram[1, 1])) + 2 * abs(gram[0, 1]), 1

    run = 0
    for run in range(1, iterations + 1):
        w = gram @ d
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        angles = np.angle(w / norm)
        d = np.exp(1j * (angles - angles[0]))
        value = float(np.real(np.vdot(d, gram @ d)))
        if value > best:
            best_d, best = d, value
        if abs(value - previous) < stop_tol * abs(previous):
            break
        previous = value
    return best_d, best, run


def refine_diagonal(unitary, chan: SubcarrierChannel, iterations=DEFAULT_ITERATIONS,
                    stop_tol=DEFAULT_STOP_TOL) -> RefinementVector:
    """
    Phase refinement of Psi = S D S^T.

    With f_nu = [h_bar_nu, diag(S^T H_nu S)], the total gain of S diag(d[1:]) S^T
    is sum_nu |f_nu^T d|^2 = d^H (F^H F) d.
    """
    unitary = np.asarray(unitary, dtype=complex)
    features = np.column_stack([chan.static_coeffs, chan.diagonal_products(unitary)])
    gram = features.conj().T @ features
    d, objective, run = phase_power_iteration(gram, iterations, stop_tol)
    return RefinementVector(d, objective, run)


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    """Output of optimize with the objective after every stage."""

    reflection: ReflectionMatrix
    relaxed_objective: float
    projected_objective: float
    refined_objective: float
    hard_case: bool
    iterations: int
    runtime_s: float

    def diagnostics(self):
        return {name: getattr(self, name) for name in DIAGNOSTIC_FIELDS}


def optimize(chan: SubcarrierChannel, num_elements=None, iterations=DEFAULT_ITERATIONS) -> OptimizationReport:
    """Relaxed solution, Takagi projection S S^T and refinement of D into Psi = S D S^T."""
    start = time.perf_counter()
    n = chan.num_elements if num_elements is None else int(num_elements)

    agg = aggregate_quadratic(chan)
    relaxed = solve_relaxed(agg, n)
    unitary = symmetric_unitary_factor(unvec(relaxed.psi, n))
    projected = unitary @ unitary.T

    refinement = refine_diagonal(unitary, chan, iterations)
    entries = (unitary * refinement.phases) @ unitary.T
    reflection = ReflectionMatrix((entries + entries.T) / 2)

    report = OptimizationReport(
        reflection=reflection,
        relaxed_objective=relaxed.objective,
        projected_objective=total_gain(projected, chan),
        refined_objective=total_gain(reflection, chan),
        hard_case=relaxed.hard_case,
        iterations=refinement.iterations,
        runtime_s=time.perf_counter() - start,
    )
    logger.debug(f"Optimized N={n}: relaxed {report.relaxed_objective:.6e}, "
                 f"projected {report.projected_objective:.6e}, refined {report.refined_objective:.6e}")
    return report


def write_diagnostics(reports, filename, labels=None):
    """
    One CSV row of stage objectives per report. labels, when given, holds one
    dict of leading columns per report; the default is the running index.
    """
    reports = list(reports)
    if labels is None:
        labels = [{"index": index} for index in range(len(reports))]
    label_fields = list(labels[0]) if labels else ["index"]
    with open(filename, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=label_fields + DIAGNOSTIC_FIELDS)
        writer.writeheader()
        for label, report in zip(labels, reports):
            writer.writerow({**label, **report.diagnostics()})
