"""
Channel data model for the bdris-wideband project.
This module holds the immutable value types shared by the channel, solver,
baselines and capacity packages.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.constants import speed_of_light


class ChannelError(ValueError):
    """Invalid channel description or dimension mismatch."""


def _frozen(array, dtype):
    """Copy into a read-only array of the given dtype."""
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Path:
    """A single propagation path: attenuation, delay and angle pair."""

    attenuation: float
    delay: float
    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.attenuation <= 1.0:
            raise ChannelError(f"attenuation must lie in [0, 1], got {self.attenuation}")
        if not math.isfinite(self.delay) or self.delay < 0:
            raise ChannelError(f"delay must be finite and >= 0, got {self.delay}")


@dataclass(frozen=True)
class PathSet:
    """Static, TX->RIS and RIS->RX multipath components of one realization."""

    static_paths: Tuple[Path, ...] = ()
    tx_paths: Tuple[Path, ...] = ()
    rx_paths: Tuple[Path, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "static_paths", tuple(self.static_paths))
        object.__setattr__(self, "tx_paths", tuple(self.tx_paths))
        object.__setattr__(self, "rx_paths", tuple(self.rx_paths))
        if not self.tx_paths:
            raise ChannelError("tx_paths must contain at least one path")
        if not self.rx_paths:
            raise ChannelError("rx_paths must contain at least one path")
        for link in (self.tx_paths, self.rx_paths):
            for path in link:
                if abs(path.azimuth) >= math.pi / 2 or abs(path.elevation) >= math.pi / 2:
                    raise ChannelError(
                        f"RIS-side path angles must be within (-pi/2, pi/2) of broadside, "
                        f"got ({path.azimuth}, {path.elevation})"
                    )

    @property
    def num_static(self):
        return len(self.static_paths)

    @property
    def num_tx(self):
        return len(self.tx_paths)

    @property
    def num_rx(self):
        return len(self.rx_paths)


@dataclass(frozen=True)
class ElementGrid:
    """Planar RIS element layout in the yz-plane, indexed column-major."""

    rows: int
    cols: int
    spacing: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ChannelError(f"grid must have at least one row and column, got {self.rows}x{self.cols}")
        if self.spacing <= 0:
            raise ChannelError(f"element spacing must be positive, got {self.spacing}")

    @property
    def num_elements(self):
        return self.rows * self.cols

    def positions(self):
        """Element positions (N, 3) relative to element 1; the surface faces +x."""
        index = np.arange(self.num_elements)
        positions = np.zeros((self.num_elements, 3))
        positions[:, 1] = (index // self.rows) * self.spacing
        positions[:, 2] = (index % self.rows) * self.spacing
        return positions


@dataclass(frozen=True)
class SystemParams:
    """OFDM and RIS parameters of one evaluation point."""

    carrier_freq: float
    bandwidth: float
    num_subcarriers: int
    num_taps: int
    clock_delay: float
    noise_psd: float
    num_elements: int
    element_spacing: float

    def __post_init__(self):
        if self.num_subcarriers < 1:
            raise ChannelError(f"num_subcarriers must be positive, got {self.num_subcarriers}")
        if self.num_taps < 0:
            raise ChannelError(f"num_taps must be nonnegative, got {self.num_taps}")
        if self.num_subcarriers <= self.num_taps:
            raise ChannelError(
                f"num_subcarriers ({self.num_subcarriers}) must exceed num_taps ({self.num_taps})"
            )
        if self.bandwidth <= 0 or self.carrier_freq / self.bandwidth <= 10:
            raise ChannelError(
                f"carrier_freq/bandwidth must exceed 10, got {self.carrier_freq}/{self.bandwidth}"
            )
        root = math.isqrt(self.num_elements) if self.num_elements > 0 else 0
        if self.num_elements < 1 or root * root != self.num_elements:
            raise ChannelError(f"num_elements must be a positive perfect square, got {self.num_elements}")
        if self.noise_psd <= 0:
            raise ChannelError(f"noise_psd must be positive, got {self.noise_psd}")

    @property
    def wavelength(self):
        return speed_of_light / self.carrier_freq


@dataclass(frozen=True, eq=False)
class TapSet:
    """Discrete-time coefficients: static_taps (T+1,), cascaded_taps (L_t, L_r, T+1)."""

    static_taps: np.ndarray
    cascaded_taps: np.ndarray

    def __post_init__(self):
        static = _frozen(self.static_taps, complex)
        cascaded = _frozen(self.cascaded_taps, complex)
        if static.ndim != 1 or cascaded.ndim != 3 or cascaded.shape[2] != static.shape[0]:
            raise ChannelError(
                f"tap shapes disagree: static {static.shape}, cascaded {cascaded.shape}"
            )
        object.__setattr__(self, "static_taps", static)
        object.__setattr__(self, "cascaded_taps", cascaded)

    @property
    def num_taps(self):
        """T, the largest tap index."""
        return self.static_taps.shape[0] - 1


@dataclass(frozen=True, eq=False)
class SubcarrierChannel:
    """
    Per-subcarrier static coefficients and cascaded matrices.

    H_nu is stored in factored form, H_nu = sum_k atom_coeffs[nu, k] incident[k] outgoing[k]^T,
    one atom per (TX path, RX path) pair. Dense matrices are built on demand.
    """

    static_coeffs: np.ndarray
    atom_coeffs: np.ndarray
    incident: np.ndarray
    outgoing: np.ndarray

    def __post_init__(self):
        static = _frozen(self.static_coeffs, complex)
        coeffs = _frozen(self.atom_coeffs, complex)
        incident = _frozen(self.incident, complex)
        outgoing = _frozen(self.outgoing, complex)
        if static.ndim != 1 or coeffs.ndim != 2 or coeffs.shape[0] != static.shape[0]:
            raise ChannelError(f"coefficient shapes disagree: {static.shape} vs {coeffs.shape}")
        if incident.shape != outgoing.shape or incident.shape[0] != coeffs.shape[1]:
            raise ChannelError(
                f"atom shapes disagree: coeffs {coeffs.shape}, incident {incident.shape}, "
                f"outgoing {outgoing.shape}"
            )
        object.__setattr__(self, "static_coeffs", static)
        object.__setattr__(self, "atom_coeffs", coeffs)
        object.__setattr__(self, "incident", incident)
        object.__setattr__(self, "outgoing", outgoing)

    @classmethod
    def from_matrices(cls, static_coeffs, matrices):
        """Wrap dense (S, N, N) cascaded matrices using the elementary atoms e_m e_n^T."""
        matrices = np.asarray(matrices, dtype=complex)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ChannelError(f"cascaded matrices must have shape (S, N, N), got {matrices.shape}")
        num_subcarriers, n, _ = matrices.shape
        eye = np.eye(n)
        # atom k = m + n*N (column-major) is e_m e_n^T
        incident = np.tile(eye, (n, 1))
        outgoing = np.repeat(eye, n, axis=0)
        coeffs = matrices.transpose(0, 2, 1).reshape(num_subcarriers, n * n)
        return cls(static_coeffs, coeffs, incident, outgoing)

    @property
    def num_subcarriers(self):
        return self.static_coeffs.shape[0]

    @property
    def num_elements(self):
        return self.incident.shape[1]

    @cached_property
    def cascaded_matrices(self):
        """Dense H_nu, shape (S, N, N)."""
        return np.einsum("vk,kn,km->vnm", self.atom_coeffs, self.incident, self.outgoing)

    def vectorized(self):
        """Rows h_nu = vec(H_nu^T) (column-major): tr(Psi H_nu) = h_nu^T vec(Psi). Shape (S, N^2)."""
        return self.atom_coeffs @ atom_basis(self.incident, self.outgoing)

    def trace_products(self, reflection):
        """tr(Psi H_nu) for every subcarrier."""
        reflection = np.asarray(reflection)
        n = self.num_elements
        if reflection.shape != (n, n):
            raise ChannelError(f"reflection matrix must be {n}x{n}, got {reflection.shape}")
        # tr(Psi a_i a_o^T) = a_o^T Psi a_i
        per_atom = np.einsum("kn,nm,km->k", self.outgoing, reflection, self.incident)
        return self.atom_coeffs @ per_atom

    def diagonal_products(self, unitary):
        """diag(S^T H_nu S) for every subcarrier, shape (S, N)."""
        unitary = np.asarray(unitary)
        incident = self.incident @ unitary
        outgoing = self.outgoing @ unitary
        return self.atom_coeffs @ (incident * outgoing)


def atom_basis(incident, outgoing):
    """Rows vec(v_k u_k^T) = u_k kron v_k, so tr(Psi u_k v_k^T) = row_k . vec(Psi); shape (K, N^2)."""
    k, n = incident.shape
    return (incident[:, :, None] * outgoing[:, None, :]).reshape(k, n * n)


@dataclass(frozen=True, eq=False)
class QuadraticAggregates:
    """
    Total-gain quadratic psi^H A psi + 2 Re(psi^H b) + const_term.

    A is kept as basis^H gram basis; basis rows span the range of A.
    """

    basis: np.ndarray
    gram: np.ndarray
    b: np.ndarray
    const_term: float
    num_elements: int = field(default=0)

    def __post_init__(self):
        basis = _frozen(self.basis, complex)
        gram = _frozen(self.gram, complex)
        b = _frozen(self.b, complex)
        dim = basis.shape[1]
        if gram.shape != (basis.shape[0], basis.shape[0]) or b.shape != (dim,):
            raise ChannelError(
                f"aggregate shapes disagree: basis {basis.shape}, gram {gram.shape}, b {b.shape}"
            )
        n = self.num_elements or math.isqrt(dim)
        if n * n != dim:
            raise ChannelError(f"aggregate dimension {dim} is not N^2")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "const_term", float(self.const_term))
        object.__setattr__(self, "num_elements", n)

    @classmethod
    def from_dense(cls, A, b, const_term=0.0):
        """Aggregates of an explicit Hermitian PSD matrix A."""
        A = np.asarray(A, dtype=complex)
        return cls(np.eye(A.shape[0]), A, b, const_term)

    @cached_property
    def A(self):
        """Dense N^2 x N^2 matrix."""
        return self.basis.conj().T @ self.gram @ self.basis

    def objective(self, psi):
        """psi^H A psi + 2 Re(psi^H b) + const_term."""
        psi = np.asarray(psi, dtype=complex)
        projected = self.basis @ psi
        quad = np.real(np.vdot(projected, self.gram @ projected))
        return quad + 2 * np.real(np.vdot(psi, self.b)) + self.const_term


@dataclass(frozen=True, eq=False)
class ReflectionMatrix:
    """
    RIS reflection matrix Psi.

    mode 'bd' is a full symmetric unitary matrix, mode 'diagonal' a conventional
    RIS with unit-modulus diagonal and zero off-diagonal entries.
    """

    entries: np.ndarray
    mode: str = "bd"

    def __post_init__(self):
        entries = _frozen(self.entries, complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ChannelError(f"reflection matrix must be square, got {entries.shape}")
        if self.mode not in ("bd", "diagonal"):
            raise ChannelError(f"mode must be 'bd' or 'diagonal', got {self.mode!r}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def diagonal(cls, values):
        """Diagonal matrix of the unit-modulus projections of `values`."""
        values = np.asarray(values, dtype=complex)
        phases = np.exp(1j * np.angle(values))
        return cls(np.diag(phases), mode="diagonal")

    @property
    def num_elements(self):
        return self.entries.shape[0]

    @property
    def symmetry_residual(self):
        """||Psi - Psi^T||_F"""
        return float(np.linalg.norm(self.entries - self.entries.T))

    @property
    def unitarity_residual(self):
        """||Psi Psi^H - I||_F"""
        n = self.num_elements
        return float(np.linalg.norm(self.entries @ self.entries.conj().T - np.eye(n)))

    def is_feasible(self, tol=1e-10):
        """Both residuals within tol * N; diagonal mode also needs exact zeros off the diagonal."""
        n = self.num_elements
        if self.mode == "diagonal":
            off_diagonal = self.entries - np.diag(np.diag(self.entries))
            if np.any(off_diagonal != 0):
                return False
            if np.max(np.abs(np.abs(np.diag(self.entries)) - 1)) > tol:
                return False
        return self.symmetry_residual <= tol * n and self.unitarity_residual <= tol * n
