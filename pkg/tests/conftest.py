import numpy as np
import pytest

from src.channel.models import SubcarrierChannel


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channel(rng, num_subcarriers, num_elements, num_atoms=None, static=True):
    """Factored channel with random unit-modulus atoms and Gaussian coefficients."""
    num_atoms = num_atoms or 2
    incident = np.exp(2j * np.pi * rng.uniform(size=(num_atoms, num_elements)))
    outgoing = np.exp(2j * np.pi * rng.uniform(size=(num_atoms, num_elements)))
    coeffs = crandn(rng, num_subcarriers, num_atoms)
    static_coeffs = crandn(rng, num_subcarriers) if static else np.zeros(num_subcarriers)
    return SubcarrierChannel(static_coeffs, coeffs, incident, outgoing)


def random_dense_channel(rng, num_subcarriers, num_elements, static=True):
    """Channel built from unstructured complex Gaussian H_nu."""
    matrices = crandn(rng, num_subcarriers, num_elements, num_elements)
    static_coeffs = crandn(rng, num_subcarriers) if static else np.zeros(num_subcarriers)
    return SubcarrierChannel.from_matrices(static_coeffs, matrices)


def random_symmetric_unitary(rng, n):
    q, r = np.linalg.qr(crandn(rng, n, n))
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
