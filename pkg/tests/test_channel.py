import math

import numpy as np
import pytest
from scipy.constants import speed_of_light

from conftest import crandn, random_channel, random_dense_channel
from src.channel.frequency import (
    aggregate_quadratic,
    build_channel,
    cascaded_matrices,
    channel_at,
    dft_coeffs,
    subcarrier_gains,
    total_gain,
    unvec,
    vec,
)
from src.channel.models import (
    ChannelError,
    ElementGrid,
    Path,
    PathSet,
    ReflectionMatrix,
    SubcarrierChannel,
    SystemParams,
    TapSet,
)
from src.channel.taps import (
    array_response,
    choose_clock_and_length,
    compute_taps,
    element_taps,
    impulse_response,
    link_responses,
    tap_matrices,
)

FC = 3e9
BW = 30e6
WAVELENGTH = speed_of_light / FC


def make_params(paths, num_subcarriers=64, num_elements=4, energy_tol=1e-6, bandwidth=BW):
    eta, num_taps = choose_clock_and_length(paths, bandwidth, energy_tol, max_taps=num_subcarriers - 1)
    return SystemParams(FC, bandwidth, num_subcarriers, num_taps, eta, 1e-13, num_elements, WAVELENGTH / 4)


def random_paths(rng, num_static=1, num_tx=2, num_rx=3):
    def draw(count, angles=True):
        return [
            Path(
                float(rng.uniform(1e-4, 1e-2)),
                float(rng.uniform(50e-9, 400e-9)),
                float(rng.uniform(-1.0, 1.0)) if angles else 0.0,
                float(rng.uniform(-1.0, 1.0)) if angles else 0.0,
            )
            for _ in range(count)
        ]
    return PathSet(draw(num_static, angles=False), draw(num_tx), draw(num_rx))


# --- data model -------------------------------------------------------------

def test_path_rejects_bad_values():
    with pytest.raises(ChannelError):
        Path(1.5, 0.0)
    with pytest.raises(ChannelError):
        Path(0.5, -1e-9)
    with pytest.raises(ChannelError):
        Path(0.5, float("inf"))


def test_pathset_requires_ris_links_and_broadside_angles():
    with pytest.raises(ChannelError):
        PathSet([Path(0.1, 0.0)], [], [Path(0.1, 0.0)])
    with pytest.raises(ChannelError):
        PathSet([], [Path(0.1, 0.0, azimuth=math.pi / 2)], [Path(0.1, 0.0)])
    paths = PathSet([], [Path(0.1, 0.0)], [Path(0.1, 0.0), Path(0.2, 1e-9)])
    assert (paths.num_static, paths.num_tx, paths.num_rx) == (0, 1, 2)


def test_system_params_validation():
    with pytest.raises(ChannelError):
        SystemParams(FC, BW, 4, 4, 0.0, 1e-13, 4, 0.025)
    with pytest.raises(ChannelError):
        SystemParams(1e9, 2e8, 64, 3, 0.0, 1e-13, 4, 0.025)
    with pytest.raises(ChannelError):
        SystemParams(FC, BW, 64, 3, 0.0, 1e-13, 6, 0.025)
    with pytest.raises(ChannelError):
        SystemParams(FC, BW, 64, 3, 0.0, 0.0, 4, 0.025)
    params = SystemParams(FC, BW, 64, 3, 0.0, 1e-13, 4, 0.025)
    assert params.wavelength == pytest.approx(0.0999308, rel=1e-6)


def test_element_grid_is_column_major():
    grid = ElementGrid(rows=2, cols=3, spacing=0.5)
    positions = grid.positions()
    assert grid.num_elements == 6
    np.testing.assert_allclose(positions[1], [0, 0, 0.5])
    np.testing.assert_allclose(positions[2], [0, 0.5, 0])
    np.testing.assert_allclose(positions[5], [0, 1.0, 0.5])


def test_reflection_matrix_feasibility(rng):
    diagonal = ReflectionMatrix.diagonal(crandn(rng, 4))
    assert diagonal.mode == "diagonal"
    assert diagonal.is_feasible()
    assert not ReflectionMatrix(2 * np.eye(3)).is_feasible()
    asymmetric = np.array([[0, 1], [-1, 0]], dtype=complex)
    assert not ReflectionMatrix(asymmetric).is_feasible()
    with pytest.raises(ChannelError):
        ReflectionMatrix(np.eye(2), mode="group")


# --- array responses and taps -------------------------------------------------

def test_array_response_broadside_is_all_ones():
    grid = ElementGrid(4, 4, WAVELENGTH / 4)
    np.testing.assert_allclose(array_response(0.0, 0.0, grid, FC), np.ones(16))


def test_array_response_two_elements_quarter_wavelength():
    grid = ElementGrid(rows=1, cols=2, spacing=WAVELENGTH / 4)
    response = array_response(math.pi / 2, 0.0, grid, FC)
    np.testing.assert_allclose(response, [1, np.exp(-1j * math.pi / 2)], atol=1e-12)


def test_array_response_unit_modulus(rng):
    grid = ElementGrid(3, 5, WAVELENGTH / 4)
    for _ in range(10):
        response = array_response(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), grid, FC)
        assert response[0] == 1
        np.testing.assert_allclose(np.abs(response), 1.0, atol=1e-12)


def test_clock_delay_is_earliest_delay():
    static_only = PathSet([Path(0.5, 120e-9)], [Path(0.1, 300e-9)], [Path(0.1, 300e-9)])
    eta, _ = choose_clock_and_length(static_only, BW)
    assert eta == pytest.approx(120e-9)

    cascaded_first = PathSet([Path(0.5, 500e-9)], [Path(0.1, 100e-9)], [Path(0.1, 150e-9)])
    eta, _ = choose_clock_and_length(cascaded_first, BW)
    assert eta == pytest.approx(250e-9)


def test_aligned_cascaded_path_sets_tap_length():
    paths = PathSet([Path(0.5, 100e-9)], [Path(0.5, 200e-9)], [Path(0.5, 0.0)])
    eta, num_taps = choose_clock_and_length(paths, BW)
    assert eta == pytest.approx(100e-9)
    assert num_taps == 3  # cascaded pair at eta + 3/B


def test_tap_length_covers_delayed_path():
    paths = PathSet([Path(0.5, 100e-9), Path(0.5, 100e-9 + 5 / BW)], [Path(1e-3, 50e-9)], [Path(1e-3, 50e-9)])
    _, num_taps = choose_clock_and_length(paths, BW)
    assert num_taps >= 5


def test_tap_length_respects_cap(rng):
    paths = random_paths(rng)
    _, num_taps = choose_clock_and_length(paths, BW, energy_tol=1e-12, max_taps=8)
    assert num_taps == 8


def test_tap_length_grows_with_tighter_tolerance(rng):
    paths = random_paths(rng)
    lengths = [choose_clock_and_length(paths, BW, energy_tol=tol)[1] for tol in (1e-2, 1e-4, 1e-6)]
    assert lengths == sorted(lengths)
    assert lengths[0] < lengths[-1]


def test_choose_clock_rejects_bad_input():
    paths = PathSet([], [Path(0.1, 0.0)], [Path(0.1, 0.0)])
    with pytest.raises(ChannelError):
        choose_clock_and_length(paths, BW, energy_tol=0.0)
    with pytest.raises(ChannelError):
        choose_clock_and_length(None, BW)


def test_aligned_static_path_taps():
    paths = PathSet([Path(0.5, 100e-9)], [Path(1e-3, 100e-9 + 1 / BW)], [Path(1e-3, 2 / BW)])
    params = SystemParams(FC, BW, 16, 5, 100e-9, 1e-13, 1, WAVELENGTH / 4)
    taps = compute_taps(paths, params)
    np.testing.assert_allclose(taps.static_taps, [0.5, 0, 0, 0, 0, 0], atol=1e-15)
    cascaded = taps.cascaded_taps[0, 0]
    assert abs(cascaded[3]) == pytest.approx(1e-6)
    np.testing.assert_allclose(np.delete(cascaded, 3), 0, atol=1e-18)


def test_factored_taps_match_per_element_evaluation(rng):
    paths = random_paths(rng)
    grid = ElementGrid(2, 2, WAVELENGTH / 4)
    params = make_params(paths)
    taps = compute_taps(paths, params)
    tx = link_responses(paths.tx_paths, grid, FC)
    rx = link_responses(paths.rx_paths, grid, FC)

    identity = np.eye(4)
    factored = impulse_response(identity, taps, tx, rx)
    direct = element_taps(paths, params, grid)
    np.testing.assert_allclose(factored, direct, rtol=1e-8, atol=1e-8 * np.abs(direct).max())

    reflection = crandn(rng, 4, 4)
    factored = impulse_response(reflection, taps, tx, rx)
    direct = element_taps(paths, params, grid, reflection)
    np.testing.assert_allclose(factored, direct, rtol=1e-8, atol=1e-8 * np.abs(direct).max())


def test_tap_matrices_are_sums_of_outer_products(rng):
    paths = random_paths(rng)
    grid = ElementGrid(2, 2, WAVELENGTH / 4)
    params = make_params(paths)
    taps = compute_taps(paths, params)
    tx = link_responses(paths.tx_paths, grid, FC)
    rx = link_responses(paths.rx_paths, grid, FC)
    matrices = tap_matrices(taps, tx, rx)
    ell = params.num_taps // 2
    expected = sum(
        taps.cascaded_taps[i, j, ell] * np.outer(tx[i], rx[j])
        for i in range(paths.num_tx) for j in range(paths.num_rx)
    )
    np.testing.assert_allclose(matrices[ell], expected, atol=1e-18)


# --- frequency domain --------------------------------------------------------

def test_dft_of_impulse_and_unit_delay():
    num_subcarriers = 8
    impulse = TapSet([1, 0, 0], np.zeros((1, 1, 3)))
    static, _ = dft_coeffs(impulse, num_subcarriers)
    np.testing.assert_allclose(static, np.ones(num_subcarriers))

    delayed = TapSet([0, 1, 0], np.zeros((1, 1, 3)))
    static, _ = dft_coeffs(delayed, num_subcarriers)
    nu = np.arange(num_subcarriers)
    np.testing.assert_allclose(static, np.exp(-2j * np.pi * nu / num_subcarriers), atol=1e-15)


def test_dft_parseval(rng):
    taps = TapSet(crandn(rng, 6), crandn(rng, 2, 3, 6))
    static, cascaded = dft_coeffs(taps, 32)
    assert np.sum(np.abs(static) ** 2) == pytest.approx(32 * np.sum(np.abs(taps.static_taps) ** 2), rel=1e-9)
    assert cascaded.shape == (32, 2, 3)
    assert np.sum(np.abs(cascaded[:, 1, 2]) ** 2) == pytest.approx(
        32 * np.sum(np.abs(taps.cascaded_taps[1, 2]) ** 2), rel=1e-9
    )


def test_dft_rejects_short_transform(rng):
    taps = TapSet(crandn(rng, 6), crandn(rng, 1, 1, 6))
    with pytest.raises(ChannelError):
        dft_coeffs(taps, 5)


def test_cascaded_matrices_all_ones():
    coeffs = np.ones((3, 1, 1))
    chan = cascaded_matrices(coeffs, np.ones((1, 4)), np.ones((1, 4)))
    np.testing.assert_allclose(chan.cascaded_matrices, np.ones((3, 4, 4)))


def test_cascaded_matrices_single_element_is_scalar_sum(rng):
    coeffs = crandn(rng, 5, 2, 3)
    chan = cascaded_matrices(coeffs, np.ones((2, 1)), np.ones((3, 1)))
    np.testing.assert_allclose(chan.cascaded_matrices[:, 0, 0], coeffs.sum(axis=(1, 2)))


def test_trace_matches_double_sum(rng):
    n, num_tx, num_rx = 4, 2, 3
    coeffs = crandn(rng, 6, num_tx, num_rx)
    tx = np.exp(2j * np.pi * rng.uniform(size=(num_tx, n)))
    rx = np.exp(2j * np.pi * rng.uniform(size=(num_rx, n)))
    static = crandn(rng, 6)
    chan = cascaded_matrices(coeffs, tx, rx, static)
    reflection = crandn(rng, n, n)
    for nu in range(6):
        direct = static[nu] + sum(
            coeffs[nu, i, j] * rx[j] @ reflection @ tx[i]
            for i in range(num_tx) for j in range(num_rx)
        )
        assert channel_at(reflection, chan, nu) == pytest.approx(direct, rel=1e-12)


def test_channel_at_special_reflections(rng):
    chan = random_dense_channel(rng, 4, 3)
    zero = np.zeros((3, 3))
    identity = np.eye(3)
    for nu in range(4):
        assert channel_at(zero, chan, nu) == pytest.approx(chan.static_coeffs[nu])
        expected = chan.static_coeffs[nu] + np.trace(chan.cascaded_matrices[nu])
        assert channel_at(identity, chan, nu) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ChannelError):
        channel_at(np.eye(2), chan, 0)


def test_vectorized_trace_identity(rng):
    chan = random_channel(rng, 5, 3, num_atoms=4)
    rows = chan.vectorized()
    reflection = crandn(rng, 3, 3)
    np.testing.assert_allclose(rows @ vec(reflection), chan.trace_products(reflection), rtol=1e-12)
    # for symmetric Psi the row is vec(H_nu) itself
    symmetric = reflection + reflection.T
    for nu in range(5):
        h = vec(chan.cascaded_matrices[nu])
        assert h @ vec(symmetric) == pytest.approx(np.trace(symmetric @ chan.cascaded_matrices[nu]), rel=1e-12)


def test_vec_is_column_major():
    matrix = np.arange(4).reshape(2, 2)
    np.testing.assert_array_equal(vec(matrix), [0, 2, 1, 3])
    np.testing.assert_array_equal(unvec(vec(matrix), 2), matrix)


def test_from_matrices_keeps_dense_matrices(rng):
    matrices = crandn(rng, 3, 4, 4)
    chan = SubcarrierChannel.from_matrices(np.zeros(3), matrices)
    np.testing.assert_allclose(chan.cascaded_matrices, matrices, atol=1e-14)


def test_diagonal_products_match_dense(rng):
    chan = random_channel(rng, 4, 3, num_atoms=3)
    unitary, _ = np.linalg.qr(crandn(rng, 3, 3))
    products = chan.diagonal_products(unitary)
    for nu in range(4):
        expected = np.diag(unitary.T @ chan.cascaded_matrices[nu] @ unitary)
        np.testing.assert_allclose(products[nu], expected, atol=1e-12)


def test_aggregate_without_static_has_zero_b(rng):
    chan = random_channel(rng, 6, 2, static=False)
    agg = aggregate_quadratic(chan)
    np.testing.assert_array_equal(agg.b, 0)
    assert agg.const_term == 0


def test_aggregate_single_subcarrier_is_rank_one(rng):
    chan = random_dense_channel(rng, 1, 2)
    agg = aggregate_quadratic(chan)
    eigenvalues = np.linalg.eigvalsh(agg.A)
    assert np.sum(eigenvalues > 1e-10 * eigenvalues.max()) == 1


def test_aggregate_quadratic_identity(rng):
    chan = random_channel(rng, 8, 3, num_atoms=4)
    agg = aggregate_quadratic(chan)
    A = agg.A
    assert np.allclose(A, A.conj().T)
    eigenvalues = np.linalg.eigvalsh(A)
    assert eigenvalues.min() >= -1e-10 * eigenvalues.max()

    for _ in range(100):
        psi = crandn(rng, 9)
        reflection = unvec(psi, 3)
        direct = np.sum(np.abs(chan.static_coeffs + chan.trace_products(reflection)) ** 2)
        dense = np.real(np.vdot(psi, A @ psi)) + 2 * np.real(np.vdot(psi, agg.b)) + agg.const_term
        assert agg.objective(psi) == pytest.approx(direct, rel=1e-10)
        assert dense == pytest.approx(direct, rel=1e-10)


def test_subcarrier_gains_and_total_gain(rng):
    chan = random_dense_channel(rng, 4, 2)
    reflection = ReflectionMatrix(np.eye(2))
    gains = subcarrier_gains(reflection, chan)
    expected = [abs(channel_at(reflection, chan, nu)) ** 2 for nu in range(4)]
    np.testing.assert_allclose(gains, expected, rtol=1e-12)
    assert total_gain(reflection, chan) == pytest.approx(sum(expected), rel=1e-12)


def test_build_channel_is_dft_of_impulse_response(rng):
    paths = random_paths(rng)
    grid = ElementGrid(2, 2, WAVELENGTH / 4)
    params = make_params(paths, num_subcarriers=32)
    taps, chan, tx, rx = build_channel(paths, params, grid)
    reflection = crandn(rng, 4, 4)
    response = impulse_response(reflection, taps, tx, rx)
    spectrum = np.fft.fft(response, n=32)
    direct = chan.static_coeffs + chan.trace_products(reflection)
    np.testing.assert_allclose(direct, spectrum, rtol=1e-9, atol=1e-9 * np.abs(spectrum).max())


def test_build_channel_rejects_grid_mismatch(rng):
    paths = random_paths(rng)
    params = make_params(paths, num_elements=4)
    with pytest.raises(ChannelError):
        build_channel(paths, params, ElementGrid(3, 3, WAVELENGTH / 4))
