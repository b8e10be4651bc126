import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibeam.array import (ArrayConfig, ChannelSimConfig, PathSpec, angular_power_matrix,
                             bf_gain, build_channel, mrc_receive_weights, pattern, received_power,
                             sample_rician_channel, steering_matrix, steering_vector, waveform_mse)
from multibeam.oracles import integration_reference
from multibeam.subbeam import DesiredPattern

from conftest import crandn, unit

angles = st.floats(-1.5, 1.5)


def test_steering_examples():
    np.testing.assert_allclose(steering_vector(0.0, 4), np.ones(4))
    np.testing.assert_allclose(steering_vector(math.pi / 2, 2), [1, -1], atol=1e-15)
    np.testing.assert_allclose(steering_vector(math.pi / 6, 3), [1, 1j, -1], atol=1e-15)


@given(angles, st.integers(1, 64))
def test_steering_unit_modulus(theta, M):
    np.testing.assert_allclose(np.abs(steering_vector(theta, M)), 1.0, atol=1e-15)


def test_array_config_rejects_single_element():
    with pytest.raises(ValueError):
        ArrayConfig(1)


def test_path_angles_strictly_inside():
    with pytest.raises(ValueError):
        PathSpec(1.0, math.pi / 2, 0.0)


def test_build_channel_examples():
    np.testing.assert_allclose(build_channel([PathSpec(1, 0, 0)], 2, 2).matrix, np.ones((2, 2)))
    np.testing.assert_array_equal(build_channel([], 3, 3).matrix, np.zeros((3, 3)))


def test_build_channel_matches_elementwise_sum(rng):
    paths = [PathSpec(complex(*rng.standard_normal(2)), *rng.uniform(-1.2, 1.2, 2))
             for _ in range(2)]
    H = build_channel(paths, 5, 3).matrix
    ref = np.zeros((3, 5), complex)
    for r in range(3):
        for t in range(5):
            for p in paths:
                ref[r, t] += p.gain * np.exp(1j * np.pi * (r * np.sin(p.aoa) + t * np.sin(p.aod)))
    np.testing.assert_allclose(H, ref, atol=1e-12)


def test_single_path_channel_is_los_only():
    ch = sample_rician_channel(ChannelSimConfig(num_paths=1), 5)
    assert len(ch.paths) == 1
    np.testing.assert_allclose(ch.matrix, np.ones((16, 16)))


def test_channel_determinism():
    a = sample_rician_channel(ChannelSimConfig(), [3, 1]).matrix
    b = sample_rician_channel(ChannelSimConfig(), [3, 1]).matrix
    np.testing.assert_array_equal(a, b)


@pytest.mark.slow
def test_nlos_power_ratio():
    cfg = ChannelSimConfig()
    nlos = [sum(abs(p.gain) ** 2 for p in sample_rician_channel(cfg, s).paths[1:])
            for s in range(10_000)]
    assert abs(np.mean(nlos) / 0.1 - 1) < 0.03


def test_mrc_examples():
    np.testing.assert_allclose(mrc_receive_weights(np.eye(2), [1, 0]), [1, 0])
    np.testing.assert_allclose(mrc_receive_weights(1j * np.eye(2), [1, 1]), [-1j, -1j])


def test_mrc_beats_random_combiners(rng):
    H, w = crandn(rng, 6, 6), crandn(rng, 6)
    w_r = unit(mrc_receive_weights(H, w))
    best = abs(w_r @ H @ w)
    U = crandn(rng, 1000, 6)
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    assert np.all(np.abs(U @ H @ w) <= best + 1e-12)
    assert best ** 2 == pytest.approx(np.linalg.norm(H @ w) ** 2, rel=1e-12)


def test_received_power_examples(rng):
    assert received_power(np.eye(4), unit(crandn(rng, 4))) == pytest.approx(1.0)
    H = build_channel([PathSpec(1, 0.3, -0.2)], 2, 2).matrix
    assert received_power(H, np.conj(steering_vector(0.3, 2)) / np.sqrt(2)) == pytest.approx(4.0)
    H, w = crandn(rng, 5, 5), crandn(rng, 5)
    ref = (w.conj() @ H.conj().T @ H @ w).real / (w.conj() @ w).real
    assert received_power(H, w) == pytest.approx(ref, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(0.1, 10), st.floats(-math.pi, math.pi))
def test_received_power_scale_invariant(mag, ang):
    rng = np.random.default_rng(0)
    H, w = crandn(rng, 4, 4), crandn(rng, 4)
    c = mag * np.exp(1j * ang)
    assert received_power(H, c * w) == pytest.approx(received_power(H, w), rel=1e-10)


def test_bf_gain_examples(rng):
    assert bf_gain(0.0, np.ones(16) / 4) == pytest.approx(16)
    assert bf_gain(0.0, np.array([1, -1]) / math.sqrt(2)) == pytest.approx(0, abs=1e-15)
    w, th = crandn(rng, 7), 0.4
    direct = abs(sum(w[m] * np.exp(1j * np.pi * m * np.sin(th)) for m in range(7))) ** 2
    assert bf_gain(th, w) == pytest.approx(direct / np.linalg.norm(w) ** 2, rel=1e-12)


def test_pattern_examples(rng):
    grid = np.linspace(-1.4, 1.4, 9)
    np.testing.assert_allclose(pattern(np.eye(5)[0], grid), np.ones(9))
    np.testing.assert_allclose(pattern(np.ones(6), [0.0]), [6])
    w = crandn(rng, 5)
    np.testing.assert_allclose(np.abs(pattern(w, grid)) ** 2 / np.linalg.norm(w) ** 2,
                               [bf_gain(t, w) for t in grid], rtol=1e-12)


@given(st.floats(-1.2, 1.0), st.floats(0.0, 0.5), st.integers(1, 64), st.integers(2, 20))
def test_angular_power_matrix_structure(lo, width, N, M):
    A = angular_power_matrix(lo, lo + width, N, M).matrix
    np.testing.assert_allclose(A, A.conj().T, atol=1e-14)
    np.testing.assert_allclose(np.diag(A).real, width, atol=1e-12)
    for k in range(1, M):
        np.testing.assert_allclose(np.diag(A, k), A[0, k], atol=1e-13)
    assert np.linalg.eigvalsh(A).min() >= -1e-10


def test_zero_width_range_is_zero():
    np.testing.assert_array_equal(angular_power_matrix(0.2, 0.2, 16, 8).matrix, 0)


@pytest.mark.parametrize("N", [16, 12])
def test_integration_accuracy(N):
    c, half = math.radians(-6.45), math.radians(8.59) / 2
    err = np.abs(angular_power_matrix(c - half, c + half, N, 16).matrix
                 - integration_reference(c - half, c + half, 16)).max()
    assert err < 1e-3


def test_right_rule_literal_form_misses_threshold():
    # kept for reference: the right-endpoint sum is first order
    c, half = math.radians(-6.45), math.radians(8.59) / 2
    ref = integration_reference(c - half, c + half, 16, rule="right")
    err = np.abs(angular_power_matrix(c - half, c + half, 16, 16, rule="right").matrix - ref).max()
    assert err > 1e-3


def _desired(rng, M, G, D=None):
    grid = np.sort(rng.uniform(-1.4, 1.4, G))
    D = np.ones(G) if D is None else D
    return DesiredPattern(grid, D, rng.uniform(0.2, 2, G), np.exp(1j * rng.uniform(-3, 3, G)), M)


def test_waveform_mse_examples(rng):
    M, G = 6, 30
    d = _desired(rng, M, G)
    w = crandn(rng, M)
    A = steering_matrix(d.grid, M)
    Aw = A @ w
    exact = DesiredPattern(d.grid, d.D, np.abs(Aw), np.exp(1j * np.angle(Aw)), M)
    assert waveform_mse(3.0 * w, exact) == pytest.approx(0, abs=1e-9)
    # a desired waveform orthogonal (in the real inner product) to A w gives c = 0
    v = 1j * Aw
    ortho = DesiredPattern(d.grid, d.D, np.abs(v), np.exp(1j * np.angle(v)), M)
    assert waveform_mse(w, ortho) == pytest.approx(np.linalg.norm(Aw) ** 2, rel=1e-12)


def test_waveform_mse_two_step(rng):
    d = _desired(rng, 8, 40, D=rng.uniform(0.5, 2, 40))
    w = crandn(rng, 8)
    r = d.D * (steering_matrix(d.grid, 8) @ w)
    t = d.D * d.d_v
    c = (np.vdot(t, r).real) / np.vdot(t, t).real
    assert waveform_mse(w, d) == pytest.approx(np.linalg.norm(r - c * t) ** 2, rel=1e-10)
