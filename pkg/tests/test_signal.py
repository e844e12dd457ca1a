import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risradar.errors import DomainError, ShapeError
from risradar.geometry import Direction, GridChannel, make_geometry
from risradar.signal import (SceneTruth, SignalDims, complex_gaussian, q_matrix,
                             response_matrix, shift_matrix, synthesize_received, target_echo,
                             unvec, vec)


def _gains(rng, N=2, I=2, M=4):
    ch = GridChannel.build(make_geometry(M, N),
                           [Direction(0.5, 0.5 + 2 * k) for k in range(I)])
    s = rng.choice(np.arange(1, 9) * math.pi / 4, M)
    return ch.effective_gain(s), ch.effective_gain(s[::-1].copy())


def test_shift_matrix_offsets():
    J = shift_matrix(10, 10, 15, 10)
    assert np.array_equal(J, np.eye(10, 15, dtype=int))
    J5 = shift_matrix(15, 10, 15, 10)
    assert np.array_equal(np.argwhere(J5), np.stack([np.arange(10), np.arange(10) + 5], 1))
    with pytest.raises(DomainError):
        shift_matrix(16, 10, 15, 10)


def test_dims_validation():
    with pytest.raises(DomainError):
        SignalDims(2, 6, 5)
    with pytest.raises(DomainError):
        SignalDims(2, 6, 9, min_delay=5)
    dims = SignalDims(2, 6, 9, min_delay=10)
    assert dims.n_offsets == 4 and dims.offset(13) == 3 and dims.delay(3) == 13
    with pytest.raises(DomainError):
        dims.offset(14)


@given(st.integers(1, 4), st.integers(1, 6))
def test_vec_roundtrip(rows, cols):
    X = np.arange(rows * cols).reshape(rows, cols) + 0j
    assert np.array_equal(unvec(vec(X), rows), X)
    assert vec(X)[1 % (rows * cols)] == X.ravel(order="F")[1 % (rows * cols)]


def test_q_matrix_matches_matrix_form(rng):
    U_t, U_r = _gains(rng)
    W = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    J = shift_matrix(12, 4, 7, 10)
    Q = q_matrix(U_r[0], U_t[0], 2, 4, 7)
    expected = vec(np.outer(U_r[0], U_t[0]) @ W @ J)
    assert np.allclose(Q @ vec(W), expected, rtol=0, atol=1e-12 * np.abs(expected).max())
    assert np.allclose(Q @ np.zeros(8), 0)
    assert np.allclose(target_echo(U_r[0], U_t[0], W, 2, 7), unvec(expected, 2))
    with pytest.raises(ShapeError):
        q_matrix(U_r[0], U_t[0][:1], 0, 4, 7)


def test_q_matrix_without_ris_uses_direct_path(rng):
    dirs = [Direction(0.5, 0.5)]
    ch0 = GridChannel.build(make_geometry(0, 2), dirs)
    chm = GridChannel.build(make_geometry(9, 2), dirs, direct_only=True)
    u0 = ch0.effective_gain(np.zeros(0))[0]
    um = chm.effective_gain(np.zeros(0))[0]
    assert np.allclose(q_matrix(u0, u0, 1, 3, 5), q_matrix(um, um, 1, 3, 5))


def test_response_matrix_linear_and_consistent(rng):
    U_t, U_r = _gains(rng)
    dims = SignalDims(2, 4, 7, min_delay=10)
    W = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    F = response_matrix(U_t, U_r, [1], [3], W, 7)
    assert np.allclose(response_matrix(U_t, U_r, [1], [3], 2.5 * W, 7), 2.5 * F)
    gamma = np.array([0.3 - 0.2j])
    truth = SceneTruth((1,), (13,), gamma)
    y = synthesize_received(truth, W, U_t, U_r, dims, 0.0).y
    assert np.allclose(y, F @ gamma, rtol=0, atol=1e-12 * np.abs(y).max())
    dup = response_matrix(U_t, U_r, [0, 0], [1, 1], W, 7)
    assert np.array_equal(dup[:, 0], dup[:, 1])


def test_empty_scene_without_noise_is_zero(rng):
    U_t, U_r = _gains(rng)
    dims = SignalDims(2, 4, 7, min_delay=4)
    rx = synthesize_received(SceneTruth((), (), []), np.ones((2, 4)), U_t, U_r, dims, 0.0)
    assert np.array_equal(rx.Y, np.zeros((2, 7)))
    with pytest.raises(ShapeError):
        synthesize_received(SceneTruth((), (), []), np.ones((2, 3)), U_t, U_r, dims, 0.0)
    with pytest.raises(DomainError):
        synthesize_received(SceneTruth((), (), []), np.ones((2, 4)), U_t, U_r, dims, 1.0)


def test_scene_truth_validation():
    with pytest.raises(ShapeError):
        SceneTruth((0, 1), (10,), [1.0, 1.0])
    with pytest.raises(DomainError):
        SceneTruth((0,), (10,), [0.0])


def test_noise_variance():
    rng = np.random.default_rng(7)
    v = complex_gaussian(100_000, 2.5, rng)
    assert np.mean(np.abs(v) ** 2) == pytest.approx(2.5, rel=0.03)
    assert abs(np.mean(v.real ** 2) - np.mean(v.imag ** 2)) < 0.05 * 2.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_superposition(seed):
    rng = np.random.default_rng(seed)
    U_t, U_r = _gains(rng)
    dims = SignalDims(2, 3, 6, min_delay=3)
    W = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    g = rng.standard_normal(2) + 1j * rng.standard_normal(2) + 0.1
    both = synthesize_received(SceneTruth((0, 1), (3, 5), g), W, U_t, U_r, dims, 0.0).y
    a = synthesize_received(SceneTruth((0,), (3,), g[:1]), W, U_t, U_r, dims, 0.0).y
    b = synthesize_received(SceneTruth((1,), (5,), g[1:]), W, U_t, U_r, dims, 0.0).y
    assert np.allclose(both, a + b)
