import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risradar.analysis import (composite_amplitude, far_field_optimized_gain,
                               metaradar_pair_distance, mimo_pair_distance,
                               optimal_lateral_offset, optimal_phases_and_max_gain,
                               pair_distance_closed_form, placement_sweep, power_gain,
                               power_gain_profile)
from risradar.errors import DomainError
from risradar.geometry import Direction, GridChannel, make_geometry
from risradar.objective import DesignProblem, mean_signals, predicted_distance
from risradar.signal import SignalDims

SCENE = Direction(math.pi / 6, math.pi / 4)


def test_mimo_distance_table_value():
    assert mimo_pair_distance(4, 0.01, 12.0, 1e-5) == pytest.approx(1920.0)


def test_metaradar_without_ris_reduces_to_mimo():
    ch = GridChannel.build(make_geometry(0, 4), [SCENE])
    u = ch.effective_gain(np.zeros(0))[0]
    a = pair_distance_closed_form("metaradar", gamma=0.01, power=12.0, sigma2=1e-5, u_t=u, u_r=u)
    assert a == pytest.approx(pair_distance_closed_form("mimo", n_antennas=4, gamma=0.01,
                                                        power=12.0, sigma2=1e-5))
    with pytest.raises(DomainError):
        pair_distance_closed_form("sonar")


def test_metaradar_distance_matches_objective_module(rng):
    # one antenna and one snapshot: the waveform norm is the power
    ch = GridChannel.build(make_geometry(9, 1), [SCENE])
    dims = SignalDims(1, 1, 1, min_delay=1)
    gamma, P, s2 = 0.3 + 0.1j, 2.0, 0.05
    pr = DesignProblem(ch, dims, [(), (0,)], [[], [gamma]], [[], [0]], [0.5, 0.5], s2, P)
    s_t, s_r = rng.uniform(0, 2 * np.pi, 9), rng.uniform(0, 2 * np.pi, 9)
    W = np.array([[math.sqrt(P) + 0j]])
    Y = mean_signals(pr, W, s_t, s_r)
    u_t, u_r = ch.effective_gain(s_t)[0], ch.effective_gain(s_r)[0]
    assert metaradar_pair_distance(gamma, P, s2, u_t, u_r) == pytest.approx(
        predicted_distance(Y[1], Y[0], s2), rel=1e-10)


@pytest.mark.parametrize("M", [0, 1, 2, 5])
def test_optimal_phases_attain_closed_form_gain(M):
    geom = make_geometry(M, 1, array_offset=(0.3, 0.2, 2.0))
    ch = GridChannel.build(geom, [SCENE])
    res = optimal_phases_and_max_gain(geom, SCENE)
    assert power_gain(ch, res.shifts, res.shifts) == pytest.approx(res.gain, rel=1e-10)
    if M == 0:
        assert res.gain == 1.0


def test_max_gain_requires_one_antenna():
    with pytest.raises(DomainError):
        optimal_phases_and_max_gain(make_geometry(2, 2), SCENE)


def test_max_gain_grows_with_elements():
    from risradar.geometry import RadarGeometry
    ant = np.array([[0.1, 0.0, 1.5]])
    gains = []
    for M in range(0, 7):
        elems = np.stack([np.arange(M) * 0.5, np.zeros(M), np.zeros(M)], axis=1)
        gains.append(optimal_phases_and_max_gain(RadarGeometry(elems, ant), SCENE).gain)
    assert np.all(np.diff(gains) >= 0)


def test_random_phases_never_exceed_max_gain(rng):
    geom = make_geometry(4, 1, array_offset=(0.0, 0.0, 1.0))
    ch = GridChannel.build(geom, [SCENE])
    B = optimal_phases_and_max_gain(geom, SCENE).gain
    for _ in range(200):
        s_t, s_r = rng.uniform(0, 2 * np.pi, (2, 4))
        assert power_gain(ch, s_t, s_r) <= B * (1 + 1e-12)


def test_composite_amplitude_positive():
    assert composite_amplitude(make_geometry(4, 1), SCENE) > 0


def test_dead_ris_profile_is_one():
    assert np.all(power_gain_profile(np.linspace(-1, 1, 5), 2.0, 4, 0.5, 0.0) == 1.0)
    with pytest.raises(DomainError):
        power_gain_profile(0.0, 0.0, 4, 0.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.floats(-0.25, 0.25), st.sampled_from([-3, -2, -1, 1, 2, 3]),
       st.floats(0.05, 10.0))
def test_central_offset_beats_shifted(M, lp, n, lz):
    assert power_gain_profile(lp, lz, M, 0.5, 1.0) >= power_gain_profile(n * 0.5 + lp, lz, M, 0.5, 1.0)


def test_lz_profile_has_interior_maximum():
    lz = np.linspace(0.05, 8.0, 400)
    vals = [b for _, b in placement_sweep(lz, "l_z", 4, 0.5, 1.0, 0.0)]
    k = int(np.argmax(vals))
    assert 0 < k < len(lz) - 1
    with pytest.raises(DomainError):
        placement_sweep(lz, "l_y", 4, 0.5, 1.0, 0.0)


def test_optimal_lateral_offset_and_far_field():
    l_star, b = optimal_lateral_offset(1.0, 4, 0.5, 1.0)
    assert -0.25 <= l_star <= 0.25
    assert b >= power_gain_profile(np.linspace(-0.25, 0.25, 51), 1.0, 4, 0.5, 1.0).max() - 1e-12
    far = 200.0
    _, b_far = optimal_lateral_offset(far, 4, 0.5, 1.0)
    assert far_field_optimized_gain(far, 4, 0.5, 1.0) == pytest.approx(b_far, rel=1e-9)
