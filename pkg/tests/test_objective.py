import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risradar.errors import DomainError, ShapeError
from risradar.geometry import Direction, GridChannel, make_geometry, phase_grid
from risradar.objective import (DesignProblem, mean_signals, objective_upper_bound,
                                phase_quadratic_form, phase_quadratic_form_kron,
                                predicted_distance, shift_overlap, total_objective,
                                total_objective_direct, waveform_quadratic_form,
                                waveform_quadratic_form_kron, waveform_value, weighted_pairs)
from risradar.oracles import direct_mean_signals, direct_objective, random_problem
from risradar.signal import SignalDims, q_matrix, vec


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _single_pair(rng, sigma2=0.5):
    ch = GridChannel.build(make_geometry(4, 2), [Direction(0.5, 1.0)])
    dims = SignalDims(2, 3, 5, min_delay=3)
    gamma = 0.7 - 0.2j
    problem = DesignProblem(ch, dims, [(), (0,)], [[], [gamma]], [[], [1]],
                            [0.4, 0.6], sigma2, 2.0)
    W = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    s_t, s_r = rng.choice(phase_grid(8), 4), rng.choice(phase_grid(8), 4)
    return problem, W, s_t, s_r, gamma


def test_shift_overlap_is_product_of_shift_matrices():
    L, LR = 4, 7
    J = [np.eye(L, LR, k) for k in range(LR - L + 1)]
    for a in range(len(J)):
        for b in range(len(J)):
            assert np.array_equal(shift_overlap(a - b, L), J[a] @ J[b].T)


def test_weighted_pairs_drop_tiny_weights():
    B = weighted_pairs([1 - 1e-13, 1e-13, 0.0])
    assert np.all(B == 0)
    B = weighted_pairs([0.5, 0.5])
    assert B[0, 1] == 0.25 and B[0, 0] == 0


def test_single_target_distance_closed_form(rng):
    problem, W, s_t, s_r, gamma = _single_pair(rng)
    Y = mean_signals(problem, W, s_t, s_r)
    U_t, U_r = problem.gains(s_t, s_r)
    expected = abs(gamma) ** 2 / problem.sigma2 * np.linalg.norm(np.outer(U_r[0], U_t[0]) @ W) ** 2
    d = predicted_distance(Y[1], Y[0], problem.sigma2)
    assert d == pytest.approx(expected, rel=1e-12)
    assert predicted_distance(Y[1], Y[1], 1.0) == 0
    assert predicted_distance(Y[1], Y[0], 2 * problem.sigma2) == pytest.approx(d / 2)
    with pytest.raises(DomainError):
        predicted_distance(Y[1], Y[0], 0.0)


def test_single_pair_waveform_form(rng):
    problem, W, s_t, s_r, gamma = _single_pair(rng)
    U_t, U_r = problem.gains(s_t, s_r)
    Q = q_matrix(U_r[0], U_t[0], 1, 3, 5)
    beta = 0.4 * 0.6
    expected = abs(gamma) ** 2 * np.linalg.norm(Q @ vec(W)) ** 2 * beta / problem.sigma2
    Z = waveform_quadratic_form(problem, s_t, s_r)
    assert waveform_value(Z, vec(W)) == pytest.approx(expected, rel=1e-10)


def test_zero_responses_give_zero_forms(rng):
    problem, W, s_t, s_r, _ = _single_pair(rng)
    zero = DesignProblem(problem.channel, problem.dims, problem.hypotheses, [[], [0.0]],
                         problem.offsets, problem.probabilities, 1.0, 1.0)
    assert np.all(waveform_quadratic_form(zero, s_t, s_r) == 0)
    assert total_objective(zero, W, s_t, s_r) == 0


def test_phase_form_constant_term_is_objective_without_transmit_reflection(rng):
    problem, W, s_t, s_r, gamma = _single_pair(rng)
    form = phase_quadratic_form(problem, W, s_t, s_r, "t")
    U_r = problem.channel.effective_gain(s_r)
    u_t = problem.channel.Xi[0]
    y = gamma * vec(np.outer(U_r[0], u_t @ W) @ np.eye(3, 5, 1))
    expected = 0.24 * np.vdot(y, y).real / problem.sigma2
    assert form.value(np.zeros(4)) == pytest.approx(expected, rel=1e-12)
    assert form.z3.real == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_all_forms_agree(seed):
    rng = np.random.default_rng(seed)
    pr, W, s_t, s_r = random_problem(rng, max_targets=2)
    d = direct_objective(pr, W, s_t, s_r)
    vals = [total_objective_direct(pr, W, s_t, s_r), total_objective(pr, W, s_t, s_r),
            waveform_value(waveform_quadratic_form(pr, s_t, s_r), vec(W)),
            waveform_value(waveform_quadratic_form_kron(pr, s_t, s_r), vec(W))]
    for side, s in (("t", s_t), ("r", s_r)):
        r = pr.channel.coefficients(s)
        vals.append(phase_quadratic_form(pr, W, s_t, s_r, side).value(r))
        vals.append(phase_quadratic_form_kron(pr, W, s_t, s_r, side).value(r))
    for v in vals:
        assert _rel(v, d) < 1e-9


def test_mean_signals_match_dense_operators(rng):
    pr, W, s_t, s_r = random_problem(rng, max_targets=2)
    assert np.allclose(mean_signals(pr, W, s_t, s_r), direct_mean_signals(pr, W, s_t, s_r))


def test_fast_and_reference_phase_forms_match(rng):
    pr, W, s_t, s_r = random_problem(rng, max_elements=5, max_targets=2)
    for side in "tr":
        a = phase_quadratic_form(pr, W, s_t, s_r, side)
        b = phase_quadratic_form_kron(pr, W, s_t, s_r, side)
        scale = max(np.abs(b.Z).max(), np.abs(b.z1).max(), 1e-300)
        assert np.abs(a.Z - b.Z).max() <= 1e-12 * scale
        assert np.abs(a.z1 - b.z1).max() <= 1e-12 * scale
        assert np.abs(a.z2 - b.z2).max() <= 1e-12 * scale


def test_uniform_posterior_equal_distances(rng):
    # three hypotheses whose means are orthogonal with equal norms
    ch = GridChannel.build(make_geometry(0, 1), [Direction(0.3, 0.0)])
    dims = SignalDims(1, 1, 3, min_delay=1)
    pr = DesignProblem(ch, dims, [(0,), (0,), (0,)], [[1.0], [1.0], [1.0]],
                       [[0], [1], [2]], np.full(3, 1 / 3), 1.0, 1.0)
    W = np.array([[2.0 + 0j]])
    D = 2 * 4.0  # ||y_j - y_j'||^2 with |y| = 2 on disjoint cells
    assert total_objective(pr, W, [], []) == pytest.approx(D * 3 / 9)


def test_degenerate_posterior_gives_zero(rng):
    pr, W, s_t, s_r = random_problem(rng)
    p = np.zeros(pr.n_hypotheses)
    p[-1] = 1.0
    pr2 = DesignProblem(pr.channel, pr.dims, pr.hypotheses, pr.responses, pr.offsets, p,
                        pr.sigma2, pr.power)
    assert total_objective(pr2, W, s_t, s_r) == 0


def test_upper_bound_values():
    ub = objective_upper_bound(15, 12.0, 1e-5)
    assert ub.printed == 1260
    assert ub.value == pytest.approx(2.52e8)
    assert objective_upper_bound(1, 12.0).value == 0
    with pytest.raises(DomainError):
        objective_upper_bound(0, 1.0)


def test_desk_scene_random_design_below_bound(rng):
    from risradar.harness import design_snapshot, make_config

    cfg = make_config("desk")
    snap = design_snapshot(cfg, 5)
    pr = snap.problem()
    val = total_objective(pr, snap.design.W, snap.design.s_t, snap.design.s_r)
    assert 0 <= val <= objective_upper_bound(pr.n_hypotheses, cfg.power, cfg.sigma2).value


def test_problem_validation(rng):
    pr, *_ = random_problem(rng)
    with pytest.raises(ShapeError):
        DesignProblem(pr.channel, pr.dims, pr.hypotheses, pr.responses[:-1], pr.offsets,
                      pr.probabilities, 1.0, 1.0)
    with pytest.raises(DomainError):
        DesignProblem(pr.channel, pr.dims, pr.hypotheses, pr.responses, pr.offsets,
                      pr.probabilities, 0.0, 1.0)
    with pytest.raises(ShapeError):
        mean_signals(pr, np.ones(99), [], [])
