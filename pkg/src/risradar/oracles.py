"""Independent reference computations used by ``verify`` and the test-suite.

Each routine reaches a result by a different route than the production
code: explicit Kronecker operators instead of the shift-overlap forms,
block coordinate ascent instead of the interior-point SDP, and enumeration
instead of relaxation.
"""

from __future__ import annotations

import numpy as np

from .geometry import Direction, GridChannel, make_geometry, phase_grid
from .objective import DesignProblem
from .signal import SignalDims, q_matrix, vec


def direct_mean_signals(problem: DesignProblem, W, s_t, s_r) -> np.ndarray:
    """``ybar_j = sum_k gamma_k Q_k vec(W)`` with dense ``Q_k`` matrices."""
    dims = problem.dims
    U_t, U_r = problem.gains(s_t, s_r)
    w = vec(np.asarray(W))
    out = np.zeros((problem.n_hypotheses, dims.received_size), dtype=complex)
    for j, (h, g, o) in enumerate(zip(problem.hypotheses, problem.responses, problem.offsets)):
        for grid, gamma, off in zip(h, g, o):
            Q = q_matrix(U_r[grid], U_t[grid], int(off), dims.n_snapshots, dims.n_received)
            out[j] += gamma * (Q @ w)
    return out


def direct_objective(problem: DesignProblem, W, s_t, s_r) -> float:
    """Pairwise weighted distance sum from dense echo operators."""
    Y = direct_mean_signals(problem, W, s_t, s_r)
    B = problem.pair_weights
    total = 0.0
    for j in range(len(Y)):
        for k in range(j + 1, len(Y)):
            d = Y[j] - Y[k]
            total += B[j, k] * float(np.vdot(d, d).real) / problem.sigma2
    return total


def random_problem(rng: np.random.Generator, max_antennas: int = 2, max_snapshots: int = 4,
                   max_elements: int = 6, max_grids: int = 2, max_targets: int = 1,
                   levels: int = 4, min_elements: int = 1):
    """Small random :class:`DesignProblem` plus a random design ``(W, s_t, s_r)``.

    Sizes are drawn uniformly up to the given maxima; responses, offsets,
    posterior, noise level and power budget are random too.
    """
    from .hypotheses import enumerate_hypotheses

    N = int(rng.integers(1, max_antennas + 1))
    L = int(rng.integers(1, max_snapshots + 1))
    M = int(rng.integers(min_elements, max_elements + 1))
    I = int(rng.integers(1, max_grids + 1))
    K = int(rng.integers(1, max_targets + 1))
    extra = int(rng.integers(0, 3))
    geom = make_geometry(M, N, phase_levels=levels,
                         array_offset=(0.0, 0.0, float(rng.uniform(1.0, 3.0))))
    dirs = [Direction(float(rng.uniform(0.1, 1.4)), float(rng.uniform(0, 2 * np.pi)))
            for _ in range(I)]
    channel = GridChannel.build(geom, dirs)
    dims = SignalDims(N, L, L + extra, min_delay=L)
    hyps = enumerate_hypotheses(I, K)
    responses, offsets = [], []
    for h in hyps:
        k = len(h)
        responses.append(rng.standard_normal(k) + 1j * rng.standard_normal(k))
        offsets.append(rng.integers(0, dims.n_offsets, k))
    p = rng.random(len(hyps))
    problem = DesignProblem(channel, dims, hyps, responses, offsets, p / p.sum(),
                            float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.5, 5.0)))
    W = rng.standard_normal((N, L)) + 1j * rng.standard_normal((N, L))
    grid = phase_grid(levels)
    return problem, W, rng.choice(grid, M), rng.choice(grid, M)


def mixing_method_sdp(C, targets, starts: int = 10, max_sweeps: int = 20000,
                      tol: float = 1e-15, seed: int = 0) -> float:
    """Value of ``max Re tr(C X), diag X = t, X >= 0`` by block coordinate ascent.

    Factor ``X = V V^H`` with full-rank ``V``; each row update is the exact
    maximizer on its sphere of radius ``sqrt(t_i)`` (projected ascent on the
    product of spheres).  With full rank the factored problem has no
    spurious local maxima, and the best of ``starts`` restarts is returned.
    """
    rng = np.random.default_rng(seed)
    C = (np.asarray(C) + np.asarray(C).conj().T) / 2
    t = np.asarray(targets, dtype=float)
    D = len(C)
    best = -np.inf
    for _ in range(starts):
        V = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        V *= np.sqrt(t)[:, None] / np.linalg.norm(V, axis=1)[:, None]
        prev = -np.inf
        val = prev
        for _ in range(max_sweeps):
            for i in range(D):
                g = C[i] @ V - C[i, i] * V[i]
                n = np.linalg.norm(g)
                if n > 0:
                    V[i] = np.sqrt(t[i]) * g / n
            val = float(np.real(np.trace(C @ V @ V.conj().T)))
            if val - prev < tol * max(1.0, abs(val)):
                break
            prev = val
        best = max(best, val)
    return best
