"""Predicted hypothesis distances and the weighted design objective.

The objective is ``sum_{j<j'} beta_{jj'} ||ybar_j - ybar_j'||^2 / sigma^2``
with ``beta_{jj'} = p_j p_j'``.  It is available in three algebraic forms:

* direct: build every mean signal and sum pair distances;
* waveform form: ``Re(w^H Z w)`` for fixed phase shifts;
* phase form: ``Re(r^H Z r + r^H z1 + z2 r + z3)`` in the reflection
  coefficients of one side (transmit ``"t"`` or receive ``"r"``).

Production code assembles the forms from target-pair ("atom") Gram
quantities, using the Laplacian identity
``sum_{j<j'} B_jj' ||y_j - y_j'||^2 = sum_{j,j'} Lap_jj' <y_j, y_j'>``.
The explicit Kronecker constructions are kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .geometry import GridChannel
from .signal import SignalDims, q_matrix, vec

PAIR_WEIGHT_FLOOR = 1e-12


def weighted_pairs(probabilities, floor: float = PAIR_WEIGHT_FLOOR) -> np.ndarray:
    """Symmetric pair-weight matrix ``B`` with ``p_j p_j'`` off the diagonal.

    Pairs whose weight falls below ``floor`` are dropped (set to zero).
    """
    p = np.asarray(probabilities, dtype=float)
    B = np.outer(p, p)
    np.fill_diagonal(B, 0.0)
    B[B < floor] = 0.0
    return B


def pair_laplacian(B: np.ndarray) -> np.ndarray:
    return np.diag(B.sum(axis=1)) - B


def shift_overlap(delta: int, L: int) -> np.ndarray:
    """``J_a J_b^T`` for offsets with ``o_a - o_b = delta``: ones at ``(l, l + delta)``."""
    S = np.zeros((L, L))
    idx = np.arange(L)
    keep = (idx + delta >= 0) & (idx + delta < L)
    S[idx[keep], idx[keep] + delta] = 1.0
    return S


@dataclass
class DesignProblem:
    """Everything the design objective depends on besides the design itself.

    Parameters
    ----------
    channel : GridChannel
        Gains toward every grid direction.
    dims : SignalDims
    hypotheses : list of tuple
        Grid-index multisets.
    responses, offsets : list of arrays
        Per-hypothesis response estimates and delay offsets (window-relative).
    probabilities : array
        Current posterior used for the pair weights.
    sigma2 : float
    power : float
        Waveform energy budget ``P_M``.
    """

    channel: GridChannel
    dims: SignalDims
    hypotheses: list
    responses: list
    offsets: list
    probabilities: np.ndarray
    sigma2: float
    power: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise DomainError("noise variance must be positive")
        if self.power <= 0:
            raise DomainError("power budget must be positive")
        J = len(self.hypotheses)
        if not (len(self.responses) == len(self.offsets) == len(self.probabilities) == J):
            raise ShapeError("per-hypothesis inputs differ in length")
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.responses = [np.asarray(g, dtype=complex).ravel() for g in self.responses]
        self.offsets = [np.asarray(o, dtype=int).ravel() for o in self.offsets]
        hyp, grid, off, gam = [], [], [], []
        for j, (h, g, o) in enumerate(zip(self.hypotheses, self.responses, self.offsets)):
            if len(g) == 0:
                continue  # empty or unestimated hypothesis: zero mean signal
            if not len(h) == len(g) == len(o):
                raise ShapeError(f"hypothesis {j}: grids/responses/offsets mismatch")
            hyp += [j] * len(h)
            grid += list(h)
            off += list(o)
            gam += list(g)
        self.atom_hyp = np.array(hyp, dtype=int)
        self.atom_grid = np.array(grid, dtype=int)
        self.atom_offset = np.array(off, dtype=int)
        self.atom_gamma = np.array(gam, dtype=complex)
        self.pair_weights = weighted_pairs(self.probabilities)
        self.laplacian = pair_laplacian(self.pair_weights)
        # Omega_ab = Lap[j_a, j_b] conj(g_a) g_b / sigma^2
        self.atom_weights = (self.laplacian[np.ix_(self.atom_hyp, self.atom_hyp)]
                             * np.outer(self.atom_gamma.conj(), self.atom_gamma) / self.sigma2)

    @classmethod
    def from_posterior(cls, channel, dims, state, sigma2, power):
        """Build from a :class:`~risradar.hypotheses.PosteriorState`."""
        responses, offsets = [], []
        for est in state.estimates:
            if est.feasible and len(est.delays) == len(est.grids) and len(est.responses):
                responses.append(est.responses)
                offsets.append([dims.offset(d) for d in est.delays])
            else:
                responses.append([])
                offsets.append([])
        return cls(channel, dims, state.hypotheses, responses, offsets,
                   state.probabilities, sigma2, power)

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypotheses)

    @property
    def n_atoms(self) -> int:
        return len(self.atom_hyp)

    def gains(self, s_t, s_r):
        return self.channel.effective_gain(s_t), self.channel.effective_gain(s_r)


def _as_matrix(w, dims: SignalDims) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.ndim == 1:
        if w.size != dims.waveform_size:
            raise ShapeError("waveform vector has the wrong length")
        return w.reshape((dims.n_antennas, dims.n_snapshots), order="F")
    if w.shape != (dims.n_antennas, dims.n_snapshots):
        raise ShapeError("waveform matrix has the wrong shape")
    return w


def mean_signals(problem: DesignProblem, W, s_t, s_r) -> np.ndarray:
    """Noise-free received vectors ``ybar_j``, one row per hypothesis."""
    dims = problem.dims
    W = _as_matrix(W, dims)
    U_t, U_r = problem.gains(s_t, s_r)
    out = np.zeros((problem.n_hypotheses, dims.n_received, dims.n_antennas), dtype=complex)
    if problem.n_atoms:
        g = problem.atom_grid
        v = (U_t[g] @ W) * problem.atom_gamma[:, None]            # T x L
        echo = v[:, :, None] * U_r[g][:, None, :]                 # T x L x N
        L = dims.n_snapshots
        for a in range(problem.n_atoms):
            o = problem.atom_offset[a]
            out[problem.atom_hyp[a], o:o + L] += echo[a]
    return out.reshape(problem.n_hypotheses, -1)


def predicted_distance(y_a, y_b, sigma2: float) -> float:
    """``||y_a - y_b||^2 / sigma^2``."""
    if sigma2 <= 0:
        raise DomainError("noise variance must be positive")
    diff = np.asarray(y_a) - np.asarray(y_b)
    return float(np.vdot(diff, diff).real) / sigma2


def total_objective_direct(problem: DesignProblem, W, s_t, s_r) -> float:
    """Pair-by-pair sum of weighted predicted distances."""
    Y = mean_signals(problem, W, s_t, s_r)
    B = problem.pair_weights
    total = 0.0
    for j in range(problem.n_hypotheses):
        for k in range(j + 1, problem.n_hypotheses):
            if B[j, k] > 0:
                total += B[j, k] * predicted_distance(Y[j], Y[k], problem.sigma2)
    return total


def total_objective(problem: DesignProblem, W, s_t, s_r) -> float:
    """Weighted distance sum through the Laplacian identity."""
    Y = mean_signals(problem, W, s_t, s_r)
    val = np.einsum("jd,jk,kd->", Y.conj(), problem.laplacian, Y)
    return max(float(val.real), 0.0) / problem.sigma2


class UpperBound(NamedTuple):
    value: float
    printed: float


def objective_upper_bound(n_hypotheses: int, power: float, sigma2: float = 1.0) -> UpperBound:
    """Bound on the design objective when no echo outweighs the transmit power.

    ``value`` keeps the noise variance, ``J(J-1) P_M / sigma^2``; ``printed``
    is the variance-free expression ``J(J-1) P_M / 2`` often quoted for it.
    """
    if n_hypotheses < 1:
        raise DomainError("need at least one hypothesis")
    pairs = n_hypotheses * (n_hypotheses - 1)
    return UpperBound(pairs * power / sigma2, pairs * power / 2)


# ----------------------------------------------------------------------------
# waveform form
# ----------------------------------------------------------------------------

def waveform_quadratic_form(problem: DesignProblem, s_t, s_r) -> np.ndarray:
    """``Z`` with ``Re(w^H Z w)`` equal to the objective for waveform ``w``."""
    dims = problem.dims
    N, L = dims.n_antennas, dims.n_snapshots
    Z = np.zeros((N * L, N * L), dtype=complex)
    if not problem.n_atoms:
        return Z
    U_t, U_r = problem.gains(s_t, s_r)
    g = problem.atom_grid
    Ut, Ur = U_t[g], U_r[g]
    Om = problem.atom_weights * (Ur.conj() @ Ur.T)
    delta = problem.atom_offset[:, None] - problem.atom_offset[None, :]
    for d in np.unique(delta):
        if abs(d) >= L:
            continue
        block = Ut.conj().T @ np.where(delta == d, Om, 0.0) @ Ut
        # Q_a^H Q_b = kron(J_a J_b^T, conj(u_t,a) (u_r,a^H u_r,b) u_t,b^T)
        Z += np.kron(shift_overlap(int(d), L), block)
    return Z


def hypothesis_operator(problem: DesignProblem, j: int, s_t, s_r) -> np.ndarray:
    """``M_j = sum_k gamma_k Q_k``, mapping ``vec(W)`` to ``ybar_j``."""
    dims = problem.dims
    U_t, U_r = problem.gains(s_t, s_r)
    M = np.zeros((dims.received_size, dims.waveform_size), dtype=complex)
    for grid, o, gam in zip(problem.hypotheses[j], problem.offsets[j], problem.responses[j]):
        M += gam * q_matrix(U_r[grid], U_t[grid], int(o), dims.n_snapshots, dims.n_received)
    return M


def waveform_quadratic_form_kron(problem: DesignProblem, s_t, s_r) -> np.ndarray:
    """Reference ``Z`` from explicit ``Q`` matrices, pair by pair."""
    ops = [hypothesis_operator(problem, j, s_t, s_r) for j in range(problem.n_hypotheses)]
    Z = np.zeros((problem.dims.waveform_size,) * 2, dtype=complex)
    B = problem.pair_weights
    for j in range(problem.n_hypotheses):
        for k in range(j + 1, problem.n_hypotheses):
            if B[j, k] > 0:
                D = ops[j] - ops[k]
                Z += B[j, k] / problem.sigma2 * (D.conj().T @ D)
    return Z


def waveform_value(Z: np.ndarray, w) -> float:
    w = np.asarray(w).ravel(order="F")
    return float(np.real(np.vdot(w, Z @ w)))


# ----------------------------------------------------------------------------
# phase form
# ----------------------------------------------------------------------------

@dataclass
class PhaseForm:
    """``f(r) = Re(r^H Z r + r^H z1 + z2 r + z3)``."""

    Z: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    z3: complex

    def value(self, r) -> float:
        r = np.asarray(r, dtype=complex)
        return float(np.real(np.vdot(r, self.Z @ r) + np.vdot(r, self.z1)
                             + self.z2 @ r + self.z3))

    def values(self, R) -> np.ndarray:
        """Vectorized :meth:`value` over the rows of ``R``."""
        R = np.asarray(R, dtype=complex)
        quad = np.einsum("im,mn,in->i", R.conj(), self.Z, R)
        return np.real(quad + R.conj() @ self.z1 + R @ self.z2 + self.z3)

    @property
    def size(self) -> int:
        return len(self.z1)

    def hermitian(self):
        """Hermitian part of ``Z`` and the merged linear term ``(z1 + z2^H)/2``."""
        return (self.Z + self.Z.conj().T) / 2, (self.z1 + self.z2.conj()) / 2


def _check_side(side):
    if side not in ("t", "r"):
        raise DomainError("side must be 't' (transmit) or 'r' (receive)")


def phase_quadratic_form(problem: DesignProblem, W, s_t, s_r, side: str = "t") -> PhaseForm:
    """Objective as a quadratic in the reflection coefficients of one side.

    The other side's phases are held at their given values; the value passed
    for the optimized side is ignored.
    """
    _check_side(side)
    dims = problem.dims
    ch = problem.channel
    W = _as_matrix(W, dims)
    M = ch.n_elements
    if not problem.n_atoms or M == 0:
        Zc = np.zeros((M, M), dtype=complex)
        zero = np.zeros(M, dtype=complex)
        const = total_objective(problem, W, s_t, s_r) if problem.n_atoms else 0.0
        return PhaseForm(Zc, zero, zero.copy(), complex(const))

    g = problem.atom_grid
    A = ch.A[g]                           # T x M
    Xi = ch.Xi[g]                         # T x N
    H = ch.H                              # M x N
    L = dims.n_snapshots
    delta = problem.atom_offset[:, None] - problem.atom_offset[None, :]
    Om = problem.atom_weights
    if side == "t":
        fixed = ch.effective_gain(s_r)[g]            # receive gains
        Om = Om * (fixed.conj() @ fixed.T)
        # K_ab = conj(W) S_ab W^T depends on the pair only through delta
        Zc = np.zeros((M, M), dtype=complex)
        z1 = np.zeros(M, dtype=complex)
        z2 = np.zeros(M, dtype=complex)
        z3 = 0j
        for d in np.unique(delta):
            if abs(d) >= L:
                continue
            Od = np.where(delta == d, Om, 0.0)
            K = W.conj() @ shift_overlap(int(d), L) @ W.T       # N x N
            HK = H.conj() @ K                                    # M x N
            Zc += (A.conj().T @ Od @ A) * (HK @ H.T)
            # z1_m = sum_ab Om conj(A_am) (conj(H) K xi_b)_m
            z1 += np.einsum("am,ab,mb->m", A.conj(), Od, HK @ Xi.T)
            z2 += np.einsum("ab,am,bm->m", Od, Xi.conj() @ K @ H.T, A)
            z3 += np.einsum("ab,ab->", Od, Xi.conj() @ K @ Xi.T)
    else:
        fixed = ch.effective_gain(s_t)[g]            # transmit gains
        V = fixed @ W                                 # T x L, echo rows before shift
        # <v_a J_a, v_b J_b> = conj(v_a) S_ab v_b^T
        G = np.zeros_like(Om)
        for d in np.unique(delta):
            if abs(d) >= L:
                continue
            mask = delta == d
            G[mask] = (V.conj() @ shift_overlap(int(d), L) @ V.T)[mask]
        Od = Om * G
        Zc = (A.conj().T @ Od @ A) * (H.conj() @ H.T)
        z1 = np.einsum("am,ab,mb->m", A.conj(), Od, H.conj() @ Xi.T)
        z2 = np.einsum("ab,am,bm->m", Od, Xi.conj() @ H.T, A)
        z3 = np.einsum("ab,ab->", Od, Xi.conj() @ Xi.T)
    return PhaseForm(Zc, z1, z2, complex(z3))


def phase_operators_kron(problem: DesignProblem, j: int, W, s_t, s_r, side: str = "t"):
    """``(T_j, t_j)`` with ``ybar_j = T_j r + t_j`` from Kronecker products.

    On the transmit side ``Q'_k = (J^T W^T H^T) kron (u_r a_k)`` has ``M^2``
    columns and ``T_j`` keeps the diagonal ones, ``m(M+1)``; the receive side
    uses ``(J^T W^T u_t) kron (H^T diag(a_k))`` directly.
    """
    _check_side(side)
    dims = problem.dims
    ch = problem.channel
    W = _as_matrix(W, dims)
    M, L, L_R = ch.n_elements, dims.n_snapshots, dims.n_received
    T = np.zeros((dims.received_size, M), dtype=complex)
    t = np.zeros(dims.received_size, dtype=complex)
    other = ch.effective_gain(s_r if side == "t" else s_t)
    for grid, o, gam in zip(problem.hypotheses[j], problem.offsets[j], problem.responses[j]):
        J = np.zeros((L, L_R))
        J[np.arange(L), np.arange(L) + int(o)] = 1.0
        a = ch.A[grid]
        xi = ch.Xi[grid]
        if side == "t":
            u_r = other[grid]
            Qp = np.kron(J.T @ W.T @ ch.H.T, np.outer(u_r, a))
            T += gam * Qp[:, np.arange(M) * (M + 1)]
            t += gam * vec(np.outer(u_r, xi @ W) @ J)
        else:
            u_t = other[grid]
            T += gam * np.kron((J.T @ W.T @ u_t)[:, None], ch.H.T * a[None, :])
            t += gam * vec(np.outer(xi, u_t @ W) @ J)
    return T, t


def phase_quadratic_form_kron(problem: DesignProblem, W, s_t, s_r, side: str = "t") -> PhaseForm:
    """Reference phase form assembled pair by pair from :func:`phase_operators_kron`."""
    M = problem.channel.n_elements
    ops = [phase_operators_kron(problem, j, W, s_t, s_r, side) for j in range(problem.n_hypotheses)]
    Z = np.zeros((M, M), dtype=complex)
    z1 = np.zeros(M, dtype=complex)
    z2 = np.zeros(M, dtype=complex)
    z3 = 0j
    B = problem.pair_weights
    for j in range(problem.n_hypotheses):
        for k in range(j + 1, problem.n_hypotheses):
            if B[j, k] <= 0:
                continue
            c = B[j, k] / problem.sigma2
            dT = ops[j][0] - ops[k][0]
            dt = ops[j][1] - ops[k][1]
            Z += c * dT.conj().T @ dT
            z1 += c * dT.conj().T @ dt
            z2 += c * dt.conj() @ dT
            z3 += c * np.vdot(dt, dt)
    return PhaseForm(Z, z1, z2, complex(z3))
