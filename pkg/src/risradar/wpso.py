"""Alternating waveform / phase-shift optimization (WPSO).

Each iteration solves three subproblems in turn -- the waveform for fixed
phases, then the transmit phases, then the receive phases -- and keeps a
subproblem's result only when the exact objective does not drop.  The loop
stops once an iteration gains less than ``epsilon``.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, SearchSpaceTooLarge, ShapeError
from .geometry import on_grid, phase_grid, phases_from_coefficients
from .objective import (DesignProblem, PhaseForm, objective_upper_bound,
                        phase_quadratic_form, total_objective,
                        waveform_quadratic_form)
from .sdp import DiagSdpProblem, solve_diag_sdp, solve_trace_sdp_rank1

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 10 ** 6


@dataclass
class DesignVariables:
    """Waveform matrix ``W`` (N x L) and transmit/receive RIS phases."""

    W: np.ndarray
    s_t: np.ndarray
    s_r: np.ndarray

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=complex))
        self.s_t = np.asarray(self.s_t, dtype=float).ravel()
        self.s_r = np.asarray(self.s_r, dtype=float).ravel()
        if self.s_t.shape != self.s_r.shape:
            raise ShapeError("transmit and receive phase vectors differ in length")

    @property
    def w(self) -> np.ndarray:
        return self.W.ravel(order="F")

    @property
    def power(self) -> float:
        return float(np.vdot(self.W, self.W).real)

    def check(self, power: float, levels: int, rtol: float = 1e-9):
        if abs(self.power - power) > rtol * power:
            raise DomainError(f"waveform energy {self.power} != {power}")
        if not (on_grid(self.s_t, levels) and on_grid(self.s_r, levels)):
            raise DomainError("phase shifts off the grid")

    def copy(self) -> "DesignVariables":
        return DesignVariables(self.W.copy(), self.s_t.copy(), self.s_r.copy())


def random_design(n_antennas: int, n_snapshots: int, n_elements: int, levels: int,
                  power: float, rng: np.random.Generator, constant_modulus: bool = False):
    """Random feasible design.

    The waveform is complex Gaussian scaled to energy ``power``, or with
    ``constant_modulus`` every entry has modulus ``sqrt(power / (N L))`` and a
    uniform phase.  Phases are uniform over the grid.
    """
    shape = (n_antennas, n_snapshots)
    if constant_modulus:
        W = np.sqrt(power / (n_antennas * n_snapshots)) * np.exp(2j * np.pi * rng.random(shape))
    else:
        W = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        W *= np.sqrt(power) / np.linalg.norm(W)
    grid = phase_grid(levels)
    s_t = grid[rng.integers(0, levels, n_elements)]
    s_r = grid[rng.integers(0, levels, n_elements)]
    return DesignVariables(W, s_t, s_r)


# ----------------------------------------------------------------------------
# subproblems
# ----------------------------------------------------------------------------

def optimize_waveform(Z: np.ndarray, power: float):
    """Waveform maximizing ``Re(w^H Z w)`` subject to ``||w||^2 = power``.

    Returns ``(w, value)``; ``value = power * lambda_max`` of the Hermitian
    part of ``Z``, the exact optimum.
    """
    return solve_trace_sdp_rank1(Z, power)


def _coefficients(s, eta):
    return eta * np.exp(-1j * np.asarray(s, dtype=float))


@dataclass
class PhaseResult:
    shifts: np.ndarray
    value: float
    sdp_value: float = np.nan
    fallback: bool = False
    candidates: int = 0


def _homogenized(form: PhaseForm) -> np.ndarray:
    ZH, z1h = form.hermitian()
    M = len(z1h)
    C = np.zeros((M + 1, M + 1), dtype=complex)
    C[:M, :M] = ZH
    C[:M, M] = z1h
    C[M, :M] = z1h.conj()
    return C


def _quantize_rows(V: np.ndarray, eta: float, levels: int) -> np.ndarray:
    """De-homogenize lifted vectors (rows), project to modulus eta, quantize."""
    r = V[:, :-1] * np.exp(-1j * np.angle(V[:, -1:]))
    return phases_from_coefficients(r, levels)


def optimize_phase(form: PhaseForm, eta: float, levels: int, n_random: int = 100,
                   rng: np.random.Generator | None = None, accuracy: float = 1e-7,
                   start=None, refine: bool = True) -> PhaseResult:
    """Discrete phases via semidefinite relaxation and Gaussian randomization.

    The lifted problem over ``[r; 1]`` has diagonal targets
    ``(eta^2, ..., eta^2, 1)``.  Candidates are ``n_random`` Gaussian draws
    with the relaxed covariance plus the dominant eigenvector, each mapped
    back to grid phases; the best under the exact form is kept and, with
    ``refine``, polished by :func:`coordinate_descent_phase` (which never
    lowers it).  If the SDP fails, coordinate descent from ``start`` is used
    instead.
    """
    M = form.size
    if M == 0:
        return PhaseResult(np.zeros(0), form.value(np.zeros(0)))
    rng = np.random.default_rng() if rng is None else rng
    C = _homogenized(form)
    targets = np.r_[np.full(M, eta ** 2), 1.0]
    try:
        sol = solve_diag_sdp(DiagSdpProblem(C, targets), accuracy=accuracy)
    except ConvergenceError as exc:
        log.warning("phase SDP failed (%s); using coordinate descent", exc)
        if start is None:
            start = phase_grid(levels)[rng.integers(0, levels, M)]
        res = coordinate_descent_phase(form, eta, levels, start)
        res.fallback = True
        return res

    lam, U = np.linalg.eigh(sol.X)
    lam = np.clip(lam, 0.0, None)
    factor = U * np.sqrt(lam)[None, :]
    g = (rng.standard_normal((n_random, M + 1)) + 1j * rng.standard_normal((n_random, M + 1))) / np.sqrt(2)
    draws = g @ factor.T                                   # rows ~ CN(0, X)
    lifted = np.vstack([U[:, -1][None, :], draws])         # dominant eigenvector first
    S = _quantize_rows(lifted, eta, levels)
    vals = form.values(_coefficients(S, eta))
    k = int(np.argmax(vals))
    best = PhaseResult(S[k], float(vals[k]), sol.primal + form.z3.real, False, len(S))
    if refine:
        polished = coordinate_descent_phase(form, eta, levels, S[k])
        if polished.value > best.value:
            best.shifts, best.value = polished.shifts, polished.value
    return best


def coordinate_descent_phase(form: PhaseForm, eta: float, levels: int, start,
                             max_sweeps: int = 1000) -> PhaseResult:
    """Exact one-element-at-a-time ascent over grid phases.

    Stops after a sweep that changes nothing.
    """
    ZH, z1h = form.hermitian()
    grid = phase_grid(levels)
    cand = _coefficients(grid, eta)
    s = np.asarray(start, dtype=float).copy()
    r = _coefficients(s, eta)
    M = len(s)
    for _ in range(max_sweeps):
        changed = False
        for m in range(M):
            # f depends on r_m through 2 Re(conj(r_m) g_m) (|r_m| is fixed)
            g = ZH[m] @ r - ZH[m, m] * r[m] + z1h[m]
            scores = np.real(cand.conj() * g)
            best = int(np.argmax(scores))
            current = np.real(np.conj(r[m]) * g)
            if scores[best] > current + 1e-14 * (abs(current) + abs(scores[best])):
                s[m] = grid[best]
                r[m] = cand[best]
                changed = True
        if not changed:
            break
    return PhaseResult(s, form.value(r))


def exhaustive_phase_oracle(form: PhaseForm, eta: float, levels: int, chunk: int = 65536):
    """Global optimum over all ``levels**M`` grid vectors."""
    M = form.size
    if levels ** M > EXHAUSTIVE_LIMIT:
        raise SearchSpaceTooLarge(f"{levels}^{M} candidates exceed {EXHAUSTIVE_LIMIT}")
    grid = phase_grid(levels)
    best_val, best_s = -np.inf, None
    it = itertools.product(range(levels), repeat=M)
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=int).reshape(-1, M)
        if len(block) == 0:
            break
        S = grid[block]
        vals = form.values(_coefficients(S, eta))
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_s = float(vals[k]), S[k]
    return best_s, best_val


# ----------------------------------------------------------------------------
# alternating loop
# ----------------------------------------------------------------------------

@dataclass
class WpsoTrace:
    values: list = field(default_factory=list)
    iterations: int = 0
    reason: str = ""
    epsilon: float = np.nan
    timings: list = field(default_factory=list)
    rejected: dict = field(default_factory=lambda: {"w": 0, "t": 0, "r": 0})
    fallbacks: int = 0

    def rows(self):
        """``(iteration, objective, waveform_s, transmit_s, receive_s)`` rows."""
        out = [(0, self.values[0], 0.0, 0.0, 0.0)] if self.values else []
        for i, (v, tm) in enumerate(zip(self.values[1:], self.timings), start=1):
            out.append((i, v, *tm))
        return out


def run_wpso(problem: DesignProblem, initial: DesignVariables, epsilon: float | None = None,
             max_iter: int = 50, n_random: int = 100, rng: np.random.Generator | None = None,
             rel_tol: float = 1e-3, sdp_accuracy: float = 1e-7):
    """Alternate the three subproblems until the gain per iteration is small.

    Parameters
    ----------
    epsilon : float, optional
        Absolute stopping threshold on the per-iteration gain.  By default
        it is ``rel_tol`` times the objective after the first iteration.

    Returns
    -------
    (DesignVariables, WpsoTrace)
    """
    rng = np.random.default_rng() if rng is None else rng
    ch = problem.channel
    eta, levels = ch.eta, ch.levels
    M = ch.n_elements
    cur = initial.copy()
    value = total_objective(problem, cur.W, cur.s_t, cur.s_r)
    trace = WpsoTrace(values=[value], epsilon=np.inf if epsilon is None else epsilon)
    shape = cur.W.shape

    for it in range(1, max_iter + 1):
        start_value = value
        times = [0.0, 0.0, 0.0]

        t0 = time.perf_counter()
        Z = waveform_quadratic_form(problem, cur.s_t, cur.s_r)
        w, _ = optimize_waveform(Z, problem.power)
        W_new = w.reshape(shape, order="F")
        v_new = total_objective(problem, W_new, cur.s_t, cur.s_r)
        if v_new >= value:
            cur.W, value = W_new, v_new
        else:
            trace.rejected["w"] += 1
        times[0] = time.perf_counter() - t0

        if M > 0:
            for side, slot in (("t", 1), ("r", 2)):
                t0 = time.perf_counter()
                form = phase_quadratic_form(problem, cur.W, cur.s_t, cur.s_r, side)
                start = cur.s_t if side == "t" else cur.s_r
                res = optimize_phase(form, eta, levels, n_random, rng, sdp_accuracy, start)
                trace.fallbacks += int(res.fallback)
                s_t, s_r = (res.shifts, cur.s_r) if side == "t" else (cur.s_t, res.shifts)
                v_new = total_objective(problem, cur.W, s_t, s_r)
                if v_new >= value:
                    cur.s_t, cur.s_r, value = s_t, s_r, v_new
                else:
                    trace.rejected[side] += 1
                times[slot] = time.perf_counter() - t0

        trace.values.append(value)
        trace.timings.append(tuple(times))
        trace.iterations = it
        if epsilon is None and it == 1:
            trace.epsilon = rel_tol * value
        if value - start_value <= trace.epsilon:
            trace.reason = "converged"
            break
    else:
        trace.reason = "iteration cap"
    return cur, trace


def iteration_bound(problem: DesignProblem, epsilon: float) -> float:
    """``ceil(bound / epsilon)``: the most iterations a monotone run can take."""
    ub = objective_upper_bound(problem.n_hypotheses, problem.power, problem.sigma2).value
    if epsilon <= 0:
        return np.inf
    return float(np.ceil(ub / epsilon))
