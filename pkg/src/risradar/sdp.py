"""Dense complex-Hermitian SDPs with diagonal or trace equality constraints.

Solves::

    maximize   Re tr(C X)
    subject to X[m, m] = t_m  (diagonal mode)   or   tr X = T  (trace mode)
               X Hermitian positive semidefinite

with a primal-dual interior-point method: Nesterov-Todd scaling, a
Mehrotra predictor-corrector step and a dense Schur-complement solve.
Iterates start strictly feasible and stay so (up to rounding), which keeps
weak duality valid at every step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
STEP_FRACTION = 0.98


def hermitian_part(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=complex)
    return (C + C.conj().T) / 2


@dataclass
class DiagSdpProblem:
    """Cost ``C`` plus either diagonal targets or a trace budget.

    Parameters
    ----------
    C : (D, D) complex array
        Must be Hermitian within ``1e-12`` (relative to its largest entry);
        use :meth:`symmetrized` to pass an arbitrary matrix.
    targets : (D,) array, optional
        Required diagonal of ``X``; defaults to ones in diagonal mode.
    trace : float, optional
        If given, the single constraint ``tr X = trace`` replaces the
        diagonal ones.
    """

    C: np.ndarray
    targets: np.ndarray | None = None
    trace: float | None = None

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=complex))
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 1:
            raise DomainError("cost must be a nonempty square matrix")
        scale = max(np.abs(C).max(), 1.0)
        if np.abs(C - C.conj().T).max() > HERMITIAN_TOL * scale:
            raise DomainError("cost matrix is not Hermitian")
        self.C = hermitian_part(C)
        D = C.shape[0]
        if self.trace is not None:
            if not self.trace > 0:
                raise DomainError("trace budget must be positive")
            self.targets = None
        else:
            t = np.ones(D) if self.targets is None else np.asarray(self.targets, dtype=float)
            if t.shape != (D,) or np.any(t <= 0):
                raise DomainError("diagonal targets must be positive, one per row")
            self.targets = t

    @classmethod
    def symmetrized(cls, C, targets=None, trace=None) -> "DiagSdpProblem":
        return cls(hermitian_part(C), targets, trace)

    @property
    def size(self) -> int:
        return self.C.shape[0]

    @property
    def trace_mode(self) -> bool:
        return self.trace is not None

    @property
    def rhs(self) -> np.ndarray:
        return np.array([self.trace]) if self.trace_mode else self.targets

    def constraint_map(self, X) -> np.ndarray:
        """``A(X)``: the constrained linear functionals of ``X``."""
        if self.trace_mode:
            return np.array([np.trace(X).real])
        return np.diag(X).real.copy()

    def adjoint_map(self, y) -> np.ndarray:
        """``A^T(y)``."""
        if self.trace_mode:
            return y[0] * np.eye(self.size)
        return np.diag(y).astype(complex)

    def residuals(self, X) -> float:
        """Relative equality-constraint violation."""
        b = self.rhs
        return float(np.abs(self.constraint_map(X) - b).max() / max(1.0, np.abs(b).max()))


@dataclass
class SdpSolution:
    X: np.ndarray
    primal: float
    dual: float
    gap: float
    iterations: int
    y: np.ndarray = field(default=None, repr=False)
    S: np.ndarray = field(default=None, repr=False)
    residual: float = 0.0
    history: list = field(default_factory=list, repr=False)


def _factor(X: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor ``L`` of ``X = L L^H``, with a tiny jitter if needed."""
    jitter = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(X + jitter * np.eye(len(X)))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100, 1e-15 * max(np.trace(X).real, 1e-300))
    raise np.linalg.LinAlgError("matrix is not positive definite")


def _max_step(Linv: np.ndarray, dX: np.ndarray) -> float:
    """Largest ``a`` keeping ``L L^H + a dX`` positive semidefinite (``Linv = L^-1``)."""
    M = Linv @ dX @ Linv.conj().T
    lam = np.linalg.eigvalsh(M)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve_diag_sdp(problem: DiagSdpProblem, accuracy: float = 1e-7,
                   max_iter: int = 200, feas_tol: float = 1e-10) -> SdpSolution:
    """Interior-point solution of a :class:`DiagSdpProblem`.

    Stops when ``primal - dual <= accuracy * (1 + |primal|)`` and the
    equality residual is below ``feas_tol``.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations; the best iterate is attached as
        ``.best``.
    """
    D = problem.size
    scale = float(np.linalg.norm(problem.C))
    if scale == 0.0:
        scale = 1.0
    Cm = -problem.C / scale             # minimize tr(Cm X)
    b = problem.rhs.astype(float)
    trace_mode = problem.trace_mode
    Amap, ATmap = problem.constraint_map, problem.adjoint_map

    # strictly feasible start
    X = np.eye(D, dtype=complex) * (problem.trace / D) if trace_mode else np.diag(b).astype(complex)
    lam_min = np.linalg.eigvalsh(Cm)[0]
    y = np.array([lam_min - 1.0]) if trace_mode else np.full(D, lam_min - 1.0)
    S = Cm - ATmap(y)
    S = hermitian_part(S)

    history = []
    best = None
    for it in range(1, max_iter + 1):
        pobj = float(np.real(np.vdot(Cm.conj().T, X)))   # Re tr(Cm X)
        dobj = float(b @ y)
        rp = b - Amap(X)
        Rd = hermitian_part(Cm - ATmap(y) - S)
        mu = float(np.real(np.vdot(X, S))) / D           # tr(X S)/D for Hermitian X, S
        gap = pobj - dobj
        resid = float(np.abs(rp).max() / max(1.0, np.abs(b).max()))
        history.append((it - 1, -pobj * scale, -dobj * scale, gap * scale))
        best = (X, y, S, pobj, dobj, gap, resid, it - 1)
        # gap test in the caller's units, not the normalized ones
        if abs(gap) * scale <= accuracy * (1 + abs(pobj) * scale) and resid <= feas_tol:
            break

        Lx = _factor(X)
        Rs = _factor(S)
        eye = np.eye(D)
        Lx_inv = linalg.solve_triangular(Lx, eye, lower=True, check_finite=False)
        Rs_inv = linalg.solve_triangular(Rs, eye, lower=True, check_finite=False)
        U, sig, Vh = np.linalg.svd(Rs.conj().T @ Lx)
        G = Lx @ Vh.conj().T / np.sqrt(sig)[None, :]      # X = G diag(sig) G^H
        Wn = G @ G.conj().T
        d = sig

        if trace_mode:
            schur = np.array([[np.real(np.vdot(Wn, Wn))]])
        else:
            schur = np.abs(Wn) ** 2
        try:
            chol = linalg.cho_factor(schur, lower=True, check_finite=False)
        except linalg.LinAlgError:
            schur = schur + 1e-14 * np.trace(schur) / D * np.eye(len(b))
            chol = linalg.cho_factor(schur, lower=True)

        denom = d[:, None] + d[None, :]

        def direction(Rc):
            Rc_s = Rc / denom                                    # (dX~ + dS~) D + D (...) = Rc
            rhs = rp - Amap(G @ Rc_s @ G.conj().T) + Amap(Wn @ Rd @ Wn)
            dy = linalg.cho_solve(chol, rhs, check_finite=False)
            dS = hermitian_part(Rd - ATmap(dy))
            dSt = G.conj().T @ dS @ G
            dXt = Rc_s - dSt
            dX = hermitian_part(G @ dXt @ G.conj().T)
            return dX, dy, dS, dXt, dSt

        # predictor
        Rc_aff = -2 * np.diag(d ** 2).astype(complex)
        dXa, dya, dSa, dXta, dSta = direction(Rc_aff)
        ap = min(1.0, _max_step(Lx_inv, dXa))
        ad = min(1.0, _max_step(Rs_inv, dSa))
        mu_aff = float(np.real(np.vdot(X + ap * dXa, S + ad * dSa))) / D
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        Rc = (2 * sigma * mu * np.eye(D) - 2 * np.diag(d ** 2)
              - (dXta @ dSta + dSta @ dXta))
        dX, dy, dS, _, _ = direction(Rc)
        ap = min(1.0, STEP_FRACTION * _max_step(Lx_inv, dX))
        ad = min(1.0, STEP_FRACTION * _max_step(Rs_inv, dS))
        X = hermitian_part(X + ap * dX)
        y = y + ad * dy
        S = hermitian_part(S + ad * dS)
    else:
        X, y, S, pobj, dobj, gap, resid, its = best
        sol = SdpSolution(X, -pobj * scale, -dobj * scale, gap * scale, its, -y * scale,
                          S * scale, resid, history)
        raise ConvergenceError(f"SDP did not converge in {max_iter} iterations "
                               f"(gap {gap * scale:.3e})", best=sol)

    X, y, S, pobj, dobj, gap, resid, its = best
    log.debug("sdp converged: D=%d its=%d gap=%.2e", D, its, gap * scale)
    return SdpSolution(X, -pobj * scale, -dobj * scale, gap * scale, its,
                       -y * scale, S * scale, resid, history)


def solve_trace_sdp_rank1(C, T: float):
    """Exact optimum of ``max Re tr(C X), tr X = T, X >= 0``: a rank-one ``X``.

    Returns ``(w, value)`` with ``w = sqrt(T) v_max`` for the top eigenvector
    of the Hermitian part of ``C`` and ``value = T * lambda_max``.  The
    eigenvector phase is fixed so that its first non-negligible entry is
    real and positive.
    """
    if not T > 0:
        raise DomainError("trace budget must be positive")
    CH = hermitian_part(np.atleast_2d(C))
    lam, V = np.linalg.eigh(CH)
    v = V[:, -1]
    k = int(np.flatnonzero(np.abs(v) > 1e-8 * np.abs(v).max())[0])
    v = v * np.exp(-1j * np.angle(v[k]))
    return np.sqrt(T) * v, float(T * lam[-1])
