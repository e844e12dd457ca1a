"""Multiple-hypothesis bookkeeping: enumeration, ML estimation, posteriors.

A hypothesis is a sorted tuple of angular-grid indices (0-based), one entry
per target, so repeated indices mean several targets in one direction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (DomainError, InfeasibleHypothesisError,
                     SingularEstimationError)
from .signal import SignalDims, shift_signal

COND_LIMIT = 1e10
RIDGE = 1e-12


def enumerate_hypotheses(n_grids: int, max_targets: int) -> list[tuple]:
    """All multisets of grid indices of size ``0..max_targets``.

    Ordered by size, then lexicographically; the empty hypothesis is first.
    """
    if n_grids < 1 or max_targets < 0:
        raise DomainError("need n_grids >= 1 and max_targets >= 0")
    out = []
    for k in range(max_targets + 1):
        out.extend(itertools.combinations_with_replacement(range(n_grids), k))
    return out


def hypothesis_count(n_grids: int, n_targets: int) -> int:
    return math.comb(n_grids + n_targets - 1, n_targets)


def initial_prior(hypotheses: Sequence[tuple]) -> np.ndarray:
    """Uniform over the target count, then uniform within each count."""
    sizes = np.array([len(h) for h in hypotheses])
    k_max = sizes.max()
    counts = np.bincount(sizes, minlength=k_max + 1)
    return 1.0 / ((k_max + 1) * counts[sizes])


def _solve_gram(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``G x = b`` for a Hermitian Gram matrix with the ridge rule."""
    K = G.shape[-1]
    tr = np.real(np.trace(G))
    if not np.isfinite(tr) or tr <= 0:
        raise SingularEstimationError("response matrix has no energy")
    if np.linalg.cond(G) > COND_LIMIT:
        G = G + (RIDGE * tr / K) * np.eye(K)
    try:
        return np.linalg.solve(G, b)
    except np.linalg.LinAlgError as exc:
        raise SingularEstimationError(str(exc)) from exc


def _solve_gram_batch(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """:func:`_solve_gram` over a stack; singular entries give zero responses."""
    K = G.shape[-1]
    tr = np.real(np.trace(G, axis1=1, axis2=2))
    ok = np.isfinite(tr) & (tr > 0)
    out = np.zeros(b.shape, dtype=complex)
    if not ok.any():
        return out
    Gs = G[ok]
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(Gs)
    bad = ~(cond <= COND_LIMIT)
    if bad.any():
        Gs = Gs.copy()
        Gs[bad] += (RIDGE * tr[ok][bad] / K)[:, None, None] * np.eye(K)
    try:
        out[ok] = np.linalg.solve(Gs, b[ok][..., None])[..., 0]
    except np.linalg.LinAlgError:
        for i, t in enumerate(np.flatnonzero(ok)):
            try:
                out[t] = _solve_gram(G[t], b[t])
            except SingularEstimationError:
                pass
    return out


def estimate_responses(F: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares responses ``(F^H F)^{-1} F^H y``."""
    F = np.asarray(F, dtype=complex)
    if F.shape[1] == 0:
        return np.zeros(0, dtype=complex)
    return _solve_gram(F.conj().T @ F, F.conj().T @ y)


@dataclass
class CycleRecord:
    """One cycle's waveform, effective gains per grid and received vector."""

    W: np.ndarray
    U_t: np.ndarray
    U_r: np.ndarray
    y: np.ndarray


def echo_library(record: CycleRecord, dims: SignalDims) -> np.ndarray:
    """Unit-response echoes for every (grid, offset): shape ``(I, n_off, N*L_R)``."""
    E = record.U_t @ record.W                              # I x L
    spatial = record.U_r[:, :, None] * E[:, None, :]       # I x N x L
    I, N, L = spatial.shape
    lib = np.zeros((I, dims.n_offsets, dims.n_received, N), dtype=complex)
    for o in range(dims.n_offsets):
        lib[:, o, o:o + L, :] = spatial.transpose(0, 2, 1)
    return lib.reshape(I, dims.n_offsets, -1)


class History:
    """Received data of past cycles with running normal-equation sums."""

    def __init__(self, dims: SignalDims):
        self.dims = dims
        self.records: list[CycleRecord] = []
        self._libs: list[np.ndarray] = []
        self.gram = None
        self.corr = None
        self.energy = 0.0

    def __len__(self):
        return len(self.records)

    def append(self, record: CycleRecord):
        lib = echo_library(record, self.dims)
        flat = lib.reshape(-1, lib.shape[-1])              # P x D
        g = flat.conj() @ flat.T
        c = flat.conj() @ record.y
        self.gram = g if self.gram is None else self.gram + g
        self.corr = c if self.corr is None else self.corr + c
        self.energy += float(np.vdot(record.y, record.y).real)
        self.records.append(record)
        self._libs.append(lib)

    def column_index(self, grid: int, offset: int) -> int:
        return grid * self.dims.n_offsets + offset

    def stacked_columns(self, grids, offsets) -> np.ndarray:
        """``F^{(c)}``: response matrix stacked over all cycles."""
        cols = [np.concatenate([lib[g, o] for lib in self._libs]) for g, o in zip(grids, offsets)]
        n = sum(lib.shape[-1] for lib in self._libs)
        return np.stack(cols, axis=1) if cols else np.zeros((n, 0), dtype=complex)

    def stacked_y(self) -> np.ndarray:
        return np.concatenate([r.y for r in self.records])

    def residual(self, grids, offsets, gamma) -> float:
        """``sum_i ||y^i - ybar^i||^2`` evaluated directly."""
        total = 0.0
        for lib, rec in zip(self._libs, self.records):
            mean = np.zeros_like(rec.y)
            for g, o, x in zip(grids, offsets, gamma):
                mean = mean + x * lib[g, o]
            total += float(np.sum(np.abs(rec.y - mean) ** 2))
        return total


@dataclass
class HypothesisEstimate:
    grids: tuple
    delays: tuple = ()
    responses: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    residual: float = 0.0
    feasible: bool = True

    @property
    def n_targets(self) -> int:
        return len(self.grids)


def delay_tuples(grids: Sequence[int], n_offsets: int) -> np.ndarray:
    """Offset tuples, excluding equal delays for targets sharing a grid."""
    K = len(grids)
    combos = np.array(list(itertools.product(range(n_offsets), repeat=K)), dtype=int).reshape(-1, K)
    keep = np.ones(len(combos), dtype=bool)
    for a, b in itertools.combinations(range(K), 2):
        if grids[a] == grids[b]:
            keep &= combos[:, a] != combos[:, b]
    return combos[keep]


def estimate_delays(grids: Sequence[int], history: History) -> HypothesisEstimate:
    """Joint ML delays and responses for one hypothesis over the full history."""
    grids = tuple(grids)
    dims = history.dims
    if not grids:
        return HypothesisEstimate((), (), np.zeros(0, dtype=complex), history.energy)
    tuples = delay_tuples(grids, dims.n_offsets)
    if len(tuples) == 0:
        raise InfeasibleHypothesisError(f"no distinct delays for hypothesis {grids}")

    idx = np.asarray(grids)[None, :] * dims.n_offsets + tuples          # T x K
    G = history.gram[idx[:, :, None], idx[:, None, :]]                 # T x K x K
    b = history.corr[idx]                                               # T x K
    gammas = _solve_gram_batch(G, b)
    res = (history.energy - 2 * np.real(np.einsum("tk,tk->t", gammas.conj(), b))
           + np.real(np.einsum("tk,tkl,tl->t", gammas.conj(), G, gammas)))
    best = int(np.argmin(res))
    best_gamma = gammas[best]
    offsets = tuples[best]
    resid = history.residual(grids, offsets, best_gamma)
    delays = tuple(dims.delay(o) for o in offsets)
    return HypothesisEstimate(grids, delays, best_gamma, resid)


@dataclass
class PosteriorState:
    hypotheses: list
    prior: np.ndarray
    probabilities: np.ndarray
    log_likelihood: np.ndarray
    estimates: list
    cycle: int = 0

    @classmethod
    def initial(cls, hypotheses: Sequence[tuple]) -> "PosteriorState":
        prior = initial_prior(hypotheses)
        return cls(list(hypotheses), prior, prior.copy(), np.zeros(len(hypotheses)),
                   [HypothesisEstimate(tuple(h)) for h in hypotheses], 0)

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypotheses)


def posterior_from_loglik(prior: np.ndarray, loglik: np.ndarray) -> np.ndarray:
    """Normalize ``prior * exp(loglik)`` in the log domain."""
    with np.errstate(divide="ignore"):
        logp = np.log(prior) + loglik
    top = np.max(logp)
    if not np.isfinite(top):
        raise FloatingPointError("every hypothesis has zero likelihood")
    p = np.exp(logp - top)
    return p / p.sum()


def update_posterior(state: PosteriorState, history: History, sigma2: float) -> PosteriorState:
    """Re-estimate every hypothesis on the whole history and apply Bayes."""
    if sigma2 <= 0:
        raise DomainError("noise variance must be positive")
    estimates, loglik = [], np.empty(state.n_hypotheses)
    for j, h in enumerate(state.hypotheses):
        try:
            est = estimate_delays(h, history)
            loglik[j] = -est.residual / sigma2
        except InfeasibleHypothesisError:
            est = HypothesisEstimate(tuple(h), feasible=False)
            loglik[j] = -np.inf
        estimates.append(est)
    probs = posterior_from_loglik(state.prior, loglik)
    return replace(state, probabilities=probs, log_likelihood=loglik,
                   estimates=estimates, cycle=len(history))


@dataclass
class DetectionDecision:
    index: int
    hypothesis: tuple
    ranges: tuple
    rejected: np.ndarray
    fallback: bool = False


def threshold_and_decide(state: PosteriorState, omega: float,
                         propagation_speed: float = 2.0, tie_rtol: float = 1e-12) -> DetectionDecision:
    """Reject hypotheses with a weak target response, then take the MAP survivor.

    Ties go to the earliest hypothesis in canonical order, i.e. to fewer
    targets first.  With the default ``propagation_speed`` of 2 one snapshot
    of delay is one range cell.
    """
    rejected = np.array([
        (not est.feasible) or (est.n_targets > 0 and bool(np.any(np.abs(est.responses) <= omega)))
        for est in state.estimates])
    survivors = np.flatnonzero(~rejected)
    fallback = False
    if survivors.size == 0:
        empty = [j for j, h in enumerate(state.hypotheses) if len(h) == 0]
        idx = empty[0] if empty else 0
        fallback = True
    else:
        p = state.probabilities[survivors]
        top = p.max()
        idx = int(survivors[np.flatnonzero(p >= top * (1 - tie_rtol))[0]])
    est = state.estimates[idx]
    ranges = tuple(propagation_speed * d / 2 for d in est.delays) if not fallback else ()
    return DetectionDecision(idx, tuple(state.hypotheses[idx]), ranges, rejected, fallback)
