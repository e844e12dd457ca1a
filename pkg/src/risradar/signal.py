"""Transmit/receive signal synthesis.

Matrices are vectorized column-major (``vec``), so that
``vec(G @ W @ J) == kron(J.T, G) @ vec(W)``.  Delays are absolute snapshot
counts ``l``; the received window starts at the minimum delay ``L_m`` and
holds ``L_R`` snapshots, so a delay maps to the column offset ``l - L_m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class SignalDims:
    n_antennas: int
    n_snapshots: int
    n_received: int
    min_delay: int = 10

    def __post_init__(self):
        if self.n_received < self.n_snapshots:
            raise DomainError("received window shorter than the waveform")
        if self.min_delay < self.n_snapshots:
            # an echo delayed by l occupies snapshots l..l+L-1, after the transmission
            raise DomainError("minimum delay shorter than the waveform length")

    @property
    def n_offsets(self) -> int:
        return self.n_received - self.n_snapshots + 1

    @property
    def waveform_size(self) -> int:
        return self.n_antennas * self.n_snapshots

    @property
    def received_size(self) -> int:
        return self.n_antennas * self.n_received

    def offset(self, delay: int) -> int:
        off = int(delay) - self.min_delay
        if not 0 <= off < self.n_offsets:
            raise DomainError(f"delay {delay} outside window "
                              f"[{self.min_delay}, {self.min_delay + self.n_offsets - 1}]")
        return off

    def delay(self, offset: int) -> int:
        return self.min_delay + int(offset)


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).ravel(order="F")


def unvec(x: np.ndarray, rows: int) -> np.ndarray:
    return np.asarray(x).reshape((rows, -1), order="F")


def shift_matrix(delay: int, L: int, L_R: int, L_m: int) -> np.ndarray:
    """Dense 0/1 matrix ``J`` with ``J[l, l + delay - L_m] = 1``."""
    off = int(delay) - L_m
    if not 0 <= off <= L_R - L:
        raise DomainError(f"delay {delay} puts the echo outside the received window")
    J = np.zeros((L, L_R), dtype=int)
    J[np.arange(L), np.arange(L) + off] = 1
    return J


def shift_signal(X: np.ndarray, offset: int, L_R: int) -> np.ndarray:
    """Right-multiply the trailing axis of ``X`` by a shift matrix."""
    L = X.shape[-1]
    out = np.zeros(X.shape[:-1] + (L_R,), dtype=complex)
    out[..., offset:offset + L] = X
    return out


def q_matrix(u_r: np.ndarray, u_t: np.ndarray, offset: int, L: int, L_R: int) -> np.ndarray:
    """``kron(J^T, u_r^T u_t)``: maps ``vec(W)`` to one target's echo."""
    u_r = np.asarray(u_r)
    u_t = np.asarray(u_t)
    if u_r.shape != u_t.shape:
        raise ShapeError("transmit and receive gains differ in length")
    J = np.zeros((L, L_R))
    J[np.arange(L), np.arange(L) + offset] = 1.0
    return np.kron(J.T, np.outer(u_r, u_t))


def target_echo(u_r, u_t, W, offset, L_R) -> np.ndarray:
    """Noise-free ``N x L_R`` echo ``(u_r^T u_t) W J`` of a unit-response target."""
    return shift_signal(np.outer(u_r, u_t @ W), offset, L_R)


def response_matrix(U_t: np.ndarray, U_r: np.ndarray, grids: Sequence[int],
                    offsets: Sequence[int], W: np.ndarray, L_R: int) -> np.ndarray:
    """Columns ``Q_k w`` for each target ``(grid, offset)``.

    ``U_t``/``U_r`` hold one effective gain row per grid direction.
    """
    N = W.shape[0]
    if U_t.shape[1] != N or U_r.shape[1] != N:
        raise ShapeError("gain rows do not match the antenna count")
    F = np.zeros((N * L_R, len(grids)), dtype=complex)
    for k, (g, o) in enumerate(zip(grids, offsets)):
        F[:, k] = vec(target_echo(U_r[g], U_t[g], W, o, L_R))
    return F


def complex_gaussian(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly symmetric draws with ``E|v|^2 = sigma2``."""
    if sigma2 < 0:
        raise DomainError("noise variance must be nonnegative")
    scale = np.sqrt(sigma2 / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class SceneTruth:
    """Targets as grid indices, absolute delays and complex responses."""

    grids: tuple
    delays: tuple
    responses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grids", tuple(int(g) for g in self.grids))
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        object.__setattr__(self, "responses", np.asarray(self.responses, dtype=complex).ravel())
        if not len(self.grids) == len(self.delays) == len(self.responses):
            raise ShapeError("truth fields differ in length")
        if np.any(np.abs(self.responses) <= 0):
            raise DomainError("target responses must be nonzero")

    @property
    def n_targets(self) -> int:
        return len(self.grids)


@dataclass(frozen=True)
class ReceivedSignal:
    Y: np.ndarray
    cycle: int = 1

    @property
    def y(self) -> np.ndarray:
        return vec(self.Y)


def synthesize_received(truth: SceneTruth, W: np.ndarray, U_t: np.ndarray, U_r: np.ndarray,
                        dims: SignalDims, sigma2: float, rng: np.random.Generator | None = None,
                        cycle: int = 1) -> ReceivedSignal:
    """Echoes of all targets plus white complex Gaussian residual."""
    if sigma2 < 0:
        raise DomainError("noise variance must be nonnegative")
    if W.shape != (dims.n_antennas, dims.n_snapshots):
        raise ShapeError(f"waveform shape {W.shape} != {(dims.n_antennas, dims.n_snapshots)}")
    Y = np.zeros((dims.n_antennas, dims.n_received), dtype=complex)
    for g, d, gamma in zip(truth.grids, truth.delays, truth.responses):
        Y += gamma * target_echo(U_r[g], U_t[g], W, dims.offset(d), dims.n_received)
    if sigma2 > 0:
        if rng is None:
            raise DomainError("a random generator is required for sigma2 > 0")
        Y = Y + complex_gaussian(Y.shape, sigma2, rng)
    return ReceivedSignal(Y, cycle)
