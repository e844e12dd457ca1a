"""Deterministic channel quantities of an RIS-aided MIMO radar.

Conventions
-----------
The RIS lies in the ``z = 0`` plane with its boresight normal along ``+z``.
Directions are ``(theta, phi)`` with ``theta`` the polar angle from that
normal.  Phase shifts live on the grid ``{i * 2*pi/N_s : i = 1..N_s}`` and an
element with phase ``s`` reflects with coefficient ``eta * exp(-1j*s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError, ShapeError

GRID_TOL = 1e-12


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise DomainError(f"phi={self.phi} outside [0, 2*pi)")

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi),
                         math.cos(self.theta)])


def _polar_from_vectors(vec):
    """Polar/azimuth angles of 3D vectors in the RIS frame."""
    dist = np.linalg.norm(vec, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_theta = np.clip(vec[..., 2] / dist, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    phi = np.mod(np.arctan2(vec[..., 1], vec[..., 0]), 2 * np.pi)
    return dist, theta, phi


def ris_pattern(theta):
    """cos^3 on the front half-space, zero behind the surface."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    # cos(pi/2) is 6e-17, not 0; treat the surface plane itself as behind
    out = np.where((theta <= np.pi / 2) & (c > 1e-12), c ** 3, 0.0)
    return np.clip(out, 0.0, 1.0)


def radiation_pattern(kind: str, direction) -> float | np.ndarray:
    """Normalized power pattern of an RIS element or a radar antenna.

    ``direction`` is a :class:`Direction` or an array of polar angles.
    Antennas are isotropic.
    """
    theta = direction.theta if isinstance(direction, Direction) else direction
    if kind == "ris":
        val = ris_pattern(theta)
    elif kind == "antenna":
        val = np.ones_like(np.asarray(theta, dtype=float))
    else:
        raise DomainError(f"unknown pattern kind {kind!r}")
    return float(val) if np.ndim(val) == 0 else val


def phase_grid(levels: int) -> np.ndarray:
    """The admissible phase values ``i * 2pi/levels`` for ``i = 1..levels``."""
    if levels < 2:
        raise DomainError("at least two phase levels are required")
    return np.arange(1, levels + 1) * (2 * np.pi / levels)


def quantize_phase(s, levels: int) -> np.ndarray:
    """Round phases to the nearest grid value (``2pi`` represents zero)."""
    step = 2 * np.pi / levels
    idx = np.rint(np.mod(np.asarray(s, dtype=float), 2 * np.pi) / step).astype(int)
    idx = np.mod(idx - 1, levels) + 1
    return idx * step


def phases_from_coefficients(r, levels: int | None = None) -> np.ndarray:
    """Invert ``r = eta*exp(-1j*s)`` for ``s`` and optionally quantize it."""
    s = np.mod(-np.angle(r), 2 * np.pi)
    return s if levels is None else quantize_phase(s, levels)


def on_grid(s, levels: int) -> bool:
    s = np.asarray(s, dtype=float)
    return bool(np.all(np.abs(quantize_phase(s, levels) - s) <= GRID_TOL)) if s.size else True


def reflection_coefficient(s, eta: float = 1.0, levels: int | None = None):
    """``eta * exp(-1j*s)``; with ``levels`` the phases must sit on the grid."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"amplitude gain eta={eta} outside (0, 1]")
    s_arr = np.asarray(s, dtype=float)
    if levels is not None and not on_grid(s_arr, levels):
        raise DomainError("phase value off the discrete grid")
    r = eta * np.exp(-1j * s_arr)
    return complex(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class PhaseShiftVector:
    """RIS phase profile, discrete when ``levels`` is set."""

    shifts: np.ndarray
    levels: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.shifts, dtype=float)
        object.__setattr__(self, "shifts", arr)
        if self.levels is not None and not on_grid(arr, self.levels):
            raise DomainError("discrete phase vector has off-grid entries")

    @property
    def discrete(self) -> bool:
        return self.levels is not None

    def coefficients(self, eta: float) -> np.ndarray:
        return reflection_coefficient(self.shifts, eta, self.levels)


@dataclass(frozen=True)
class RadarGeometry:
    """Placement and gains of the RIS and the antenna array.

    Positions are absolute (meters).  ``element_gain`` defaults to the
    aperture gain ``4*pi*S/lambda**2`` of a single element.
    """

    element_positions: np.ndarray
    antenna_positions: np.ndarray
    wavelength: float = 1.0
    element_area: float | None = None
    element_gain: float | None = None
    antenna_gain: float = 1.0
    eta: float = 1.0
    phase_levels: int = 8
    element_spacing: float | None = None
    ris_center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        ep = np.asarray(self.element_positions, dtype=float).reshape(-1, 3)
        ap = np.asarray(self.antenna_positions, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "element_positions", ep)
        object.__setattr__(self, "antenna_positions", ap)
        object.__setattr__(self, "ris_center", np.asarray(self.ris_center, dtype=float))
        if self.wavelength <= 0:
            raise DomainError("wavelength must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError("eta must lie in (0, 1]")
        if self.phase_levels < 2:
            raise DomainError("need at least two phase levels")
        if len(ap) < 1:
            raise DomainError("need at least one antenna")
        if self.element_spacing is None:
            object.__setattr__(self, "element_spacing", self.wavelength / 2)
        if self.element_area is None:
            object.__setattr__(self, "element_area", self.element_spacing ** 2)
        if self.element_gain is None:
            object.__setattr__(self, "element_gain",
                               4 * math.pi * self.element_area / self.wavelength ** 2)

    @property
    def n_elements(self) -> int:
        return len(self.element_positions)

    @property
    def n_antennas(self) -> int:
        return len(self.antenna_positions)

    @property
    def array_center(self) -> np.ndarray:
        return self.antenna_positions.mean(axis=0)

    def wave_vectors(self, directions: Sequence[Direction]) -> np.ndarray:
        """Rows ``e_k`` of magnitude ``2pi/lambda`` pointing to each direction."""
        if len(directions) == 0:
            return np.zeros((0, 3))
        u = np.array([d.unit_vector() for d in directions])
        return (2 * np.pi / self.wavelength) * u


def _grid_shape(count: int) -> tuple[int, int]:
    rows = int(math.isqrt(count))
    while rows > 1 and count % rows:
        rows -= 1
    return rows, count // rows


def make_geometry(n_elements: int = 64, n_antennas: int = 4, *, wavelength: float = 1.0,
                  array_offset=(0.0, 0.0, 3.0), antenna_spacing: float | None = None,
                  line_orientation: float = math.pi / 6, eta: float = 1.0,
                  phase_levels: int = 8, element_gain: float | None = None,
                  antenna_gain: float = 1.0) -> RadarGeometry:
    """Square-ish RIS grid at the origin plus a small antenna array.

    ``array_offset`` is in wavelengths.  Antennas sit on a plane parallel to
    the RIS; a two-row-or-more count forms an x/y grid, otherwise a line
    rotated by ``line_orientation`` in that plane (a rotation keeps the four
    azimuth grid cells from pairing up with identical steering vectors).
    """
    lam = wavelength
    spacing = lam / 2
    rows, cols = _grid_shape(n_elements) if n_elements else (0, 0)
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    elements = np.stack([(jj.ravel() - (cols - 1) / 2) * spacing,
                         (ii.ravel() - (rows - 1) / 2) * spacing,
                         np.zeros(rows * cols)], axis=1)

    d_a = lam / 2 if antenna_spacing is None else antenna_spacing
    center = np.asarray(array_offset, dtype=float) * lam
    ar, ac = _grid_shape(n_antennas)
    if ar == 1:
        t = (np.arange(ac) - (ac - 1) / 2) * d_a
        axis = np.array([math.cos(line_orientation), math.sin(line_orientation), 0.0])
        antennas = center + t[:, None] * axis
    else:
        ai, aj = np.meshgrid(np.arange(ar), np.arange(ac), indexing="ij")
        antennas = center + np.stack([(aj.ravel() - (ac - 1) / 2) * d_a,
                                      (ai.ravel() - (ar - 1) / 2) * d_a,
                                      np.zeros(n_antennas)], axis=1)
    return RadarGeometry(elements.reshape(-1, 3), antennas, wavelength=lam,
                         element_area=spacing ** 2, element_gain=element_gain,
                         antenna_gain=antenna_gain, eta=eta, phase_levels=phase_levels,
                         element_spacing=spacing)


def antenna_ris_channel(geom: RadarGeometry) -> np.ndarray:
    """Path gains ``H[m, n]`` between RIS element ``m`` and antenna ``n``."""
    M, N = geom.n_elements, geom.n_antennas
    if M == 0:
        return np.zeros((0, N), dtype=complex)
    diff = geom.antenna_positions[None, :, :] - geom.element_positions[:, None, :]
    dist, theta, _ = _polar_from_vectors(diff)
    if np.any(dist <= 0):
        raise GeometryError("antenna coincides with an RIS element")
    g_ant = geom.antenna_gain * radiation_pattern("antenna", theta)
    g_ris = radiation_pattern("ris", theta)
    amp = np.sqrt(g_ant * g_ris * geom.element_area) / (math.sqrt(4 * math.pi) * dist)
    return amp * np.exp(-2j * np.pi * dist / geom.wavelength)


def steering_vectors(geom: RadarGeometry, directions: Sequence[Direction]):
    """RIS steering matrix ``A`` (K x M) and direct-path matrix ``Xi`` (K x N)."""
    K = len(directions)
    if K == 0:
        return (np.zeros((0, geom.n_elements), dtype=complex),
                np.zeros((0, geom.n_antennas), dtype=complex))
    e = geom.wave_vectors(directions)
    theta = np.array([d.theta for d in directions])
    rel_e = geom.element_positions - geom.element_positions[:1] if geom.n_elements else geom.element_positions
    rel_a = geom.antenna_positions - geom.antenna_positions[:1]
    amp_r = np.sqrt(geom.element_gain * radiation_pattern("ris", theta))
    amp_a = np.sqrt(geom.antenna_gain * radiation_pattern("antenna", theta))
    A = amp_r[:, None] * np.exp(1j * e @ rel_e.T)
    Xi = amp_a[:, None] * np.exp(1j * e @ rel_a.T)
    return A, Xi


def reflection_path_gain(A: np.ndarray, r: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``B(s) = A diag(r) H``."""
    A = np.atleast_2d(A)
    r = np.asarray(r)
    if A.shape[1] != r.shape[0] or H.shape[0] != r.shape[0]:
        raise ShapeError(f"A {A.shape}, r {r.shape}, H {H.shape} do not conform")
    return A @ (r[:, None] * H)


@dataclass(frozen=True)
class GridChannel:
    """Channel quantities for a fixed list of look directions.

    Rows of ``A`` and ``Xi`` index directions (the angular grid in the
    detection problem).  ``direct_only`` models a plain MIMO radar.
    """

    A: np.ndarray
    Xi: np.ndarray
    H: np.ndarray
    eta: float
    levels: int
    direct_only: bool = False

    @classmethod
    def build(cls, geom: RadarGeometry, directions: Sequence[Direction], direct_only=False):
        A, Xi = steering_vectors(geom, directions)
        H = antenna_ris_channel(geom)
        if direct_only:
            A = A[:, :0]
            H = H[:0]
        return cls(A, Xi, H, geom.eta, geom.phase_levels, direct_only)

    @property
    def n_elements(self) -> int:
        return self.H.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.Xi.shape[1]

    @property
    def n_directions(self) -> int:
        return self.Xi.shape[0]

    def coefficients(self, s) -> np.ndarray:
        return self.eta * np.exp(-1j * np.asarray(s, dtype=float))

    def reflection_gain(self, s) -> np.ndarray:
        return reflection_path_gain(self.A, self.coefficients(s), self.H)

    def effective_gain(self, s) -> np.ndarray:
        """Rows ``b_k(s) + xi_k`` for every direction."""
        if self.n_elements == 0:
            return self.Xi.copy()
        return self.reflection_gain(s) + self.Xi
