"""Closed-form performance analysis.

Single-target distances for the RIS-aided radar and a plain MIMO radar,
the optimal continuous phases and maximum power gain of a one-antenna
configuration, and the power-gain profile over the antenna position in the
two-dimensional (top-view) frame: RIS on the x axis centered at the origin,
antenna at ``(l_x, l_z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError
from .geometry import (Direction, GridChannel, RadarGeometry, _polar_from_vectors,
                       radiation_pattern)


# ----------------------------------------------------------------------------
# pairwise distances (one target, empty alternative)
# ----------------------------------------------------------------------------

def metaradar_pair_distance(gamma: complex, power: float, sigma2: float,
                            u_t: np.ndarray, u_r: np.ndarray) -> float:
    """``|gamma|^2 P_M / sigma^2 * ||u_r||^2 ||u_t||^2`` for effective gains ``u``."""
    return (abs(gamma) ** 2 * power / sigma2
            * float(np.vdot(u_r, u_r).real) * float(np.vdot(u_t, u_t).real))


def mimo_pair_distance(n_antennas: int, gamma: complex, power: float, sigma2: float,
                       antenna_gain: float = 1.0, pattern: float = 1.0) -> float:
    """``(N |gamma| G^A G^A_P)^2 P_M / sigma^2``."""
    return (n_antennas * abs(gamma) * antenna_gain * pattern) ** 2 * power / sigma2


def pair_distance_closed_form(kind: str, **params) -> float:
    """Dispatch to :func:`metaradar_pair_distance` or :func:`mimo_pair_distance`."""
    if kind == "metaradar":
        return metaradar_pair_distance(**params)
    if kind == "mimo":
        return mimo_pair_distance(**params)
    raise DomainError(f"unknown kind {kind!r}")


# ----------------------------------------------------------------------------
# optimal phases and maximum gain, one antenna
# ----------------------------------------------------------------------------

@dataclass
class GainResult:
    shifts: np.ndarray
    gain: float
    rho: float


def composite_amplitude(geom: RadarGeometry, direction: Direction) -> float:
    """``rho = eta sqrt(G^R S^e G^R_P(theta)) / sqrt(4 pi)``."""
    g = radiation_pattern("ris", direction)
    return geom.eta * math.sqrt(geom.element_gain * geom.element_area * g) / math.sqrt(4 * math.pi)


def optimal_phases_and_max_gain(geom: RadarGeometry, direction: Direction) -> GainResult:
    """Continuous phases aligning every reflected path with the direct path.

    Phases are ``mod(e.(p_m - p_1) - 2 pi l_m / lambda, 2 pi)`` with element
    positions taken relative to the first element (the antenna is the phase
    reference), and the gain is
    ``(G^A)^2 (sum_m rho sqrt(G^A_P G^R_P(theta_m)) / l_m + sqrt(G^A_P))^4``.
    """
    if geom.n_antennas != 1:
        raise DomainError("the closed form covers a single antenna")
    lam = geom.wavelength
    e = geom.wave_vectors([direction])[0]
    ant = geom.antenna_positions[0]
    diff = ant[None, :] - geom.element_positions
    dist, theta_r, _ = _polar_from_vectors(diff)
    rel = geom.element_positions - geom.element_positions[:1] if geom.n_elements else geom.element_positions
    shifts = np.mod(rel @ e - 2 * np.pi * dist / lam, 2 * np.pi)
    rho = composite_amplitude(geom, direction)
    g_ap = radiation_pattern("antenna", theta_r)
    g_rp = radiation_pattern("ris", theta_r)
    direct = math.sqrt(float(radiation_pattern("antenna", direction)))
    # sort before summing so that mirror-image layouts give identical sums
    terms = np.sort(rho * np.sqrt(g_ap * g_rp) / dist) if geom.n_elements else np.zeros(0)
    amp = math.fsum(terms) + direct
    return GainResult(shifts, geom.antenna_gain ** 2 * amp ** 4, rho)


def power_gain(channel: GridChannel, s_t, s_r, k: int = 0) -> float:
    """Two-way gain ``||b_k(s_r) + xi_k||^2 ||b_k(s_t) + xi_k||^2``."""
    u_t = channel.effective_gain(s_t)[k]
    u_r = channel.effective_gain(s_r)[k]
    return float(np.vdot(u_t, u_t).real * np.vdot(u_r, u_r).real)


# ----------------------------------------------------------------------------
# 2D placement profile
# ----------------------------------------------------------------------------

def power_gain_profile(l_x, l_z, n_elements: int, spacing: float, rho: float):
    """Gain of an isotropic antenna at ``(l_x, l_z)`` facing an ``M``-element line RIS.

    ``B = (sum_m rho l_z^1.5 / (l_z^2 + (l_x + (M+1) l_e/2 - m l_e)^2)^1.25 + 1)^4``.
    Accepts scalars or broadcastable arrays.
    """
    lx, lz = np.broadcast_arrays(np.asarray(l_x, dtype=float), np.asarray(l_z, dtype=float))
    if np.any(lz <= 0):
        raise DomainError("antenna must sit in front of the RIS (l_z > 0)")
    m = np.arange(1, n_elements + 1)
    out = np.empty(lx.shape)
    for idx in np.ndindex(lx.shape):
        x, z = lx[idx], lz[idx]
        offs = x + (n_elements + 1) * spacing / 2 - m * spacing
        terms = rho * z ** 1.5 / (z ** 2 + offs ** 2) ** 1.25
        out[idx] = (math.fsum(terms) + 1.0) ** 4  # exact sum: order independent
    return float(out) if out.ndim == 0 else out


def optimal_lateral_offset(l_z: float, n_elements: int, spacing: float, rho: float):
    """Numeric maximizer of the gain over ``l_x`` in ``[-l_e/2, l_e/2]``.

    Returns ``(l_star, B(l_star, l_z))``.
    """
    half = spacing / 2
    grid = np.linspace(-half, half, 201)
    vals = power_gain_profile(grid, l_z, n_elements, spacing, rho)
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda x: -power_gain_profile(x, l_z, n_elements, spacing, rho),
                                   bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if -res.fun >= vals[k]:
        return float(res.x), float(-res.fun)
    return float(grid[k]), float(vals[k])


def far_field_optimized_gain(l_z: float, n_elements: int, spacing: float, rho: float) -> float:
    """Gain at the optimized lateral offset when ``l_z`` dwarfs the spacing.

    The offset drops out and this equals the profile at ``l_x = 0``.
    """
    return power_gain_profile(0.0, l_z, n_elements, spacing, rho)


def placement_sweep(values, axis: str, n_elements: int, spacing: float, rho: float,
                    fixed: float):
    """Rows ``(value, B)`` along ``l_x`` (at ``l_z = fixed``) or ``l_z`` (at ``l_x = fixed``)."""
    values = np.asarray(values, dtype=float)
    if axis == "l_x":
        B = power_gain_profile(values, fixed, n_elements, spacing, rho)
    elif axis == "l_z":
        B = power_gain_profile(fixed, values, n_elements, spacing, rho)
    else:
        raise DomainError("axis must be 'l_x' or 'l_z'")
    return list(zip(values.tolist(), np.atleast_1d(B).tolist()))
