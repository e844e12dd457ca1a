"""Quick oracle suite behind ``risradar verify``.

Each check compares a production routine against an independent route
(see :mod:`risradar.oracles`) on a handful of random instances and returns
``(name, passed, detail)``.  The full-size versions live in the test-suite.
"""

from __future__ import annotations

import numpy as np

from .analysis import optimal_phases_and_max_gain, power_gain, power_gain_profile
from .geometry import Direction, GridChannel, make_geometry
from .objective import phase_quadratic_form, waveform_quadratic_form, waveform_value
from .oracles import direct_objective, mixing_method_sdp, random_problem
from .sdp import DiagSdpProblem, solve_diag_sdp
from .wpso import exhaustive_phase_oracle, optimize_phase, optimize_waveform


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_forms(rng, n=20):
    worst = 0.0
    for _ in range(n):
        pr, W, st, sr = random_problem(rng)
        d = direct_objective(pr, W, st, sr)
        w = W.reshape(-1, order="F")
        vals = [waveform_value(waveform_quadratic_form(pr, st, sr), w),
                phase_quadratic_form(pr, W, st, sr, "t").value(pr.channel.coefficients(st)),
                phase_quadratic_form(pr, W, st, sr, "r").value(pr.channel.coefficients(sr))]
        worst = max(worst, *(_rel(v, d) for v in vals))
    return "objective forms", bool(worst <= 1e-9), f"worst relative gap {worst:.2e}"


def check_waveform(rng, n=10, draws=10000):
    ok, worst = True, 0.0
    for _ in range(n):
        pr, W, st, sr = random_problem(rng)
        Z = waveform_quadratic_form(pr, st, sr)
        w, val = optimize_waveform(Z, pr.power)
        lam = np.linalg.eigvalsh((Z + Z.conj().T) / 2)[-1]
        worst = max(worst, _rel(waveform_value(Z, w), pr.power * lam))
        X = rng.standard_normal((draws, len(Z))) + 1j * rng.standard_normal((draws, len(Z)))
        X *= np.sqrt(pr.power) / np.linalg.norm(X, axis=1, keepdims=True)
        vals = np.einsum("ij,jk,ik->i", X.conj(), Z, X).real
        ok &= bool(vals.max() <= val * (1 + 1e-12))
    return "waveform optimum", bool(ok and worst <= 1e-8), f"worst relative gap {worst:.2e}"


def check_sdp(rng, n=5):
    worst = 0.0
    for _ in range(n):
        D = int(rng.integers(2, 11))
        C = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        C = C + C.conj().T
        t = rng.uniform(0.5, 2.0, D)
        sol = solve_diag_sdp(DiagSdpProblem(C, t))
        worst = max(worst, _rel(sol.primal, mixing_method_sdp(C, t, starts=3)))
    return "SDP vs coordinate ascent", bool(worst <= 1e-5), f"worst relative gap {worst:.2e}"


def check_phase(rng, n=5):
    ok = True
    for _ in range(n):
        pr, W, st, sr = random_problem(rng, max_elements=5)
        form = phase_quadratic_form(pr, W, st, sr, "t")
        res = optimize_phase(form, pr.channel.eta, pr.channel.levels, rng=rng)
        _, best = exhaustive_phase_oracle(form, pr.channel.eta, pr.channel.levels)
        ok &= res.value <= best * (1 + 1e-12) + 1e-12
    return "phase design vs enumeration", bool(ok), f"{n} instances"


def check_max_gain():
    d = Direction(np.pi / 6, np.pi / 4)
    geom = make_geometry(2, 1, array_offset=(0.3, 0.2, 2.0))
    ch = GridChannel.build(geom, [d])
    res = optimal_phases_and_max_gain(geom, d)
    at_opt = power_gain(ch, res.shifts, res.shifts)
    deg = np.deg2rad(np.arange(0, 360, 4))
    best = max(power_gain(ch, np.array([a, b]), np.array([a, b])) for a in deg for b in deg)
    ok = _rel(at_opt, res.gain) <= 1e-9 and best <= res.gain * (1 + 1e-12)
    return "max power gain", bool(ok), f"bound {res.gain:.6f}, sweep best {best:.6f}"


def check_placement():
    bad = 0
    for M in range(1, 9):
        for lp in np.linspace(-0.25, 0.25, 11):
            a = power_gain_profile(lp, 1.0, M, 0.5, 1.0)
            bad += sum(a < power_gain_profile(n * 0.5 + lp, 1.0, M, 0.5, 1.0)
                       for n in (-3, -2, -1, 1, 2, 3))
    return "central placement", bool(bad == 0), f"{bad} violations"


def run_all(seed: int = 0):
    rng = np.random.default_rng(seed)
    return [check_forms(rng), check_waveform(rng), check_sdp(rng), check_phase(rng),
            check_max_gain(), check_placement()]
