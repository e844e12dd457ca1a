"""Monte Carlo driver for the detect-then-design protocol.

Each run repeats for ``cycles`` cycles:

1. design a waveform and RIS phases (random in the first cycle, then by
   the chosen scheme from the current posterior);
2. synthesize the echoes of the true scene;
3. re-estimate every hypothesis on all data so far and update the posterior;
4. decide (threshold rejection, then MAP).

Three schemes are compared: ``proposed`` (WPSO), ``random`` (constant
envelope waveform, random phases) and ``mimo`` (no RIS; waveform-only
optimization).  Runs are paired across schemes through their seeds.
"""

from __future__ import annotations

import ast
import configparser
import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .geometry import Direction, GridChannel, make_geometry
from .hypotheses import (CycleRecord, History, PosteriorState, enumerate_hypotheses,
                         initial_prior, threshold_and_decide, update_posterior)
from .objective import DesignProblem, waveform_quadratic_form
from .signal import SceneTruth, SignalDims, synthesize_received
from .wpso import DesignVariables, optimize_waveform, random_design, run_wpso

SCHEMES = ("proposed", "random", "mimo")
SWEEP_AXES = ("power", "n_antennas", "n_elements", "phase_levels", "array_offset_z",
              "array_offset_x", "sigma2", "cycles")


@dataclass
class ExperimentConfig:
    """All knobs of an experiment; see :data:`PROFILES` for the presets."""

    profile: str = "desk"
    n_elements: int = 16
    n_antennas: int = 2
    n_snapshots: int = 6
    n_received: int = 9
    min_delay: int = 10
    n_grids: int = 4
    max_targets: int = 2
    elevation: float = math.pi / 6
    phase_levels: int = 8
    eta: float = 1.0
    wavelength: float = 1.0
    array_offset: tuple = (0.0, 0.0, 1.5)
    power: float = 12.0
    sigma2: float = 4e-3
    gamma_db: float = -40.0
    truth_grids: tuple = (0, 1)
    truth_offsets: tuple = (0, 3)
    cycles: int = 6
    runs: int = 200
    misdetect_runs: int = 20
    seed: int = 2024
    omega: float | None = None
    epsilon: float | None = None
    rel_tol: float = 1e-3
    max_iter: int = 50
    n_random: int = 100
    sdp_accuracy: float = 1e-7
    schemes: tuple = SCHEMES
    sweep_axis: str | None = None
    sweep_values: tuple = ()

    def __post_init__(self):
        self.array_offset = tuple(float(v) for v in self.array_offset)
        self.truth_grids = tuple(int(g) for g in self.truth_grids)
        self.truth_offsets = tuple(int(o) for o in self.truth_offsets)
        self.schemes = tuple(self.schemes)
        self.sweep_values = tuple(self.sweep_values)
        self.validate()

    def validate(self):
        if self.runs < 1 or self.cycles < 1 or self.misdetect_runs < 0:
            raise ConfigError("runs and cycles must be at least 1")
        for name in ("power", "sigma2", "wavelength"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_elements < 0 or self.n_antennas < 1 or self.n_grids < 1:
            raise ConfigError("element/antenna/grid counts out of range")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must lie in (0, 1]")
        if self.phase_levels < 2:
            raise ConfigError("need at least two phase levels")
        if len(self.truth_grids) != len(self.truth_offsets):
            raise ConfigError("truth_grids and truth_offsets differ in length")
        if len(self.truth_grids) > self.max_targets:
            raise ConfigError("the true scene has more targets than max_targets")
        if any(not 0 <= g < self.n_grids for g in self.truth_grids):
            raise ConfigError("truth grid index out of range")
        try:
            dims = self.dims()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if any(not 0 <= o < dims.n_offsets for o in self.truth_offsets):
            raise ConfigError("truth offset outside the received window")
        bad = set(self.schemes) - set(SCHEMES)
        if bad:
            raise ConfigError(f"unknown schemes {sorted(bad)}")
        if self.sweep_axis is not None and self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")

    # derived quantities ----------------------------------------------------
    def dims(self) -> SignalDims:
        return SignalDims(self.n_antennas, self.n_snapshots, self.n_received, self.min_delay)

    @property
    def gamma(self) -> float:
        return 10 ** (self.gamma_db / 20)

    @property
    def threshold(self) -> float:
        return math.sqrt(self.sigma2) / 60 if self.omega is None else self.omega

    def directions(self) -> list:
        step = 2 * math.pi / self.n_grids
        return [Direction(self.elevation, (k + 0.5) * step) for k in range(self.n_grids)]

    def geometry(self):
        return make_geometry(self.n_elements, self.n_antennas, wavelength=self.wavelength,
                             array_offset=self.array_offset, eta=self.eta,
                             phase_levels=self.phase_levels)

    def channel(self, direct_only: bool = False) -> GridChannel:
        return GridChannel.build(self.geometry(), self.directions(), direct_only=direct_only)

    def hypotheses(self) -> list:
        return enumerate_hypotheses(self.n_grids, self.max_targets)

    def with_axis(self, value) -> "ExperimentConfig":
        """Copy with one sweep-axis value applied."""
        axis = self.sweep_axis
        if axis == "array_offset_z":
            off = list(self.array_offset)
            off[2] = value
            return dataclasses.replace(self, array_offset=tuple(off), sweep_axis=None, sweep_values=())
        if axis == "array_offset_x":
            off = list(self.array_offset)
            off[0] = value
            return dataclasses.replace(self, array_offset=tuple(off), sweep_axis=None, sweep_values=())
        cast = int if axis in ("n_antennas", "n_elements", "phase_levels", "cycles") else float
        return dataclasses.replace(self, **{axis: cast(value)}, sweep_axis=None, sweep_values=())

    def to_text(self) -> str:
        """``key = value`` lines, readable back by :func:`load_config`."""
        lines = ["[experiment]"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        return "\n".join(lines) + "\n"


# Desk scale: the 4x4 RIS sits 1.5 wavelengths from the array, where its
# random-phase reflected energy relative to the direct path (about 0.163)
# matches the full-scale scene; sigma2 is raised above the full-scale value
# so the smaller scene is not saturated (every scheme near-perfect) by cycle 6.
PROFILES = {
    "desk": dict(profile="desk", n_elements=16, n_antennas=2, n_snapshots=6, n_received=9,
                 min_delay=10, n_grids=4, max_targets=2, power=12.0, sigma2=4e-3,
                 array_offset=(0.0, 0.0, 1.5),
                 gamma_db=-40.0, truth_grids=(0, 1), truth_offsets=(0, 3), cycles=6,
                 runs=200, misdetect_runs=20),
    "paper": dict(profile="paper", n_elements=64, n_antennas=4, n_snapshots=10, n_received=15,
                  min_delay=10, n_grids=4, max_targets=2, power=12.0, sigma2=1e-5,
                  array_offset=(0.0, 0.0, 3.0),
                  gamma_db=-40.0, truth_grids=(0, 1), truth_offsets=(0, 5), cycles=20,
                  runs=200, misdetect_runs=20),
}


def make_config(profile: str = "desk", **overrides) -> ExperimentConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    params = dict(PROFILES[profile])
    params.update(overrides)
    return ExperimentConfig(**params)


def load_config(path, profile: str | None = None, **overrides) -> ExperimentConfig:
    """Read an ``[experiment]`` section of ``key = python-literal`` lines."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    if "experiment" not in parser:
        raise ConfigError(f"{path}: missing [experiment] section")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in names:
            raise ConfigError(f"{path}: unknown key {key!r}")
        try:
            values[key] = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            values[key] = raw.strip()
    prof = profile or values.pop("profile", "desk")
    values.pop("profile", None)
    values.update(overrides)
    return make_config(prof, **values)


# ----------------------------------------------------------------------------
# one run
# ----------------------------------------------------------------------------

@dataclass
class ProtocolTrace:
    decisions: list = field(default_factory=list)       # hypothesis index per cycle
    posteriors: list = field(default_factory=list)      # probability vector per cycle
    design_seconds: list = field(default_factory=list)  # optimizer wall-clock per cycle
    wpso_iterations: list = field(default_factory=list)
    truth_index: int = 0

    def correct(self) -> np.ndarray:
        return np.array([d == self.truth_index for d in self.decisions])


def _truth_for(hypothesis: tuple, cfg: ExperimentConfig, dims: SignalDims, rng) -> SceneTruth:
    """Scene for a hypothesis: default offsets profile, random response phases."""
    K = len(hypothesis)
    if tuple(hypothesis) == tuple(sorted(cfg.truth_grids)):
        order = np.argsort(cfg.truth_grids, kind="stable")
        offsets = [cfg.truth_offsets[i] for i in order]
    else:
        last = dims.n_offsets - 1
        offsets = [round(k * last / (K - 1)) if K > 1 else 0 for k in range(K)]
    phases = 2 * np.pi * rng.random(K)
    return SceneTruth(hypothesis, [dims.delay(o) for o in offsets], cfg.gamma * np.exp(1j * phases))


def scheme_design(scheme: str, cycle: int, state: PosteriorState, previous: DesignVariables | None,
                  cfg: ExperimentConfig, channel: GridChannel, dims: SignalDims, rng):
    """Design for one cycle; returns ``(design, wpso_iterations)``."""
    M = channel.n_elements
    if cycle == 1:
        return random_design(dims.n_antennas, dims.n_snapshots, M, cfg.phase_levels,
                             cfg.power, rng), 0
    if scheme == "random":
        return random_design(dims.n_antennas, dims.n_snapshots, M, cfg.phase_levels,
                             cfg.power, rng, constant_modulus=True), 0
    problem = DesignProblem.from_posterior(channel, dims, state, cfg.sigma2, cfg.power)
    if scheme == "mimo":
        Z = waveform_quadratic_form(problem, previous.s_t, previous.s_r)
        w, _ = optimize_waveform(Z, cfg.power)
        return DesignVariables(w.reshape(previous.W.shape, order="F"), previous.s_t,
                               previous.s_r), 1
    design, trace = run_wpso(problem, previous, cfg.epsilon, cfg.max_iter, cfg.n_random, rng,
                             cfg.rel_tol, cfg.sdp_accuracy)
    return design, trace.iterations


def run_protocol(cfg: ExperimentConfig, scheme: str, seed, truth: tuple | None = None,
                 channel: GridChannel | None = None) -> ProtocolTrace:
    """One Monte Carlo run of ``cfg.cycles`` cycles.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`; three
    independent streams are derived from it (design, noise, responses), so
    schemes sharing a seed see the same noise and target phases.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng_design, rng_noise, rng_truth = (np.random.default_rng(s) for s in ss.spawn(3))
    dims = cfg.dims()
    if channel is None:
        channel = cfg.channel(direct_only=(scheme == "mimo"))
    hyps = cfg.hypotheses()
    truth_h = tuple(sorted(cfg.truth_grids)) if truth is None else tuple(truth)
    scene = _truth_for(truth_h, cfg, dims, rng_truth)

    state = PosteriorState.initial(hyps)
    history = History(dims)
    out = ProtocolTrace(truth_index=hyps.index(truth_h))
    design = None
    for c in range(1, cfg.cycles + 1):
        t0 = time.perf_counter()
        design, iters = scheme_design(scheme, c, state, design, cfg, channel, dims, rng_design)
        out.design_seconds.append(time.perf_counter() - t0)
        out.wpso_iterations.append(iters)
        U_t = channel.effective_gain(design.s_t)
        U_r = channel.effective_gain(design.s_r)
        rx = synthesize_received(scene, design.W, U_t, U_r, dims, cfg.sigma2, rng_noise, c)
        history.append(CycleRecord(design.W, U_t, U_r, rx.y))
        state = update_posterior(state, history, cfg.sigma2)
        decision = threshold_and_decide(state, cfg.threshold)
        out.decisions.append(decision.index)
        out.posteriors.append(state.probabilities.copy())
    return out


@dataclass
class DesignSnapshot:
    """Posterior state after some random-design cycles, ready for a design step."""

    cfg: ExperimentConfig
    channel: GridChannel
    dims: SignalDims
    state: PosteriorState
    design: DesignVariables
    rng: np.random.Generator

    def problem(self) -> DesignProblem:
        return DesignProblem.from_posterior(self.channel, self.dims, self.state,
                                            self.cfg.sigma2, self.cfg.power)


def design_snapshot(cfg: ExperimentConfig, seed, warmup_cycles: int = 1,
                    channel: GridChannel | None = None) -> DesignSnapshot:
    """Run ``warmup_cycles`` random-design cycles on the configured scene."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng_design, rng_noise, rng_truth = (np.random.default_rng(s) for s in ss.spawn(3))
    dims = cfg.dims()
    channel = cfg.channel() if channel is None else channel
    scene = _truth_for(tuple(sorted(cfg.truth_grids)), cfg, dims, rng_truth)
    state = PosteriorState.initial(cfg.hypotheses())
    history = History(dims)
    design = None
    for c in range(1, warmup_cycles + 1):
        design = random_design(dims.n_antennas, dims.n_snapshots, channel.n_elements,
                               cfg.phase_levels, cfg.power, rng_design)
        U_t = channel.effective_gain(design.s_t)
        U_r = channel.effective_gain(design.s_r)
        rx = synthesize_received(scene, design.W, U_t, U_r, dims, cfg.sigma2, rng_noise, c)
        history.append(CycleRecord(design.W, U_t, U_r, rx.y))
        state = update_posterior(state, history, cfg.sigma2)
    return DesignSnapshot(cfg, channel, dims, state, design, rng_design)


def optimize_once(cfg: ExperimentConfig, seed, out_dir=None):
    """One WPSO run after a random first cycle; optionally writes its trace."""
    snap = design_snapshot(cfg, seed)
    problem = snap.problem()
    design, trace = run_wpso(problem, snap.design, cfg.epsilon, cfg.max_iter, cfg.n_random,
                             snap.rng, cfg.rel_tol, cfg.sdp_accuracy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "wpso_trace.csv",
                  ("iteration", "objective", "waveform_s", "transmit_phase_s", "receive_phase_s"),
                  trace.rows())
        write_manifest(out / "manifest.txt", cfg, "optimize")
    return problem, design, trace


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------

@dataclass
class Metrics:
    scheme: str
    p_detect: np.ndarray
    stderr_detect: np.ndarray
    p_misdetect: np.ndarray
    stderr_misdetect: np.ndarray
    runs: int
    design_ms: np.ndarray = field(repr=False, default=None)   # runs x cycles
    iterations: np.ndarray = field(repr=False, default=None)


def _run_seed(master: int, truth_index: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master, truth_index, run])


def monte_carlo(cfg: ExperimentConfig, scheme: str, progress=None) -> Metrics:
    """Detection and mis-detection probability per cycle for one scheme.

    Detection runs use the configured scene; mis-detection runs use each
    alternative hypothesis as the truth (``misdetect_runs`` each), counting
    decisions for the configured scene, weighted by the initial prior.
    """
    hyps = cfg.hypotheses()
    prior = initial_prior(hyps)
    star = hyps.index(tuple(sorted(cfg.truth_grids)))
    channel = cfg.channel(direct_only=(scheme == "mimo"))
    C = cfg.cycles

    hits = np.zeros((cfg.runs, C))
    times = np.zeros((cfg.runs, C))
    iters = np.zeros((cfg.runs, C), dtype=int)
    for r in range(cfg.runs):
        tr = run_protocol(cfg, scheme, _run_seed(cfg.seed, star, r), hyps[star], channel)
        hits[r] = tr.correct()
        times[r] = 1e3 * np.array(tr.design_seconds)
        iters[r] = tr.wpso_iterations
        if progress:
            progress(scheme, "detect", r)
    p_d = hits.mean(axis=0)
    se_d = np.sqrt(p_d * (1 - p_d) / cfg.runs)

    p_m = np.zeros(C)
    var_m = np.zeros(C)
    if cfg.misdetect_runs:
        for j, h in enumerate(hyps):
            if j == star:
                continue
            wrong = np.zeros((cfg.misdetect_runs, C))
            for r in range(cfg.misdetect_runs):
                tr = run_protocol(cfg, scheme, _run_seed(cfg.seed, j, r), h, channel)
                wrong[r] = np.array(tr.decisions) == star
            f = wrong.mean(axis=0)
            p_m += prior[j] * f
            var_m += prior[j] ** 2 * f * (1 - f) / cfg.misdetect_runs
            if progress:
                progress(scheme, "misdetect", j)
    return Metrics(scheme, p_d, se_d, p_m, np.sqrt(var_m), cfg.runs, times, iters)


RESULT_COLUMNS = ("axis_value", "scheme", "cycle", "p_detect", "p_misdetect",
                  "stderr_detect", "stderr_misdetect")
TIMING_COLUMNS = ("axis_value", "scheme", "cycle", "mean_design_ms", "mean_wpso_iterations")


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def result_rows(metrics: Metrics, axis_value="") -> list:
    return [(axis_value, metrics.scheme, c + 1, metrics.p_detect[c], metrics.p_misdetect[c],
             metrics.stderr_detect[c], metrics.stderr_misdetect[c])
            for c in range(len(metrics.p_detect))]


def timing_rows(metrics: Metrics, axis_value="") -> list:
    return [(axis_value, metrics.scheme, c + 1, metrics.design_ms[:, c].mean(),
             metrics.iterations[:, c].mean()) for c in range(metrics.design_ms.shape[1])]


def write_csv(path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_manifest(path, cfg: ExperimentConfig, command: str) -> None:
    Path(path).write_text(f"# {command}\n" + cfg.to_text(), encoding="utf-8")


def simulate(cfg: ExperimentConfig, out_dir=None, progress=None):
    """All configured schemes at the configured point.

    Writes ``results.csv`` (deterministic for a given config and seed),
    ``timing.csv`` (wall-clock, machine dependent) and ``manifest.txt``.
    """
    metrics = [monte_carlo(cfg, s, progress) for s in cfg.schemes]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "results.csv", RESULT_COLUMNS,
                  [row for m in metrics for row in result_rows(m)])
        write_csv(out / "timing.csv", TIMING_COLUMNS,
                  [row for m in metrics for row in timing_rows(m)])
        write_manifest(out / "manifest.txt", cfg, "simulate")
    return metrics


def run_sweep(cfg: ExperimentConfig, out_dir=None, progress=None):
    """One :class:`Metrics` per (axis value, scheme); rows share one CSV."""
    if cfg.sweep_axis is None or not cfg.sweep_values:
        raise ConfigError("sweep needs sweep_axis and sweep_values")
    table = []
    for value in cfg.sweep_values:
        point = cfg.with_axis(value)
        for s in cfg.schemes:
            table.append((value, monte_carlo(point, s, progress)))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "results.csv", RESULT_COLUMNS,
                  [row for v, m in table for row in result_rows(m, v)])
        write_csv(out / "timing.csv", TIMING_COLUMNS,
                  [row for v, m in table for row in timing_rows(m, v)])
        write_manifest(out / "manifest.txt", cfg, "sweep")
    return table
