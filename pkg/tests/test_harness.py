import dataclasses

import numpy as np
import pytest

from risradar.errors import ConfigError
from risradar.harness import (PROFILES, design_snapshot, load_config, make_config,
                              monte_carlo, run_protocol, run_sweep, scheme_design, simulate)
from risradar.objective import total_objective
from risradar.wpso import random_design


def tiny(**kw):
    base = dict(runs=3, misdetect_runs=1, cycles=2, n_elements=4, n_grids=2, max_targets=1,
                truth_grids=(0,), truth_offsets=(1,))
    base.update(kw)
    return make_config("desk", **base)


@pytest.mark.parametrize("bad", [dict(runs=0), dict(cycles=0), dict(power=-1.0),
                                 dict(sigma2=0.0), dict(eta=1.5), dict(phase_levels=1),
                                 dict(truth_grids=(0, 9)), dict(truth_offsets=(0, 99)),
                                 dict(schemes=("nope",)), dict(sweep_axis="colour"),
                                 dict(truth_grids=(0,)), dict(n_snapshots=20)])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        make_config("desk", **bad)


def test_profiles():
    with pytest.raises(ConfigError):
        make_config("huge")
    paper = make_config("paper")
    assert (paper.n_elements, paper.n_antennas, paper.n_snapshots, paper.n_received) == (64, 4, 10, 15)
    assert len(paper.hypotheses()) == 15
    desk = make_config("desk")
    assert (desk.n_elements, desk.n_antennas, desk.runs) == (16, 2, 200)
    assert set(PROFILES) == {"desk", "paper"}


def test_config_file_roundtrip(tmp_path):
    cfg = make_config("desk", seed=99, sigma2=1e-3, schemes=("random",))
    path = tmp_path / "exp.ini"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg
    assert load_config(path, seed=5).seed == 5
    (tmp_path / "bad.ini").write_text("[experiment]\nwhatever = 3\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.ini")
    (tmp_path / "none.ini").write_text("[other]\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.ini")


def test_grid_directions():
    dirs = make_config("desk").directions()
    assert np.allclose([d.phi for d in dirs], np.pi / 4 * np.array([1, 3, 5, 7]))
    assert all(d.theta == pytest.approx(np.pi / 6) for d in dirs)


def test_single_cycle_run():
    tr = run_protocol(tiny(cycles=1), "proposed", 1)
    assert len(tr.decisions) == 1 and tr.wpso_iterations == [0]


def test_runs_are_deterministic():
    cfg = tiny(cycles=3)
    a = run_protocol(cfg, "proposed", 7)
    b = run_protocol(cfg, "proposed", 7)
    assert a.decisions == b.decisions
    assert all(np.array_equal(p, q) for p, q in zip(a.posteriors, b.posteriors))


def test_schemes_coincide_without_ris():
    cfg = tiny(n_elements=0, cycles=3)
    a = run_protocol(cfg, "mimo", 11)
    b = run_protocol(cfg, "proposed", 11)
    assert a.decisions == b.decisions
    assert all(np.allclose(p, q, rtol=1e-9, atol=1e-300) for p, q in zip(a.posteriors, b.posteriors))


def test_noise_free_scene_is_detected_by_cycle_two():
    cfg = make_config("desk", sigma2=1e-12, cycles=2)
    for seed in range(3):
        tr = run_protocol(cfg, "proposed", seed)
        assert tr.correct()[-1]


def test_random_scheme_has_fixed_envelope(rng):
    cfg = make_config("desk")
    snap = design_snapshot(cfg, 0)
    d, _ = scheme_design("random", 2, snap.state, snap.design, cfg, snap.channel, snap.dims, rng)
    assert np.allclose(np.abs(d.W), np.sqrt(cfg.power / (cfg.n_antennas * cfg.n_snapshots)))
    assert d.power == pytest.approx(cfg.power)


def test_mimo_scheme_ignores_ris(rng):
    cfg = make_config("desk")
    ch = cfg.channel(direct_only=True)
    assert ch.n_elements == 0
    snap = design_snapshot(cfg, 0, channel=ch)
    d, _ = scheme_design("mimo", 2, snap.state, snap.design, cfg, ch, snap.dims, rng)
    assert d.s_t.size == 0 and d.power == pytest.approx(cfg.power)


def test_proposed_beats_random_on_sampled_states():
    cfg = make_config("desk")
    wins = 0
    for seed in range(100):
        snap = design_snapshot(cfg, seed)
        pr = snap.problem()
        rng = np.random.default_rng(seed)
        prop, _ = scheme_design("proposed", 2, snap.state, snap.design, cfg, snap.channel,
                                snap.dims, np.random.default_rng([seed, 1]))
        rand, _ = scheme_design("random", 2, snap.state, snap.design, cfg, snap.channel,
                                snap.dims, rng)
        wins += total_objective(pr, prop.W, prop.s_t, prop.s_r) >= total_objective(
            pr, rand.W, rand.s_t, rand.s_r)
    assert wins >= 95


def test_monte_carlo_probabilities_and_determinism():
    cfg = tiny(runs=1)
    m = monte_carlo(cfg, "random")
    assert set(np.unique(m.p_detect)) <= {0.0, 1.0}
    assert np.all((0 <= m.p_misdetect) & (m.p_misdetect <= 1))
    m2 = monte_carlo(cfg, "random")
    assert np.array_equal(m.p_detect, m2.p_detect)
    assert np.array_equal(m.p_misdetect, m2.p_misdetect)


def test_simulate_writes_identical_results(tmp_path):
    cfg = tiny()
    simulate(cfg, tmp_path / "a")
    simulate(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "axis_value,scheme,cycle,p_detect,p_misdetect,stderr_detect,stderr_misdetect"
    assert len(lines) == 1 + 3 * cfg.cycles
    assert (tmp_path / "a" / "timing.csv").exists()
    assert load_config(tmp_path / "a" / "manifest.txt") == cfg


def test_sweep_rows(tmp_path):
    cfg = tiny(sweep_axis="power", sweep_values=(1.0, 4.0), schemes=("random",), misdetect_runs=0)
    table = run_sweep(cfg, tmp_path)
    assert [v for v, _ in table] == [1.0, 4.0]
    rows = (tmp_path / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * cfg.cycles
    with pytest.raises(ConfigError):
        run_sweep(tiny())


@pytest.mark.parametrize("axis, value, field, expected", [
    ("n_elements", 9.0, "n_elements", 9), ("array_offset_z", 2.5, "array_offset", (0.0, 0.0, 2.5)),
    ("array_offset_x", 0.5, "array_offset", (0.5, 0.0, 1.5)), ("phase_levels", 4, "phase_levels", 4)])
def test_sweep_axes(axis, value, field, expected):
    cfg = make_config("desk", sweep_axis=axis, sweep_values=(value,))
    assert getattr(cfg.with_axis(value), field) == expected
