import math

import numpy as np
import pytest

from nonholomech.chaplygin.model import BeanieFullState, BeanieParams
from nonholomech.chaplygin.simulate import BodyFrameControl, simulate_forced
from nonholomech.experiments.beanie import (
    SweepResult,
    SweepSpec,
    classify_heading,
    run_frequency_sweep,
    run_heading_analysis,
    run_multi_beanie,
    worker_count,
)
from nonholomech.experiments.snake import (
    GaitConfig,
    ScenarioConfig,
    aligned_dt,
    default_config,
    run_snake_scenarios,
    sign_changes,
    summarize,
)
from nonholomech.io import read_trajectory_csv

U = BeanieParams()


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(omega_min=1.0, omega_max=0.5)
    with pytest.raises(ValueError):
        SweepSpec(n_points=1)
    with pytest.raises(ValueError):
        SweepSpec(t_final=10.0)


def test_refined_sweep_reuses_nodes_exactly():
    coarse = SweepSpec(n_points=100).omegas()
    fine = SweepSpec(n_points=199).omegas()
    assert np.array_equal(fine[::2], coarse)
    assert coarse[0] == 0.3 and coarse[-1] == 2.0


def test_sweep_result_invariants():
    with pytest.raises(ValueError):
        SweepResult(np.array([1.0, 0.5]), np.zeros(2), np.ones(2, bool))
    with pytest.raises(ValueError):
        SweepResult(np.array([1.0, 2.0]), np.zeros(3), np.ones(2, bool))


def test_zero_amplitude_sweep_is_zero():
    res = run_frequency_sweep(SweepSpec(1.0, 1.5, 3, A=0.0, t_final=20.0), workers=1)
    assert res.mean_J_LT.tolist() == [0.0, 0.0, 0.0]
    assert res.converged.all()


def test_sweep_rows_do_not_depend_on_batching():
    spec5 = SweepSpec(1.0, 1.4, 5, t_final=20.0)
    spec9 = SweepSpec(1.0, 1.4, 9, t_final=20.0)
    a = run_frequency_sweep(spec5, workers=1)
    b = run_frequency_sweep(spec9, workers=2)
    assert np.array_equal(b.omega[::2], a.omega)
    assert np.array_equal(b.mean_J_LT[::2], a.mean_J_LT)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("NONHOLOMECH_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("NONHOLOMECH_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("NONHOLOMECH_THREADS", "x")
    with pytest.raises(ValueError):
        worker_count()


def test_classify_heading_synthetic():
    t = np.arange(0, 100, 0.01)
    steady = 0.3 + 0.2 * np.sin(1.2 * t)
    drifting = 0.02 * t + 0.2 * np.sin(1.2 * t)
    assert classify_heading(t, steady, 1.2)[1] == "stable_oscillatory"
    assert classify_heading(t, drifting, 1.2)[1] == "complex"
    assert classify_heading(t, np.full_like(t, 0.4), 0.0) == (0.0, "stable_oscillatory")


def test_heading_analysis_representative_frequencies():
    traces = run_heading_analysis(U, [0.0, 0.5, 1.2, 1.9], A=1.0, t_final=200.0)
    labels = {tr.omega: tr.classification for tr in traces}
    assert labels == {0.0: "stable_oscillatory", 0.5: "complex", 1.2: "stable_oscillatory", 1.9: "complex"}
    assert np.all(traces[0].trajectory.column("theta") == 0.0)


def _three_beanies():
    return [BeanieFullState(), BeanieFullState(x=2.0, theta=1.0), BeanieFullState(y=-1.0, theta=-2.0, phi=0.3)]


def test_multi_targeted_matches_single():
    inits = _three_beanies()
    trajs = run_multi_beanie([U] * 3, 1, 1.0, 0.9, t_final=20.0, inits=inits)
    single = simulate_forced(U, inits[1], BodyFrameControl(1.0, 0.9), 1e-3, 20.0)
    assert np.abs(trajs[1].states - single.states).max() < 1e-9


def test_multi_permuting_others_changes_nothing():
    inits = _three_beanies()
    a = run_multi_beanie([U] * 3, 0, 1.0, 0.9, t_final=10.0, inits=inits)
    b = run_multi_beanie([U] * 3, 0, 1.0, 0.9, t_final=10.0, inits=[inits[0], inits[2], inits[1]])
    assert np.array_equal(a[0].states, b[0].states)
    assert np.array_equal(a[1].states, b[2].states)
    assert np.array_equal(a[2].states, b[1].states)


def test_multi_station_keeping_below_natural_frequency():
    inits = [BeanieFullState(), BeanieFullState(x=2.0, y=1.0, theta=math.pi / 3)]
    trajs = run_multi_beanie([U, U], 0, 1.0, 0.9, t_final=100.0, inits=inits)
    X = trajs[0].column("x") + trajs[0].column("x_p")
    Y = trajs[0].column("y") + trajs[0].column("y_p")
    assert np.hypot(X - X[0], Y - Y[0]).max() < 10.0


def test_multi_validation():
    with pytest.raises(ValueError):
        run_multi_beanie([U], 1, 1.0, 0.9, t_final=1.0)
    with pytest.raises(ValueError):
        run_multi_beanie([U, U], 0, 1.0, 0.9, t_final=1.0, inits=[BeanieFullState(), BeanieFullState(x_p=1.0)])


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig("z")
    with pytest.raises(ValueError):
        ScenarioConfig("a", cycles=0)
    with pytest.raises(ValueError):
        run_snake_scenarios("b", default_config("a"))


def test_aligned_dt_divides_period():
    dt = aligned_dt(math.pi, 1e-3)
    assert dt <= 1e-3
    assert abs(round(math.pi / dt) * dt - math.pi) < 1e-12


def test_sign_changes_ignore_zeros():
    assert sign_changes(np.array([-1.0, -0.5, 0.0, 0.2, 0.3])) == [1]
    assert sign_changes(np.array([1.0, 2.0])) == []


def test_scenario_summary_recomputed_from_file(tmp_path):
    cfg = ScenarioConfig("a", gait=GaitConfig(0.8, 0.8, -math.pi / 2), cycles=1)
    rep = run_snake_scenarios("a", cfg, tmp_path)
    traj = read_trajectory_csv(tmp_path / rep.files["trajectory"])
    assert summarize(traj, cfg) == rep.summary
    assert rep.summary["max_wheel_residual"] < 1e-6
    assert abs(rep.summary["dtheta_per_cycle"][0]) < 0.01
    assert rep.summary["dx_body_per_cycle"][0] > 0


def test_scenario_outputs_are_deterministic(tmp_path):
    cfg = ScenarioConfig("a", gait=GaitConfig(0.5, 0.5, -math.pi / 2), cycles=1)
    run_snake_scenarios("a", cfg, tmp_path / "one")
    run_snake_scenarios("a", cfg, tmp_path / "two")
    name = "snake_a_trajectory.csv"
    assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
