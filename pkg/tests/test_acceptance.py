"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line and asserts it."""

import csv
import math
import time

import numpy as np
import pytest

from nonholomech.chaplygin.model import (
    BeanieFullState,
    BeanieParams,
    derived_constants,
    reduced_rhs_tuple,
    stability_jacobian,
    stability_polynomial_roots,
)
from nonholomech.chaplygin.simulate import simulate_forced, simulate_passive
from nonholomech.cli import main
from nonholomech.experiments.beanie import SweepSpec, run_frequency_sweep
from nonholomech.experiments.snake import GaitConfig, ScenarioConfig, run_snake_scenarios
from nonholomech.io import read_trajectory_csv
from nonholomech.se2 import GroupElementSE2, integrate
from nonholomech.snake.fields import GridSpec, exterior_derivative_field, gait_displacement_stokes, gait_line_integral
from nonholomech.snake.kinematics import Gait, SnakeParams
from nonholomech.snake.simulate import (
    constraint_residuals,
    joint_driven_platform_source,
    simulate_snake_joint_driven,
    simulate_snake_platform_driven,
)

pytestmark = pytest.mark.slow

UNIT = BeanieParams()
SNAKE = SnakeParams()


@pytest.fixture(scope="module")
def scenarios(tmp_path_factory):
    """All four canned snake scenarios on their defaults, written to disk."""
    out = tmp_path_factory.mktemp("scenarios")
    return {sid: (run_snake_scenarios(sid, out_dir=out / sid), out / sid) for sid in "abcd"}


def test_c01_proposition_one(criterion):
    t0 = time.perf_counter()
    tr = simulate_passive(UNIT, BeanieFullState(theta=-math.pi / 4, phi=math.pi), 1e-3, 200.0)
    elapsed = time.perf_counter() - t0
    end = tr.states[-1]
    col = tr.columns.index
    tail = tr.times >= 150.0
    jlt = tr.column("J_LT")[tail]
    decayed = max(abs(end[col("J_RW")]), abs(end[col("phi")]), abs(end[col("rotor_rate")]))
    ok = decayed < 1e-3 and jlt.mean() > 0 and jlt.std() < 1e-4 and elapsed < 10
    assert criterion(1, "passive beanie settles into straight rolling", ok,
                     f"max(|J_RW|,|phi|,|phi_dot|)={decayed:.2e}, J_LT mean={jlt.mean():.6f} std={jlt.std():.2e}, "
                     f"runtime {elapsed:.1f}s")


def test_c02_frequency_band(criterion, tmp_path):
    t0 = time.perf_counter()
    code = main(["chaplygin-sweep", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    omega = np.array([float(r["omega"]) for r in rows])
    metric = np.array([float(r["mean_J_LT"]) for r in rows])
    inb = (omega >= 1.0) & (omega <= math.sqrt(2))
    in_mean, out_mean = metric[inb].mean(), metric[~inb].mean()
    ok = (code == 0 and len(rows) == 100 and in_mean >= 2 * out_mean
          and metric[inb].max() > metric[~inb].max() and elapsed < 300)

    coarse = run_frequency_sweep(SweepSpec(dt=2e-3))
    rel = np.abs(coarse.mean_J_LT - metric) / np.maximum(np.abs(metric), 1e-3)
    ok = ok and rel.max() < 0.01
    assert criterion(2, "frequency-response band", ok,
                     f"{len(rows)} rows, in-band mean {in_mean:.3f} vs out {out_mean:.3f}, in-band max "
                     f"{metric[inb].max():.3f} vs out max {metric[~inb].max():.3f}, dt-doubling change "
                     f"{rel.max():.2e}, runtime {elapsed:.0f}s")


def test_c03_momentum_norm_conservation(criterion):
    c = derived_constants(UNIT)
    rng = np.random.default_rng(20240611)
    y0 = rng.uniform(-1, 1, size=(6, 10))

    def f(t, y):
        return np.array(reduced_rhs_tuple(c, *y.reshape(6, 10))).ravel()

    tr = integrate(f, y0.ravel(), 1e-3, 100.0)
    s = tr.states.reshape(len(tr), 6, 10)
    q = s[:, 2] ** 2 + s[:, 3] ** 2
    drift = (np.abs(q - q[0]) / np.maximum(1.0, q[0])).max()
    assert criterion(3, "p_x^2 + p_y^2 conservation", drift < 1e-8,
                     f"max relative drift {drift:.2e} over 100 s, 10 random states")


def test_c04_constraint_residuals(criterion, scenarios, tmp_path):
    worst_snake = 0.0
    for sid, (rep, folder) in scenarios.items():
        traj = read_trajectory_csv(folder / rep.files["trajectory"])
        worst_snake = max(worst_snake, float(np.abs(constraint_residuals(traj, SNAKE)).max()))
    assert main(["chaplygin-forced", "--out", str(tmp_path / "f")]) == 0
    assert main(["chaplygin-multi", "--out", str(tmp_path / "m"), "--set", "numerics.t_final=20"]) == 0
    worst_slip = 0.0
    for p in [tmp_path / "f" / "forced.csv", tmp_path / "m" / "beanie_0.csv", tmp_path / "m" / "beanie_1.csv"]:
        worst_slip = max(worst_slip, float(np.abs(read_trajectory_csv(p).column("slip")).max()))
    ok = worst_snake < 1e-6 and worst_slip < 1e-6
    assert criterion(4, "constraint residuals on emitted trajectories", ok,
                     f"snake wheels {worst_snake:.2e}, beanie no-slip {worst_slip:.2e}")


def test_c05_stokes_theta_exactness(criterion):
    rng = np.random.default_rng(5)
    full = exterior_derivative_field("theta", "int")
    origin_err = 0.0
    for _ in range(20):
        B = rng.uniform(0.2, 1.2)
        phi = rng.choice([-1, 1]) * rng.uniform(0.3, math.pi - 0.3)
        gait = Gait(B, B, phi)  # origin-centred gaits with unequal amplitudes cross a true pole
        origin_err = max(origin_err, abs(gait_displacement_stokes(gait, full).value - gait_line_integral(gait, SNAKE)))
    offset_err = 0.0
    for _ in range(20):
        gait = Gait(rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4), rng.uniform(0.3, math.pi - 0.3),
                    c1=rng.uniform(1.1, 1.5), c2=rng.uniform(-0.3, 0.3))
        field = exterior_derivative_field("theta", "int", GridSpec.around(gait.polygon(512), 0.02))
        offset_err = max(offset_err, abs(gait_displacement_stokes(gait, field).value - gait_line_integral(gait, SNAKE)))
    ok = origin_err < 1e-3 and offset_err < 1e-3
    assert criterion(5, "Stokes area integral vs line integral for theta", ok,
                     f"20 origin-centred gaits max error {origin_err:.2e}; 20 off-diagonal gaits {offset_err:.2e}")


def test_c06_field_symmetries(criterion):
    dx = exterior_derivative_field("x", "int")
    dy = exterior_derivative_field("y", "int")
    dth = exterior_derivative_field("theta", "int")
    min_dx = float(np.nanmin(dx.values))
    both = ~dth.mask & ~dth.mask[::-1, ::-1].T
    anti = float(np.abs(dth.values + dth.values[::-1, ::-1].T)[both].max())
    ymax = float(np.nanmax(np.abs(dy.values)))
    ok = min_dx >= -1e-12 and anti < 1e-8 and ymax == 0.0
    assert criterion(6, "field symmetries on the 101x101 grid", ok,
                     f"min dA_x {min_dx:.3f}, antisymmetry residual {anti:.2e}, max |dA_y| {ymax}")


def test_c07_zero_reorientation_gait(criterion, scenarios):
    s = scenarios["a"][0].summary
    dth = max(abs(v) for v in s["dtheta_per_cycle"])
    dx = min(s["dx_body_per_cycle"])
    assert criterion(7, "zero-reorientation forward gait", dth < 0.01 and dx > 0,
                     f"max per-cycle |dtheta| {dth:.2e}, min per-cycle body dx {dx:.4f}")


def test_c08_external_roundtrip(criterion):
    gait = Gait(0.3, 0.3, -math.pi / 2, c1=1.2)
    dt = gait.period / 2000
    T = 10 * gait.period
    full = simulate_snake_joint_driven(GroupElementSE2(), (0, 0), gait, SNAKE, dt, T)
    back = simulate_snake_platform_driven((full.column("alpha1")[0], full.column("alpha2")[0]), 0.0,
                                          joint_driven_platform_source(gait, SNAKE), SNAKE, dt, T)
    err = max(np.abs(back.column("alpha1") - full.column("alpha1")).max(),
              np.abs(back.column("alpha2") - full.column("alpha2")).max())
    assert criterion(8, "external-connection roundtrip over 10 cycles", err < 1e-6, f"max joint error {err:.2e} rad")


def test_c09_reduced_theta_connection(criterion, scenarios):
    errors = [scenarios["d"][0].summary["relative_error"]]
    extra = ScenarioConfig("d", gait=GaitConfig(0.5, 0.5, -2 * math.pi / 3), cycles=1)
    errors.append(run_snake_scenarios("d", extra).summary["relative_error"])
    ok = max(errors) < 0.10
    assert criterion(9, "reduced heading connection vs full simulation", ok,
                     "relative displacement errors " + ", ".join(f"{e:.2e}" for e in errors))


def test_c10_stability_polynomial(criterion):
    c = derived_constants(UNIT)
    rng = np.random.default_rng(10)
    worst_re, worst_match = -np.inf, 0.0
    for r_c in 10 ** rng.uniform(-3, 3, 200):
        roots = np.sort_complex(stability_polynomial_roots(c, r_c))
        eig = np.sort_complex(np.linalg.eigvals(stability_jacobian(c, r_c)))
        worst_re = max(worst_re, roots.real.max())
        worst_match = max(worst_match, (np.abs(roots - eig) / np.maximum(1.0, np.abs(eig))).max())
    ok = worst_re < 0 and worst_match < 1e-9
    assert criterion(10, "stability polynomial roots", ok,
                     f"largest real part {worst_re:.3e}, root/eigenvalue mismatch {worst_match:.2e} (relative)")


def test_c11_cross_formulation(criterion):
    init = BeanieFullState(theta=-math.pi / 4, phi=math.pi)
    a = simulate_passive(UNIT, init, 1e-3, 50.0)
    b = simulate_forced(UNIT, init, None, 1e-3, 50.0)
    err = max(float(np.abs(a.column(k) - b.column(k)).max()) for k in ("x", "y", "theta", "phi", "x_p", "y_p"))
    assert criterion(11, "passive reduced vs free-platform forced simulation", err < 1e-6,
                     f"max configuration difference {err:.2e} over 50 s")


def test_c12_curvature_flip(criterion, scenarios):
    s = scenarios["c"][0].summary
    ok = s["curvature_sign_changes"] == 1 and s["curvature_first"] < 0 < s["curvature_last"]
    assert criterion(12, "phase-lag chirp curvature sign change", ok,
                     f"{s['curvature_sign_changes']} sign change(s) at t={s['curvature_flip_times']}, "
                     f"curvature {s['curvature_first']:.2e} -> {s['curvature_last']:.2e}")
