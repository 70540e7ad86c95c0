"""Quick invariant checks across both models, used by the `validate` command."""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .chaplygin.model import (
    BeanieFullState,
    BeanieParams,
    derived_constants,
    reduced_rhs_tuple,
    stability_jacobian,
    stability_polynomial_roots,
)
from .chaplygin.simulate import simulate_forced, simulate_passive
from .io import emit_field_grid, emit_trajectory_csv, read_field_grid, read_trajectory_csv
from .se2 import GroupElementSE2, integrate, reconstruct, se2_exp
from .snake.fields import GridSpec, exterior_derivative_field, gait_displacement_stokes, gait_line_integral
from .snake.kinematics import Gait, SnakeParams
from .snake.simulate import (
    constraint_residuals,
    joint_driven_platform_source,
    linear_momentum,
    simulate_snake_joint_driven,
    simulate_snake_platform_driven,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    limit: float
    strict: bool = False

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return bool(self.value < self.limit if self.strict else self.value <= self.limit)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _se2_exp_closure() -> float:
    xi = (0.3, -0.2, 0.7)
    tr = reconstruct(GroupElementSE2(), lambda t: xi, dt=1e-2, t_final=2.0)
    g = se2_exp(xi, 2.0)
    last = tr.states[-1]
    return float(max(abs(last[0] - g.x), abs(last[1] - g.y), abs(last[2] - g.theta)))


def _snake_joint(snake: SnakeParams):
    gait = Gait(0.8, 0.8, -math.pi / 2)
    tr = simulate_snake_joint_driven(GroupElementSE2(), (0.0, 0.0), gait, snake, gait.period / 2000, gait.period)
    return gait, tr


def _field_checks(snake: SnakeParams, grid: GridSpec) -> list[CheckResult]:
    dx = exterior_derivative_field("x", "int", grid, snake)
    dy = exterior_derivative_field("y", "int", grid, snake)
    dth = exterior_derivative_field("theta", "int", grid, snake)
    ok = ~dth.mask & ~dth.mask[::-1, ::-1].T
    anti = np.abs(dth.values + dth.values[::-1, ::-1].T)[ok]
    return [
        CheckResult("a_int x-row field non-negative (max of -dA_x)", float(max(0.0, -np.nanmin(dx.values))), 1e-12),
        CheckResult("a_int theta-row antisymmetry", float(anti.max()), 1e-8),
        CheckResult("a_int y-row field vanishes", float(np.nanmax(np.abs(dy.values))), 0.0),
    ]


def _stokes_check(snake: SnakeParams) -> float:
    gait = Gait(0.5, 0.4, 1.0, c1=1.2, c2=-0.3)
    grid = GridSpec.around(gait.polygon(512), 0.02)
    field = exterior_derivative_field("theta", "int", grid, snake)
    return abs(gait_displacement_stokes(gait, field).value - gait_line_integral(gait, snake))


def _roundtrip_check(snake: SnakeParams) -> float:
    gait = Gait(0.3, 0.3, -math.pi / 2, c1=1.2)
    dt = gait.period / 1000
    full = simulate_snake_joint_driven(GroupElementSE2(), (0.0, 0.0), gait, snake, dt, gait.period)
    back = simulate_snake_platform_driven(
        (full.column("alpha1")[0], full.column("alpha2")[0]), 0.0, joint_driven_platform_source(gait, snake),
        snake, dt, gait.period,
    )
    return float(max(np.abs(back.column("alpha1") - full.column("alpha1")).max(),
                     np.abs(back.column("alpha2") - full.column("alpha2")).max()))


def _conservation_check(beanie: BeanieParams) -> float:
    c = derived_constants(beanie)
    y0 = np.array([0.3, -0.2, 0.4, 0.1, 0.5, 0.0])
    tr = integrate(lambda t, s: np.array(reduced_rhs_tuple(c, *s)), y0, 1e-3, 10.0)
    p2 = tr.states[:, 2] ** 2 + tr.states[:, 3] ** 2
    return float(np.abs(p2 / p2[0] - 1).max())


def _stability_check(beanie: BeanieParams) -> tuple[float, float]:
    c = derived_constants(beanie)
    worst_re, worst_match = -np.inf, 0.0
    for r_c in np.logspace(-3, 3, 13):
        roots = np.sort_complex(stability_polynomial_roots(c, r_c))
        eig = np.sort_complex(np.linalg.eigvals(stability_jacobian(c, r_c)))
        worst_re = max(worst_re, float(roots.real.max()))
        worst_match = max(worst_match, float(np.abs(roots - eig).max() / max(1.0, np.abs(eig).max())))
    return worst_re, worst_match


def _cross_formulation(beanie: BeanieParams) -> float:
    init = BeanieFullState(theta=-math.pi / 4, phi=math.pi)
    passive = simulate_passive(beanie, init, 1e-3, 5.0)
    forced = simulate_forced(beanie, init, None, 1e-3, 5.0)
    err = 0.0
    for col in ("x", "y", "theta", "phi", "x_p", "y_p"):
        err = max(err, float(np.abs(passive.column(col) - forced.column(col)).max()))
    return err


def _io_roundtrip(tr, field) -> float:
    with tempfile.TemporaryDirectory() as d:
        p = emit_trajectory_csv(tr, Path(d) / "t.csv")
        back = read_trajectory_csv(p)
        g = read_field_grid(emit_field_grid(field, Path(d) / "g.txt"))
    same_traj = np.array_equal(back.states, tr.states) and np.array_equal(back.times, tr.times)
    same_grid = np.array_equal(g.values, field.values, equal_nan=True)
    return 0.0 if (same_traj and same_grid) else 1.0


def run_invariant_suite(snake: SnakeParams | None = None, beanie: BeanieParams | None = None,
                        grid: GridSpec | None = None, tolerance: float = 1e-6,
                        log: Callable[[str], None] | None = None) -> list[CheckResult]:
    snake = snake or SnakeParams()
    beanie = beanie or BeanieParams()
    grid = grid or GridSpec()
    out: list[CheckResult] = []

    def add(res: CheckResult):
        out.append(res)
        if log:
            log(res.line())

    add(CheckResult("SE(2) reconstruction vs exponential", _se2_exp_closure(), 1e-9))
    gait, tr = _snake_joint(snake)
    add(CheckResult("snake wheel residuals", float(np.abs(constraint_residuals(tr, snake)).max()), tolerance))
    add(CheckResult("snake total linear momentum", float(np.abs(linear_momentum(tr, snake)).max()), tolerance))
    for res in _field_checks(snake, grid):
        add(res)
    add(CheckResult("Stokes area vs line integral", _stokes_check(snake), 1e-3))
    add(CheckResult("external connection roundtrip", _roundtrip_check(snake), tolerance))
    add(CheckResult("reduced momentum conservation", _conservation_check(beanie), 1e-8))
    worst_re, match = _stability_check(beanie)
    add(CheckResult("stability roots, largest real part", worst_re, 0.0, strict=True))
    add(CheckResult("stability roots vs Jacobian eigenvalues", match, 1e-9))
    add(CheckResult("passive vs free-platform forced simulation", _cross_formulation(beanie), tolerance))
    forced = simulate_forced(beanie, BeanieFullState(), None, 1e-3, 1.0)
    add(CheckResult("no-slip residual", float(np.abs(forced.column("slip")).max()), tolerance))
    add(CheckResult("file roundtrips", _io_roundtrip(tr, exterior_derivative_field("theta", "int", GridSpec(n1=11, n2=11), snake)), 0.0))
    return out
