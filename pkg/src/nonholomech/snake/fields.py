"""Curl fields of the snake connections over shape space and gait area integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..se2 import rk4_step
from .kinematics import (
    EPS_SINGULAR,
    Gait,
    SnakeParams,
    discriminant,
    external_numerator,
    internal_numerator,
)
from .simulate import JointDrivenRates

FD_STEP = 1e-5
ROWS = {"int": ("x", "y", "theta"), "ext": ("x", "y"), "theta": ("x", "y")}


@dataclass(frozen=True)
class GridSpec:
    a1_min: float = -2.5
    a1_max: float = 2.5
    a2_min: float = -2.5
    a2_max: float = 2.5
    n1: int = 101
    n2: int = 101

    def __post_init__(self):
        if not (self.a1_min < self.a1_max and self.a2_min < self.a2_max):
            raise ValueError("grid bounds must be increasing")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grid resolution must be at least 2x2")

    @staticmethod
    def _axis(lo: float, hi: float, n: int) -> np.ndarray:
        # Built from a mirror-exact unit axis so symmetric bounds give exactly symmetric nodes.
        u = np.linspace(-1.0, 1.0, n)
        u = 0.5 * (u - u[::-1])
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * u

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return self._axis(self.a1_min, self.a1_max, self.n1), self._axis(self.a2_min, self.a2_max, self.n2)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.a1_min, self.a1_max, self.a2_min, self.a2_max)

    @classmethod
    def around(cls, polygon: np.ndarray, spacing: float, margin: float = 0.05) -> "GridSpec":
        """Grid covering a closed curve's bounding box with roughly the given node spacing."""
        lo = polygon.min(axis=0) - margin
        hi = polygon.max(axis=0) + margin
        n = np.maximum(2, np.ceil((hi - lo) / spacing).astype(int) + 1)
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]), int(n[0]), int(n[1]))


@dataclass(frozen=True)
class FieldGrid:
    """Scalar field on nodes; values[i, j] sits at (alpha1[i], alpha2[j]), masked nodes are nan."""

    bounds: tuple[float, float, float, float]
    resolution: tuple[int, int]
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        m = np.array(self.mask, dtype=bool)
        if v.shape != tuple(self.resolution) or m.shape != v.shape:
            raise ValueError("values and mask must match the resolution")
        v[m] = np.nan
        if not np.all(np.isfinite(v[~m])):
            raise ValueError("unmasked values must be finite")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))

    @property
    def spec(self) -> GridSpec:
        return GridSpec(*self.bounds, *self.resolution)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.spec.axes()


def _velocity_map(a1, a2, connection: str, params: SnakeParams, theta: float):
    """The map b_dot -> velocity (i.e. minus the connection), shape (..., rows, 2)."""
    D = discriminant(a1, a2, params.R)[..., None, None]
    if connection == "int":
        return internal_numerator(a1, a2, params.R) / D
    N = external_numerator(a1, a2, params) / D
    if connection == "ext":
        return N
    if connection == "theta":
        c, s = math.cos(theta), math.sin(theta)
        return np.einsum("ij,...jk->...ik", np.array([[c, -s], [s, c]]), N)
    raise ValueError(f"unknown connection {connection!r}")


def _row_index(row, connection: str) -> int:
    names = ROWS[connection]
    if isinstance(row, str):
        aliases = {"xi_x": "x", "xi_y": "y", "xi_theta": "theta", "u_p": "x", "v_p": "y", "x_p": "x", "y_p": "y"}
        row = aliases.get(row, row)
        if row not in names:
            raise ValueError(f"row {row!r} not available for the {connection} connection")
        return names.index(row)
    if not 0 <= int(row) < len(names):
        raise ValueError(f"row index {row} out of range")
    return int(row)


def exterior_derivative_field(
    row,
    connection: str = "int",
    grid: GridSpec | None = None,
    params: SnakeParams | None = None,
    theta: float = 0.0,
    h: float = FD_STEP,
    eps_singular: float = EPS_SINGULAR,
) -> FieldGrid:
    """Curl of one row of the velocity map b_dot -> velocity (minus the connection).

    Nodes where |D| <= eps_singular anywhere on the finite-difference stencil are
    masked together with their eight grid neighbours.
    """
    grid = grid or GridSpec()
    params = params or SnakeParams()
    r = _row_index(row, connection)
    a1, a2 = np.meshgrid(*grid.axes(), indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        d_a2_da1 = (
            _velocity_map(a1 + h, a2, connection, params, theta)[..., r, 1]
            - _velocity_map(a1 - h, a2, connection, params, theta)[..., r, 1]
        ) / (2.0 * h)
        d_a1_da2 = (
            _velocity_map(a1, a2 + h, connection, params, theta)[..., r, 0]
            - _velocity_map(a1, a2 - h, connection, params, theta)[..., r, 0]
        ) / (2.0 * h)
        values = d_a2_da1 - d_a1_da2
    near = np.zeros(a1.shape, dtype=bool)
    for da1, da2 in ((0, 0), (h, 0), (-h, 0), (0, h), (0, -h)):
        near |= np.abs(discriminant(a1 + da1, a2 + da2, params.R)) <= eps_singular
    near |= ~np.isfinite(values)
    mask = near.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            shifted = np.zeros_like(near)
            src = near[max(0, -di):near.shape[0] - max(0, di), max(0, -dj):near.shape[1] - max(0, dj)]
            shifted[max(0, di):near.shape[0] - max(0, -di), max(0, dj):near.shape[1] - max(0, -dj)] = src
            mask |= shifted
    values = np.where(mask, np.nan, values)
    return FieldGrid(grid.bounds, (grid.n1, grid.n2), values, mask)


# ---- area integrals over closed gaits ----

def winding_numbers(points: np.ndarray, polygon: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Signed winding number of a closed polygon around each point (crossing-rule count)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    v0 = np.asarray(polygon, dtype=float)
    v1 = np.roll(v0, -1, axis=0)
    out = np.zeros(len(pts), dtype=int)
    for k in range(0, len(pts), chunk):
        px = pts[k:k + chunk, 0:1]
        py = pts[k:k + chunk, 1:2]
        left = (v1[:, 0] - v0[:, 0]) * (py - v0[:, 1]) - (px - v0[:, 0]) * (v1[:, 1] - v0[:, 1])
        up = (v0[:, 1] <= py) & (v1[:, 1] > py) & (left > 0)
        down = (v0[:, 1] > py) & (v1[:, 1] <= py) & (left < 0)
        out[k:k + chunk] = up.sum(axis=1) - down.sum(axis=1)
    return out


@dataclass(frozen=True)
class StokesEstimate:
    value: float
    masked_nodes_enclosed: int = 0
    warning: str | None = None

    def __float__(self) -> float:
        return self.value


def _densify(polygon: np.ndarray, max_seg: float) -> np.ndarray:
    seg = np.roll(polygon, -1, axis=0) - polygon
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    pieces = np.maximum(1, np.ceil(lengths / max_seg).astype(int))
    out = [polygon[i] + seg[i] * (np.arange(pieces[i])[:, None] / pieces[i]) for i in range(len(polygon))]
    return np.concatenate(out)


def area_integral(polygon: np.ndarray, field: FieldGrid, supersample: int = 8) -> StokesEstimate:
    """Winding-number-weighted integral of a node field over the region a closed curve encloses.

    Each node owns the cell around it. Cells far from the curve take the winding number at
    the node; cells the curve passes through take the mean over a supersample grid.
    """
    a1, a2 = field.axes()
    h1 = (a1[-1] - a1[0]) / (len(a1) - 1)
    h2 = (a2[-1] - a2[0]) / (len(a2) - 1)
    poly = _densify(np.asarray(polygon, float), 0.25 * min(h1, h2))
    if np.any(poly[:, 0] < a1[0]) or np.any(poly[:, 0] > a1[-1]) or np.any(poly[:, 1] < a2[0]) or np.any(poly[:, 1] > a2[-1]):
        raise ValueError("gait leaves the field grid")
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    weights = winding_numbers(np.column_stack([A1.ravel(), A2.ravel()]), poly).reshape(A1.shape).astype(float)
    # cells touched by the curve
    ii = np.clip(np.rint((poly[:, 0] - a1[0]) / h1).astype(int), 0, len(a1) - 1)
    jj = np.clip(np.rint((poly[:, 1] - a2[0]) / h2).astype(int), 0, len(a2) - 1)
    touched = set()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            touched.update(zip(np.clip(ii + di, 0, len(a1) - 1).tolist(), np.clip(jj + dj, 0, len(a2) - 1).tolist()))
    cells = np.array(sorted(touched))
    s = supersample
    offs = (np.arange(s) + 0.5) / s - 0.5
    o1, o2 = np.meshgrid(offs * h1, offs * h2, indexing="ij")
    sub = np.stack([a1[cells[:, 0]][:, None] + o1.ravel(), a2[cells[:, 1]][:, None] + o2.ravel()], axis=-1)
    w_sub = winding_numbers(sub.reshape(-1, 2), poly).reshape(len(cells), -1).mean(axis=1)
    weights[cells[:, 0], cells[:, 1]] = w_sub
    # trim half-cells at the grid edge
    weights[0, :] *= 0.5
    weights[-1, :] *= 0.5
    weights[:, 0] *= 0.5
    weights[:, -1] *= 0.5
    active = weights != 0
    hit = active & field.mask
    total = float(np.sum(weights[active & ~field.mask] * field.values[active & ~field.mask]) * h1 * h2)
    warning = None
    if hit.any():
        warning = f"gait encloses {int(hit.sum())} masked node(s); their contribution is omitted"
    return StokesEstimate(total, int(hit.sum()), warning)


def gait_displacement_stokes(gait: Gait, field: FieldGrid, n_polygon: int = 512, supersample: int = 8) -> StokesEstimate:
    """Area-integral estimate of the per-cycle displacement for one connection row."""
    if gait.B1 == 0 and gait.B2 == 0:
        return StokesEstimate(0.0)
    return area_integral(gait.polygon(n_polygon), field, supersample)


def gait_line_integral(gait: Gait, params: SnakeParams, row="theta", steps: int = 6283) -> float:
    """Per-cycle integral of one row of xi = -A_int(b) b_dot along the gait, by RK4 quadrature."""
    r = _row_index(row, "int")
    rates = JointDrivenRates(gait, params)
    dt = gait.period / steps
    f = lambda t, y: np.array([rates(t)[0][r]])
    y = np.zeros(1)
    for k in range(steps):
        rates.check_interval(k * dt, (k + 1) * dt)
        y = rk4_step(f, y, k * dt, dt)
    return float(y[0])
