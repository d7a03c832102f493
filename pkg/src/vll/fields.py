"""Grids, fields, boundary strips, norms and quadrature on the 1D interval.

Every other module does its spatial bookkeeping through this one: cell-centered
uniform meshes on [0, L], distance-to-boundary per cell, masked midpoint-rule
Lp norms, trapezoidal time integrals and second-order difference calculus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError, InvalidConfigError

# A cell mask is a plain boolean array, one entry per cell.
CellMask = np.ndarray


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh on [0, length] with distance to the endpoints."""

    length: float
    n: int
    dx: float = field(init=False)
    centers: np.ndarray = field(init=False)
    dist: np.ndarray = field(init=False)

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise InvalidConfigError(f"grid length must be positive, got {self.length}")
        if self.n < 4:
            raise InvalidConfigError(f"grid needs at least 4 cells, got {self.n}")
        dx = self.length / self.n
        centers = (np.arange(self.n) + 0.5) * dx
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "dist", np.minimum(centers, self.length - centers))
        self.centers.setflags(write=False)
        self.dist.setflags(write=False)


def make_grid(length: float, n: int) -> Grid:
    """Build a uniform mesh on [0, length] with n cells."""
    return Grid(length=length, n=int(n))


@dataclass(frozen=True)
class ScalarField:
    """One value per cell; values must be finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise InvalidArgumentError(
                f"scalar field needs shape ({self.grid.n},), got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("scalar field contains non-finite values")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class VectorField:
    """d components per cell (d=1 for the solver, d=2 for manufactured checks)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != self.grid.n or vals.shape[1] < 1:
            raise InvalidArgumentError(
                f"vector field needs shape ({self.grid.n}, d), got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("vector field contains non-finite values")
        object.__setattr__(self, "values", vals)


def boundary_strip(grid: Grid, width: float) -> CellMask:
    """Mask of cells within distance `width` of either endpoint (the strip Gamma)."""
    if width < 0:
        raise InvalidArgumentError(f"strip width must be >= 0, got {width}")
    return grid.dist <= width


def _field_values(f) -> tuple[Grid, np.ndarray]:
    if isinstance(f, (ScalarField, VectorField)):
        return f.grid, f.values
    raise InvalidArgumentError(f"expected ScalarField or VectorField, got {type(f)}")


def lp_norm(f, p: float, mask: CellMask | None = None) -> float:
    """Midpoint-rule Lp norm over masked cells; p=inf is the masked max of |f|.

    Vector fields contribute their per-cell Euclidean magnitude.
    """
    if p != np.inf and p < 1:
        raise InvalidArgumentError(f"Lp norm needs p >= 1 or p = inf, got {p}")
    grid, vals = _field_values(f)
    mag = np.abs(vals) if vals.ndim == 1 else np.sqrt(np.sum(vals * vals, axis=1))
    if mask is not None:
        mag = mag[np.asarray(mask, dtype=bool)]
    if mag.size == 0:
        return 0.0
    if p == np.inf:
        return float(np.max(mag))
    return float(np.sum(mag**p * grid.dx) ** (1.0 / p))


def masked_integral(grid: Grid, values: np.ndarray, mask: CellMask | None = None) -> float:
    """Midpoint-rule integral of raw cell values over an optional mask."""
    vals = np.asarray(values, dtype=float)
    if mask is not None:
        vals = vals[np.asarray(mask, dtype=bool)]
    return float(np.sum(vals) * grid.dx)


@dataclass(frozen=True)
class TimeSeries:
    """Strictly increasing sample times with one scalar (or array) per sample."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape[0] != t.shape[0]:
            raise InvalidArgumentError("times and values must align on the first axis")
        if t.size >= 2 and np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size


def time_integral(series: TimeSeries) -> float:
    """Trapezoidal rule over the sample times; needs at least two samples."""
    if len(series) < 2:
        raise InsufficientDataError("time integral needs >= 2 samples")
    return float(np.trapezoid(series.values, series.times))


def cumulative_time_integral(series: TimeSeries) -> np.ndarray:
    """Running trapezoidal integral, one value per sample time (starts at 0)."""
    if len(series) < 2:
        raise InsufficientDataError("time integral needs >= 2 samples")
    dt = np.diff(series.times)
    increments = 0.5 * dt * (series.values[1:] + series.values[:-1])
    return np.concatenate([[0.0], np.cumsum(increments)])


def derivative_values(values: np.ndarray, dx: float) -> np.ndarray:
    """Second-order first derivative: centered interior, one-sided at the walls."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return out


def second_derivative_values(values: np.ndarray, dx: float) -> np.ndarray:
    """Second-order second derivative: [1,-2,1] interior, 4-point one-sided at walls."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dx**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dx**2
    return out


def gradient(f):
    """Spatial derivative of a field, same arity (1D: one derivative index)."""
    grid, vals = _field_values(f)
    if vals.ndim == 1:
        return ScalarField(grid, derivative_values(vals, grid.dx))
    out = np.column_stack([derivative_values(vals[:, k], grid.dx) for k in range(vals.shape[1])])
    return VectorField(grid, out)
