"""Kato-type fake boundary layer and its calculus.

The corrector v_bl = xi(d/delta) u_ref lives in a strip of width
delta = c * eps next to the two walls and matches u_ref at the boundary, so
that u_ref - v_bl satisfies the no-slip condition of the viscous problem.
The cutoff is the classical smooth bump, chosen so every derivative check has
a closed-form oracle. The helper profiles

    z = xi(r), ztilde = r xi'(r), zhat = r^2 xi'(r), zcheck = r^2 xi''(r)

with r = d/delta drive the norm-scaling laws (L^p norms ~ eps^{1/p}, sup of
the gradient ~ 1/eps, distance-weighted gradients bounded) and the first- and
second-derivative decompositions of v_bl.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, UnderResolvedLayerError
from .fields import (
    Grid,
    ScalarField,
    boundary_strip,
    derivative_values,
    lp_norm,
    second_derivative_values,
)


@dataclass(frozen=True)
class CutoffFunction:
    """Smooth cutoff xi with xi(0) = 1, support in [0, 1), bounded derivatives."""

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]


def make_cutoff() -> CutoffFunction:
    """The standard bump xi(r) = exp(1 - 1/(1 - r^2)) on [0, 1), 0 beyond."""

    def _parts(r):
        r = np.asarray(r, dtype=float)
        inside = np.abs(r) < 1.0
        safe = np.where(inside, r, 0.0)
        omr2 = 1.0 - safe * safe
        val = np.where(inside, np.exp(1.0 - 1.0 / omr2), 0.0)
        return r, inside, safe, omr2, val

    def value(r):
        return _parts(r)[4]

    def d1(r):
        _, inside, safe, omr2, val = _parts(r)
        g = -2.0 * safe / omr2**2
        return np.where(inside, g * val, 0.0)

    def d2(r):
        _, inside, safe, omr2, val = _parts(r)
        g = -2.0 * safe / omr2**2
        gp = -2.0 / omr2**2 - 8.0 * safe * safe / omr2**3
        return np.where(inside, (g * g + gp) * val, 0.0)

    return CutoffFunction(value, d1, d2)


def validate_cutoff(cutoff: CutoffFunction) -> list[str]:
    """Check the cutoff invariants; returns a list of violation messages."""
    problems = []
    r_in = np.linspace(0.0, 0.999, 2000)
    r_out = np.array([1.0, 1.5, 2.0, 10.0])
    if abs(float(cutoff.value(np.array(0.0))) - 1.0) > 1e-12:
        problems.append("xi(0) != 1")
    if np.any(np.abs(cutoff.value(r_out)) > 0):
        problems.append("xi does not vanish for r >= 1")
    if np.any(np.abs(cutoff.d1(r_out)) > 0) or np.any(np.abs(cutoff.d2(r_out)) > 0):
        problems.append("xi derivatives do not vanish for r >= 1")
    for fn, name in ((cutoff.value, "xi"), (cutoff.d1, "xi'"), (cutoff.d2, "xi''")):
        vals = fn(r_in)
        if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > 1e3:
            problems.append(f"{name} unbounded on [0, 1)")
    return problems


@dataclass(frozen=True)
class LayerFields:
    """Cutoff profiles and the corrector for one layer width delta = c * eps."""

    grid: Grid
    eps: float
    c: float
    delta: float
    z: np.ndarray
    ztilde: np.ndarray  # r xi'(r)
    zhat: np.ndarray  # r^2 xi'(r)
    zcheck: np.ndarray  # r^2 xi''(r)
    xi1_over_delta: np.ndarray  # xi'(r)/delta, the radial derivative of z
    xi2_over_delta2: np.ndarray  # xi''(r)/delta^2
    sign: np.ndarray  # d_x of the distance function: +1 left half, -1 right
    v_bl: np.ndarray
    dt_v_bl: np.ndarray

    @property
    def strip(self) -> np.ndarray:
        return boundary_strip(self.grid, self.delta)

    def grad_v_bl(self, grad_u_ref: np.ndarray, u_ref: np.ndarray) -> np.ndarray:
        """d_x v_bl = z d_x u_ref + (xi'/delta) (d_x d) u_ref, evaluated
        analytically in the cutoff so layer steepness costs no resolution."""
        return self.z * grad_u_ref + self.xi1_over_delta * self.sign * u_ref


def fake_layer(
    grid: Grid,
    u_ref: np.ndarray,
    eps: float,
    c: float = 1.0,
    dt_u_ref: np.ndarray | None = None,
    cutoff: CutoffFunction | None = None,
    disabled: bool = False,
) -> LayerFields:
    """Build the corrector fields for a reference velocity snapshot.

    `disabled` produces an exactly-zero layer (test mode for prefactor
    checks). The strip must contain at least two cells: delta >= 2 dx.
    """
    if eps <= 0 or c <= 0:
        raise InvalidArgumentError("layer needs eps > 0 and c > 0")
    delta = c * eps
    if not disabled and delta < 2.0 * grid.dx:
        raise UnderResolvedLayerError(
            f"layer width {delta:.3e} thinner than 2 cells (dx={grid.dx:.3e})"
        )
    cutoff = cutoff or make_cutoff()
    r = grid.dist / delta
    sign = np.where(grid.centers <= 0.5 * grid.length, 1.0, -1.0)
    if disabled:
        zero = np.zeros(grid.n)
        return LayerFields(
            grid, eps, c, delta, zero, zero, zero, zero, zero, zero, sign, zero, zero
        )
    z = cutoff.value(r)
    xi1 = cutoff.d1(r)
    xi2 = cutoff.d2(r)
    dt_u = np.zeros(grid.n) if dt_u_ref is None else np.asarray(dt_u_ref, dtype=float)
    return LayerFields(
        grid=grid,
        eps=eps,
        c=c,
        delta=delta,
        z=z,
        ztilde=r * xi1,
        zhat=r * r * xi1,
        zcheck=r * r * xi2,
        xi1_over_delta=xi1 / delta,
        xi2_over_delta2=xi2 / delta**2,
        sign=sign,
        v_bl=z * np.asarray(u_ref, dtype=float),
        dt_v_bl=z * dt_u,
    )


# ---------------------------------------------------------------------------
# Norm-scaling study
# ---------------------------------------------------------------------------

PAPER_EXPONENTS = {
    "v_bl_L1": 1.0,
    "v_bl_L2": 0.5,
    "v_bl_L4": 0.25,
    "dt_v_bl_L1": 1.0,
    "dt_v_bl_L2": 0.5,
    "dt_v_bl_L4": 0.25,
    "grad_v_bl_Linf": -1.0,
    "dist_grad_v_bl_Linf": 0.0,
    "dist_grad_v_bl_L2": 0.5,
}


@dataclass(frozen=True)
class ScalingRow:
    name: str
    eps_values: tuple[float, ...]
    norms: tuple[float, ...]
    fitted_exponent: float
    paper_exponent: float


def layer_norm_scalings(
    u_fn: Callable[[np.ndarray], np.ndarray],
    c: float,
    eps_list,
    p_list=(1, 2, 4),
    dt_u_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    length: float = 1.0,
    base_n: int = 256,
    cells_per_strip: int = 8,
) -> list[ScalingRow]:
    """Least-squares slopes of log norm versus log eps for the corrector.

    The grid is refined per eps so the strip always holds >= cells_per_strip
    cells. The velocity profile must carry a nonzero boundary trace for the
    scalings to be meaningful: in 1D it stands in for the tangential trace
    that survives at the wall in higher dimensions.
    """
    eps_list = sorted(float(e) for e in eps_list)
    if eps_list[-1] / eps_list[0] < 8.0:
        raise InvalidArgumentError("eps_list should span at least one decade")
    dt_u_fn = dt_u_fn or (lambda x: np.ones_like(x))

    from .fields import make_grid

    records: dict[str, list[float]] = {name: [] for name in PAPER_EXPONENTS}
    for eps in eps_list:
        delta = c * eps
        n = max(base_n, int(np.ceil(cells_per_strip * length / delta)))
        grid = make_grid(length, n)
        if np.count_nonzero(boundary_strip(grid, delta)) < cells_per_strip:
            raise UnderResolvedLayerError(f"strip under-resolved at eps={eps}")
        u_ref = np.asarray(u_fn(grid.centers), dtype=float)
        layer = fake_layer(grid, u_ref, eps, c, dt_u_ref=dt_u_fn(grid.centers))
        grad_u = derivative_values(u_ref, grid.dx)
        gv = layer.grad_v_bl(grad_u, u_ref)
        for p in p_list:
            records[f"v_bl_L{p}"].append(lp_norm(ScalarField(grid, layer.v_bl), p))
            records[f"dt_v_bl_L{p}"].append(lp_norm(ScalarField(grid, layer.dt_v_bl), p))
        records["grad_v_bl_Linf"].append(lp_norm(ScalarField(grid, gv), np.inf))
        records["dist_grad_v_bl_Linf"].append(
            lp_norm(ScalarField(grid, grid.dist * gv), np.inf)
        )
        records["dist_grad_v_bl_L2"].append(lp_norm(ScalarField(grid, grid.dist * gv), 2))

    rows = []
    log_eps = np.log(np.asarray(eps_list))
    for name, norms in records.items():
        slope = float(np.polyfit(log_eps, np.log(np.asarray(norms)), 1)[0])
        rows.append(
            ScalingRow(name, tuple(eps_list), tuple(norms), slope, PAPER_EXPONENTS[name])
        )
    return rows


# ---------------------------------------------------------------------------
# Layer calculus checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerCalculusReport:
    """Residuals of the discrete-versus-analytic layer derivative splits."""

    ns: tuple[int, ...]
    grad_residuals: tuple[float, ...]  # first derivative vs z/ztilde split
    div_residuals: tuple[float, ...]  # same decomposition, div role in 1D
    second_residuals: tuple[float, ...]  # second derivative vs zcheck split
    grad_order: float
    div_order: float
    second_order: float
    ztilde_identity_gap: float  # max |ztilde/d - xi'/(c eps)|


def layer_calculus_check(
    u_fn: Callable[[np.ndarray], np.ndarray],
    eps: float,
    c: float = 1.0,
    ns=(256, 512, 1024, 2048),
    length: float = 1.0,
    u_dx_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    u_dxx_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LayerCalculusReport:
    """Compare discrete derivatives of v_bl with the cutoff decompositions.

    grad/div split: d_x v_bl = z d_x u + (ztilde/d) (d_x d) u
    second split:   d_xx v_bl = z d_xx u + 2 (xi'/delta)(d_x d) d_x u
                                + (xi''/delta^2) u
    The midline kink of the distance function is excluded from the residual.
    """
    from .fields import make_grid

    delta = c * eps
    grad_res, div_res, second_res = [], [], []
    gap = 0.0
    for n in ns:
        grid = make_grid(length, n)
        if delta < 2 * grid.dx:
            raise UnderResolvedLayerError(f"layer width {delta} unresolved at n={n}")
        x = grid.centers
        u = np.asarray(u_fn(x), dtype=float)
        layer = fake_layer(grid, u, eps, c)
        u_dx = u_dx_fn(x) if u_dx_fn else derivative_values(u, grid.dx)
        u_dxx = u_dxx_fn(x) if u_dxx_fn else second_derivative_values(u, grid.dx)

        # keep away from the distance-function kink at the midline
        away = np.abs(x - 0.5 * length) > 2 * grid.dx

        discrete_grad = derivative_values(layer.v_bl, grid.dx)
        analytic_grad = layer.z * u_dx + layer.ztilde / grid.dist * layer.sign * u
        grad_res.append(float(np.max(np.abs(discrete_grad - analytic_grad)[away])))
        div_res.append(grad_res[-1])  # div v_bl collapses to d_x v_bl in 1D

        discrete_second = second_derivative_values(layer.v_bl, grid.dx)
        analytic_second = (
            layer.z * u_dxx
            + 2.0 * layer.xi1_over_delta * layer.sign * u_dx
            + layer.xi2_over_delta2 * u
        )
        second_res.append(float(np.max(np.abs(discrete_second - analytic_second)[away])))

        gap = max(
            gap,
            float(
                np.max(np.abs(layer.ztilde / grid.dist - layer.xi1_over_delta))
            ),
        )

    def order(vals):
        arr = np.maximum(np.asarray(vals, float), 1e-300)
        if np.max(arr) < 1e-13:
            return np.inf
        return float(-np.polyfit(np.log(np.asarray(ns, float)), np.log(arr), 1)[0])

    return LayerCalculusReport(
        ns=tuple(ns),
        grad_residuals=tuple(grad_res),
        div_residuals=tuple(div_res),
        second_residuals=tuple(second_res),
        grad_order=order(grad_res),
        div_order=order(div_res),
        second_order=order(second_res),
        ztilde_identity_gap=gap,
    )
