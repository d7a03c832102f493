"""Strong-solution proxy for the inviscid reference flow.

The reference is produced by the same discrete scheme with eps = 0 and r1 = 0
on a grid refined by a factor R relative to the viscous grid, guarded by a
gradient monitor that aborts well before steepening. Sampling aggregates
fine-grid fields conservatively (R-to-1 cell averages) and interpolates
linearly in time; every derivative the remainder terms consume is computed on
the fine grid first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eos import EosParams, entropy_H, entropy_H_prime, pressure, pressure_prime
from .errors import HorizonTooLongError, InvalidConfigError, InvalidDataError, RangeError
from .fields import Grid, derivative_values, make_grid
from .solver import FluidParams, FluidState, simulate

GRADIENT_TRIP_FACTOR = 50.0
_TRIP_FLOOR = 1e-8  # absolute floor so a resting state never trips on roundoff


@dataclass(frozen=True)
class WellPreparedData:
    """Analytic initial profiles shared by the whole viscosity family.

    rho0(x) = background + rho_amp * sin(pi * rho_mode * x / L)
    u0(x)   = u_amp * sin(pi * u_mode * x / L)

    u0 vanishes at both endpoints for any integer mode; density positivity
    requires |rho_amp| < background. The default velocity mode rarefies both
    walls, which keeps the boundary-strip density monitors decaying through
    the viscosity sweep.
    """

    background: float = 1.0
    rho_amp: float = 0.1
    rho_mode: int = 1
    u_amp: float = 0.1
    u_mode: int = 2

    def __post_init__(self):
        if self.background - abs(self.rho_amp) <= 0:
            raise InvalidDataError(
                f"density profile touches zero: background {self.background}, "
                f"amplitude {self.rho_amp}"
            )

    def rho0(self, x: np.ndarray, length: float) -> np.ndarray:
        return self.background + self.rho_amp * np.sin(np.pi * self.rho_mode * x / length)

    def u0(self, x: np.ndarray, length: float) -> np.ndarray:
        return self.u_amp * np.sin(np.pi * self.u_mode * x / length)


def well_prepared_init(grid: Grid, spec: WellPreparedData) -> tuple[np.ndarray, np.ndarray]:
    """Sample the shared analytic datum on a grid; returns (rho0, u0)."""
    rho0 = spec.rho0(grid.centers, grid.length)
    u0 = spec.u0(grid.centers, grid.length)
    if np.min(rho0) <= 0:
        raise InvalidDataError("sampled initial density is not strictly positive")
    return rho0, u0


@dataclass(frozen=True)
class SampledReference:
    """All reference fields on the viscous grid at one time instant."""

    t: float
    rho: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray  # d_x u^E (= div u^E = D(u^E) in 1D)
    grad_log_rho: np.ndarray
    lap_log_rho: np.ndarray  # d_xx log rho^E
    dt_u: np.ndarray
    dt_grad_log_rho: np.ndarray
    p: np.ndarray
    p_prime: np.ndarray
    h_prime: np.ndarray

    @property
    def div_u(self) -> np.ndarray:
        return self.grad_u


@dataclass(frozen=True)
class SmoothnessReport:
    max_grad_u: float
    max_grad_log_rho: float
    tripped: bool


@dataclass(frozen=True)
class EulerReference:
    """Inviscid reference trajectory on the refined grid."""

    coarse_grid: Grid
    fine_grid: Grid
    refinement: int
    eos: EosParams
    times: np.ndarray
    rho: np.ndarray  # (n_snapshots, n_fine)
    u: np.ndarray
    dt_u: np.ndarray = field(repr=False, default=None)
    dt_grad_log_rho: np.ndarray = field(repr=False, default=None)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def _aggregate(self, fine_vals: np.ndarray) -> np.ndarray:
        return fine_vals.reshape(self.coarse_grid.n, self.refinement).mean(axis=1)

    def _bracket(self, t: float) -> tuple[int, float]:
        times = self.times
        slop = 1e-12 * max(self.horizon, 1.0)
        if t < times[0] - slop or t > times[-1] + slop:
            raise RangeError(
                f"t={t:.6g} outside stored horizon [{times[0]:.6g}, {times[-1]:.6g}]"
            )
        t = min(max(t, times[0]), times[-1])
        k = int(np.searchsorted(times, t, side="right") - 1)
        k = min(k, len(times) - 2)
        theta = (t - times[k]) / (times[k + 1] - times[k])
        return k, theta

    def sample(self, grid: Grid, t: float) -> SampledReference:
        """Reference fields on the viscous grid at time t.

        Linear interpolation in time, conservative R-to-1 aggregation in
        space; spatial derivatives are formed on the fine grid first.
        """
        if grid.n != self.coarse_grid.n:
            raise InvalidConfigError("sampling grid does not match the reference layout")
        k, theta = self._bracket(t)
        dx = self.fine_grid.dx

        def lerp(series):
            return (1.0 - theta) * series[k] + theta * series[k + 1]

        rho_f = lerp(self.rho)
        u_f = lerp(self.u)
        dt_u_f = lerp(self.dt_u)
        dt_glr_f = lerp(self.dt_grad_log_rho)
        grad_u_f = derivative_values(u_f, dx)
        glr_f = derivative_values(np.log(rho_f), dx)
        lap_f = derivative_values(glr_f, dx)

        rho_c = self._aggregate(rho_f)
        return SampledReference(
            t=t,
            rho=rho_c,
            u=self._aggregate(u_f),
            grad_u=self._aggregate(grad_u_f),
            grad_log_rho=self._aggregate(glr_f),
            lap_log_rho=self._aggregate(lap_f),
            dt_u=self._aggregate(dt_u_f),
            dt_grad_log_rho=self._aggregate(dt_glr_f),
            p=pressure(rho_c, self.eos),
            p_prime=pressure_prime(rho_c, self.eos),
            h_prime=entropy_H_prime(rho_c, self.eos),
        )

    def smoothness_monitor(self) -> SmoothnessReport:
        """Sup of |grad u^E| and |grad log rho^E|; tripped on 50x growth."""
        dx = self.fine_grid.dx
        gu = np.array([np.max(np.abs(derivative_values(u, dx))) for u in self.u])
        gl = np.array(
            [np.max(np.abs(derivative_values(np.log(r), dx))) for r in self.rho]
        )
        tripped = bool(
            np.max(gu) > GRADIENT_TRIP_FACTOR * max(gu[0], _TRIP_FLOOR)
            or np.max(gl) > GRADIENT_TRIP_FACTOR * max(gl[0], _TRIP_FLOOR)
        )
        return SmoothnessReport(float(np.max(gu)), float(np.max(gl)), tripped)


def _time_derivative_series(times: np.ndarray, series: np.ndarray) -> np.ndarray:
    """Centered differences over snapshots, one-sided second order at the ends."""
    out = np.empty_like(series)
    dt = times[1] - times[0]  # snapshots land on a uniform cadence
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt)
    out[-1] = (3.0 * series[-1] - 4.0 * series[-2] + series[-3]) / (2.0 * dt)
    return out


def solve_reference(
    grid: Grid,
    datum: WellPreparedData,
    eos: EosParams,
    horizon: float,
    refinement: int = 4,
    n_snapshots: int = 129,
    cfl: float = 0.8,
) -> EulerReference:
    """Run the inviscid scheme on the R-refined grid and store its history.

    Raises HorizonTooLongError when the gradient monitor trips, naming the
    first snapshot time at which steepening exceeded 50x the initial level.
    """
    if refinement < 4:
        raise InvalidConfigError(f"refinement factor must be >= 4, got {refinement}")
    if not horizon > 0:
        raise InvalidConfigError("horizon must be positive")
    fine = make_grid(grid.length, grid.n * refinement)
    rho0, u0 = well_prepared_init(fine, datum)
    init = FluidState(fine, 0.0, rho0, rho0 * u0)
    params = FluidParams(eos=eos, eps=0.0, r1=0.0, rho_floor=1e-10 * float(np.mean(rho0)))
    cadence = horizon / (n_snapshots - 1)
    traj = simulate(init, params, horizon, cadence, cfl=cfl)

    if np.min(traj.rho) <= 0:
        raise InvalidDataError("reference density lost positivity")

    # gradient monitor, snapshot by snapshot
    dx = fine.dx
    gu0 = max(np.max(np.abs(derivative_values(traj.u(0), dx))), _TRIP_FLOOR)
    gl0 = max(np.max(np.abs(derivative_values(np.log(traj.rho[0]), dx))), _TRIP_FLOOR)
    for k in range(len(traj)):
        gu = np.max(np.abs(derivative_values(traj.u(k), dx)))
        gl = np.max(np.abs(derivative_values(np.log(traj.rho[k]), dx)))
        if gu > GRADIENT_TRIP_FACTOR * gu0 or gl > GRADIENT_TRIP_FACTOR * gl0:
            raise HorizonTooLongError(
                "reference flow steepened beyond the smoothness monitor",
                float(traj.times[k]),
            )

    u_series = traj.m / traj.rho
    glr_series = np.stack(
        [derivative_values(np.log(traj.rho[k]), dx) for k in range(len(traj))]
    )
    return EulerReference(
        coarse_grid=grid,
        fine_grid=fine,
        refinement=refinement,
        eos=eos,
        times=traj.times,
        rho=traj.rho,
        u=u_series,
        dt_u=_time_derivative_series(traj.times, u_series),
        dt_grad_log_rho=_time_derivative_series(traj.times, glr_series),
    )


def reference_identity_residual(ref: EulerReference) -> float:
    """Max over snapshots of |p(rho^E) - (H'(rho^E) rho^E - H(rho^E))|."""
    worst = 0.0
    for rho in ref.rho:
        lhs = pressure(rho, ref.eos)
        rhs = entropy_H_prime(rho, ref.eos) * rho - entropy_H(rho, ref.eos)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def constant_reference(
    grid: Grid,
    eos: EosParams,
    horizon: float,
    rho_value: float = 1.0,
    refinement: int = 4,
    n_snapshots: int = 9,
) -> EulerReference:
    """Equilibrium reference (constant density, still fluid); handy in tests."""
    fine = make_grid(grid.length, grid.n * refinement)
    times = np.linspace(0.0, horizon, n_snapshots)
    rho = np.full((n_snapshots, fine.n), rho_value)
    u = np.zeros((n_snapshots, fine.n))
    zeros = np.zeros_like(u)
    return EulerReference(
        coarse_grid=grid,
        fine_grid=fine,
        refinement=refinement,
        eos=eos,
        times=times,
        rho=rho,
        u=u,
        dt_u=zeros,
        dt_grad_log_rho=zeros,
    )
