"""Explicit finite-volume integrator for the viscous barotropic system.

Mass and momentum are advanced in conservative form with a local
Lax-Friedrichs (Rusanov) convective flux, centered second-order viscous and
pressure-gradient terms, pointwise quadratic drag, and SSP-RK2 in time.
Walls are no-flux for mass (mirror ghost states) and no-slip for momentum
(boundary-cell momentum pinned to zero after every stage). Density ghosts are
homogeneous Neumann, the 1D surrogate for a density that is constant along
each boundary component.

Budget diagnostics evaluate the total-energy inequality and the
Bresch-Desjardins entropy inequality term by term, plus the log-density
gradient identity used to control grad(sqrt(rho)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import EosParams, entropy_H, pressure_prime
from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    InvalidConfigError,
    NumericalBlowupError,
    StiffnessError,
)
from .fields import (
    Grid,
    TimeSeries,
    cumulative_time_integral,
    derivative_values,
    make_grid,
    masked_integral,
    second_derivative_values,
)

DT_UNDERFLOW = 1e-14


@dataclass(frozen=True)
class FluidParams:
    """Viscosity constant eps >= 0, drag r1 >= 0, density floor and the EOS."""

    eos: EosParams
    eps: float = 1e-2
    r1: float = 0.0
    rho_floor: float = 1e-8
    centered_convection: bool = False  # test mode for smooth-order studies only

    def __post_init__(self):
        if self.eps < 0 or self.r1 < 0:
            raise InvalidConfigError("eps and r1 must be nonnegative")
        if not self.rho_floor > 0:
            raise InvalidConfigError("rho_floor must be positive")


@dataclass(frozen=True)
class FluidState:
    """Density and momentum at one time instant."""

    grid: Grid
    t: float
    rho: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        if self.rho.shape != (self.grid.n,) or self.m.shape != (self.grid.n,):
            raise InvalidArgumentError("state arrays must have one value per cell")

    @property
    def u(self) -> np.ndarray:
        return self.m / self.rho

    def mass(self) -> float:
        return masked_integral(self.grid, self.rho)


@dataclass
class SolverStats:
    steps: int = 0
    dt_min: float = np.inf
    dt_max: float = 0.0
    floor_activations: int = 0
    max_floor_fraction: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    """Snapshots at output cadence plus solver statistics."""

    grid: Grid
    params: FluidParams
    times: np.ndarray
    rho: np.ndarray  # (n_snapshots, n_cells)
    m: np.ndarray
    stats: SolverStats

    def __len__(self) -> int:
        return self.times.size

    def state(self, k: int) -> FluidState:
        return FluidState(self.grid, float(self.times[k]), self.rho[k], self.m[k])

    def u(self, k: int) -> np.ndarray:
        return self.m[k] / self.rho[k]

    @property
    def floor_flagged(self) -> bool:
        # Runs where the floor touched more than 1% of cells are unreliable
        # for any diagnostic involving grad(log rho).
        return self.stats.max_floor_fraction > 0.01


def _check_finite(state: FluidState):
    if not (np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.m))):
        raise NumericalBlowupError("non-finite field value", state.t)


def rhs(state: FluidState, params: FluidParams) -> tuple[np.ndarray, np.ndarray]:
    """Tendencies (d_t rho, d_t m) of the viscous system.

    d_t rho = -div m
    d_t m   = -div(rho u (x) u) - grad p + 2 eps div(rho D(u)) - r1 rho |u| u
    """
    _check_finite(state)
    grid, eos = state.grid, params.eos
    rho, m = state.rho, state.m
    dx = grid.dx
    u = m / rho

    # Ghost states: Neumann density, mirrored momentum (impermeable wall).
    rho_ext = np.concatenate([[rho[0]], rho, [rho[-1]]])
    m_ext = np.concatenate([[-m[0]], m, [-m[-1]]])

    u_ext = m_ext / rho_ext
    p_ext = eos.a * rho_ext**eos.gamma  # floor keeps rho positive here
    f_rho = m_ext
    f_m = m_ext * u_ext + p_ext
    flux_rho = 0.5 * (f_rho[:-1] + f_rho[1:])
    flux_m = 0.5 * (f_m[:-1] + f_m[1:])
    if not params.centered_convection:
        speed = np.abs(u_ext) + np.sqrt(eos.gamma * p_ext / rho_ext)
        a_face = np.maximum(speed[:-1], speed[1:])
        flux_rho = flux_rho - 0.5 * a_face * (rho_ext[1:] - rho_ext[:-1])
        flux_m = flux_m - 0.5 * a_face * (m_ext[1:] - m_ext[:-1])

    drho = -(flux_rho[1:] - flux_rho[:-1]) / dx
    dm = -(flux_m[1:] - flux_m[:-1]) / dx

    if params.eps > 0:
        # 2 eps d_x(rho d_x u) with face-centered diffusivity; wall faces see the
        # mirrored velocity, which produces the no-slip drag.
        mu_face = 0.5 * (rho_ext[:-1] + rho_ext[1:])
        visc_flux = mu_face * (u_ext[1:] - u_ext[:-1]) / dx
        dm = dm + 2.0 * params.eps * (visc_flux[1:] - visc_flux[:-1]) / dx

    if params.r1 > 0:
        dm = dm - params.r1 * rho * np.abs(u) * u

    return drho, dm


def stable_dt(state: FluidState, params: FluidParams, cfl: float) -> float:
    """cfl * min over cells of the advective and viscous step restrictions."""
    grid, eos = state.grid, params.eos
    rho = state.rho
    speed = np.abs(state.u) + np.sqrt(eos.gamma * eos.a * rho**eos.gamma / rho)
    dt = grid.dx / np.max(speed) if np.max(speed) > 0 else np.inf
    if params.eps > 0:
        dt = min(dt, grid.dx**2 / (4.0 * params.eps))
    return cfl * dt


def _apply_constraints(rho, m, params: FluidParams, stats: SolverStats | None):
    floored = rho < params.rho_floor
    n_floor = int(np.count_nonzero(floored))
    if n_floor:
        rho = np.maximum(rho, params.rho_floor)
        if stats is not None:
            stats.floor_activations += n_floor
            stats.max_floor_fraction = max(stats.max_floor_fraction, n_floor / rho.size)
    m = m.copy()
    m[0] = 0.0
    m[-1] = 0.0
    return rho, m


def step(
    state: FluidState,
    params: FluidParams,
    cfl: float = 0.8,
    dt: float | None = None,
    stats: SolverStats | None = None,
) -> FluidState:
    """One SSP-RK2 step; reapplies no-slip and the density floor each stage."""
    if not (0 < cfl <= 1):
        raise InvalidArgumentError(f"cfl must lie in (0, 1], got {cfl}")
    if dt is None:
        dt = stable_dt(state, params, cfl)
    if dt < DT_UNDERFLOW:
        raise StiffnessError(f"time step underflow: dt={dt:.3e} at t={state.t:.6g}")

    d_rho1, d_m1 = rhs(state, params)
    rho1 = state.rho + dt * d_rho1
    m1 = state.m + dt * d_m1
    rho1, m1 = _apply_constraints(rho1, m1, params, stats)
    mid = FluidState(state.grid, state.t + dt, rho1, m1)

    d_rho2, d_m2 = rhs(mid, params)
    rho2 = 0.5 * state.rho + 0.5 * (rho1 + dt * d_rho2)
    m2 = 0.5 * state.m + 0.5 * (m1 + dt * d_m2)
    rho2, m2 = _apply_constraints(rho2, m2, params, stats)

    if stats is not None:
        stats.steps += 1
        stats.dt_min = min(stats.dt_min, dt)
        stats.dt_max = max(stats.dt_max, dt)
    return FluidState(state.grid, state.t + dt, rho2, m2)


def simulate(
    init: FluidState,
    params: FluidParams,
    horizon: float,
    cadence: float,
    cfl: float = 0.8,
) -> Trajectory:
    """Integrate to the horizon, storing snapshots at the output cadence.

    Steps are clipped so snapshots land exactly on cadence multiples and the
    final snapshot sits exactly at the horizon.
    """
    if not horizon > 0:
        raise InvalidConfigError(f"horizon must be positive, got {horizon}")
    if not 0 < cadence <= horizon:
        raise InvalidConfigError("cadence must lie in (0, horizon]")

    stats = SolverStats()
    rho0, m0 = _apply_constraints(init.rho.copy(), init.m.copy(), params, None)
    state = FluidState(init.grid, init.t, rho0, m0)
    t_end = init.t + horizon
    times = [state.t]
    rho_snaps = [state.rho]
    m_snaps = [state.m]
    next_snap = init.t + cadence

    while state.t < t_end - 1e-13 * horizon:
        dt = stable_dt(state, params, cfl)
        target = min(next_snap, t_end)
        if state.t + dt > target:
            dt = target - state.t
        state = step(state, params, cfl=cfl, dt=dt, stats=stats)
        if state.t >= target - 1e-13 * horizon:
            state = FluidState(state.grid, target, state.rho, state.m)
            times.append(state.t)
            rho_snaps.append(state.rho)
            m_snaps.append(state.m)
            next_snap = target + cadence

    return Trajectory(
        grid=init.grid,
        params=params,
        times=np.array(times),
        rho=np.stack(rho_snaps),
        m=np.stack(m_snaps),
        stats=stats,
    )


# ---------------------------------------------------------------------------
# Budget diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBudget:
    """Terms of the total-energy inequality, snapshot by snapshot.

    residual(t) = [kinetic + potential](t) + dissipation(t) + damping(t)
                  - [kinetic + potential](0); <= 0 up to scheme error.
    """

    times: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    dissipation: np.ndarray  # cumulative 2 eps int rho |D(u)|^2
    damping: np.ndarray  # cumulative r1 int rho |u|^3
    residual: np.ndarray


@dataclass(frozen=True)
class BDEntropyBudget:
    """Terms of the Bresch-Desjardins entropy inequality.

    The transported quantity is int 0.5 |sqrt(rho) u + 2 eps grad sqrt(rho)|^2
    + int H(rho). In 1D the antisymmetric dissipation vanishes identically.
    residual(t) = LHS(t) - LHS(0); the inequality asks residual <= tol(dx, dt).
    """

    times: np.ndarray
    transported: np.ndarray
    antisym_dissipation: np.ndarray  # cumulative 2 eps int |A|^2 (0 in 1D)
    pressure_dissipation: np.ndarray  # cumulative eps int (p'/rho) |grad rho|^2
    damping: np.ndarray  # cumulative r1 int rho |u|^3
    drag_gradient: np.ndarray  # cumulative eps r1 int |u| u . grad rho
    residual: np.ndarray
    reliable: bool


def _grad_log_rho(traj: Trajectory, k: int) -> np.ndarray:
    return derivative_values(np.log(traj.rho[k]), traj.grid.dx)


def energy_report(traj: Trajectory, params: FluidParams) -> EnergyBudget:
    """Evaluate every term of the energy inequality along a trajectory."""
    if len(traj) < 2:
        raise InsufficientDataError("energy budget needs >= 2 snapshots")
    grid, eos = traj.grid, params.eos
    n = len(traj)
    kinetic = np.empty(n)
    potential = np.empty(n)
    diss_rate = np.empty(n)
    damp_rate = np.empty(n)
    for k in range(n):
        rho, u = traj.rho[k], traj.u(k)
        kinetic[k] = masked_integral(grid, 0.5 * rho * u * u)
        potential[k] = masked_integral(grid, entropy_H(rho, eos))
        du = derivative_values(u, grid.dx)
        diss_rate[k] = 2.0 * params.eps * masked_integral(grid, rho * du * du)
        damp_rate[k] = params.r1 * masked_integral(grid, rho * np.abs(u) ** 3)
    dissipation = cumulative_time_integral(TimeSeries(traj.times, diss_rate))
    damping = cumulative_time_integral(TimeSeries(traj.times, damp_rate))
    total = kinetic + potential + dissipation + damping
    return EnergyBudget(
        times=traj.times,
        kinetic=kinetic,
        potential=potential,
        dissipation=dissipation,
        damping=damping,
        residual=total - total[0],
    )


def bd_entropy_report(traj: Trajectory, params: FluidParams) -> BDEntropyBudget:
    """Evaluate every term of the BD entropy inequality along a trajectory."""
    if len(traj) < 2:
        raise InsufficientDataError("BD budget needs >= 2 snapshots")
    grid, eos, eps = traj.grid, params.eos, params.eps
    n = len(traj)
    transported = np.empty(n)
    press_rate = np.empty(n)
    damp_rate = np.empty(n)
    drag_rate = np.empty(n)
    for k in range(n):
        rho, u = traj.rho[k], traj.u(k)
        glr = _grad_log_rho(traj, k)
        grad_sqrt = 0.5 * np.sqrt(rho) * glr
        carrier = np.sqrt(rho) * u + 2.0 * eps * grad_sqrt
        transported[k] = masked_integral(
            grid, 0.5 * carrier * carrier + entropy_H(rho, eos)
        )
        grad_rho = rho * glr
        press_rate[k] = eps * masked_integral(
            grid, pressure_prime(rho, eos) / rho * grad_rho * grad_rho
        )
        damp_rate[k] = params.r1 * masked_integral(grid, rho * np.abs(u) ** 3)
        drag_rate[k] = eps * params.r1 * masked_integral(grid, np.abs(u) * u * grad_rho)
    pressure_dissipation = cumulative_time_integral(TimeSeries(traj.times, press_rate))
    damping = cumulative_time_integral(TimeSeries(traj.times, damp_rate))
    drag_gradient = cumulative_time_integral(TimeSeries(traj.times, drag_rate))
    antisym = np.zeros(n)  # no antisymmetric gradient part in 1D
    total = transported + antisym + pressure_dissipation + damping + drag_gradient
    return BDEntropyBudget(
        times=traj.times,
        transported=transported,
        antisym_dissipation=antisym,
        pressure_dissipation=pressure_dissipation,
        damping=damping,
        drag_gradient=drag_gradient,
        residual=total - transported[0],
        reliable=not traj.floor_flagged,
    )


def continuity_exact_trajectory(
    n: int,
    n_snapshots: int,
    horizon: float,
    params: FluidParams,
    length: float = 1.0,
    amp: float = 0.3,
    omega: float = 1.7,
) -> Trajectory:
    """Manufactured trajectory satisfying the continuity equation exactly.

    rho = 1 + amp sin(2 pi x/L) cos(omega t) and m = -int_0^x d_t rho keep
    d_t rho + d_x m = 0 in closed form with m = 0 at both walls, which is all
    the log-density gradient identity needs. Used for its refinement ladder.
    """
    grid = make_grid(length, n)
    x = grid.centers
    times = np.linspace(0.0, horizon, n_snapshots)
    k = 2.0 * np.pi / length
    rho = np.stack([1.0 + amp * np.sin(k * x) * np.cos(omega * t) for t in times])
    m = np.stack(
        [amp * omega / k * np.sin(omega * t) * (1.0 - np.cos(k * x)) for t in times]
    )
    return Trajectory(grid, params, times, rho, m, SolverStats())


def lemma1_refinement_order(
    params: FluidParams, ladder=((64, 33), (128, 65), (256, 129), (512, 257)),
    horizon: float = 0.5,
) -> tuple[float, list[float]]:
    """Observed order of the identity residual over a grid+time ladder."""
    errs = []
    for n, snaps in ladder:
        traj = continuity_exact_trajectory(n, snaps, horizon, params)
        res = lemma1_identity_check(traj, params)
        errs.append(float(np.max(np.abs(res.values))))
    ns = [n for n, _ in ladder]
    order = float(-np.polyfit(np.log(ns), np.log(errs), 1)[0])
    return order, errs


def lemma1_identity_check(traj: Trajectory, params: FluidParams) -> TimeSeries:
    """Residual of the log-density gradient identity per interior snapshot pair.

    d/dt int 0.5 rho |grad log rho|^2 + int grad(div u) . grad rho
    + int rho D(u) (grad log rho)^2 = 0 for smooth no-flux solutions of the
    continuity equation. The time derivative is a centered snapshot difference.
    """
    if len(traj) < 3:
        raise InsufficientDataError("identity check needs >= 3 snapshots")
    grid = traj.grid
    n = len(traj)
    gradient_energy = np.empty(n)
    spatial = np.empty(n)
    for k in range(n):
        rho, u = traj.rho[k], traj.u(k)
        glr = _grad_log_rho(traj, k)
        gradient_energy[k] = masked_integral(grid, 0.5 * rho * glr * glr)
        u_xx = second_derivative_values(u, grid.dx)
        grad_rho = derivative_values(rho, grid.dx)
        du = derivative_values(u, grid.dx)
        spatial[k] = masked_integral(grid, u_xx * grad_rho + rho * du * glr * glr)
    dt_pairs = traj.times[2:] - traj.times[:-2]
    ddt = (gradient_energy[2:] - gradient_energy[:-2]) / dt_pairs
    residual = ddt + spatial[1:-1]
    return TimeSeries(traj.times[1:-1], residual)
