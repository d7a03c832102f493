"""Augmented-variable reformulation: v = u + eps grad(log rho), w = eps grad(log rho).

Provides the per-snapshot augmented fields, the symmetric/antisymmetric
velocity-gradient split, weak-formulation residuals with the sqrt(rho)-split
viscous quadratures, the combined entropy budget of the augmented system, the
drag absorption estimate, and the static 2D identity checks behind the
reformulation (the gradient-of-divergence identity and the curl-free property
of rho grad(log rho)).

The sqrt(rho)-split viscous forms for the symmetric and antisymmetric parts
are exposed exactly as displayed, but their sum double-counts the symmetrized
halves, so the assembled weak residuals weight those two splits by 1/2; the
grad(w) and transposed-gradient splits need no correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .eos import entropy_H, pressure, pressure_prime
from .errors import DomainError, InvalidTestFunctionError
from .fields import (
    TimeSeries,
    cumulative_time_integral,
    derivative_values,
    masked_integral,
)
from .patch2d import Patch2D, antisym_part, outer, sym_part
from .solver import FluidParams, FluidState, Trajectory


# ---------------------------------------------------------------------------
# Augmented state (1D pipeline)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugmentedState:
    """Fields of the augmented system at one snapshot.

    grad_sqrt_rho is derived from grad_log_rho by the exact chain rule, so
    w == 2 eps grad(sqrt rho)/sqrt(rho) holds to machine precision.
    """

    t: float
    eps: float
    rho: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    grad_log_rho: np.ndarray
    sqrt_rho: np.ndarray
    grad_sqrt_rho: np.ndarray
    d_of_u: np.ndarray  # D(u) = d_x u in 1D
    s_tensor: np.ndarray  # sqrt(rho) D(u)
    a_tensor: np.ndarray  # sqrt(rho) A(u) = 0 in 1D
    floor_fraction: float


def augment(state: FluidState, eps: float, rho_floor: float | None = None) -> AugmentedState:
    """Build the augmented fields from a density/momentum snapshot."""
    grid = state.grid
    rho = state.rho
    u = state.m / rho
    glr = derivative_values(np.log(rho), grid.dx)
    sqrt_rho = np.sqrt(rho)
    w = eps * glr
    du = derivative_values(u, grid.dx)
    floor_fraction = 0.0
    if rho_floor is not None:
        floor_fraction = float(np.count_nonzero(rho <= rho_floor * (1 + 1e-12))) / rho.size
    return AugmentedState(
        t=state.t,
        eps=eps,
        rho=rho,
        u=u,
        w=w,
        v=u + w,
        grad_log_rho=glr,
        sqrt_rho=sqrt_rho,
        grad_sqrt_rho=0.5 * sqrt_rho * glr,
        d_of_u=du,
        s_tensor=sqrt_rho * du,
        a_tensor=np.zeros_like(du),
        floor_fraction=floor_fraction,
    )


def sym_antisym(grad_u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a velocity-gradient tensor field (..., d, d) into (D, A)."""
    g = np.asarray(grad_u, dtype=float)
    if g.ndim < 2 or g.shape[-1] != g.shape[-2]:
        raise DomainError(f"expected (..., d, d) tensor field, got shape {g.shape}")
    return sym_part(g), antisym_part(g)


# ---------------------------------------------------------------------------
# Static 2D identity checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityLadderReport:
    sizes: tuple[int, ...]
    norms: tuple[float, ...]
    order: float
    residual: np.ndarray  # finest-level residual field, interior-masked values


def _ladder_order(sizes, norms) -> float:
    logs = np.log(np.asarray(norms, dtype=float))
    if np.any(~np.isfinite(logs)):
        return np.inf  # residual hit exact zero somewhere on the ladder
    return float(-np.polyfit(np.log(np.asarray(sizes, float)), logs, 1)[0])


def derivation_identity_residual(
    rho_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    u_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    eps: float,
    sizes: tuple[int, ...] = (24, 48, 96, 192),
) -> IdentityLadderReport:
    """Grid residual of the gradient-of-divergence identity

    2 eps grad(div(rho u)) = 2 eps div(rho u (x) grad log rho
                                       + rho grad log rho (x) u)
                             - 2 eps lap(rho u) + 4 eps div(rho D(u))

    on manufactured fields, with the refinement order of its interior norm.
    """
    norms = []
    residual = None
    for n in sizes:
        patch = Patch2D(n)
        rho = np.asarray(rho_fn(patch.x, patch.y), dtype=float)
        if np.any(rho <= 0):
            raise DomainError("manufactured density must be strictly positive")
        u = np.asarray(u_fn(patch.x, patch.y), dtype=float)
        m = rho[..., None] * u
        glr = patch.grad(np.log(rho))
        lhs = 2.0 * eps * patch.grad(patch.div_vector(m))
        cross = outer(m, glr) + outer(rho[..., None] * glr, u)
        d_of_u = sym_part(patch.grad_vector(u))
        rhs = (
            2.0 * eps * patch.div_tensor(cross)
            - 2.0 * eps * patch.laplacian_vector(m)
            + 4.0 * eps * patch.div_tensor(rho[..., None, None] * d_of_u)
        )
        res = lhs - rhs
        mask = patch.interior()
        vals = np.sqrt(res[..., 0] ** 2 + res[..., 1] ** 2)[mask]
        norms.append(float(np.max(vals)) if vals.size else 0.0)
        residual = vals
    return IdentityLadderReport(tuple(sizes), tuple(norms), _ladder_order(sizes, norms), residual)


def mom2_reduction_residual(
    rho_fn,
    u_fn,
    sizes: tuple[int, ...] = (24, 48, 96, 192),
) -> IdentityLadderReport:
    """Residual of the reduced transported-gradient equation

    -grad(div(rho u)) + div(rho grad log rho (x) u) + div(rho grad^T u) -> 0,

    which isolates the cancellation of div(u (x) grad rho) against
    div(rho u (x) grad log rho) in the derivation of the augmented system.
    """
    norms = []
    residual = None
    for n in sizes:
        patch = Patch2D(n)
        rho = np.asarray(rho_fn(patch.x, patch.y), dtype=float)
        if np.any(rho <= 0):
            raise DomainError("manufactured density must be strictly positive")
        u = np.asarray(u_fn(patch.x, patch.y), dtype=float)
        m = rho[..., None] * u
        glr = patch.grad(np.log(rho))
        grad_t_u = np.swapaxes(patch.grad_vector(u), -1, -2)
        res = (
            -patch.grad(patch.div_vector(m))
            + patch.div_tensor(outer(rho[..., None] * glr, u))
            + patch.div_tensor(rho[..., None, None] * grad_t_u)
        )
        mask = patch.interior()
        vals = np.sqrt(res[..., 0] ** 2 + res[..., 1] ** 2)[mask]
        norms.append(float(np.max(vals)) if vals.size else 0.0)
        residual = vals
    return IdentityLadderReport(tuple(sizes), tuple(norms), _ladder_order(sizes, norms), residual)


def curl_free_check(
    rho_fn,
    sizes: tuple[int, ...] = (24, 48, 96, 192),
) -> IdentityLadderReport:
    """Discrete curl of rho grad(log rho) (= grad rho), with refinement order."""
    norms = []
    residual = None
    for n in sizes:
        patch = Patch2D(n)
        rho = np.asarray(rho_fn(patch.x, patch.y), dtype=float)
        if np.any(rho <= 0):
            raise DomainError("density must be strictly positive")
        f = rho[..., None] * patch.grad(np.log(rho))
        res = patch.curl(f)
        mask = patch.interior()
        vals = np.abs(res[mask])
        norms.append(float(np.max(vals)) if vals.size else 0.0)
        residual = vals
    return IdentityLadderReport(tuple(sizes), tuple(norms), _ladder_order(sizes, norms), residual)


def grad_w_symmetry_gap(rho_fn, n: int = 96) -> float:
    """Max asymmetry of grad(grad log rho); discrete axis operators commute,
    so this is roundoff-level — the formal symmetric-gradient step checked."""
    patch = Patch2D(n)
    rho = np.asarray(rho_fn(patch.x, patch.y), dtype=float)
    if np.any(rho <= 0):
        raise DomainError("density must be strictly positive")
    g = patch.grad_vector(patch.grad(np.log(rho)))
    return float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))


# ---------------------------------------------------------------------------
# Weak-formulation residuals (1D trajectories)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticTestFunction:
    """Smooth scalar test function phi(x, t) with its needed derivatives.

    Must be compactly supported inside the spatial domain; values at both
    endpoint cells are checked against that requirement.
    """

    value: Callable[[np.ndarray, float], np.ndarray]
    dt: Callable[[np.ndarray, float], np.ndarray]
    dx: Callable[[np.ndarray, float], np.ndarray]
    dxx: Callable[[np.ndarray, float], np.ndarray]


def compactly_supported_bump(x_lo: float, x_hi: float, t_scale: float = 1.0) -> AnalyticTestFunction:
    """phi = sin^2(pi (x-lo)/(hi-lo)) * cos(t/t_scale) inside [lo, hi], 0 outside."""
    width = x_hi - x_lo

    def inside(x):
        return (x > x_lo) & (x < x_hi)

    def value(x, t):
        s = np.where(inside(x), np.sin(np.pi * (x - x_lo) / width) ** 2, 0.0)
        return s * np.cos(t / t_scale)

    def dt(x, t):
        s = np.where(inside(x), np.sin(np.pi * (x - x_lo) / width) ** 2, 0.0)
        return -s * np.sin(t / t_scale) / t_scale

    def dx(x, t):
        arg = np.pi * (x - x_lo) / width
        s = np.where(inside(x), 2 * np.sin(arg) * np.cos(arg) * np.pi / width, 0.0)
        return s * np.cos(t / t_scale)

    def dxx(x, t):
        arg = np.pi * (x - x_lo) / width
        s = np.where(inside(x), 2 * np.cos(2 * arg) * (np.pi / width) ** 2, 0.0)
        return s * np.cos(t / t_scale)

    return AnalyticTestFunction(value, dt, dx, dxx)


def _validate_support(phi: AnalyticTestFunction, traj: Trajectory):
    x_edge = traj.grid.centers[[0, -1]]
    for t in (traj.times[0], traj.times[-1], 0.5 * (traj.times[0] + traj.times[-1])):
        if np.max(np.abs(phi.value(x_edge, float(t)))) > 1e-12 or np.max(
            np.abs(phi.dx(x_edge, float(t)))
        ) > 1e-12:
            raise InvalidTestFunctionError(
                "test function must vanish near the domain boundary"
            )


def sqrt_split_viscous(
    eps: float,
    rho: np.ndarray,
    field_vals: np.ndarray,
    sqrt_rho: np.ndarray,
    grad_sqrt_rho: np.ndarray,
    phi_dx: np.ndarray,
    phi_dxx: np.ndarray,
    which: str,
    dx_cell: float,
) -> float:
    """One sqrt(rho)-split viscous quadrature, exactly as displayed (1D).

    which = 'D'  : both index-symmetrized halves (sums to twice the labeled
                   eps int rho D(.) : grad phi);
    which = 'A'  : the antisymmetric combination (identically zero in 1D);
    which = 'w'/'ut' : the single-sided forms for grad w and grad^T u.
    """
    t1 = -eps * np.sum(sqrt_rho * sqrt_rho * field_vals * phi_dxx) * dx_cell
    t2 = -2.0 * eps * np.sum(sqrt_rho * field_vals * grad_sqrt_rho * phi_dx) * dx_cell
    if which == "D":
        return 2.0 * (t1 + t2)
    if which == "A":
        return (t1 + t2) + (-t1 - t2)
    if which in ("w", "ut"):
        return t1 + t2
    raise DomainError(f"unknown split kind {which!r}")


def weak_residual(
    traj: Trajectory,
    params: FluidParams,
    phi: AnalyticTestFunction,
    which: str,
) -> float:
    """Signed residual of one weak-form equation over the whole trajectory.

    which = 'mass' | 'momentum-v' | 'momentum-w'. Space-time quadrature is
    midpoint in space and trapezoid over the stored snapshots.
    """
    if which not in ("mass", "momentum-v", "momentum-w"):
        raise DomainError(f"unknown weak form {which!r}")
    _validate_support(phi, traj)
    grid = traj.grid
    x = grid.centers
    dx_cell = grid.dx
    eps = params.eps
    n = len(traj)
    augmented = [augment(traj.state(k), eps) for k in range(n)]

    rates = np.empty(n)
    for k, a in enumerate(augmented):
        t = float(traj.times[k])
        pv, pt, px, pxx = phi.value(x, t), phi.dt(x, t), phi.dx(x, t), phi.dxx(x, t)
        if which == "mass":
            rates[k] = np.sum(a.rho * pt + a.rho * a.u * px) * dx_cell
        elif which == "momentum-v":
            body = np.sum(a.rho * a.v * pt + a.rho * a.v * a.u * px) * dx_cell
            body += np.sum(pressure(a.rho, params.eos) * px) * dx_cell
            body -= params.r1 * np.sum(a.rho * np.abs(a.u) * a.u * pv) * dx_cell
            # the D/A splits each carry the doubled symmetrized halves
            body -= 0.5 * sqrt_split_viscous(
                eps, a.rho, a.v, a.sqrt_rho, a.grad_sqrt_rho, px, pxx, "D", dx_cell
            )
            body -= 0.5 * sqrt_split_viscous(
                eps, a.rho, a.v, a.sqrt_rho, a.grad_sqrt_rho, px, pxx, "A", dx_cell
            )
            body += sqrt_split_viscous(
                eps, a.rho, a.w, a.sqrt_rho, a.grad_sqrt_rho, px, pxx, "w", dx_cell
            )
            rates[k] = body
        else:
            # sign of the transposed-gradient term follows the strong equation
            # d_t(rho w) + div(rho w (x) u) + eps div(rho grad^T u) = 0
            body = np.sum(a.rho * a.w * pt + a.rho * a.w * a.u * px) * dx_cell
            body += sqrt_split_viscous(
                eps, a.rho, a.u, a.sqrt_rho, a.grad_sqrt_rho, px, pxx, "ut", dx_cell
            )
            rates[k] = body

    integral = float(np.trapezoid(rates, traj.times))

    def carrier(a):
        if which == "mass":
            return a.rho
        return a.rho * (a.v if which == "momentum-v" else a.w)

    t0, tT = float(traj.times[0]), float(traj.times[-1])
    end = np.sum(carrier(augmented[-1]) * phi.value(x, tT)) * dx_cell
    start = np.sum(carrier(augmented[0]) * phi.value(x, t0)) * dx_cell
    return -end + start + integral


# ---------------------------------------------------------------------------
# Combined entropy budget of the augmented system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KEntropyBudget:
    """Terms of the combined (v, w) entropy inequality.

    transported(t) = int [ 0.5 (|sqrt(rho) v|^2 + |2 eps grad sqrt rho|^2)
                           + H(rho) ];
    dissipation terms carry coefficient eps (not 2 eps) and the antisymmetric
    one vanishes in 1D. residual(t) = total(t) - transported(0).
    """

    times: np.ndarray
    transported: np.ndarray
    sym_dissipation: np.ndarray
    antisym_dissipation: np.ndarray
    pressure_dissipation: np.ndarray
    damping: np.ndarray
    drag_gradient: np.ndarray
    residual: np.ndarray
    reliable: bool


def k_entropy_report(traj: Trajectory, params: FluidParams) -> KEntropyBudget:
    """Evaluate every term of the combined entropy inequality."""
    grid, eos, eps = traj.grid, params.eos, params.eps
    n = len(traj)
    transported = np.empty(n)
    sym_rate = np.empty(n)
    press_rate = np.empty(n)
    damp_rate = np.empty(n)
    drag_rate = np.empty(n)
    for k in range(n):
        a = augment(traj.state(k), eps)
        carrier = a.sqrt_rho * a.u + 2.0 * eps * a.grad_sqrt_rho
        transported[k] = masked_integral(
            grid,
            0.5 * (carrier**2 + (2.0 * eps * a.grad_sqrt_rho) ** 2) + entropy_H(a.rho, eos),
        )
        sym_rate[k] = eps * masked_integral(grid, a.s_tensor**2)
        grad_rho = a.rho * a.grad_log_rho
        press_rate[k] = eps * masked_integral(
            grid, pressure_prime(a.rho, eos) / a.rho * grad_rho**2
        )
        damp_rate[k] = params.r1 * masked_integral(grid, a.rho * np.abs(a.u) ** 3)
        drag_rate[k] = eps * params.r1 * masked_integral(grid, np.abs(a.u) * a.u * grad_rho)
    sym = cumulative_time_integral(TimeSeries(traj.times, sym_rate))
    press = cumulative_time_integral(TimeSeries(traj.times, press_rate))
    damp = cumulative_time_integral(TimeSeries(traj.times, damp_rate))
    drag = cumulative_time_integral(TimeSeries(traj.times, drag_rate))
    antisym = np.zeros(n)
    total = transported + sym + antisym + press + damp + drag
    return KEntropyBudget(
        times=traj.times,
        transported=transported,
        sym_dissipation=sym,
        antisym_dissipation=antisym,
        pressure_dissipation=press,
        damping=damp,
        drag_gradient=drag,
        residual=total - transported[0],
        reliable=not traj.floor_flagged,
    )


@dataclass(frozen=True)
class DragAbsorptionReport:
    lhs: float
    rhs: float
    holds: bool


def drag_absorption_check(traj: Trajectory, params: FluidParams) -> DragAbsorptionReport:
    """|eps r1 iint |u| u . grad rho| against the absorption bound

    0.5 eps ||sqrt(rho) D(u)||^2_{L2 t,x} + (r1/6) iint rho + (r1/3) iint rho |u|^3.
    """
    grid, eps, r1 = traj.grid, params.eps, params.r1
    n = len(traj)
    lhs_rate = np.empty(n)
    diss_rate = np.empty(n)
    mass_rate = np.empty(n)
    cube_rate = np.empty(n)
    for k in range(n):
        a = augment(traj.state(k), eps)
        grad_rho = a.rho * a.grad_log_rho
        lhs_rate[k] = eps * r1 * masked_integral(grid, np.abs(a.u) * a.u * grad_rho)
        diss_rate[k] = masked_integral(grid, a.rho * a.d_of_u**2)
        mass_rate[k] = masked_integral(grid, a.rho)
        cube_rate[k] = masked_integral(grid, a.rho * np.abs(a.u) ** 3)
    ts = traj.times
    lhs = abs(float(np.trapezoid(lhs_rate, ts)))
    rhs = (
        0.5 * eps * float(np.trapezoid(diss_rate, ts))
        + r1 / 6.0 * float(np.trapezoid(mass_rate, ts))
        + r1 / 3.0 * float(np.trapezoid(cube_rate, ts))
    )
    return DragAbsorptionReport(lhs, rhs, bool(lhs <= rhs))
