"""Relative-energy functional, remainder terms, condition monitors, Gronwall.

The functional measures the distance between an augmented viscous snapshot
(rho, v, w) and the comparator built from the inviscid reference: vbar =
ubar + delta_tilde grad(log rho_ref) with ubar = u_ref - v_bl, so the
comparator satisfies no-slip. Its evolution is controlled by eleven remainder
terms; each is evaluated exactly as displayed, by midpoint quadrature in
space and trapezoid over the stored snapshots in time, with every structural
prefactor (eps, eps^2, r1, the layer) applied as an outer multiplier so that
switching a mechanism off kills its terms exactly.

Density gradients are sourced from the log-density gradient by the chain rule
(grad rho := rho grad log rho); that convention makes the three-part split of
the pressure cross-term an exact pointwise identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augmented import AugmentedState, augment
from .eos import EosParams, pressure, pressure_prime, pressure_second, relative_entropy
from .errors import InvalidArgumentError
from .euler import EulerReference, SampledReference
from .fields import (
    ScalarField,
    TimeSeries,
    boundary_strip,
    cumulative_time_integral,
    derivative_values,
    lp_norm,
)
from .layer import LayerFields, fake_layer
from .solver import FluidParams, Trajectory

R_NAMES = tuple(f"R{i}" for i in range(1, 12))


@dataclass(frozen=True)
class Comparator:
    """Reference-side comparator fields at one time."""

    t: float
    delta_tilde: float
    ubar: np.ndarray
    wbar: np.ndarray
    vbar: np.ndarray
    dt_ubar: np.ndarray
    grad_ubar: np.ndarray  # d_x ubar (= D(ubar) = div ubar in 1D)
    grad_wbar: np.ndarray
    div_vbar: np.ndarray


def build_comparator(
    ref_sample: SampledReference,
    layer: LayerFields,
    eps: float,
    delta_tilde: float | None = None,
) -> Comparator:
    """Assemble ubar = u_ref - v_bl (exact zeros at the wall cells),
    wbar = delta_tilde grad log rho_ref and vbar = ubar + wbar."""
    dt = eps if delta_tilde is None else delta_tilde
    ubar = ref_sample.u - layer.v_bl
    ubar = ubar.copy()
    ubar[0] = 0.0
    ubar[-1] = 0.0
    wbar = dt * ref_sample.grad_log_rho
    grad_ubar = ref_sample.grad_u - layer.grad_v_bl(ref_sample.grad_u, ref_sample.u)
    grad_wbar = dt * ref_sample.lap_log_rho
    return Comparator(
        t=ref_sample.t,
        delta_tilde=dt,
        ubar=ubar,
        wbar=wbar,
        vbar=ubar + wbar,
        dt_ubar=ref_sample.dt_u - layer.dt_v_bl,
        grad_ubar=grad_ubar,
        grad_wbar=grad_wbar,
        div_vbar=grad_ubar + grad_wbar,
    )


@dataclass(frozen=True)
class SnapshotData:
    """Quadrature inputs at one snapshot: viscous, reference, layer, comparator."""

    t: float
    aug: AugmentedState
    ref: SampledReference
    layer_v_bl: np.ndarray
    layer_dt_v_bl: np.ndarray
    comp: Comparator
    grad_w: np.ndarray  # d_x of the viscous drift w
    grad_v: np.ndarray  # d_x of the augmented velocity v


@dataclass(frozen=True)
class RelativeEnergyInputs:
    """Everything the relative-energy integrals consume, oracle-sharable."""

    dx: float
    eos: EosParams
    eps: float
    r1: float
    times: np.ndarray
    snaps: list[SnapshotData]

    def __len__(self) -> int:
        return len(self.snaps)


def build_inputs(
    traj: Trajectory,
    ref: EulerReference,
    params: FluidParams,
    c: float = 1.0,
    delta_tilde: float | None = None,
    layer_disabled: bool = False,
) -> RelativeEnergyInputs:
    """Sample reference, layer and comparator at every trajectory snapshot."""
    eps = params.eps
    grid = traj.grid
    snaps = []
    for k in range(len(traj)):
        t = float(traj.times[k])
        s = ref.sample(grid, t)
        layer = fake_layer(
            grid,
            s.u,
            eps if eps > 0 else grid.length,  # width irrelevant when disabled
            c,
            dt_u_ref=s.dt_u,
            disabled=layer_disabled or eps <= 0,
        )
        comp = build_comparator(s, layer, eps, delta_tilde)
        aug = augment(traj.state(k), eps, rho_floor=params.rho_floor)
        snaps.append(
            SnapshotData(
                t=t,
                aug=aug,
                ref=s,
                layer_v_bl=layer.v_bl,
                layer_dt_v_bl=layer.dt_v_bl,
                comp=comp,
                grad_w=derivative_values(aug.w, grid.dx),
                grad_v=derivative_values(aug.v, grid.dx),
            )
        )
    return RelativeEnergyInputs(
        dx=grid.dx, eos=params.eos, eps=eps, r1=params.r1, times=traj.times.copy(), snaps=snaps
    )


# ---------------------------------------------------------------------------
# Energy functional
# ---------------------------------------------------------------------------


def energy(
    aug: AugmentedState,
    comp: Comparator,
    rho_ref: np.ndarray,
    eos: EosParams,
    dx: float,
    viscous_history: TimeSeries | None = None,
) -> float:
    """E(t) for one augmented snapshot against its comparator.

    viscous_history holds the spatial integrals rho |D(u) - D(ubar)|^2 at
    earlier snapshot times (antisymmetric parts vanish in 1D); the eps factor
    is applied here.
    """
    inst = 0.5 * aug.rho * ((aug.v - comp.vbar) ** 2 + (aug.w - comp.wbar) ** 2)
    ent = relative_entropy(aug.rho, rho_ref, eos)
    total = float(np.sum(inst + ent)) * dx
    if viscous_history is not None and len(viscous_history) >= 2:
        total += aug.eps * float(
            np.trapezoid(viscous_history.values, viscous_history.times)
        )
    return total


def instantaneous_energy(snap: SnapshotData, eos: EosParams, dx: float) -> float:
    """Kinetic distances plus relative entropy at one snapshot (no history)."""
    return energy(snap.aug, snap.comp, snap.ref.rho, eos, dx)


def viscous_history_rate(snap: SnapshotData, dx: float) -> float:
    """Spatial integral rho (|D(u) - D(ubar)|^2 + |A(u) - A(ubar)|^2); A parts
    vanish identically in 1D."""
    diff = snap.aug.d_of_u - snap.comp.grad_ubar
    return float(np.sum(snap.aug.rho * diff * diff)) * dx


def energy_series(inputs: RelativeEnergyInputs) -> np.ndarray:
    """E(t) at every snapshot, viscous history accumulated by trapezoid."""
    n = len(inputs)
    rates = np.array([viscous_history_rate(s, inputs.dx) for s in inputs.snaps])
    if n >= 2:
        hist = cumulative_time_integral(TimeSeries(inputs.times, rates))
    else:
        hist = np.zeros(n)
    return np.array(
        [
            instantaneous_energy(s, inputs.eos, inputs.dx) + inputs.eps * hist[k]
            for k, s in enumerate(inputs.snaps)
        ]
    )


def initial_energy(inputs: RelativeEnergyInputs) -> float:
    """E(0): the first snapshot with empty history."""
    return instantaneous_energy(inputs.snaps[0], inputs.eos, inputs.dx)


# ---------------------------------------------------------------------------
# Remainder terms
# ---------------------------------------------------------------------------


def _time_integrate(times: np.ndarray, rates: np.ndarray) -> float:
    return float(np.trapezoid(rates, times))


def remainder_terms(inputs: RelativeEnergyInputs) -> tuple[dict, dict]:
    """All eleven remainder terms plus the R5 sub-diagnostics.

    Returns (R, R5_split) with R keyed 'R1'..'R11'. Prefactors multiply the
    assembled time integrals, so zeroed mechanisms kill their terms exactly.
    """
    eps, r1, dx = inputs.eps, inputs.r1, inputs.dx
    times = inputs.times
    n = len(inputs)

    def integral(values: np.ndarray) -> float:
        return float(np.sum(values)) * dx

    rates = {name: np.empty(n) for name in R_NAMES}
    split_names = ("R5_tilde", "R5_1", "R5_2", "R5_3", "R5_4", "R5_extra1", "R5_extra2")
    split_rates = {name: np.empty(n) for name in split_names}

    for k, s in enumerate(inputs.snaps):
        a, c, ref = s.aug, s.comp, s.ref
        rho, u = a.rho, a.u
        du_bar = c.ubar - u  # ubar - u_eps
        dglr = ref.grad_log_rho - a.grad_log_rho  # grad log rho_ref - grad log rho

        rates["R1"][k] = integral(rho * s.layer_dt_v_bl * du_bar)
        rates["R2"][k] = integral(rho * c.dt_ubar * dglr)
        rates["R3"][k] = integral(rho * ref.dt_grad_log_rho * du_bar)
        rates["R4"][k] = integral(rho * ref.dt_grad_log_rho * dglr)
        rates["R5"][k] = integral(
            rho * c.grad_ubar * u * du_bar - rho * ref.grad_u * ref.u * du_bar
        )
        rates["R6"][k] = integral(rho * c.grad_ubar * u * dglr)
        rates["R7"][k] = integral(rho * ref.lap_log_rho * u * du_bar)
        rates["R8"][k] = integral(rho * ref.lap_log_rho * u * dglr)

        # seven viscous integrals; the A-contractions vanish identically in 1D
        d_of_v = s.grad_v  # D(v) = grad v in 1D
        a_of_vbar = np.zeros_like(d_of_v)
        rates["R9"][k] = (
            integral(rho * d_of_v * c.div_vbar)  # rho D(v) : grad vbar
            + integral(rho * a.a_tensor * a_of_vbar)  # rho A(v) : grad vbar
            - integral(rho * s.grad_w * c.div_vbar)  # rho grad w : grad vbar
            + integral(rho * a.d_of_u * c.grad_wbar)  # rho grad^T u : grad wbar
            - 2.0 * integral(a.sqrt_rho * a.s_tensor * c.grad_ubar)
            - 2.0 * integral(a.sqrt_rho * a.a_tensor * a_of_vbar)
            + integral(rho * c.grad_ubar * c.grad_ubar)  # |D(ubar)|^2 + |A(ubar)|^2
        )

        grad_rho = rho * a.grad_log_rho
        grad_rho_ref = ref.rho * ref.grad_log_rho
        p_combo = -(
            -ref.p * ref.div_u
            + pressure(rho, inputs.eos) * c.div_vbar
            - ref.p_prime * (rho - ref.rho) * ref.div_u
        )
        rates["R10"][k] = integral(p_combo)
        coupling1 = integral(
            rho / ref.rho * ref.p_prime * grad_rho_ref * (ref.grad_log_rho - a.grad_log_rho)
        )
        coupling2 = -integral(pressure_prime(rho, inputs.eos) * grad_rho * ref.grad_log_rho)
        rates["R10"][k] += eps * (coupling1 + coupling2)

        rates["R11"][k] = integral(rho * np.abs(a.v - a.w) * (a.v - a.w) * c.vbar)

        # R5 internal splitting; the layer fields are taken as the effective
        # differences u_ref - ubar and grad u_ref - grad ubar so the split is
        # an exact pointwise identity even with the forced boundary trace
        vbl_eff = ref.u - c.ubar
        gv_bl = ref.grad_u - c.grad_ubar
        split_rates["R5_tilde"][k] = integral(rho * c.grad_ubar * (u - c.ubar) * du_bar)
        split_rates["R5_1"][k] = integral(rho * ref.grad_u * vbl_eff * du_bar)
        split_rates["R5_2"][k] = integral(rho * ref.grad_u * (u - ref.u) * du_bar)
        split_rates["R5_3"][k] = -integral(rho * u * gv_bl * du_bar)
        split_rates["R5_4"][k] = -integral(rho * gv_bl * (vbl_eff - ref.u) * du_bar)
        split_rates["R5_extra1"][k] = -integral(rho * du_bar * c.grad_ubar * vbl_eff)
        split_rates["R5_extra2"][k] = -integral(rho * du_bar * ref.u * gv_bl)

    R = {
        "R1": _time_integrate(times, rates["R1"]),
        "R2": eps * _time_integrate(times, rates["R2"]),
        "R3": eps * _time_integrate(times, rates["R3"]),
        "R4": 2.0 * eps**2 * _time_integrate(times, rates["R4"]),
        "R5": _time_integrate(times, rates["R5"]),
        "R6": eps * _time_integrate(times, rates["R6"]),
        "R7": eps * _time_integrate(times, rates["R7"]),
        "R8": 2.0 * eps**2 * _time_integrate(times, rates["R8"]),
        "R9": eps * _time_integrate(times, rates["R9"]),
        "R10": _time_integrate(times, rates["R10"]),
        "R11": r1 * _time_integrate(times, rates["R11"]),
    }
    R5_split = {name: _time_integrate(times, vals) for name, vals in split_rates.items()}
    return R, R5_split


# ---------------------------------------------------------------------------
# Pressure cross-term
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PressureCrossReport:
    """Left-side pressure cross-term and its three-part decomposition."""

    times: np.ndarray
    total_series: np.ndarray
    part1_series: np.ndarray  # rho p'(rho) |grad log rho - grad log rho_ref|^2
    part2_series: np.ndarray
    part3_series: np.ndarray
    total: float
    split_gap: float


def pressure_cross_term(inputs: RelativeEnergyInputs) -> PressureCrossReport:
    """eps iint rho (p' grad log rho - p'_ref grad log rho_ref).(difference),
    decomposed into the nonnegative square, the entropy-combination gradient
    coupling, and the curvature correction."""
    eps, dx = inputs.eps, inputs.dx
    n = len(inputs)
    total = np.empty(n)
    p1 = np.empty(n)
    p2 = np.empty(n)
    p3 = np.empty(n)
    for k, s in enumerate(inputs.snaps):
        a, ref = s.aug, s.ref
        rho = a.rho
        glr, glr_ref = a.grad_log_rho, ref.grad_log_rho
        pp = pressure_prime(rho, inputs.eos)
        pp_ref = ref.p_prime
        ppp_ref = pressure_second(ref.rho, inputs.eos)
        diff = glr - glr_ref

        total[k] = eps * float(np.sum(rho * (pp * glr - pp_ref * glr_ref) * diff)) * dx
        p1[k] = eps * float(np.sum(rho * pp * diff * diff)) * dx
        grad_combo = pp * rho * glr - pp_ref * rho * glr - ppp_ref * (rho - ref.rho) * (
            ref.rho * glr_ref
        )
        p2[k] = eps * float(np.sum(grad_combo * glr_ref)) * dx
        combo = rho * (pp - pp_ref) - ppp_ref * (rho - ref.rho) * ref.rho
        p3[k] = -eps * float(np.sum(combo * glr_ref * glr_ref)) * dx

    gap = float(np.max(np.abs(total - (p1 + p2 + p3)))) if n else 0.0
    return PressureCrossReport(
        times=inputs.times,
        total_series=total,
        part1_series=p1,
        part2_series=p2,
        part3_series=p3,
        total=_time_integrate(inputs.times, total),
        split_gap=gap,
    )


# ---------------------------------------------------------------------------
# Condition monitors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    """Strip-integral monitors behind the convergence hypotheses."""

    strip_width: float
    rho_gamma_strip: float
    lgamma_monitor: float  # (iint_strip rho^gamma)^{1/gamma}
    lgamma_normalized: float  # lgamma_monitor / eps^{1/gamma}
    kinetic_d2_strip: float  # iint_strip rho |u|^2 / d^2
    kato_monitor: float  # eps^{(gamma-1)/gamma} * kinetic_d2_strip
    kato_consequence: float  # eps * kinetic_d2_strip
    sueur_terms: tuple[float, float, float]
    bardos_nguyen_terms: tuple[float, float, float]
    raw_gradient_strip: float  # iint_strip |D(u)|^2, unweighted variant


def condition_monitor(traj: Trajectory, params: FluidParams, c: float = 1.0) -> ConditionReport:
    """Evaluate every monitored strip quantity on a trajectory.

    The dissipation-density symbol in the first sufficient condition is
    realized as 2 eps rho |D(u)|^2, the system's own dissipation; the raw
    integral of |D(u)|^2 over the strip is reported alongside.
    """
    grid, eos, eps = traj.grid, params.eos, params.eps
    width = c * eps
    strip = boundary_strip(grid, width)
    if np.count_nonzero(strip) < 2:
        raise InvalidArgumentError(
            f"condition strip of width {width:.3e} holds fewer than 2 cells"
        )
    n = len(traj)
    rg = np.empty(n)
    kd = np.empty(n)
    nd = np.empty(n)
    sg = np.empty(n)
    rawg = np.empty(n)
    d = grid.dist
    for k in range(n):
        rho, u = traj.rho[k], traj.u(k)
        du = derivative_values(u, grid.dx)
        rg[k] = float(np.sum((rho**eos.gamma)[strip])) * grid.dx
        kd[k] = float(np.sum((rho * u * u / d**2)[strip])) * grid.dx
        nd[k] = float(np.sum((rho**2 * u * u / d**2)[strip])) * grid.dx
        sg[k] = float(np.sum((2.0 * eps * rho * du * du)[strip])) * grid.dx
        rawg[k] = float(np.sum((du * du)[strip])) * grid.dx

    t = traj.times
    rho_gamma = _time_integrate(t, rg)
    kinetic = _time_integrate(t, kd)
    normal = _time_integrate(t, nd)
    s_diss = _time_integrate(t, sg)
    raw = _time_integrate(t, rawg)
    lg = rho_gamma ** (1.0 / eos.gamma)
    return ConditionReport(
        strip_width=width,
        rho_gamma_strip=rho_gamma,
        lgamma_monitor=lg,
        lgamma_normalized=lg / eps ** (1.0 / eos.gamma) if eps > 0 else np.inf,
        kinetic_d2_strip=kinetic,
        kato_monitor=eps ** ((eos.gamma - 1.0) / eos.gamma) * kinetic,
        kato_consequence=eps * kinetic,
        sueur_terms=(eps * kinetic, eps * normal, eps * s_diss),
        bardos_nguyen_terms=(rho_gamma / (eos.gamma - 1.0), eps * kinetic, eps * s_diss),
        raw_gradient_strip=raw,
    )


# ---------------------------------------------------------------------------
# Convergence metric and Gronwall closure
# ---------------------------------------------------------------------------


def convergence_metric(
    traj: Trajectory, ref: EulerReference, eos: EosParams
) -> tuple[np.ndarray, float]:
    """Per-snapshot ||rho - rho_ref||_Lgamma + int rho |u - u_ref|^2, and its sup."""
    grid = traj.grid
    series = np.empty(len(traj))
    for k in range(len(traj)):
        s = ref.sample(grid, float(traj.times[k]))
        diff = ScalarField(grid, traj.rho[k] - s.rho)
        kin = float(np.sum(traj.rho[k] * (traj.u(k) - s.u) ** 2)) * grid.dx
        series[k] = lp_norm(diff, eos.gamma) + kin
    return series, float(np.max(series))


@dataclass(frozen=True)
class GronwallFit:
    C: float
    envelope: float  # E(0) + eta used as the bound's prefactor
    bound_holds: bool


def gronwall_check(
    times: np.ndarray, E_values: np.ndarray, E0: float, eta: float
) -> GronwallFit:
    """Smallest C >= 0 with E(t) <= (E(0) + eta) exp(C (t - t0)) at snapshots."""
    envelope = E0 + eta
    t0 = times[0]
    later = times > t0
    if not np.any(later):
        return GronwallFit(0.0, envelope, True)
    vals = np.asarray(E_values, dtype=float)[later]
    dts = np.asarray(times, dtype=float)[later] - t0
    if envelope <= 0.0:
        if np.all(vals <= 0.0):
            return GronwallFit(0.0, envelope, True)
        return GronwallFit(np.inf, envelope, False)
    ratios = np.log(np.maximum(vals, 1e-300) / envelope) / dts
    c_fit = float(max(0.0, np.max(ratios)))
    holds = bool(np.all(vals <= envelope * np.exp(c_fit * dts) * (1 + 1e-12)))
    return GronwallFit(c_fit, envelope, holds)


def eta_splits(
    R: dict, E_integral: float, sup_div_u_ref: float, sup_grad_u_ref: float
) -> tuple[float, float]:
    """Raw and absorbed aggregations of the remainder terms.

    eta_raw sums |R_i|. The absorbed variant credits the three terms the
    closure argument absorbs into C int E dt (the layer time term, the
    convective difference, the pressure combination) with a bound
    proportional to the measured reference gradients.
    """
    eta_raw = float(sum(abs(v) for v in R.values()))
    c_absorb = sup_div_u_ref + 2.0 * sup_grad_u_ref
    absorbed = 0.0
    for name in ("R1", "R5", "R10"):
        absorbed += min(abs(R[name]), c_absorb * E_integral)
    return eta_raw, float(eta_raw - absorbed)


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelativeEnergyReport:
    times: np.ndarray
    E_series: np.ndarray
    E0: float
    R: dict
    R5_split: dict
    press_cross: PressureCrossReport
    conditions: ConditionReport
    metric_series: np.ndarray
    metric: float
    eta_raw: float
    eta_absorbed: float
    gronwall: GronwallFit
    boundary_residues: dict
    reliable: bool


def boundary_residues(inputs: RelativeEnergyInputs) -> dict:
    """Wall values of the viscous boundary couplings the closure assumes away.

    Reported separately instead of being folded into eta: time series of
    eps (rho D(u) v) and eps (rho D(u) w) at both walls.
    """
    n = len(inputs)
    dv = np.empty((n, 2))
    dw = np.empty((n, 2))
    for k, s in enumerate(inputs.snaps):
        a = s.aug
        flux_v = inputs.eps * a.rho * a.d_of_u * a.v
        flux_w = inputs.eps * a.rho * a.d_of_u * a.w
        dv[k] = flux_v[[0, -1]]
        dw[k] = flux_w[[0, -1]]
    return {
        "visc_times_v": dv,
        "visc_times_w": dw,
        "max_abs": float(max(np.max(np.abs(dv)), np.max(np.abs(dw)))),
    }


def evaluate(
    traj: Trajectory,
    ref: EulerReference,
    params: FluidParams,
    c: float = 1.0,
    delta_tilde: float | None = None,
    layer_disabled: bool = False,
) -> RelativeEnergyReport:
    """Run the whole relative-energy pipeline on one trajectory."""
    inputs = build_inputs(traj, ref, params, c, delta_tilde, layer_disabled)
    E_series = energy_series(inputs)
    E0 = initial_energy(inputs)
    R, R5_split = remainder_terms(inputs)
    press = pressure_cross_term(inputs)
    conditions = condition_monitor(traj, params, c)
    metric_series, metric = convergence_metric(traj, ref, params.eos)
    E_integral = _time_integrate(inputs.times, E_series)
    sup_div = max(float(np.max(np.abs(s.ref.div_u))) for s in inputs.snaps)
    sup_grad = max(float(np.max(np.abs(s.ref.grad_u))) for s in inputs.snaps)
    eta_raw, eta_absorbed = eta_splits(R, E_integral, sup_div, sup_grad)
    fit = gronwall_check(inputs.times, E_series, E0, eta_raw)
    return RelativeEnergyReport(
        times=inputs.times,
        E_series=E_series,
        E0=E0,
        R=R,
        R5_split=R5_split,
        press_cross=press,
        conditions=conditions,
        metric_series=metric_series,
        metric=metric,
        eta_raw=eta_raw,
        eta_absorbed=eta_absorbed,
        gronwall=fit,
        boundary_residues=boundary_residues(inputs),
        reliable=not traj.floor_flagged,
    )
