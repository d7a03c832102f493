"""Run configuration, single-run and sweep orchestration, and the check suite.

Configs are TOML; outputs are UTF-8 CSV with LF endings and 17-significant-
digit floats, written atomically, plus a JSON report per run. All runs are
deterministic for a fixed config, so sweep rows can be reproduced one by one.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .augmented import (
    compactly_supported_bump,
    curl_free_check,
    derivation_identity_residual,
    drag_absorption_check,
    grad_w_symmetry_gap,
    k_entropy_report,
    mom2_reduction_residual,
    weak_residual,
)
from .eos import (
    EosParams,
    entropy_H,
    entropy_H_prime,
    entropy_H_second,
    pressure,
    relative_entropy,
)
from .errors import InvalidConfigError, VllError
from .euler import WellPreparedData, solve_reference, well_prepared_init
from .fields import make_grid
from .layer import layer_calculus_check, make_cutoff, validate_cutoff
from .relative_energy import evaluate
from .solver import (
    FluidParams,
    FluidState,
    bd_entropy_report,
    energy_report,
    simulate,
)

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RunConfig:
    length: float = 1.0
    n: int = 1024
    a: float = 1.0
    gamma: float = 1.4
    epsilon: float = 1e-2
    r1: float = 1e-2
    layer_c: float = 1.0
    delta_tilde: float | None = None  # None means delta_tilde = epsilon
    horizon: float = 0.2
    cadence: float = 0.0125
    datum: WellPreparedData = field(default_factory=WellPreparedData)
    refinement: int = 4
    ref_snapshots: int = 65
    cfl: float = 0.8
    rho_floor_scale: float = 1e-8
    seed: int = 0

    def validate(self):
        checks = [
            (self.length > 0, "grid.length must be positive"),
            (self.n >= 4, "grid.n must be at least 4"),
            (self.a > 0, "eos.a must be positive"),
            (self.gamma > 1, "eos.gamma must exceed 1"),
            (self.epsilon >= 0, "physics.epsilon must be nonnegative"),
            (self.r1 >= 0, "physics.r1 must be nonnegative"),
            (self.layer_c > 0, "layer.c must be positive"),
            (self.horizon > 0, "time.horizon must be positive"),
            (0 < self.cadence <= self.horizon, "time.cadence must lie in (0, horizon]"),
            (self.refinement >= 4, "reference.refinement must be at least 4"),
            (self.ref_snapshots >= 3, "reference.snapshots must be at least 3"),
            (0 < self.cfl <= 1, "numerics.cfl must lie in (0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfigError(msg)
        return self

    @property
    def eos(self) -> EosParams:
        return EosParams(a=self.a, gamma=self.gamma)

    def fluid_params(self, rho0_mean: float | None = None) -> FluidParams:
        floor = self.rho_floor_scale * (rho0_mean or self.datum.background)
        return FluidParams(eos=self.eos, eps=self.epsilon, r1=self.r1, rho_floor=floor)


def load_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    grid = raw.get("grid", {})
    eos = raw.get("eos", {})
    phys = raw.get("physics", {})
    layer = raw.get("layer", {})
    time_sec = raw.get("time", {})
    datum = raw.get("datum", {})
    ref = raw.get("reference", {})
    num = raw.get("numerics", {})
    try:
        cfg = RunConfig(
            length=float(grid.get("length", 1.0)),
            n=int(grid.get("n", 1024)),
            a=float(eos.get("a", 1.0)),
            gamma=float(eos.get("gamma", 1.4)),
            epsilon=float(phys.get("epsilon", 1e-2)),
            r1=float(phys.get("r1", 1e-2)),
            layer_c=float(layer.get("c", 1.0)),
            delta_tilde=(
                None
                if layer.get("delta_tilde", "epsilon") == "epsilon"
                else float(layer["delta_tilde"])
            ),
            horizon=float(time_sec.get("horizon", 0.2)),
            cadence=float(time_sec.get("cadence", 0.0125)),
            datum=WellPreparedData(
                background=float(datum.get("background", 1.0)),
                rho_amp=float(datum.get("rho_amp", 0.1)),
                rho_mode=int(datum.get("rho_mode", 1)),
                u_amp=float(datum.get("u_amp", 0.1)),
                u_mode=int(datum.get("u_mode", 1)),
            ),
            refinement=int(ref.get("refinement", 4)),
            ref_snapshots=int(ref.get("snapshots", 65)),
            cfl=float(num.get("cfl", 0.8)),
            rho_floor_scale=float(num.get("rho_floor_scale", 1e-8)),
            seed=int(num.get("seed", 0)),
        )
    except (TypeError, ValueError) as err:
        raise InvalidConfigError(f"malformed config value: {err}") from err
    return cfg.validate()


# ---------------------------------------------------------------------------
# Deterministic file output
# ---------------------------------------------------------------------------


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(FLOAT_FMT % v if isinstance(v, float) else str(v) for v in row)
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _listify(arr) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    config: RunConfig
    report: dict
    floor_flagged: bool
    monitor_tripped: bool

    @property
    def ok(self) -> bool:
        return not (self.floor_flagged or self.monitor_tripped)


def run_single(config: RunConfig, out_dir: str | None = None) -> RunResult:
    """Integrate, diagnose and (optionally) dump one full run."""
    config.validate()
    grid = make_grid(config.length, config.n)
    rho0, u0 = well_prepared_init(grid, config.datum)
    params = config.fluid_params(rho0_mean=float(np.mean(rho0)))
    init = FluidState(grid, 0.0, rho0, rho0 * u0)
    traj = simulate(init, params, config.horizon, config.cadence, cfl=config.cfl)

    ref = solve_reference(
        grid,
        config.datum,
        config.eos,
        config.horizon,
        refinement=config.refinement,
        n_snapshots=config.ref_snapshots,
        cfl=config.cfl,
    )
    monitor = ref.smoothness_monitor()

    energy = energy_report(traj, params)
    bd = bd_entropy_report(traj, params)
    kent = k_entropy_report(traj, params)
    rel = evaluate(
        traj, ref, params, c=config.layer_c, delta_tilde=config.delta_tilde
    )

    report = {
        "config": {
            "length": config.length,
            "n": config.n,
            "a": config.a,
            "gamma": config.gamma,
            "epsilon": config.epsilon,
            "r1": config.r1,
            "layer_c": config.layer_c,
            "horizon": config.horizon,
            "cadence": config.cadence,
            "refinement": config.refinement,
            "seed": config.seed,
        },
        "E_series": {"times": _listify(rel.times), "values": _listify(rel.E_series)},
        "E0": rel.E0,
        "R": {name: float(val) for name, val in sorted(rel.R.items())},
        "R5_split": {name: float(val) for name, val in sorted(rel.R5_split.items())},
        "press_cross": {
            "total": rel.press_cross.total,
            "series": _listify(rel.press_cross.total_series),
            "part1": _listify(rel.press_cross.part1_series),
            "part2": _listify(rel.press_cross.part2_series),
            "part3": _listify(rel.press_cross.part3_series),
            "split_gap": rel.press_cross.split_gap,
        },
        "conditions": {
            "strip_width": rel.conditions.strip_width,
            "lgamma_monitor": rel.conditions.lgamma_monitor,
            "lgamma_normalized": rel.conditions.lgamma_normalized,
            "kinetic_d2_strip": rel.conditions.kinetic_d2_strip,
            "kato_monitor": rel.conditions.kato_monitor,
            "kato_consequence": rel.conditions.kato_consequence,
            "sueur_terms": list(rel.conditions.sueur_terms),
            "bardos_nguyen_terms": list(rel.conditions.bardos_nguyen_terms),
            "raw_gradient_strip": rel.conditions.raw_gradient_strip,
        },
        "gronwall": {
            "C": rel.gronwall.C,
            "envelope": rel.gronwall.envelope,
            "bound_holds": rel.gronwall.bound_holds,
        },
        "metric": {"sup": rel.metric, "series": _listify(rel.metric_series)},
        "eta": {"raw": rel.eta_raw, "absorbed": rel.eta_absorbed},
        "boundary_residues_max": rel.boundary_residues["max_abs"],
        "budgets": {
            "energy_residual_max": float(np.max(np.abs(energy.residual))),
            "bd_residual_max": float(np.max(bd.residual)),
            "k_residual_max": float(np.max(np.abs(kent.residual))),
        },
        "flags": {
            "floor": traj.floor_flagged,
            "monitor_tripped": monitor.tripped,
        },
    }

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        x = grid.centers
        for k in range(len(traj)):
            t = float(traj.times[k])
            u = traj.u(k)
            rows = [
                (t, float(x[i]), float(traj.rho[k][i]), float(traj.m[k][i]), float(u[i]))
                for i in range(grid.n)
            ]
            write_csv(
                os.path.join(out_dir, f"snap_{k}.csv"), ["t", "x", "rho", "m", "u"], rows
            )
            s = ref.sample(grid, t)
            rows_ref = [
                (t, float(x[i]), float(s.rho[i]), float(s.rho[i] * s.u[i]), float(s.u[i]))
                for i in range(grid.n)
            ]
            write_csv(
                os.path.join(out_dir, f"snap_{k}_ref.csv"),
                ["t", "x", "rho", "m", "u"],
                rows_ref,
            )
        budget_rows = [
            (
                float(traj.times[k]),
                float(energy.kinetic[k]),
                float(energy.potential[k]),
                float(energy.dissipation[k]),
                float(energy.damping[k]),
                float(energy.residual[k]),
                float(bd.transported[k]),
                float(bd.pressure_dissipation[k]),
                float(bd.residual[k]),
                float(kent.transported[k]),
                float(kent.residual[k]),
            )
            for k in range(len(traj))
        ]
        write_csv(
            os.path.join(out_dir, "budgets.csv"),
            [
                "t", "kinetic", "potential", "dissipation", "damping", "residual_ee",
                "bd_transported", "bd_pressure_dissipation", "bd_residual",
                "k_transported", "k_residual",
            ],
            budget_rows,
        )
        flat_rows = [
            (
                float(rel.times[k]),
                float(rel.E_series[k]),
                float(rel.metric_series[k]),
                float(rel.press_cross.total_series[k]),
            )
            for k in range(len(rel.times))
        ]
        write_csv(
            os.path.join(out_dir, "report.csv"),
            ["t", "E", "metric", "press_cross"],
            flat_rows,
        )
        write_json(os.path.join(out_dir, "report.json"), report)

    return RunResult(
        config=config,
        report=report,
        floor_flagged=traj.floor_flagged,
        monitor_tripped=monitor.tripped,
    )


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

STRIP_CELLS = 16  # per-eps refinement keeps at least this many cells in the strip


def refine_for_eps(config: RunConfig, eps: float) -> int:
    return max(config.n, int(np.ceil(STRIP_CELLS * config.length / (config.layer_c * eps))))


def config_for_eps(config: RunConfig, eps: float, alpha: float, kappa: float) -> RunConfig:
    return replace(
        config, epsilon=eps, r1=kappa * eps**alpha, n=refine_for_eps(config, eps)
    )


@dataclass
class SweepRow:
    epsilon: float
    r1: float
    n: int
    metric: float
    E0: float
    ET: float
    kato_monitor: float
    lgamma_monitor: float
    lgamma_normalized: float
    gronwall_C: float
    floor_flagged: bool


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metric_slope: float
    gronwall_stable: bool

    def metrics(self) -> np.ndarray:
        return np.array([r.metric for r in self.rows])


def _sweep_entry(args) -> dict:
    config, eps, alpha, kappa = args
    cfg = config_for_eps(config, eps, alpha, kappa)
    result = run_single(cfg, out_dir=None)
    rep = result.report
    return {
        "epsilon": eps,
        "r1": cfg.r1,
        "n": cfg.n,
        "metric": rep["metric"]["sup"],
        "E0": rep["E0"],
        "ET": rep["E_series"]["values"][-1],
        "kato_monitor": rep["conditions"]["kato_monitor"],
        "lgamma_monitor": rep["conditions"]["lgamma_monitor"],
        "lgamma_normalized": rep["conditions"]["lgamma_normalized"],
        "gronwall_C": rep["gronwall"]["C"],
        "floor_flagged": result.floor_flagged,
    }


def max_workers(jobs: int | None) -> int:
    cap = os.environ.get("VLL_THREADS")
    cap = int(cap) if cap else os.cpu_count() or 1
    return max(1, min(jobs or 1, cap))


def sweep(
    config: RunConfig,
    eps_list,
    alpha: float = 1.0,
    kappa: float = 1.0,
    out_dir: str | None = None,
    jobs: int | None = None,
) -> SweepResult:
    """Independent runs across the viscosity family, rows by eps descending."""
    eps_list = [float(e) for e in eps_list]
    if sorted(eps_list, reverse=True) != eps_list:
        raise InvalidConfigError("epsilon list must be strictly decreasing")
    if len(set(eps_list)) != len(eps_list):
        raise InvalidConfigError("epsilon list must not repeat values")
    tasks = [(config, eps, alpha, kappa) for eps in eps_list]
    workers = max_workers(jobs)
    dicts: list[dict] = []
    failure: BaseException | None = None
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_entry, t) for t in tasks]
            for fut in futures:
                try:
                    dicts.append(fut.result())
                except VllError as err:
                    failure = err
                    break
    else:
        for t in tasks:
            try:
                dicts.append(_sweep_entry(t))
            except VllError as err:
                failure = err
                break
    rows = [SweepRow(**d) for d in dicts]
    if failure is not None:
        # preserve whatever completed, then abort
        if out_dir is not None and rows:
            _write_sweep_outputs(out_dir, rows, np.nan, False)
        raise failure

    slope = np.nan
    if len(rows) >= 2 and all(r.metric > 0 for r in rows):
        slope = float(
            np.polyfit(
                np.log([r.epsilon for r in rows]), np.log([r.metric for r in rows]), 1
            )[0]
        )
    cs = [r.gronwall_C for r in rows]
    c_lo, c_hi = min(cs), max(cs)
    stable = bool(c_hi <= 2.0 * c_lo) if c_lo > 1e-12 else bool(c_hi < 1e-6 or c_hi <= 2.0 * max(c_lo, 1e-12))

    result = SweepResult(rows=rows, metric_slope=slope, gronwall_stable=stable)
    if out_dir is not None:
        _write_sweep_outputs(out_dir, rows, slope, stable)
    return result


def _write_sweep_outputs(out_dir: str, rows: list[SweepRow], slope: float, stable: bool):
    os.makedirs(out_dir, exist_ok=True)
    write_csv(
        os.path.join(out_dir, "sweep.csv"),
        [
            "epsilon", "r1", "metric", "E0", "ET",
            "kato_monitor", "lgamma_monitor", "gronwall_C",
        ],
        [
            (
                r.epsilon, r.r1, r.metric, r.E0, r.ET,
                r.kato_monitor, r.lgamma_monitor, r.gronwall_C,
            )
            for r in rows
        ],
    )
    write_json(
        os.path.join(out_dir, "sweep_summary.json"),
        {
            "metric_slope": None if np.isnan(slope) else slope,
            "gronwall_stable": stable,
            "epsilons": [r.epsilon for r in rows],
            "metrics": [r.metric for r in rows],
        },
    )


# ---------------------------------------------------------------------------
# Check suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    detail: str


def _rho_trig(x, y):
    return 2.0 + np.sin(x) * np.sin(y)


def _u_trig(x, y):
    return np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)], axis=-1)


def check_suite(config: RunConfig | None = None, cutoff=None) -> list[CheckItem]:
    """Identity checks, entropy properties and small budget ladders."""
    config = (config or RunConfig()).validate()
    eos = config.eos
    items: list[CheckItem] = []

    def add(name, passed, detail):
        items.append(CheckItem(name, bool(passed), detail))

    # cutoff invariants
    problems = validate_cutoff(cutoff or make_cutoff())
    add("cutoff_invariants", not problems, "; ".join(problems) or "ok")

    # entropy algebra: rho H' - H - p = 0 to 1e-14 relative
    worst = 0.0
    rho_samples = np.geomspace(1e-3, 1e3, 1000)
    for a_val, g_val in ((1.0, 1.4), (1.0, 2.0), (2.0, 5.0 / 3.0)):
        eos_t = EosParams(a=a_val, gamma=g_val)
        resid = np.abs(
            rho_samples * entropy_H_prime(rho_samples, eos_t)
            - entropy_H(rho_samples, eos_t)
            - pressure(rho_samples, eos_t)
        )
        worst = max(worst, float(np.max(resid / pressure(rho_samples, eos_t))))
    add("entropy_algebra", worst <= 1e-14, f"max relative residual {worst:.3e}")

    # relative-entropy coercivity and local quadratic behavior
    rng = np.random.default_rng(config.seed)
    r = rng.uniform(0.5, 2.0, 1000)
    rho = np.abs(r + rng.uniform(-0.45, 3.0, 1000))
    vals = relative_entropy(rho, r, eos)
    diff = np.abs(rho - r)
    floor_split = np.where(diff < 1.0, diff**2, diff**eos.gamma)
    mask = floor_split > 1e-30
    kappa = float(np.min(vals[mask] / floor_split[mask]))
    add("relative_entropy_coercivity", kappa > 0, f"kappa {kappa:.3e}")
    r2 = rng.uniform(0.5, 2.0, 1000)
    rho2 = r2 * (1.0 + rng.uniform(-1e-3, 1e-3, 1000))
    ratio = relative_entropy(rho2, r2, eos) / (
        0.5 * entropy_H_second(r2, eos) * (rho2 - r2) ** 2
    )
    quad_ok = bool(np.all(ratio > 0.99) and np.all(ratio < 1.01))
    add("relative_entropy_local_quadratic", quad_ok,
        f"ratio range [{ratio.min():.4f}, {ratio.max():.4f}]")

    # static identity orders
    rep = derivation_identity_residual(_rho_trig, _u_trig, eps=1.0)
    add("derivation_identity_order", rep.order >= 1.8, f"order {rep.order:.2f}")
    rep = mom2_reduction_residual(_rho_trig, _u_trig)
    add("mom2_reduction_order", rep.order >= 1.8, f"order {rep.order:.2f}")
    rep = curl_free_check(lambda x, y: np.exp(0.05 * x * y), sizes=(32, 64, 128, 256))
    add("curl_free_order", rep.order >= 1.8, f"order {rep.order:.2f}")
    gap = grad_w_symmetry_gap(_rho_trig)
    add("grad_w_symmetry", gap < 1e-12, f"gap {gap:.3e}")

    # transported log-density gradient identity on a manufactured trajectory
    from .solver import lemma1_refinement_order

    order, _ = lemma1_refinement_order(config.fluid_params())
    add("log_gradient_identity_order", order >= 1.8, f"order {order:.2f}")

    # layer calculus
    rep = layer_calculus_check(
        lambda x: 1.0 + 0.5 * np.cos(np.pi * x),
        eps=0.125,
        ns=(256, 512, 1024, 2048),
        u_dx_fn=lambda x: -0.5 * np.pi * np.sin(np.pi * x),
        u_dxx_fn=lambda x: -0.5 * np.pi**2 * np.cos(np.pi * x),
    )
    add(
        "layer_calculus_orders",
        min(rep.grad_order, rep.div_order, rep.second_order) >= 1.8
        and rep.ztilde_identity_gap < 1e-12,
        f"orders ({rep.grad_order:.2f}, {rep.div_order:.2f}, {rep.second_order:.2f}), "
        f"ztilde gap {rep.ztilde_identity_gap:.1e}",
    )

    # small budget ladder: energy/k residual ratios, BD positive part
    resid_ee, resid_bd, resid_k, scales = [], [], [], []
    for n in (256, 512):
        grid = make_grid(config.length, n)
        rho0, u0 = well_prepared_init(grid, config.datum)
        params = config.fluid_params()
        traj = simulate(
            FluidState(grid, 0.0, rho0, rho0 * u0), params, 0.05, 0.0125, cfl=config.cfl
        )
        en = energy_report(traj, params)
        bd = bd_entropy_report(traj, params)
        kent = k_entropy_report(traj, params)
        resid_ee.append(float(np.max(np.abs(en.residual))))
        resid_bd.append(float(np.max(bd.residual)))
        resid_k.append(float(np.max(np.abs(kent.residual))))
        dt = grid.dx**2 / (4 * params.eps) if params.eps > 0 else grid.dx
        scales.append(grid.dx + dt**2)
    c_ee = [r / s for r, s in zip(resid_ee, scales)]
    c_k = [r / s for r, s in zip(resid_k, scales)]
    budget_ok = (
        max(c_ee) <= 2.0 * min(c_ee)
        and max(c_k) <= 2.0 * min(c_k)
        and all(r <= max(c_ee) * s for r, s in zip(resid_bd, scales))
    )
    add(
        "budget_residual_ladder",
        budget_ok,
        f"C_ee {c_ee[0]:.2e}->{c_ee[1]:.2e}, C_k {c_k[0]:.2e}->{c_k[1]:.2e}, "
        f"BD defect {max(resid_bd):.2e}",
    )

    # weak residual shrinks under refinement
    phi = compactly_supported_bump(0.15, 0.85)
    res = []
    for n in (128, 256):
        grid = make_grid(config.length, n)
        rho0, u0 = well_prepared_init(grid, config.datum)
        params = config.fluid_params()
        traj = simulate(
            FluidState(grid, 0.0, rho0, rho0 * u0), params, 0.04, 0.01, cfl=config.cfl
        )
        worst = max(
            abs(weak_residual(traj, params, phi, w))
            for w in ("mass", "momentum-v", "momentum-w")
        )
        res.append(worst)
    add("weak_residual_refines", res[1] < res[0], f"{res[0]:.2e} -> {res[1]:.2e}")

    # drag absorption estimate
    grid = make_grid(config.length, 128)
    rho0, u0 = well_prepared_init(grid, config.datum)
    params = FluidParams(eos=eos, eps=max(config.epsilon, 1e-2), r1=max(config.r1, 1e-2))
    traj = simulate(FluidState(grid, 0.0, rho0, rho0 * u0), params, 0.05, 0.0125)
    drag = drag_absorption_check(traj, params)
    add("drag_absorption", drag.holds, f"lhs {drag.lhs:.3e} <= rhs {drag.rhs:.3e}")

    return items
