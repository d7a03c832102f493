"""Command-line interface: run, sweep, check, layer-scaling.

Exit codes: 0 ok, 1 check failure or flagged run, 2 config error,
3 runtime blow-up (non-finite fields, stiffness, reference steepening).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import (
    HorizonTooLongError,
    InvalidConfigError,
    InvalidDataError,
    NumericalBlowupError,
    StiffnessError,
    VllError,
)
from .harness import (
    RunConfig,
    check_suite,
    load_config,
    run_single,
    sweep,
    write_csv,
)
from .layer import layer_norm_scalings

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_BLOWUP = 3


def _parse_eps_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "^" in tok:  # accept 2^-5 style entries
            base, exp = tok.split("^")
            out.append(float(base) ** float(exp))
        else:
            out.append(float(tok))
    if not out:
        raise InvalidConfigError("empty epsilon list")
    return out


def _config_from(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = _config_from(args)
    result = run_single(cfg, out_dir=args.out)
    rep = result.report
    print(f"E(0) = {rep['E0']:.6e}, E(T) = {rep['E_series']['values'][-1]:.6e}")
    print(f"metric sup = {rep['metric']['sup']:.6e}")
    print(f"flags: floor={result.floor_flagged}, monitor={result.monitor_tripped}")
    return EXIT_OK if result.ok else EXIT_CHECK_FAILURE


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    eps_list = (
        _parse_eps_list(args.epsilon)
        if args.epsilon
        else [2.0**-k for k in range(3, 8)]
    )
    eps_list = sorted(eps_list, reverse=True)
    result = sweep(
        cfg, eps_list, alpha=args.alpha, kappa=args.kappa, out_dir=args.out, jobs=args.jobs
    )
    for row in result.rows:
        print(
            f"eps={row.epsilon:.6g} r1={row.r1:.6g} n={row.n} "
            f"metric={row.metric:.6e} E0={row.E0:.3e} C={row.gronwall_C:.3f}"
        )
    slope = result.metric_slope
    print(f"fitted metric slope: {slope:.3f}" if np.isfinite(slope) else "slope: n/a")
    print(f"gronwall C stable: {result.gronwall_stable}")
    flagged = any(r.floor_flagged for r in result.rows)
    return EXIT_CHECK_FAILURE if flagged else EXIT_OK


def cmd_check(args) -> int:
    cfg = _config_from(args)
    items = check_suite(cfg)
    width = max(len(i.name) for i in items)
    failures = 0
    for item in items:
        status = "PASS" if item.passed else "FAIL"
        print(f"[{status}] {item.name:<{width}}  {item.detail}")
        failures += 0 if item.passed else 1
    print(f"{len(items) - failures}/{len(items)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILURE


def cmd_layer_scaling(args) -> int:
    cfg = _config_from(args)
    eps_list = (
        _parse_eps_list(args.epsilon)
        if args.epsilon
        else [2.0**-k for k in range(3, 10)]
    )

    def profile(x):
        return 1.0 + 0.5 * np.cos(np.pi * x / cfg.length)

    rows = layer_norm_scalings(
        profile, cfg.layer_c, sorted(eps_list), length=cfg.length
    )
    bad = 0
    csv_rows = []
    for row in rows:
        target = row.paper_exponent
        tol = 0.1 * abs(target) if target != 0 else 0.1
        ok = abs(row.fitted_exponent - target) <= tol
        bad += 0 if ok else 1
        status = "PASS" if ok else "FAIL"
        print(
            f"[{status}] {row.name:<24} fitted {row.fitted_exponent:+.4f} "
            f"paper {target:+.2f}"
        )
        for eps, val in zip(row.eps_values, row.norms):
            csv_rows.append((row.name, eps, val, row.fitted_exponent, target))
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        write_csv(
            f"{args.out}/layer_scaling.csv",
            ["norm_name", "epsilon", "value", "fitted_exponent", "paper_exponent"],
            csv_rows,
        )
    return EXIT_OK if bad == 0 else EXIT_CHECK_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vll",
        description="Viscous-limit laboratory: budgets, layers and relative energy",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config path", default=None)
        p.add_argument("--out", help="output directory", default=None)

    p_run = sub.add_parser("run", help="single run with full diagnostics")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="viscosity sweep")
    common(p_sweep)
    p_sweep.add_argument("--epsilon", help="comma-separated list (2^-3 style ok)")
    p_sweep.add_argument("--alpha", type=float, default=1.0, help="r1 = kappa*eps^alpha")
    p_sweep.add_argument("--kappa", type=float, default=1.0)
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel runs")

    p_check = sub.add_parser("check", help="identity and property checks")
    common(p_check)

    p_layer = sub.add_parser("layer-scaling", help="corrector norm-scaling table")
    common(p_layer)
    p_layer.add_argument("--epsilon", help="comma-separated layer widths")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "check": cmd_check,
        "layer-scaling": cmd_layer_scaling,
    }
    try:
        return handlers[args.command](args)
    except (InvalidConfigError, InvalidDataError, FileNotFoundError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (NumericalBlowupError, StiffnessError, HorizonTooLongError) as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except VllError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
