"""
Command line entry point ``sislab``.

Exit status: 0 on success, 2 for invalid input, 3 when a solver fails.
"""

import argparse
import os
import sys

import numpy as np

from .config import ScenarioConfig, figure_config, load_config
from .dynamics import StepperConfig, auto_lyapunov, default_initial_state, run, write_profile_csv
from .errors import SolverError, ValidationError
from .experiments import (
    R0_REPORT_COLUMNS,
    continuation_plan,
    r0_report,
    run_scenario,
    write_rows,
)
from .kinetics import ModelKind
from .spectral import compute_r0, lambda_star
from .steady import mo_limit_wu_zou, mw_limit_ds0, so_limit_peng, sweep

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3


def _float_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _common(p):
    p.add_argument("--config", help="scenario INI file")
    p.add_argument("--out", help="output directory (default: from config)")
    p.add_argument("--grid", type=int, help="number of cells")
    p.add_argument("--model", help="comma-separated models, e.g. MW,SO")
    p.add_argument("--preset", help="coefficient preset (fig0a, moderate)")
    p.add_argument("--N", dest="total_mass", type=float, help="total mass for MO/SO")


def _diffusion(p):
    p.add_argument("--d-S", dest="d_S", type=float)
    p.add_argument("--d-I", dest="d_I", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="sislab", description="Spatial SIS epidemic models on [0, 1].")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("r0", help="reproduction number and principal eigenvalue")
    _common(p)
    p.add_argument("--d-S", dest="d_S", type=float)
    p.add_argument("--d-I", dest="d_I_list", type=_float_list, help="one or more d_I values")

    p = sub.add_parser("simulate", help="integrate the parabolic system")
    _common(p)
    _diffusion(p)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--scheme", choices=("imex_euler", "imex_trapezoid"), default="imex_euler")
    p.add_argument("--steady-tol", type=float, default=1e-10)

    p = sub.add_parser("steady", help="endemic equilibrium by continuation and Newton")
    _common(p)
    _diffusion(p)

    p = sub.add_parser("sweep", help="continuation along a decreasing diffusivity schedule")
    _common(p)
    p.add_argument("--target", choices=("d_S_to_zero", "d_I_to_zero", "both"), required=True)
    p.add_argument("--schedule", type=_float_list, required=True)
    p.add_argument("--other", type=float, help="fixed diffusivity")
    p.add_argument("--ratio", type=float, help="d_I / d_S for target 'both'")

    p = sub.add_parser("limit", help="limiting profiles")
    _common(p)
    p.add_argument("formula", choices=("mw_ds0", "wu_zou", "peng"))
    p.add_argument("--d", type=float, required=True,
                   help="d_I for mw_ds0; ratio d for wu_zou; d0 for peng (inf allowed)")

    p = sub.add_parser("reproduce", help="figure scenario bundle")
    _common(p)
    p.add_argument("figure", choices=("fig1", "fig2", "fig3", "fig4"))

    p = sub.add_parser("report", help="table of reproduction numbers")
    _common(p)
    return parser


def _config(args, base=None):
    config = load_config(args.config) if args.config else (base or ScenarioConfig())
    models = tuple(m for m in args.model.replace(",", " ").split()) if args.model else None
    over = dict(n_cells=args.grid, models=models, total_mass=args.total_mass, out_dir=args.out,
                d_S=getattr(args, "d_S", None), d_I=getattr(args, "d_I", None))
    if args.preset:
        over.update(preset=args.preset, coefficient_file=None, expressions=None)
    return config.with_overrides(**over)


def _out(config):
    os.makedirs(config.out_dir, exist_ok=True)
    return config.out_dir


def cmd_r0(args):
    config = _config(args)
    coeffs = config.coefficients()
    values = args.d_I_list or [config.d_I]
    rows = []
    for m in config.models:
        for d_I in values:
            rows.append({"model": str(m), "d_I": d_I, "d_S": config.d_S,
                         "R0": compute_r0(m, d_I, config.d_S, coeffs).value,
                         "lambda_star": lambda_star(m, d_I, config.d_S, coeffs).eigenvalue})
    cols = ("model", "d_I", "d_S", "R0", "lambda_star")
    if args.out:
        write_rows(os.path.join(_out(config), "r0.csv"), cols, rows)
    else:
        write_rows(sys.stdout, cols, rows)
    return EXIT_OK


def cmd_simulate(args):
    config = _config(args)
    coeffs = config.coefficients()
    stepper = StepperConfig(dt_initial=args.dt, scheme=args.scheme, t_max=args.t_max, steady_tol=args.steady_tol)
    out = _out(config)
    for m in config.models:
        lyap = None
        if m is ModelKind.MW and coeffs.is_homogeneous and config.d_S == config.d_I:
            lyap = auto_lyapunov(m, coeffs, config.d_S, config.d_I)
        res = run(default_initial_state(m, coeffs, config.d_S), m, coeffs, config.d_S, config.d_I, stepper, lyapunov=lyap)
        res.trace.write_csv(os.path.join(out, f"trace_{m}.csv"))
        write_profile_csv(os.path.join(out, f"final_{m}.csv"), coeffs.grid, res.state.S, res.state.I)
        print(f"{m}: {res.verdict} after {res.steps} steps, t = {res.state.t:g}, rate = {res.rate:.3g}")
    return EXIT_OK


def _print_profile(m, S, I, grid):
    print(f"{m}: min S = {S.min():.6g}, max S = {S.max():.6g}, min I = {I.min():.6g}, "
          f"max I = {I.max():.6g}, int I = {grid.integrate(I):.6g}")


def cmd_steady(args):
    config = _config(args)
    coeffs = config.coefficients()
    out = _out(config)
    status = EXIT_OK
    for m in config.models:
        target, sched, other, ratio = continuation_plan(config.d_S, config.d_I, config.per_decade, config.schedule)
        res = sweep(m, target, coeffs, sched, other=other, ratio=ratio, tol=config.tol, min_cells=config.min_cells)
        if res.failure:
            print(f"{m}: {res.failure}", file=sys.stderr)
            status = EXIT_SOLVER
            continue
        r = res.results[-1]
        write_profile_csv(os.path.join(out, f"steady_{m}.csv"), coeffs.grid, r.S, r.I)
        _print_profile(m, r.S, r.I, coeffs.grid)
    return status


def cmd_sweep(args):
    config = _config(args)
    coeffs = config.coefficients()
    out = _out(config)
    status = EXIT_OK
    cols = ("diffusivity", "min_S", "max_S", "min_I", "max_I", "int_I", "support_frac")
    for m in config.models:
        res = sweep(m, args.target, coeffs, args.schedule, other=args.other, ratio=args.ratio,
                    tol=config.tol, min_cells=config.min_cells)
        rows = [dict(zip(cols, (float(v) for v in row))) for row in res.summary_rows(coeffs.grid)]
        write_rows(os.path.join(out, f"sweep_{m}.csv"), cols, rows)
        if res.results:
            r = res.results[-1]
            write_profile_csv(os.path.join(out, f"sweep_{m}_final.csv"), coeffs.grid, r.S, r.I)
        print(f"{m}: {len(res)} of {len(args.schedule)} entries")
        if res.failure:
            print(f"{m}: {res.failure}", file=sys.stderr)
            status = EXIT_SOLVER
    return status


def cmd_limit(args):
    config = _config(args)
    coeffs = config.coefficients()
    if args.formula == "mw_ds0":
        lim = mw_limit_ds0(args.d, coeffs)
    elif args.formula == "wu_zou":
        lim = mo_limit_wu_zou(args.d, coeffs)
    else:
        lim = so_limit_peng(args.d, coeffs)
    I = np.broadcast_to(np.asarray(lim.I_limit, dtype=float), coeffs.grid.nodes.shape)
    write_profile_csv(os.path.join(_out(config), f"limit_{args.formula}.csv"), coeffs.grid, lim.S_limit, I)
    print(lim.provenance)
    _print_profile(args.formula, lim.S_limit, I, coeffs.grid)
    return EXIT_OK


def cmd_reproduce(args):
    config = _config(args, base=figure_config(args.figure))
    bundle = run_scenario(config)
    for text, ok, value in bundle.checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {text}  ({value:.6g})")
    for m, err in bundle.failures.items():
        print(f"{m}: {err}", file=sys.stderr)
    print(f"wrote {len(bundle.files)} files to {bundle.out_dir}")
    return EXIT_OK if bundle.ok else EXIT_SOLVER


def cmd_report(args):
    config = _config(args)
    rows = r0_report(config)
    if args.out:
        write_rows(os.path.join(_out(config), "report.csv"), R0_REPORT_COLUMNS, rows)
    else:
        write_rows(sys.stdout, R0_REPORT_COLUMNS, rows)
    return EXIT_OK


COMMANDS = {
    "r0": cmd_r0,
    "simulate": cmd_simulate,
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "limit": cmd_limit,
    "reproduce": cmd_reproduce,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
