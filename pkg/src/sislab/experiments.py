"""
Scenario runs: steady profiles of several models for one parameter set,
written out as CSV tables and SVG panels, plus reproduction-number tables.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, serialize_config
from .dynamics import StepperConfig, read_profile_csv, write_profile_csv
from .errors import SislabError
from .kinetics import ModelKind
from .spectral import compute_r0, lambda_star, r0_limits
from .steady import support_components, support_fraction, support_mask, sweep
from .svgplot import emit_svg

__all__ = [
    "FigureBundle",
    "ModelOutcome",
    "continuation_plan",
    "run_scenario",
    "summary_row",
    "recompute_summary",
    "structural_checks",
    "r0_report",
    "write_rows",
    "SUMMARY_COLUMNS",
    "R0_REPORT_COLUMNS",
]

SUMMARY_COLUMNS = ("model", "d_S", "d_I", "R0", "min_S", "max_S", "min_I", "max_I", "int_I", "support_frac")
R0_REPORT_COLUMNS = ("model", "d_I", "d_S", "R0", "lambda_star", "R0_low_limit", "R0_high_limit")
SUPPORT_THRESHOLD = 1e-3


def _geometric(start, stop, per_decade):
    if start <= stop:
        return [stop]
    k = max(1, math.ceil(per_decade * math.log10(start / stop) - 1e-9))
    return [start * (stop / start) ** (j / k) for j in range(k)] + [stop]


def continuation_plan(d_S, d_I, per_decade=2, schedule=None):
    """Route from moderate diffusivities down to ``(d_S, d_I)``.

    If one rate is at least 1 it stays fixed and the other is lowered from the
    same value. Otherwise both shrink together at the ratio ``d_I / d_S``.
    Returns ``(target, schedule, other, ratio)`` for :func:`steady.sweep`.
    """
    if max(d_S, d_I) >= 1.0 and d_S != d_I:
        if d_S < d_I:
            target, other, end = "d_S_to_zero", d_I, d_S
        else:
            target, other, end = "d_I_to_zero", d_S, d_I
        sched = schedule or _geometric(other, end, per_decade)
        return target, list(sched), other, None
    ratio = d_I / d_S
    start = max(d_S, min(1.0, 1.0 / ratio))
    sched = schedule or _geometric(start, d_S, per_decade)
    return "both", list(sched), None, ratio


@dataclass
class ModelOutcome:
    model: ModelKind
    S: np.ndarray | None = None
    I: np.ndarray | None = None
    R0: float | None = None
    error: str | None = None
    entries: int = 0


@dataclass
class FigureBundle:
    config: ScenarioConfig
    out_dir: str
    outcomes: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)
    files: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def failures(self):
        return {m: o.error for m, o in self.outcomes.items() if o.error}

    @property
    def ok(self):
        return not self.failures


def summary_row(model, d_S, d_I, R0, S, I, grid):
    return {
        "model": str(model),
        "d_S": float(d_S),
        "d_I": float(d_I),
        "R0": float(R0),
        "min_S": float(np.min(S)),
        "max_S": float(np.max(S)),
        "min_I": float(np.min(I)),
        "max_I": float(np.max(I)),
        "int_I": float(grid.integrate(I)),
        "support_frac": support_fraction(I, grid, SUPPORT_THRESHOLD),
    }


def _solve_model(config, coeffs, model):
    out = ModelOutcome(model)
    try:
        out.R0 = compute_r0(model, config.d_I, config.d_S, coeffs).value
        target, sched, other, ratio = continuation_plan(config.d_S, config.d_I, config.per_decade, config.schedule)
        seed = StepperConfig(dt_initial=0.05, steady_tol=config.seed_tol, t_max=5e3)
        res = sweep(model, target, coeffs, sched, other=other, ratio=ratio, tol=config.tol,
                    min_cells=config.min_cells, seed_config=seed)
    except SislabError as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        return out
    out.entries = len(res)
    if res.failure:
        out.error = res.failure
        return out
    final = res.results[-1]
    out.S, out.I = final.S, final.I
    return out


def run_scenario(config, out_dir=None, workers=None):
    """Solve every model of ``config`` and write the figure bundle.

    Files: ``profile_<model>.csv``, ``summary.csv``, ``panel_S.svg``,
    ``panel_I.svg``, ``scenario.ini`` and ``README.txt``. Models that fail
    are listed in the bundle and left out of the tables and panels.
    """
    out_dir = out_dir or config.out_dir
    grid = config.grid()
    coeffs = config.coefficients(grid)
    os.makedirs(out_dir, exist_ok=True)
    with ThreadPoolExecutor(max_workers=workers or len(config.models)) as pool:
        outcomes = list(pool.map(lambda m: _solve_model(config, coeffs, m), config.models))
    bundle = FigureBundle(config, out_dir, {o.model: o for o in outcomes})

    def path(name):
        p = os.path.join(out_dir, name)
        bundle.files.append(p)
        return p

    for o in outcomes:
        if o.error:
            continue
        write_profile_csv(path(f"profile_{o.model}.csv"), grid, o.S, o.I)
        bundle.summary.append(summary_row(o.model, config.d_S, config.d_I, o.R0, o.S, o.I, grid))
    write_rows(path("summary.csv"), SUMMARY_COLUMNS, bundle.summary)
    good = [o for o in outcomes if not o.error]
    if good:
        for comp in ("S", "I"):
            svg = emit_svg({str(o.model): (grid.nodes, getattr(o, comp)) for o in good},
                           title=_title(config, comp), ylabel=comp)
            with open(path(f"panel_{comp}.svg"), "w") as fh:
                fh.write(svg)
    with open(path("scenario.ini"), "w") as fh:
        fh.write(serialize_config(config))
    bundle.checks = structural_checks(config, coeffs, {o.model: o for o in good})
    with open(path("README.txt"), "w") as fh:
        fh.write(_readme(bundle))
    return bundle


def _title(config, comp):
    return f"{comp}(x)  d_S = {config.d_S:g}, d_I = {config.d_I:g}  ({config.figure})"


def structural_checks(config, coeffs, outcomes):
    """Qualitative checks for the figure scenarios as ``(text, passed, value)``."""
    grid = coeffs.grid
    checks = []

    def get(name):
        return outcomes.get(ModelKind(name))

    if config.figure == "fig1":
        for name, bound in (("SO", 1e-3), ("MO", 1e-2)):
            o = get(name)
            if o is not None:
                v = float(o.I.max())
                checks.append((f"{name}: max I <= {bound:g}", v <= bound, v))
        for name in ("MW", "SW"):
            o = get(name)
            if o is not None:
                v = float(o.I.min())
                checks.append((f"{name}: min I > 0", v > 0, v))
    elif config.figure == "fig4":
        high = coeffs.beta > coeffs.gamma
        for name in ("SO", "SW", "MO"):
            o = get(name)
            if o is not None:
                outside = support_mask(o.I, SUPPORT_THRESHOLD) & ~high
                where = f"x in [{grid.nodes[outside].min():.4g}, {grid.nodes[outside].max():.4g}]" if outside.any() else "none"
                checks.append((f"{name}: I > 1e-3 max I only on high-risk nodes (outside: {where})",
                               not outside.any(), int(outside.sum())))
        o = get("MW")
        if o is not None:
            n = support_components(o.I, SUPPORT_THRESHOLD)
            checks.append(("MW: support of I has two components", n == 2, n))
    elif config.figure in ("fig2", "fig3"):
        for m, o in outcomes.items():
            checks.append((f"{m}: S > 0 and I > 0", bool(o.S.min() > 0 and o.I.min() > 0), float(o.I.min())))
            checks.append((f"{m}: support fraction of I (observed)", True, support_fraction(o.I, grid)))
    return checks


def _readme(bundle):
    c = bundle.config
    lines = [
        f"Scenario {c.figure}: models {', '.join(str(m) for m in c.models)}",
        f"coefficients: {c.preset or c.coefficient_file or 'expressions'}, n_cells = {c.n_cells}, N = {c.total_mass:g}",
        f"d_S = {c.d_S:g}, d_I = {c.d_I:g}",
        "",
        "Profiles carry no reference data to match pointwise; each panel is judged",
        "on structure (positivity, support of I at 1e-3 max I, ordering).",
        "",
    ]
    for text, ok, value in bundle.checks:
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {text}  ({value:.6g})")
    for m, err in bundle.failures.items():
        lines.append(f"[FAILED] {m}: {err}")
    lines.append("")
    return "\n".join(lines)


def recompute_summary(out_dir, model, d_S, d_I, R0, grid):
    """Summary row rebuilt from a written profile CSV."""
    x, S, I = read_profile_csv(os.path.join(out_dir, f"profile_{model}.csv"))
    return summary_row(model, d_S, d_I, R0, S, I, grid)


def r0_report(config):
    """One row per (model, d_I) over ``config.report_d_I`` at ``config.d_S``.

    ``R0_low_limit`` and ``R0_high_limit`` are the values approached as
    ``d_I -> 0`` and ``d_I -> infinity``.
    """
    coeffs = config.coefficients()
    rows = []
    for model in config.models:
        lo, hi = r0_limits(model, config.d_S, coeffs)
        for d_I in config.report_d_I:
            r0 = compute_r0(model, d_I, config.d_S, coeffs)
            ls = lambda_star(model, d_I, config.d_S, coeffs)
            rows.append({
                "model": str(model), "d_I": d_I, "d_S": config.d_S, "R0": r0.value,
                "lambda_star": ls.eigenvalue, "R0_low_limit": lo, "R0_high_limit": hi,
            })
    return rows


def write_rows(path_or_file, columns, rows):
    """Write dict rows as CSV; floats use ``repr`` (round-trip exact)."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
