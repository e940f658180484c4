"""
Scenario configuration stored as INI text.

A scenario names the models to run, the coefficient landscape, the grid and
the target diffusivities. Example::

    [scenario]
    figure = fig4
    models = MO, MW, SO, SW
    n_cells = 800
    total_mass = 1.0

    [coefficients]
    preset = moderate

    [diffusion]
    d_S = 1.0
    d_I = 1e-05

Floats are written with ``repr`` so ``parse(serialize(c)) == c`` exactly.
"""

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .coeffs import PRESETS, from_expressions, read_coefficients_csv
from .errors import ValidationError
from .grid1d import Grid
from .kinetics import ModelKind

__all__ = ["ScenarioConfig", "FIGURES", "figure_config", "parse_config", "serialize_config", "load_config"]

ALL_MODELS = tuple(ModelKind)
FIGURE_TAGS = ("fig1", "fig2", "fig3", "fig4", "custom")
DEFAULT_REPORT_DI = tuple(10.0 ** k for k in range(-3, 4))


@dataclass(frozen=True)
class ScenarioConfig:
    figure: str = "custom"
    models: tuple = ALL_MODELS
    preset: str | None = "fig0a"
    coefficient_file: str | None = None
    expressions: tuple | None = None  # (lambda, beta, gamma, mu) strings in x
    n_cells: int = 400
    total_mass: float = 1.0
    d_S: float = 1.0
    d_I: float = 1.0
    schedule: tuple | None = None
    per_decade: int = 2
    tol: float = 1e-9
    seed_tol: float = 1e-7
    min_cells: int = 6
    out_dir: str = "out"
    report_d_I: tuple = DEFAULT_REPORT_DI

    def __post_init__(self):
        if self.figure not in FIGURE_TAGS:
            raise ValidationError(f"figure must be one of {FIGURE_TAGS}, got {self.figure!r}")
        models = tuple(ModelKind.parse(m) for m in self.models)
        if not models or len(set(models)) != len(models):
            raise ValidationError("models must be a nonempty list without repeats")
        object.__setattr__(self, "models", models)
        sources = [s for s in (self.preset, self.coefficient_file, self.expressions) if s]
        if len(sources) != 1:
            raise ValidationError("give exactly one of preset, coefficient file or expressions")
        if self.preset and self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; known: {', '.join(PRESETS)}")
        if self.expressions is not None:
            if len(self.expressions) != 4:
                raise ValidationError("expressions need lambda, beta, gamma, mu")
            object.__setattr__(self, "expressions", tuple(str(e) for e in self.expressions))
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValidationError("n_cells must be an integer >= 4")
        if self.preset == "moderate" and self.n_cells % 4:
            raise ValidationError("the moderate preset needs n_cells divisible by 4")
        for key in ("total_mass", "d_S", "d_I", "tol", "seed_tol"):
            v = float(getattr(self, key))
            if not v > 0:
                raise ValidationError(f"{key} must be positive, got {v!r}")
            object.__setattr__(self, key, v)
        if self.schedule is not None:
            sched = tuple(float(v) for v in self.schedule)
            if not sched or any(v <= 0 for v in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
                raise ValidationError("schedule must be positive and strictly decreasing")
            object.__setattr__(self, "schedule", sched)
        if self.per_decade < 1:
            raise ValidationError("per_decade must be >= 1")
        rep = tuple(float(v) for v in self.report_d_I)
        if not rep or any(v <= 0 for v in rep):
            raise ValidationError("report_d_I must be positive")
        object.__setattr__(self, "report_d_I", rep)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def grid(self):
        return Grid(self.n_cells)

    def coefficients(self, grid=None):
        grid = grid or self.grid()
        if self.preset:
            return PRESETS[self.preset](grid, total_mass=self.total_mass)
        if self.coefficient_file:
            return read_coefficients_csv(self.coefficient_file, grid, total_mass=self.total_mass)
        return from_expressions(grid, *self.expressions, total_mass=self.total_mass)


FIGURES = {
    "fig1": ScenarioConfig(figure="fig1", preset="fig0a", n_cells=400, d_S=1e-6, d_I=1.0, out_dir="out/fig1"),
    "fig2": ScenarioConfig(figure="fig2", preset="fig0a", n_cells=800, d_S=1.0, d_I=1e-5, out_dir="out/fig2"),
    "fig3": ScenarioConfig(figure="fig3", preset="fig0a", n_cells=800, d_S=1e-5, d_I=1e-5, out_dir="out/fig3"),
    "fig4": ScenarioConfig(figure="fig4", preset="moderate", n_cells=800, d_S=1.0, d_I=1e-5, out_dir="out/fig4"),
}


def figure_config(tag):
    try:
        return FIGURES[tag]
    except KeyError:
        raise ValidationError(f"unknown figure {tag!r}; expected one of {', '.join(FIGURES)}") from None


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def serialize_config(config):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {
        "figure": config.figure,
        "models": ", ".join(m.value for m in config.models),
        "n_cells": str(config.n_cells),
        "total_mass": repr(config.total_mass),
    }
    coef = {}
    if config.preset:
        coef["preset"] = config.preset
    elif config.coefficient_file:
        coef["file"] = config.coefficient_file
    else:
        coef.update(zip(("lambda", "beta", "gamma", "mu"), config.expressions))
    cp["coefficients"] = coef
    diff = {"d_S": repr(config.d_S), "d_I": repr(config.d_I), "per_decade": str(config.per_decade)}
    if config.schedule is not None:
        diff["schedule"] = ", ".join(repr(v) for v in config.schedule)
    cp["diffusion"] = diff
    cp["solver"] = {"tol": repr(config.tol), "seed_tol": repr(config.seed_tol), "min_cells": str(config.min_cells)}
    cp["report"] = {"d_I": ", ".join(repr(v) for v in config.report_d_I)}
    cp["output"] = {"out_dir": config.out_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_config(text):
    """Build a :class:`ScenarioConfig` from INI text; missing keys take defaults."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config: {exc}") from None
    known = {
        "scenario": {"figure", "models", "n_cells", "total_mass"},
        "coefficients": {"preset", "file", "lambda", "beta", "gamma", "mu"},
        "diffusion": {"d_S", "d_I", "schedule", "per_decade"},
        "solver": {"tol", "seed_tol", "min_cells"},
        "report": {"d_I"},
        "output": {"out_dir"},
    }
    for sec in cp.sections():
        if sec not in known:
            raise ValidationError(f"unknown config section [{sec}]")
        extra = set(cp[sec]) - known[sec]
        if extra:
            raise ValidationError(f"unknown keys in [{sec}]: {', '.join(sorted(extra))}")
    kw = {}
    try:
        if cp.has_section("scenario"):
            s = cp["scenario"]
            if "figure" in s:
                kw["figure"] = s["figure"].strip()
            if "models" in s:
                kw["models"] = tuple(m for m in s["models"].replace(",", " ").split())
            if "n_cells" in s:
                kw["n_cells"] = s.getint("n_cells")
            if "total_mass" in s:
                kw["total_mass"] = s.getfloat("total_mass")
        c = cp["coefficients"] if cp.has_section("coefficients") else {}
        exprs = [c.get(k) for k in ("lambda", "beta", "gamma", "mu")]
        if "file" in c:
            kw.update(preset=None, coefficient_file=c["file"].strip())
        elif any(exprs):
            kw.update(preset=None, expressions=tuple(exprs))
        elif "preset" in c:
            kw["preset"] = c["preset"].strip()
        if cp.has_section("diffusion"):
            d = cp["diffusion"]
            for key in ("d_S", "d_I"):
                if key in d:
                    kw[key] = d.getfloat(key)
            if "schedule" in d:
                kw["schedule"] = _floats(d["schedule"])
            if "per_decade" in d:
                kw["per_decade"] = d.getint("per_decade")
        if cp.has_section("solver"):
            v = cp["solver"]
            for key in ("tol", "seed_tol"):
                if key in v:
                    kw[key] = v.getfloat(key)
            if "min_cells" in v:
                kw["min_cells"] = v.getint("min_cells")
        if cp.has_section("report") and "d_I" in cp["report"]:
            kw["report_d_I"] = _floats(cp["report"]["d_I"])
        if cp.has_section("output") and "out_dir" in cp["output"]:
            kw["out_dir"] = cp["output"]["out_dir"].strip()
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad value in config: {exc}") from None
    return ScenarioConfig(**kw)


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None


CONFIG_FIELDS = tuple(f.name for f in fields(ScenarioConfig))
