"""
Coefficient fields Lambda, beta, gamma, mu (and the conserved mass N).

Presets cover the two habitats used in the figures: the smooth
``beta = 1.5 + sin 2 pi x``, ``gamma = 1.2 + cos 2 pi x`` landscape and the
piecewise-linear landscape with a moderate-risk plateau on ``[0.25, 0.75]``.
"""

import csv
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .grid1d import Grid

__all__ = [
    "CoefficientSet",
    "NodeCoefficients",
    "RiskClassification",
    "preset_fig0a",
    "preset_moderate",
    "preset_homogeneous",
    "from_expressions",
    "read_coefficients_csv",
    "write_coefficients_csv",
    "classify_risk",
    "PRESETS",
]

NodeCoefficients = namedtuple("NodeCoefficients", "lam beta gamma mu")

DEFAULT_MODERATE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Nodal samples of the model coefficients on ``grid``.

    ``lam`` is the recruitment Lambda(x). ``total_mass`` is N, only meaningful
    for the conserved-mass models MO and SO.
    """

    grid: Grid
    lam: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    total_mass: float | None = None
    name: str = "custom"

    def __post_init__(self):
        for key in ("lam", "beta", "gamma", "mu"):
            a = self.grid.check(getattr(self, key), key).copy()
            if np.any(a <= 0):
                i = int(np.argmin(a))
                raise ValidationError(
                    f"{key} must be strictly positive; {key}[{i}] = {a[i]!r} at x = {self.grid.nodes[i]:g}"
                )
            a.setflags(write=False)
            object.__setattr__(self, key, a)
        if self.total_mass is not None:
            if not np.isfinite(self.total_mass) or self.total_mass <= 0:
                raise ValidationError(f"total_mass must be positive, got {self.total_mass!r}")
            object.__setattr__(self, "total_mass", float(self.total_mass))

    def at(self, i):
        """Coefficients at node ``i`` as a :class:`NodeCoefficients` tuple."""
        return NodeCoefficients(self.lam[i], self.beta[i], self.gamma[i], self.mu[i])

    def with_mass(self, total_mass):
        return replace(self, total_mass=total_mass)

    @property
    def is_homogeneous(self):
        return all(np.ptp(getattr(self, k)) == 0.0 for k in ("lam", "beta", "gamma", "mu"))

    def on(self, grid=None):
        """``grid`` if it matches the one the coefficients were sampled on."""
        if grid is None or grid == self.grid:
            return self.grid
        raise ValidationError(f"coefficients live on {self.grid}, not on {grid}")

    def require_mass(self):
        if self.total_mass is None:
            raise ValidationError("this model conserves mass; the coefficient set needs total_mass")
        return self.total_mass


RiskClassification = namedtuple("RiskClassification", "low_risk high_risk moderate")
RiskClassification.__doc__ = """Node-index partition by the sign of ``beta - gamma``."""


def preset_fig0a(grid, total_mass=1.0):
    """Smooth landscape: ``beta = 1.5 + sin 2 pi x``, ``gamma = 1.2 + cos 2 pi x``,
    ``Lambda = 3``, ``mu = 0.5 + x``. N defaults to 1."""
    x = grid.nodes
    return CoefficientSet(
        grid,
        lam=np.full_like(x, 3.0),
        beta=1.5 + np.sin(2 * np.pi * x),
        gamma=1.2 + np.cos(2 * np.pi * x),
        mu=0.5 + x,
        total_mass=total_mass,
        name="fig0a",
    )


def preset_moderate(grid, total_mass=1.0):
    """Piecewise-linear landscape with ``beta == gamma`` on ``[0.25, 0.75]``."""
    if grid.n_cells % 4:
        raise ValidationError(
            f"moderate preset needs n_cells divisible by 4 so the breakpoints 0.25 and "
            f"0.75 are grid nodes; got n_cells = {grid.n_cells}"
        )
    if grid.length != 1.0:
        raise ValidationError("moderate preset is defined on [0, 1]")
    x = grid.nodes
    beta = np.where(x <= 0.75, 1.0, 2 * x - 0.5)
    gamma = np.where(x <= 0.25, -2 * x + 1.5, 1.0)
    return CoefficientSet(
        grid,
        lam=np.full_like(x, 3.0),
        beta=beta,
        gamma=gamma,
        mu=0.5 + x,
        total_mass=total_mass,
        name="moderate",
    )


def preset_homogeneous(grid, lam, beta, gamma, mu, total_mass=None):
    for key, v in dict(lam=lam, beta=beta, gamma=gamma, mu=mu).items():
        if not v > 0:
            raise ValidationError(f"homogeneous {key} must be positive, got {v!r}")
    ones = np.ones(grid.n_nodes)
    return CoefficientSet(
        grid, lam * ones, beta * ones, gamma * ones, mu * ones,
        total_mass=total_mass, name="homogeneous",
    )


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "cosh", "sinh",
                 "arctan", "minimum", "maximum", "where", "pi", "e")
}


def _eval_expr(expr, x):
    try:
        code = compile(str(expr), "<coefficient>", "eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse coefficient expression {expr!r}: {exc}") from None
    bad = [n for n in code.co_names if n not in _EXPR_NAMESPACE and n != "x"]
    if bad:
        raise ValidationError(f"unknown names {bad} in coefficient expression {expr!r}")
    value = eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": x})
    return np.broadcast_to(np.asarray(value, dtype=float), x.shape).copy()


def from_expressions(grid, lam, beta, gamma, mu, total_mass=None, name="expr"):
    """Evaluate closed-form expressions in ``x`` (numpy syntax) at the nodes.

    >>> g = Grid(4)
    >>> from_expressions(g, "3", "1 + x", "1", "0.5").beta.tolist()
    [1.0, 1.25, 1.5, 1.75, 2.0]
    """
    x = grid.nodes
    return CoefficientSet(
        grid, *(_eval_expr(e, x) for e in (lam, beta, gamma, mu)),
        total_mass=total_mass, name=name,
    )


CSV_HEADER = ("x", "lambda", "beta", "gamma", "mu")


def read_coefficients_csv(path, grid, total_mass=None):
    """Read a ``x,lambda,beta,gamma,mu`` table whose rows are the grid nodes."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, ()))
        if header != CSV_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, 5)
    if data.shape[0] != grid.n_nodes:
        raise ValidationError(f"{path}: {data.shape[0]} rows for a grid with {grid.n_nodes} nodes")
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-12:
        raise ValidationError(f"{path}: x column does not match the grid nodes to 1e-12")
    return CoefficientSet(grid, *data[:, 1:].T, total_mass=total_mass, name=str(path))


def write_coefficients_csv(path, coeffs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(coeffs.grid.nodes, coeffs.lam, coeffs.beta, coeffs.gamma, coeffs.mu):
            w.writerow([repr(float(v)) for v in row])


def classify_risk(coeffs, tolerance=DEFAULT_MODERATE_TOL):
    """Split nodes into low-risk (beta < gamma), high-risk and moderate sets."""
    if tolerance < 0:
        raise ValidationError("tolerance must be >= 0")
    diff = coeffs.beta - coeffs.gamma
    moderate = np.abs(diff) <= tolerance
    low = (diff < 0) & ~moderate
    high = (diff > 0) & ~moderate
    return RiskClassification(
        frozenset(np.flatnonzero(low).tolist()),
        frozenset(np.flatnonzero(high).tolist()),
        frozenset(np.flatnonzero(moderate).tolist()),
    )


PRESETS = {
    "fig0a": preset_fig0a,
    "moderate": preset_moderate,
}
