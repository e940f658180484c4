"""
Time integration of the parabolic systems and long-run diagnostics.

Diffusion is implicit (one tridiagonal solve per component and stage) and the
reaction explicit. ``imex_euler`` is backward Euler for diffusion with forward
Euler for reaction; ``imex_trapezoid`` pairs Crank-Nicolson diffusion with a
Heun predictor-corrector for the reaction and is second order.

Because the trapezoid weights annihilate the discrete Laplacian and the
conserved models have ``f_S + f_I = 0`` node by node, both schemes conserve
``\\int (S + I)`` for MO and SO up to round-off.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityError, ValidationError
from .kinetics import ModelKind, reaction
from .spectral import solve_dfe

__all__ = [
    "State",
    "StepperConfig",
    "DiagnosticsTrace",
    "RunResult",
    "DissipationReport",
    "step",
    "run",
    "lyapunov_v",
    "lyapunov_w",
    "auto_lyapunov",
    "homogeneous_equilibria",
    "dissipation_check",
    "default_initial_state",
    "write_profile_csv",
    "read_profile_csv",
]

SCHEMES = ("imex_euler", "imex_trapezoid")


@dataclass(frozen=True, eq=False)
class State:
    S: np.ndarray
    I: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        I = np.asarray(self.I, dtype=float)
        if S.shape != I.shape or S.ndim != 1:
            raise ValidationError("S and I must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(I))):
            raise ValidationError("state contains non-finite values")
        if np.any(S < 0) or np.any(I < 0):
            raise ValidationError("state must be nonnegative")
        if self.t < 0:
            raise ValidationError("time must be nonnegative")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "I", I)


@dataclass
class StepperConfig:
    dt_initial: float = 0.05
    dt_min: float = 1e-8
    scheme: str = "imex_euler"
    positivity_retry: bool = True
    steady_tol: float = 1e-10
    t_max: float = 1e4
    trace_stride: int = 10
    max_steps: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not (0 < self.dt_min <= self.dt_initial):
            raise ValidationError("need 0 < dt_min <= dt_initial")
        if self.steady_tol <= 0 or self.t_max <= 0 or self.trace_stride < 1:
            raise ValidationError("steady_tol, t_max and trace_stride must be positive")


@dataclass
class DiagnosticsTrace:
    t: list = field(default_factory=list)
    total_S: list = field(default_factory=list)
    total_I: list = field(default_factory=list)
    min_I: list = field(default_factory=list)
    max_S: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)

    COLUMNS = ("t", "total_S", "total_I", "min_I", "max_S", "lyapunov")

    def record(self, state, grid, lyap=None):
        if self.t and state.t <= self.t[-1]:
            return
        self.t.append(float(state.t))
        self.total_S.append(grid.integrate(state.S))
        self.total_I.append(grid.integrate(state.I))
        self.min_I.append(float(state.I.min()))
        self.max_S.append(float(state.S.max()))
        self.lyapunov.append(None if lyap is None else float(lyap(state)))

    def __len__(self):
        return len(self.t)

    def array(self, name):
        return np.array([np.nan if v is None else v for v in getattr(self, name)], dtype=float)

    @property
    def total(self):
        return self.array("total_S") + self.array("total_I")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                w.writerow(["" if v is None else repr(float(v)) for v in row])


@dataclass
class RunResult:
    state: State
    trace: DiagnosticsTrace
    verdict: str  # "steady" or "t_max_reached"
    steps: int
    rate: float


def _implicit_update(lap, u, coef, explicit):
    """Return ``v`` solving ``(I - coef L) v = u + explicit``.

    Solved for the increment ``v - u`` so the round-off of the banded solve
    scales with the update rather than with ``u``; this keeps the weighted
    total of the conserved models exact to round-off over long runs.
    """
    return u + lap.solve_shifted(coef, coef * lap.apply(u) + explicit)


def _attempt(state, kind, coeffs, d_S, d_I, dt, scheme, lap):
    """One trial step; returns ``(S, I)`` or a ``(node, term)`` negativity report."""
    S, I = state.S, state.I
    f_S, f_I = reaction(kind, coeffs, S, I)
    if scheme == "imex_euler":
        S1 = _implicit_update(lap, S, dt * d_S, dt * f_S)
        I1 = _implicit_update(lap, I, dt * d_I, dt * f_I)
    else:
        # Crank-Nicolson: (I - dt/2 L) v = (I + dt/2 L) u + explicit
        #               = (I - dt/2 L) u + dt L u + explicit.
        LS = dt * d_S * lap.apply(S)
        LI = dt * d_I * lap.apply(I)
        hS, hI = 0.5 * dt * d_S, 0.5 * dt * d_I
        Sp = S + lap.solve_shifted(hS, LS + dt * f_S)
        Ip = I + lap.solve_shifted(hI, LI + dt * f_I)
        bad = _negative(Sp, Ip)
        if bad:
            return bad
        g_S, g_I = reaction(kind, coeffs, Sp, Ip)
        S1 = S + lap.solve_shifted(hS, LS + 0.5 * dt * (f_S + g_S))
        I1 = I + lap.solve_shifted(hI, LI + 0.5 * dt * (f_I + g_I))
    return _negative(S1, I1) or (S1, I1)


def _negative(S, I):
    for term, u in (("S", S), ("I", I)):
        if np.any(u < 0) or not np.all(np.isfinite(u)):
            bad = np.flatnonzero(~(u >= 0))
            return int(bad[0]), term
    return None


def step(state, kind, coeffs, d_S, d_I, config, dt=None):
    """Advance one accepted IMEX step; the accepted ``dt`` is ``new.t - state.t``.

    With ``config.positivity_retry`` a step producing a negative density is
    retried with half the time step, down to ``config.dt_min``.
    """
    kind = ModelKind(kind)
    lap = coeffs.grid.laplacian
    dt = config.dt_initial if dt is None else dt
    while True:
        out = _attempt(state, kind, coeffs, d_S, d_I, dt, config.scheme, lap)
        if not isinstance(out[0], (int, np.integer)):
            S1, I1 = out
            return State(S1, I1, state.t + dt)
        node, term = out
        if not config.positivity_retry or dt / 2 < config.dt_min:
            raise PositivityError(
                f"{term} went negative at node {node} (x = {coeffs.grid.nodes[node]:g}) with dt = {dt:g}",
                node=node, term=term,
            )
        dt /= 2


def run(state0, kind, coeffs, d_S, d_I, config=None, lyapunov=None):
    """Integrate until the discrete rate drops below ``config.steady_tol``.

    ``lyapunov`` is ``None``, a callable ``state -> float`` recorded in the
    trace, or ``"auto"`` (V or W, homogeneous MW with ``d_S == d_I`` only).
    """
    config = config or StepperConfig()
    kind = ModelKind(kind)
    grid = coeffs.grid
    if lyapunov == "auto":
        lyapunov = auto_lyapunov(kind, coeffs, d_S, d_I)
    trace = DiagnosticsTrace()
    state = state0
    trace.record(state, grid, lyapunov)
    dt = config.dt_initial
    n = 0
    rate = math.inf
    verdict = "t_max_reached"
    while state.t < config.t_max:
        if config.max_steps is not None and n >= config.max_steps:
            break
        new = step(state, kind, coeffs, d_S, d_I, config, dt=min(dt, config.t_max - state.t))
        h = new.t - state.t
        rate = (np.max(np.abs(new.S - state.S)) + np.max(np.abs(new.I - state.I))) / h
        state = new
        n += 1
        # Grow back towards dt_initial after a positivity retry.
        dt = min(config.dt_initial, 2 * h)
        if n % config.trace_stride == 0:
            trace.record(state, grid, lyapunov)
        if rate <= config.steady_tol:
            verdict = "steady"
            break
    trace.record(state, grid, lyapunov)
    return RunResult(state, trace, verdict, n, float(rate))


def homogeneous_equilibria(coeffs):
    """``(R0, dfe, ee)`` for constant MW coefficients; ``ee`` is None if R0 <= 1."""
    _require_homogeneous(coeffs)
    lam, beta, gamma, mu = (float(v) for v in coeffs.at(0))
    r0 = lam * beta / (gamma + mu)
    ee = None
    if r0 > 1:
        ee = ((gamma + mu) / beta, lam / mu * (1.0 - 1.0 / r0))
    return r0, (lam, 0.0), ee


def _require_homogeneous(coeffs):
    if not coeffs.is_homogeneous:
        raise ValidationError("Lyapunov functionals are only defined for constant coefficients")


def lyapunov_v(state, coeffs, grid=None):
    """``1/2 int (S - Lambda + I)^2 + (mu + 1)/beta int I``."""
    grid = coeffs.on(grid)
    _require_homogeneous(coeffs)
    lam, beta, _, mu = (float(v) for v in coeffs.at(0))
    S, I = grid.check(state.S, "S"), grid.check(state.I, "I")
    return 0.5 * grid.integrate((S - lam + I) ** 2) + (mu + 1) / beta * grid.integrate(I)


def lyapunov_w(state, coeffs, grid=None):
    """``1/2 int (S - S^ + I - I^)^2 + (mu + 1)/beta int (I - I^ - I^ ln(I / I^))``."""
    grid = coeffs.on(grid)
    r0, _, ee = homogeneous_equilibria(coeffs)
    if ee is None:
        raise ValidationError(f"W needs R0 > 1 (endemic equilibrium); R0 = {r0:g}")
    S_hat, I_hat = ee
    _, beta, _, mu = (float(v) for v in coeffs.at(0))
    S, I = grid.check(state.S, "S"), grid.check(state.I, "I")
    if np.any(I <= 0):
        raise ValidationError("W needs I > 0 at every node")
    x = I / I_hat
    # I - I^ - I^ ln(I/I^) = I^ (x - 1 - ln x), evaluated stably near x = 1.
    entropy = I_hat * (np.expm1(np.log(x)) - np.log(x))
    return 0.5 * grid.integrate((S - S_hat + I - I_hat) ** 2) + (mu + 1) / beta * grid.integrate(entropy)


def auto_lyapunov(kind, coeffs, d_S, d_I):
    if ModelKind(kind) is not ModelKind.MW or d_S != d_I:
        raise ValidationError("automatic Lyapunov functional needs model MW with d_S == d_I")
    r0, _, _ = homogeneous_equilibria(coeffs)
    if r0 > 1:
        return lambda s: lyapunov_w(s, coeffs)
    return lambda s: lyapunov_v(s, coeffs)


@dataclass
class DissipationReport:
    ok: bool
    theta: float | None
    absorbing_bound: float | None
    violations: list
    max_excess: float
    note: str = ""


def dissipation_check(trace, coeffs, kind, rtol=1e-8):
    """Check the L1 dissipation inequality ``d/dt int(S+I) <= int Lambda - theta int(S+I)``.

    For MW, ``theta = min(1, mu_min)``; each sampled interval must respect the
    Gronwall bound and the total must stay below
    ``max(initial, int Lambda / theta)``. For MO and SO the total must be
    constant. SW has no such inequality and is rejected.
    """
    kind = ModelKind(kind)
    grid = coeffs.grid
    t = np.asarray(trace.t, dtype=float)
    total = trace.total
    if kind.conserves_mass:
        excess = np.abs(total - total[0]) - rtol * abs(total[0])
        viol = np.flatnonzero(excess > 0).tolist()
        return DissipationReport(not viol, None, None, viol, float(max(excess.max(), 0.0)),
                                 note="conserved total")
    if kind is not ModelKind.MW:
        raise ValidationError("dissipation inequality is stated for MW only")
    theta = min(1.0, float(coeffs.mu.min()))
    level = grid.integrate(coeffs.lam) / theta
    bound = max(total[0], level)
    slack = rtol * max(1.0, bound)
    viol = []
    max_excess = 0.0
    for k in range(len(t) - 1):
        dt = t[k + 1] - t[k]
        # comparison ODE y' = int Lambda - theta y started from the sample;
        # an explicit reaction step may overshoot it by O((theta dt)^2)
        allowed = level + (total[k] - level) * math.exp(-theta * dt)
        scheme = 0.5 * (theta * dt) ** 2 * abs(level - total[k])
        ex = max(total[k + 1] - allowed - scheme, total[k + 1] - bound)
        max_excess = max(max_excess, ex)
        if ex > slack:
            viol.append(k + 1)
    return DissipationReport(not viol, theta, bound, viol, float(max(max_excess, 0.0)))


def default_initial_state(kind, coeffs, d_S, scale=1.0):
    """Initial data used by the figure runs.

    ``I0 = 0.1 (1 + cos 2 pi x / L) * scale``. For MW/SW ``S0`` is the
    disease-free S; for MO/SO ``S0`` is the constant that makes the total
    mass equal N.
    """
    kind = ModelKind(kind)
    grid = coeffs.grid
    x = grid.nodes
    I0 = 0.1 * (1.0 + np.cos(2 * np.pi * x / grid.length)) * scale
    if kind.conserves_mass:
        N = coeffs.require_mass()
        density = N / grid.length
        I0 = I0 * min(1.0, density)
        S0 = np.full_like(x, density - grid.integrate(I0) / grid.length)
        if np.any(S0 <= 0):
            raise ValidationError("initial infected mass exceeds N")
    else:
        S0 = solve_dfe(d_S, coeffs)
    return State(S0, I0, 0.0)


def write_profile_csv(path, grid, S, I):
    """``x,S,I`` rows at full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "S", "I"))
        for row in zip(grid.nodes, S, I):
            w.writerow([repr(float(v)) for v in row])


def read_profile_csv(path):
    """Inverse of :func:`write_profile_csv`: arrays ``(x, S, I)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != ("x", "S", "I"):
            raise ValidationError(f"{path}: expected header x,S,I")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float).reshape(-1, 3)
    return data[:, 0], data[:, 1], data[:, 2]
