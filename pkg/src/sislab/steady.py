"""
Endemic equilibria: Newton solves, continuation sweeps and limiting profiles.

The discrete steady problem is

    d_S L S + f_S(S, I) = 0,    d_I L I + f_I(S, I) = 0.

For MO and SO the weighted sum of all equations vanishes identically, so the
Jacobian is singular; the solve is bordered with the mass constraint
``int (S + I) = N`` and a scalar multiplier on the constant direction.

Newton updates keep densities positive: components that the Newton step
increases are updated additively, components it decreases are updated
multiplicatively, ``u * exp(alpha * du / u)``. This is the Newton step in
``log u`` for those components and lets exponentially small tails (which
appear for small diffusivities) move by many orders of magnitude without
ever crossing zero.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .dynamics import StepperConfig, State, default_initial_state, run
from .errors import (
    ConvergenceError,
    HypothesisError,
    ResolutionError,
    SolverError,
    ValidationError,
)
from .kinetics import ModelKind, reaction, reaction_jacobian
from .spectral import principal_eigenpair, solve_dfe

__all__ = [
    "SteadyResult",
    "SweepResult",
    "LimitProfile",
    "AuditReport",
    "newton_steady",
    "seed_by_dynamics",
    "elliptic_residual",
    "sweep",
    "mw_limit_ds0",
    "mw_ds0_susceptible",
    "mo_limit_wu_zou",
    "so_limit_peng",
    "audit_apriori",
    "di0_diagnostics",
    "resolution_cells",
    "support_fraction",
    "support_mask",
    "support_components",
]

DFE_RATIO = 1e-8
EPS = np.finfo(float).eps
TINY = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class SteadyResult:
    S: np.ndarray
    I: np.ndarray
    residual_inf: float
    newton_iterations: int
    constrained_mass: float | None = None
    branch: str = "endemic"  # or "disease_free"
    kind: ModelKind | None = None
    d_S: float | None = None
    d_I: float | None = None

    @property
    def is_endemic(self):
        return self.branch == "endemic"

    def state(self):
        return State(self.S, self.I)


@dataclass
class SweepResult:
    kind: ModelKind
    target: str
    diffusivities: list = field(default_factory=list)
    results: list = field(default_factory=list)
    other: float | None = None
    ratio: float | None = None
    failure: str | None = None

    @property
    def completed(self):
        return self.failure is None

    def __iter__(self):
        return iter(zip(self.diffusivities, self.results))

    def __len__(self):
        return len(self.results)

    def summary_rows(self, grid, threshold=1e-3):
        """Rows ``diffusivity,min_S,max_S,min_I,max_I,int_I,support_frac``."""
        return [
            (d, float(r.S.min()), float(r.S.max()), float(r.I.min()), float(r.I.max()),
             grid.integrate(r.I), support_fraction(r.I, grid, threshold))
            for d, r in self
        ]


@dataclass(frozen=True, eq=False)
class LimitProfile:
    S_limit: np.ndarray
    I_limit: object  # nodal array, or a scalar total when only int I is known
    provenance: str
    details: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- #
# Newton machinery

def elliptic_residual(kind, coeffs, d_S, d_I, S, I):
    """Nodal residuals ``(d_S L S + f_S, d_I L I + f_I)``."""
    lap = coeffs.grid.laplacian
    f_S, f_I = reaction(kind, coeffs, S, I)
    return d_S * lap.apply(S) + f_S, d_I * lap.apply(I) + f_I


def _positive_update(u, du, alpha):
    up = u + alpha * du
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        expo = np.where(du < 0, alpha * du / u, 0.0)
    down = np.maximum(u * np.exp(np.maximum(expo, -700.0)), TINY)
    return np.where(du >= 0, up, down)


def _newton(F, J, x0, n_pos, tol, floor, maxiter=100, max_backtracks=30):
    """Damped Newton on ``F(x) = 0``; the first ``n_pos`` unknowns stay positive.

    ``F`` returns a 1-D residual; ``J`` a sparse Jacobian. ``floor`` is the
    round-off level of the residual, used to recognise stagnation at machine
    precision. Returns ``(x, residual_inf, iterations)``.
    """
    x = np.array(x0, dtype=float)
    r = F(x)
    nr = np.linalg.norm(r)
    for it in range(1, maxiter + 1):
        res_inf = np.max(np.abs(r))
        if res_inf <= tol:
            return x, res_inf, it - 1
        try:
            dx = splu(sp.csc_matrix(J(x))).solve(-r)
        except RuntimeError as exc:
            raise ConvergenceError(f"singular Newton system: {exc}", residual=res_inf, iterations=it) from None
        if not np.all(np.isfinite(dx)):
            raise ConvergenceError("Newton direction is not finite", residual=res_inf, iterations=it)
        alpha = 1.0
        for _ in range(max_backtracks):
            xn = x.copy()
            xn[:n_pos] = _positive_update(x[:n_pos], dx[:n_pos], alpha)
            xn[n_pos:] = x[n_pos:] + alpha * dx[n_pos:]
            rn = F(xn)
            nrn = np.linalg.norm(rn)
            if np.isfinite(nrn) and nrn <= (1 - 1e-4 * alpha) * nr:
                break
            alpha *= 0.5
        else:
            if res_inf <= floor:
                return x, res_inf, it - 1
            raise ConvergenceError(
                f"Newton line search failed (residual {res_inf:.3e})", residual=res_inf, iterations=it
            )
        x, r, nr = xn, rn, nrn
    res_inf = np.max(np.abs(r))
    if res_inf <= max(tol, floor):
        return x, res_inf, maxiter
    raise ConvergenceError(f"Newton hit the iteration cap (residual {res_inf:.3e})",
                           residual=res_inf, iterations=maxiter)


def _roundoff_floor(grid, d, u_max):
    return 64 * EPS * (4 * d / grid.h ** 2 + 1) * max(u_max, 1.0)


def newton_steady(kind, d_S, d_I, coeffs, init, tol=1e-9, maxiter=100, grid=None):
    """Positive steady state of ``kind`` by damped Newton from ``init``.

    ``init`` is a :class:`State`, a :class:`SteadyResult` or an ``(S, I)``
    pair with positive entries. For MO and SO the mass ``coeffs.total_mass``
    is imposed through a bordered system. A solution with
    ``max I < 1e-8 max S`` is returned with ``branch="disease_free"``.
    """
    kind = ModelKind(kind)
    grid = coeffs.on(grid)
    n = grid.n_nodes
    S0, I0 = (init.S, init.I) if hasattr(init, "S") else init
    S0 = grid.check(S0, "init S")
    I0 = grid.check(I0, "init I")
    if np.any(S0 <= 0) or np.any(I0 <= 0):
        raise ValidationError("Newton initial guess must be strictly positive")
    if d_S <= 0 or d_I <= 0:
        raise ValidationError("diffusivities must be positive")
    L = grid.laplacian.matrix
    bordered = kind.conserves_mass
    if bordered:
        N = coeffs.require_mass()
        w = np.asarray(grid.weights)

    def F(x):
        S, I = x[:n], x[n:2 * n]
        rS, rI = elliptic_residual(kind, coeffs, d_S, d_I, S, I)
        if not bordered:
            return np.concatenate([rS, rI])
        sigma = x[2 * n]
        return np.concatenate([rS + sigma, rI + sigma, [np.dot(w, S + I) - N]])

    def J(x):
        S, I = x[:n], x[n:2 * n]
        jac = reaction_jacobian(kind, coeffs, S, I)
        blocks = [[d_S * L + sp.diags(jac[0, 0]), sp.diags(jac[0, 1])],
                  [sp.diags(jac[1, 0]), d_I * L + sp.diags(jac[1, 1])]]
        if bordered:
            ones = sp.csr_matrix(np.ones((n, 1)))
            blocks[0].append(ones)
            blocks[1].append(ones)
            blocks.append([sp.csr_matrix(w[None, :]), sp.csr_matrix(w[None, :]), None])
        return sp.bmat(blocks, format="csc")

    x0 = np.concatenate([S0, I0] + ([[0.0]] if bordered else []))
    floor = _roundoff_floor(grid, max(d_S, d_I), max(S0.max(), I0.max()))
    iters = 0
    x = x0
    for _ in range(4):
        x, res, k = _newton(F, J, x, 2 * n, tol, floor, maxiter=maxiter)
        iters += k
        S, I = x[:n], x[n:2 * n]
        ratio = I.max() / S.max()
        # Near-DFE iterates shrink I by a constant factor per step; keep going
        # until the branch is unambiguous.
        if ratio < DFE_RATIO or ratio > 1e-4:
            break
        tol_dfe = tol * DFE_RATIO
        x, res, k = _newton(F, J, x, 2 * n, max(tol_dfe, 1e-300), max(floor, tol), maxiter=maxiter)
        iters += k
        S, I = x[:n], x[n:2 * n]
        if I.max() / S.max() < DFE_RATIO or I.max() / S.max() > 1e-4:
            break
    rS, rI = elliptic_residual(kind, coeffs, d_S, d_I, S, I)
    residual = float(max(np.max(np.abs(rS)), np.max(np.abs(rI))))
    branch = "disease_free" if I.max() < DFE_RATIO * S.max() else "endemic"
    return SteadyResult(
        S.copy(), I.copy(), residual, iters,
        constrained_mass=coeffs.total_mass if bordered else None,
        branch=branch, kind=kind, d_S=float(d_S), d_I=float(d_I),
    )


# --------------------------------------------------------------------------- #
# profile metrics

def support_mask(I, threshold=1e-3):
    I = np.asarray(I)
    return I > threshold * I.max()


def support_fraction(I, grid, threshold=1e-3):
    """Measure of ``{I > threshold * max I}`` divided by the domain length."""
    mask = support_mask(I, threshold)
    return float(np.dot(grid.weights, mask) / grid.length)


def support_components(I, threshold=1e-3):
    """Number of maximal runs of nodes where ``I > threshold * max I``."""
    mask = support_mask(I, threshold).astype(int)
    return int(np.sum(np.diff(np.concatenate([[0], mask])) == 1))


def resolution_cells(u):
    """Cells spanned by the steepest part of ``u``: ``(max - min) / max |du|``."""
    u = np.asarray(u)
    jump = np.max(np.abs(np.diff(u)))
    if jump == 0:
        return math.inf
    return float(np.ptp(u) / jump)


# --------------------------------------------------------------------------- #
# continuation

_TARGETS = ("d_S_to_zero", "d_I_to_zero", "both")


def _pair(target, value, other, ratio):
    if target == "d_S_to_zero":
        return value, other
    if target == "d_I_to_zero":
        return other, value
    return value, ratio * value


def seed_by_dynamics(kind, coeffs, d_S, d_I, config=None):
    """Run the parabolic problem from the default initial data to near-steady."""
    config = config or StepperConfig(dt_initial=0.05, steady_tol=1e-7, t_max=5e3)
    out = run(default_initial_state(kind, coeffs, d_S), kind, coeffs, d_S, d_I, config)
    return out.state


def sweep(kind, target, coeffs, schedule, other=None, ratio=None, tol=1e-9, init=None,
          min_cells=6, max_refine=8, seed_config=None, grid=None):
    """Continuation of the endemic equilibrium along a decreasing schedule.

    ``target`` is ``"d_S_to_zero"`` (``other`` = fixed d_I),
    ``"d_I_to_zero"`` (``other`` = fixed d_S) or ``"both"`` (d_I = ``ratio``
    times the scheduled d_S). The first entry is seeded by a dynamics run
    unless ``init`` is given; each later entry starts from the previous one.
    When a step fails it is split geometrically (up to ``max_refine`` times).
    A failure, or a profile resolved over fewer than ``min_cells`` cells,
    stops the sweep; the partial result carries the reason in ``failure``.
    """
    kind = ModelKind(kind)
    if target not in _TARGETS:
        raise ValidationError(f"target must be one of {_TARGETS}")
    sched = [float(v) for v in schedule]
    if not sched or any(v <= 0 for v in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValidationError("schedule must be positive and strictly decreasing")
    if target == "both":
        if not (ratio and ratio > 0):
            raise ValidationError("target 'both' needs a positive ratio d = d_I / d_S")
    elif not (other and other > 0):
        raise ValidationError("sweep needs the fixed diffusivity 'other'")
    grid = coeffs.on(grid)
    out = SweepResult(kind, target, other=other, ratio=ratio)
    d_S, d_I = _pair(target, sched[0], other, ratio)
    current = init if init is not None else seed_by_dynamics(kind, coeffs, d_S, d_I, seed_config)
    prev_value = None
    for value in sched:
        try:
            res = _continue(kind, coeffs, target, other, ratio, prev_value, value, current, tol, max_refine)
        except SolverError as exc:
            out.failure = f"solve failed at {value:g}: {exc}"
            return out
        if not res.is_endemic:
            out.failure = f"converged to the disease-free branch at {value:g}"
            return out
        if min_cells:
            cells = min(resolution_cells(res.S), resolution_cells(res.I))
            if cells < min_cells:
                suggestion = int(math.ceil(grid.n_cells * min_cells / cells / 4.0) * 4)
                out.failure = str(ResolutionError(
                    f"profile at {value:g} resolved over {cells:.2f} cells (< {min_cells}); "
                    f"try n_cells >= {suggestion}", suggested_n_cells=suggestion))
                return out
        out.diffusivities.append(value)
        out.results.append(res)
        current, prev_value = res, value
    return out


def _continue(kind, coeffs, target, other, ratio, start, value, init, tol, max_refine):
    """Newton at ``value``; on failure, walk there from ``start`` in smaller steps."""
    d_S, d_I = _pair(target, value, other, ratio)
    try:
        res = newton_steady(kind, d_S, d_I, coeffs, init, tol=tol)
    except SolverError:
        if start is None or max_refine <= 0:
            raise
    else:
        # Dropping onto the disease-free branch from an endemic start usually
        # means the step was too long; retry in smaller steps before accepting.
        if res.is_endemic or start is None or max_refine <= 0 or np.max(init.I) < DFE_RATIO * np.max(init.S):
            return res
    mid = math.sqrt(start * value)
    halfway = _continue(kind, coeffs, target, other, ratio, start, mid, init, tol, max_refine - 1)
    return _continue(kind, coeffs, target, other, ratio, mid, value, halfway, tol, max_refine - 1)


# --------------------------------------------------------------------------- #
# limiting profiles

def mw_ds0_susceptible(I, coeffs):
    """``(Lambda + gamma I) / (1 + beta I)``: S in terms of I when ``d_S -> 0``."""
    I = np.asarray(I, dtype=float)
    return (coeffs.lam + coeffs.gamma * I) / (1 + coeffs.beta * I)


def mw_limit_ds0(d_I, coeffs, init=None, tol=1e-10, maxiter=100, grid=None):
    """Limit of the MW equilibrium as ``d_S -> 0`` at fixed ``d_I``.

    Solves ``-d_I I'' = beta S I - (gamma + mu) I`` with
    ``S = (Lambda + gamma I) / (1 + beta I)`` substituted, after checking that
    the principal eigenvalue for the potential ``beta Lambda - gamma - mu`` is
    negative.
    """
    grid = coeffs.on(grid)
    lam, beta, gamma, mu = coeffs.lam, coeffs.beta, coeffs.gamma, coeffs.mu
    eig = principal_eigenpair(d_I, beta * lam - gamma - mu, grid)
    if eig.eigenvalue >= 0:
        raise HypothesisError(
            f"limit needs lambda_0 < 0 for the potential beta*Lambda - gamma - mu; got {eig.eigenvalue:.6g}"
        )
    L = grid.laplacian.matrix

    def S_of(I):
        return mw_ds0_susceptible(I, coeffs)

    def F(I):
        return d_I * grid.laplacian.apply(I) + beta * S_of(I) * I - (gamma + mu) * I

    def J(I):
        dg = beta * (lam + 2 * gamma * I + beta * gamma * I * I) / (1 + beta * I) ** 2 - (gamma + mu)
        return (d_I * L + sp.diags(dg)).tocsc()

    I0 = eig.eigenfunction * float(np.max(lam)) if init is None else grid.check(init, "init")
    floor = _roundoff_floor(grid, d_I, float(np.max(I0)))
    I, res, it = _newton(F, J, I0, grid.n_nodes, tol, floor, maxiter=maxiter)
    return LimitProfile(S_of(I), I, "mw_ds0: S = (Lambda + gamma I)/(1 + beta I), reduced I-equation",
                        {"residual": res, "iterations": it, "lambda_0": eig.eigenvalue})


def _wu_zou_I(m, d, density, beta, gamma, length):
    return np.maximum(density * beta - gamma - (1 - d) * beta * m / length, 0.0) / (d * beta)


def mo_limit_wu_zou(d, coeffs, N=None, tol=1e-12, maxiter=200, grid=None):
    """Limit of the MO equilibrium as ``d_I -> 0`` with ``d_I / d_S -> d``.

    ``I`` solves ``{(N/|O|) beta - gamma - (1 - d) beta m / |O|}_+ = d beta I``
    with ``m = int I``, found by bisection on ``G(m) = int I(m) - m`` over
    ``[0, N]``; ``S = N/|O| - (1 - d) m / |O| - d I``.
    """
    if not d > 0:
        raise ValidationError("d must be positive")
    grid = coeffs.on(grid)
    N = coeffs.require_mass() if N is None else float(N)
    length = grid.length
    density = N / length
    beta, gamma = coeffs.beta, coeffs.gamma
    omega_plus = density * beta - gamma > 0
    if not omega_plus.any():
        raise HypothesisError("Omega+ = {(N/|Omega|) beta > gamma} is empty")

    def G(m):
        return grid.integrate(_wu_zou_I(m, d, density, beta, gamma, length)) - m

    lo, hi = 0.0, N
    g_lo, g_hi = G(lo), G(hi)
    if g_lo == 0:
        hi = lo
    elif g_hi == 0:
        lo = hi
    elif not (g_lo > 0 > g_hi):
        raise SolverError(f"no sign change of G on [0, N]: G(0) = {g_lo:.3g}, G(N) = {g_hi:.3g}")
    # G is strictly decreasing; bisect down to adjacent floats
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
    m = 0.5 * (lo + hi)
    if hi - lo > tol * max(1.0, N):
        raise ConvergenceError("bisection did not reach the root tolerance", residual=abs(G(m)), iterations=maxiter)
    I = _wu_zou_I(m, d, density, beta, gamma, length)
    S = density - (1 - d) * m / length - d * I
    return LimitProfile(S, I, f"wu_zou: d = {d:g}", {"m": m, "omega_plus": omega_plus, "N": N})


def so_limit_peng(d0, coeffs, N=None, grid=None):
    """Limit of the SO equilibrium as ``d_I -> 0`` with ``d_I / d_S -> d0``.

    ``d0`` may be 0, a positive number or ``math.inf``. Needs high-risk
    sites, and for ``d0 > 0`` also low-risk sites.
    """
    grid = coeffs.on(grid)
    N = coeffs.require_mass() if N is None else float(N)
    beta, gamma = coeffs.beta, coeffs.gamma
    diff = beta - gamma
    if not np.any(diff > 0):
        raise HypothesisError("needs high-risk sites (beta > gamma); H+ is empty")
    # The d0 = 0 formula stays well defined without low-risk sites.
    if d0 != 0 and not np.any(diff < 0):
        raise HypothesisError("needs low-risk sites (beta < gamma); H- is empty")
    pos = np.maximum(diff, 0.0)
    if d0 == 0:
        denom = grid.integrate(1 + pos / gamma)
        S = np.full(grid.n_nodes, N / denom)
        I = N * (pos / gamma) / denom
        prov = "peng: d0 = 0"
    elif math.isinf(d0):
        A = (diff > 0).astype(float)
        S = N * (1 - A) / grid.integrate(1 - A)
        I = np.zeros(grid.n_nodes)
        prov = "peng: d0 = inf (S limit holds on compact subsets of H- and H+)"
    elif d0 > 0:
        A = d0 * pos / (d0 * diff + gamma)
        denom = grid.integrate(A + d0 * (1 - A))
        S = N * d0 * (1 - A) / denom
        I = N * A / denom
        prov = f"peng: d0 = {d0:g}"
    else:
        raise ValidationError("d0 must be >= 0")
    return LimitProfile(S, I, prov, {"N": N})


# --------------------------------------------------------------------------- #
# audits

@dataclass
class AuditReport:
    checks: dict  # name -> (passed, slack)

    @property
    def ok(self):
        return all(p for p, _ in self.checks.values())

    def failed(self):
        return [k for k, (p, _) in self.checks.items() if not p]


def audit_apriori(result, kind, coeffs, eps_h=None, rtol=1e-8, grid=None):
    """A-priori bounds of an MW equilibrium.

    (i)   ``max S <= max(Lambda_max, max gamma/beta)``
    (ii)  ``min S >= min(Lambda_min, min gamma/beta)``
    (iii) ``int S + int mu I = int Lambda`` (relative ``rtol``)
    (iv)  ``beta_min int S I <= (gamma_max + mu_max) int I``

    ``slack`` is the signed margin; negative means violated.
    """
    if ModelKind(kind) is not ModelKind.MW:
        raise ValidationError("a-priori audit is stated for MW")
    grid = coeffs.on(grid)
    lam, beta, gamma, mu = coeffs.lam, coeffs.beta, coeffs.gamma, coeffs.mu
    S, I = grid.check(result.S, "S"), grid.check(result.I, "I")
    ratio = gamma / beta
    upper = max(lam.max(), ratio.max())
    lower = min(lam.min(), ratio.min())
    if eps_h is None:
        eps_h = 1e-6 * upper
    int_lam = grid.integrate(lam)
    balance = grid.integrate(S) + grid.integrate(mu * I)
    int_I = grid.integrate(I)
    checks = {
        "max_S": upper + eps_h - S.max(),
        "min_S": S.min() - (lower - eps_h),
        "mass_balance": rtol * int_lam - abs(balance - int_lam),
        "SI_bound": (gamma.max() + mu.max()) * int_I + eps_h - beta.min() * grid.integrate(S * I),
    }
    return AuditReport({k: (bool(v >= 0), float(v)) for k, v in checks.items()})


@dataclass
class Di0Report:
    diffusivities: list
    min_S: list
    lower_bound: float
    int_I: list
    relative_changes: list
    support_fraction: list
    S_flatness: list
    hypothesis_margin: float

    @property
    def min_S_ok(self):
        return all(s >= self.lower_bound - 1e-6 for s in self.min_S)


def di0_diagnostics(sweep_result, coeffs, threshold=1e-3, grid=None):
    """Observables of an MW sweep with ``d_I -> 0`` at fixed ``d_S``.

    Reports min S against ``min(Lambda_min, min gamma/beta)``, the sequence of
    ``int I`` and its successive relative changes, the support fraction of
    ``I`` and the flatness ``max S - min S``.
    """
    if sweep_result.kind is not ModelKind.MW or sweep_result.target != "d_I_to_zero":
        raise ValidationError("di0 diagnostics need an MW sweep with target d_I_to_zero")
    grid = coeffs.on(grid)
    if grid.length != 1.0:
        raise ValidationError("di0 diagnostics are for the unit interval")
    S_dfe = solve_dfe(sweep_result.other, coeffs)
    margin = float(np.max(coeffs.beta * S_dfe - coeffs.gamma - coeffs.mu))
    if margin <= 0:
        raise HypothesisError(
            f"needs beta*S_dfe > gamma + mu somewhere; min(gamma + mu - beta*S_dfe) = {-margin:.6g}"
        )
    int_I = [grid.integrate(r.I) for r in sweep_result.results]
    rel = [abs(b - a) / abs(b) for a, b in zip(int_I, int_I[1:])]
    return Di0Report(
        list(sweep_result.diffusivities),
        [float(r.S.min()) for r in sweep_result.results],
        float(min(coeffs.lam.min(), (coeffs.gamma / coeffs.beta).min())),
        int_I,
        rel,
        [support_fraction(r.I, grid, threshold) for r in sweep_result.results],
        [float(np.ptp(r.S)) for r in sweep_result.results],
        margin,
    )
