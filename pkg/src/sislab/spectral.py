"""
Disease-free equilibrium, principal eigenpairs and basic reproduction numbers.

Every reproduction number of the four models is the maximum of a Rayleigh
quotient

    R0 = sup  <num phi, phi> / ( d_I |phi'|^2 + <den phi, phi> )

with a model dependent pair ``(num, den)``:

=====  ====================  ===========
model  num                   den
=====  ====================  ===========
MW     beta * S_dfe          gamma + mu
MO     beta * N / |Omega|    gamma
SO/SW  beta                  gamma
=====  ====================  ===========

On the grid this is the largest eigenvalue of the symmetric pencil
``(W diag(num), d_I K + W diag(den))`` where ``W`` holds the trapezoid weights
and ``K`` is the stiffness matrix. Both the eigenpair problem and the pencil
are reduced to symmetric tridiagonal form, located with LAPACK bisection and
refined by shifted inverse iteration.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import ConvergenceError, HypothesisError, SolverError, ValidationError
from .kinetics import ModelKind

__all__ = [
    "EigenResult",
    "R0Result",
    "solve_dfe",
    "principal_eigenpair",
    "r0_pencil",
    "compute_r0",
    "rayleigh_quotient",
    "r0_limits",
    "lambda_star",
    "find_threshold_di",
]


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalue: float
    eigenfunction: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class R0Result:
    value: float
    maximizer: np.ndarray
    model: ModelKind
    d_I: float
    d_S: float | None
    iterations: int = 0


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return float(value)


def solve_dfe(d_S, coeffs, grid=None, rtol=1e-11):
    """Solve ``-d_S S'' = Lambda - S`` with Neumann ends; returns the nodal S."""
    d_S = _positive("d_S", d_S)
    grid = coeffs.on(grid)
    lap = grid.laplacian
    # Solve for the deviation from Lambda; exact when Lambda is constant.
    S = coeffs.lam + lap.solve_shifted(d_S, d_S * lap.apply(coeffs.lam))
    res = S - d_S * lap.apply(S) - coeffs.lam
    scale = np.max(np.abs(coeffs.lam)) * (1.0 + 4.0 * d_S / grid.h ** 2)
    if np.max(np.abs(res)) > rtol * scale:
        raise SolverError("disease-free equilibrium solve is inaccurate", residual=float(np.max(np.abs(res))))
    if np.any(S <= 0):
        raise SolverError("disease-free equilibrium lost positivity")
    return S


def _inverse_iteration(diag, off, shift, y0, tol=1e-14, maxiter=50):
    """Refine the eigenvector of a symmetric tridiagonal matrix nearest ``shift``."""
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[2, :-1] = off
    # Keep the shift strictly below the lowest eigenvalue: T - sigma is then an
    # M-matrix (off-diagonals are <= 0) and its inverse maps positive vectors
    # to strictly positive ones.
    norm = np.abs(diag).max() + 2 * np.abs(off).max()
    sigma = shift - max(1e-12 * max(1.0, abs(shift)), 100 * np.finfo(float).eps * norm)
    ab[1] = diag - sigma
    y = np.abs(y0) / np.linalg.norm(y0)
    lam = shift
    for it in range(1, maxiter + 1):
        z = solve_banded((1, 1), ab, y, check_finite=False)
        z /= np.linalg.norm(z)
        Tz = diag * z
        Tz[:-1] += off * z[1:]
        Tz[1:] += off * z[:-1]
        lam = float(z @ Tz)
        delta = np.linalg.norm(z - y)
        y = z
        if delta < tol * 10 or np.linalg.norm(Tz - lam * z) <= tol * (abs(lam) + np.abs(diag).max()):
            return lam, y, it
    return lam, y, maxiter


def _lowest_mode(diag, off):
    lam0, y0 = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    y0 = y0[:, 0]
    if y0.sum() < 0:
        y0 = -y0
    return _inverse_iteration(diag, off, float(lam0[0]), y0)


def _energy(phi, grid):
    """Discrete Dirichlet energy ``phi.K.phi`` in cancellation-free form."""
    return float(np.sum(np.diff(phi) ** 2) / grid.h)


def principal_eigenpair(d_I, potential, grid, tol=1e-10):
    """Smallest eigenvalue of ``-d_I u'' - potential u`` (Neumann), positive mode.

    The eigenfunction is normalised to ``max = 1``. ``residual`` is the
    sup-norm of ``d_I L psi + potential psi + lambda psi`` divided by the
    operator scale ``1 + 4 d_I / h^2 + max|potential|``.
    """
    d_I = _positive("d_I", d_I)
    p = grid.check(potential, "potential")
    w = grid.weights
    kd, ko = grid.laplacian.stiffness
    diag = d_I * kd / w - p
    off = d_I * ko / np.sqrt(w[:-1] * w[1:])
    _, y, it = _lowest_mode(diag, off)
    psi = y / np.sqrt(w)
    psi /= psi.max()
    lam = (d_I * _energy(psi, grid) - np.dot(w * p, psi * psi)) / np.dot(w, psi * psi)
    r = d_I * grid.laplacian.apply(psi) + p * psi + lam * psi
    scale = 1.0 + 4.0 * d_I / grid.h ** 2 + np.max(np.abs(p))
    residual = float(np.max(np.abs(r)) / scale)
    if residual > tol:
        raise ConvergenceError("principal eigenpair did not converge", residual=residual, iterations=it)
    if np.any(psi <= 0):
        raise SolverError("principal eigenfunction is not strictly positive; grid too coarse for this d_I")
    return EigenResult(float(lam), psi, residual, it)


def r0_pencil(kind, d_S, coeffs):
    """Return the ``(num, den)`` fields of the reproduction-number quotient."""
    kind = ModelKind(kind)
    if kind is ModelKind.MW:
        S_dfe = solve_dfe(d_S, coeffs)
        return coeffs.beta * S_dfe, coeffs.gamma + coeffs.mu
    if kind is ModelKind.MO:
        density = coeffs.require_mass() / coeffs.grid.length
        return coeffs.beta * density, np.array(coeffs.gamma)
    return np.array(coeffs.beta), np.array(coeffs.gamma)


def rayleigh_quotient(phi, d_I, num, den, grid):
    """Discrete quotient ``<num phi, phi>_w / (d_I phi.K.phi + <den phi, phi>_w)``."""
    phi = grid.check(phi, "phi")
    w = grid.weights
    return float(np.dot(w * num, phi * phi) / (d_I * _energy(phi, grid) + np.dot(w * den, phi * phi)))


def _r0_power(d_I, num, den, grid, tol=1e-12, maxiter=10_000):
    """Power iteration on ``B^{-1} A``; kept as an independent route for tests."""
    w = grid.weights
    kd, ko = grid.laplacian.stiffness
    n = grid.n_nodes
    ab = np.zeros((3, n))
    ab[0, 1:] = d_I * ko
    ab[1] = d_I * kd + w * den
    ab[2, :-1] = d_I * ko
    phi = np.ones(n)
    value = 0.0
    for it in range(1, maxiter + 1):
        z = solve_banded((1, 1), ab, w * num * phi, check_finite=False)
        new = rayleigh_quotient(z, d_I, num, den, grid)
        z /= z.max()
        if abs(new - value) <= tol * new:
            return new, z, it
        phi, value = z, new
    raise ConvergenceError("R0 power iteration hit its iteration cap", iterations=maxiter)


def compute_r0(kind, d_I, d_S, coeffs, grid=None, method="lapack"):
    """Basic reproduction number of ``kind`` at diffusivities ``(d_I, d_S)``.

    Only MW depends on ``d_S`` (through the disease-free S). ``method="power"``
    runs plain power iteration instead of the tridiagonal eigensolver; it is
    slow for small ``d_I`` and is meant as a cross-check.
    """
    kind = ModelKind(kind)
    d_I = _positive("d_I", d_I)
    d_S = _positive("d_S", d_S)
    grid = coeffs.on(grid)
    num, den = r0_pencil(kind, d_S, coeffs)
    if method == "power":
        value, phi, it = _r0_power(d_I, num, den, grid)
    elif method == "lapack":
        w = grid.weights
        kd, ko = grid.laplacian.stiffness
        a = w * num
        diag = (d_I * kd + w * den) / a
        off = d_I * ko / np.sqrt(a[:-1] * a[1:])
        mu0, y, it = _lowest_mode(diag, off)
        phi = y / np.sqrt(a)
        phi /= phi.max()
        value = rayleigh_quotient(phi, d_I, num, den, grid)
        # LAPACK's eigenvalue is only accurate to eps * ||T|| in absolute terms.
        slack = 1e-9 + 1e3 * np.finfo(float).eps * (np.abs(diag).max() + 2 * np.abs(off).max()) * value
        if abs(value * mu0 - 1.0) > slack:
            raise ConvergenceError("R0 eigen-solve inconsistent with its Rayleigh quotient",
                                   residual=abs(value * mu0 - 1.0), iterations=it)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if np.any(phi <= 0):
        raise SolverError("R0 maximiser is not strictly positive")
    return R0Result(value, phi, kind, d_I, d_S if kind is ModelKind.MW else None, it)


def lambda_star(kind, d_I, d_S, coeffs, grid=None):
    """Principal eigenvalue for the potential ``num - den`` of ``kind``."""
    grid = coeffs.on(grid)
    num, den = r0_pencil(kind, d_S, coeffs)
    return principal_eigenpair(d_I, num - den, grid)


def r0_limits(kind, d_S, coeffs, grid=None):
    """Limits of R0 as ``d_I -> 0`` (max num/den) and ``d_I -> inf`` (ratio of integrals)."""
    grid = coeffs.on(grid)
    num, den = r0_pencil(kind, _positive("d_S", d_S), coeffs)
    return float(np.max(num / den)), grid.integrate(num) / grid.integrate(den)


def find_threshold_di(kind, d_S, coeffs, grid=None, bracket=None, tol=1e-8, maxiter=200):
    """Diffusivity ``d_I*`` where R0 crosses 1, by bisection in ``log d_I``.

    Needs ``int num < int den`` and a sign change of ``num - den``; otherwise a
    :class:`HypothesisError` explains which case applies.
    """
    grid = coeffs.on(grid)
    num, den = r0_pencil(kind, _positive("d_S", d_S), coeffs)
    int_num, int_den = grid.integrate(num), grid.integrate(den)
    if np.all(num - den <= 0):
        raise HypothesisError(
            f"num - den <= 0 everywhere (max = {np.max(num - den):.6g}): R0 <= 1 for all d_I, no threshold"
        )
    if int_num >= int_den:
        raise HypothesisError(
            f"int num = {int_num:.6g} >= int den = {int_den:.6g}: R0 > 1 for all d_I, no threshold"
        )

    def excess(log_d):
        return compute_r0(kind, math.exp(log_d), d_S, coeffs, grid).value - 1.0

    if bracket is None:
        lo, hi = 0.0, 0.0
        while excess(lo) <= 0:
            lo -= math.log(10.0)
            if lo < math.log(1e-8):
                raise HypothesisError("R0 < 1 down to d_I = 1e-8; refine the grid or supply a bracket")
        while excess(hi) >= 0:
            hi += math.log(10.0)
            if hi > math.log(1e8):
                raise HypothesisError("R0 > 1 up to d_I = 1e8; supply a bracket")
    else:
        lo, hi = (math.log(_positive("bracket", b)) for b in bracket)
        e_lo, e_hi = excess(lo), excess(hi)
        if not (e_lo > 0 > e_hi):
            raise HypothesisError(
                f"bracket does not straddle R0 = 1: R0(lo) - 1 = {e_lo:.3g}, R0(hi) - 1 = {e_hi:.3g}"
            )
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        e = excess(mid)
        if abs(e) <= tol:
            return math.exp(mid)
        if e > 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("threshold bisection hit its iteration cap", residual=abs(e), iterations=maxiter)
