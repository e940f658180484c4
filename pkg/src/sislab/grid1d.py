"""
Uniform 1-D mesh on ``[0, L]`` with trapezoid quadrature and a Neumann Laplacian.

Nodes sit on cell edges, ``x_i = i h`` for ``i = 0..n``. The Laplacian uses the
reflected ghost node ``u_{-1} = u_1`` (and symmetrically at ``x = L``), which
makes it self-adjoint in the trapezoid inner product and gives it vanishing
weighted column sums. The second property is what makes the mass-conserving
models conserve ``\\int (S + I)`` to round-off.

Fields are plain 1-D :class:`numpy.ndarray` objects of length ``n + 1``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .errors import ValidationError

__all__ = ["Grid", "NeumannLaplacian", "build_grid", "integrate", "apply_laplacian"]


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n_cells`` cells on ``[0, length]``."""

    n_cells: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValidationError(f"n_cells must be an integer >= 4, got {self.n_cells!r}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValidationError(f"length must be positive, got {self.length!r}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self):
        return self.length / self.n_cells

    @property
    def n_nodes(self):
        return self.n_cells + 1

    @cached_property
    def nodes(self):
        x = np.arange(self.n_nodes) * self.h
        x[-1] = self.length
        return _frozen(x)

    @cached_property
    def weights(self):
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return _frozen(w)

    def check(self, f, name="field"):
        """Return ``f`` as a float array after checking it lives on this grid."""
        a = np.asarray(f, dtype=float)
        if a.shape != (self.n_nodes,):
            raise ValidationError(
                f"{name} has shape {a.shape}, grid expects ({self.n_nodes},)"
            )
        if not np.all(np.isfinite(a)):
            raise ValidationError(f"{name} contains non-finite values")
        return a

    def integrate(self, f):
        return integrate(self, f)

    def inner(self, u, v):
        """Weighted inner product ``<u, v>_w``."""
        return float(np.dot(self.weights, self.check(u) * self.check(v)))

    def sample(self, func):
        """Evaluate a vectorised callable at the nodes."""
        return self.check(np.broadcast_to(func(self.nodes), (self.n_nodes,)).copy())

    @cached_property
    def laplacian(self):
        return NeumannLaplacian(self)


def build_grid(n_cells, length=1.0):
    """Build a :class:`Grid`; raises :class:`ValidationError` for ``n_cells < 4``."""
    return Grid(n_cells, length)


def integrate(grid, f):
    """Trapezoid rule on the grid nodes (exact for affine data)."""
    return float(np.dot(grid.weights, grid.check(f)))


@dataclass(frozen=True, eq=False)
class NeumannLaplacian:
    """Second-order discrete Laplacian with reflecting Neumann closure.

    The operator is stored by diagonals: ``lower[i]`` couples row ``i + 1`` to
    column ``i`` and ``upper[i]`` couples row ``i`` to column ``i + 1``.
    """

    grid: Grid
    lower: np.ndarray = field(init=False, repr=False)
    diag: np.ndarray = field(init=False, repr=False)
    upper: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, h2 = self.grid.n_nodes, self.grid.h ** 2
        lower = np.full(n - 1, 1.0 / h2)
        upper = np.full(n - 1, 1.0 / h2)
        upper[0] = 2.0 / h2
        lower[-1] = 2.0 / h2
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "diag", _frozen(np.full(n, -2.0 / h2)))
        object.__setattr__(self, "upper", _frozen(upper))

    def apply(self, u):
        u = self.grid.check(u)
        out = self.diag * u
        out[:-1] += self.upper * u[1:]
        out[1:] += self.lower * u[:-1]
        return out

    __call__ = apply

    @cached_property
    def matrix(self):
        """The operator as a CSR matrix."""
        return sp.diags([self.lower, self.diag, self.upper], [-1, 0, 1], format="csr")

    @cached_property
    def stiffness(self):
        """Symmetric positive semi-definite ``K = -W L`` as ``(diag, offdiag)``.

        ``phi @ K @ phi`` is the discrete Dirichlet energy ``\\int |phi'|^2``.
        """
        w = self.grid.weights
        d = -w * self.diag
        off = -w[:-1] * self.upper
        return _frozen(d), _frozen(off)

    def stiffness_matrix(self):
        d, off = self.stiffness
        return sp.diags([off, d, off], [-1, 0, 1], format="csr")

    def solve_shifted(self, coef, rhs):
        """Solve ``(I - coef * L) u = rhs`` with a banded solve (``coef >= 0``)."""
        n = self.grid.n_nodes
        ab = np.zeros((3, n))
        ab[0, 1:] = -coef * self.upper
        ab[1] = 1.0 - coef * self.diag
        ab[2, :-1] = -coef * self.lower
        return solve_banded((1, 1), ab, rhs, check_finite=False)


def apply_laplacian(op, u):
    """Apply ``op`` to the nodal field ``u``."""
    return op.apply(u)
