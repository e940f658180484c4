import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from sislab import Grid, ValidationError, integrate
from sislab.grid1d import apply_laplacian


def dense_neumann(n, h):
    # Reflected ghost nodes written out row by row.
    L = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        left = i - 1 if i > 0 else 1
        right = i + 1 if i < n else n - 1
        L[i, left] += 1 / h**2
        L[i, right] += 1 / h**2
        L[i, i] -= 2 / h**2
    return L


def test_nodes_and_weights():
    g = Grid(8, length=2.0)
    assert g.h == 0.25 and g.n_nodes == 9
    np.testing.assert_allclose(g.nodes, np.linspace(0, 2, 9))
    assert g.weights.sum() == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


@pytest.mark.parametrize("n", [3, 0, 4.5])
def test_rejects_bad_cell_count(n):
    with pytest.raises(ValidationError):
        Grid(n)


def test_rejects_bad_length():
    with pytest.raises(ValidationError):
        Grid(10, length=0.0)


def test_integrate_matches_scipy_trapezoid():
    g = Grid(50)
    f = np.exp(g.nodes) * np.cos(3 * g.nodes)
    assert integrate(g, f) == pytest.approx(trapezoid(f, g.nodes), rel=1e-14)


def test_integrate_constant_exact():
    g = Grid(7, length=3.0)
    assert g.integrate(np.full(g.n_nodes, 2.5)) == pytest.approx(7.5, abs=1e-14)


def test_check_rejects_wrong_shape_and_nan():
    g = Grid(4)
    with pytest.raises(ValidationError):
        g.check(np.zeros(4))
    with pytest.raises(ValidationError):
        g.check(np.array([0, 1, np.nan, 0, 0.0]))


def test_laplacian_matches_dense_construction():
    g = Grid(12, length=1.5)
    np.testing.assert_allclose(g.laplacian.matrix.toarray(), dense_neumann(12, g.h), rtol=1e-14)


def test_laplacian_quadratic_second_difference():
    g = Grid(20)
    u = g.nodes**2
    Lu = apply_laplacian(g.laplacian, u)
    np.testing.assert_allclose(Lu[1:-1], 2.0, rtol=1e-10)


def test_laplacian_cosine_eigenvector():
    # cos(k pi x) is an exact discrete eigenvector with eigenvalue -(4/h^2) sin^2(k pi h / 2)
    g = Grid(32)
    for k in (1, 3, 7):
        u = np.cos(k * np.pi * g.nodes)
        lam = -(4 / g.h**2) * np.sin(k * np.pi * g.h / 2) ** 2
        np.testing.assert_allclose(g.laplacian(u), lam * u, atol=1e-9 * abs(lam))


def test_solve_shifted_inverts():
    g = Grid(30)
    rhs = np.sin(5 * g.nodes) + 2
    u = g.laplacian.solve_shifted(0.3, rhs)
    np.testing.assert_allclose(u - 0.3 * g.laplacian(u), rhs, atol=1e-12)


def test_stiffness_energy_identity():
    g = Grid(25)
    phi = np.sin(4 * g.nodes) + g.nodes
    K = g.laplacian.stiffness_matrix()
    energy = np.sum(np.diff(phi) ** 2) / g.h
    assert phi @ (K @ phi) == pytest.approx(energy, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(4, 60), length=st.floats(0.1, 10.0), seed=st.integers(0, 2**31))
def test_laplacian_weighted_symmetry_and_zero_sum(n, length, seed):
    g = Grid(n, length)
    r = np.random.default_rng(seed)
    u, v = r.normal(size=(2, g.n_nodes))
    Lu, Lv = g.laplacian(u), g.laplacian(v)
    scale = (np.abs(u).max() * np.abs(v).max() * 4 / g.h**2) * length
    assert abs(g.inner(Lu, v) - g.inner(u, Lv)) <= 1e-12 * scale
    assert abs(g.integrate(Lu)) <= 1e-12 * np.abs(u).max() * 4 / g.h**2 * length
    # negative semidefinite in the weighted inner product
    assert g.inner(Lu, u) <= 1e-12 * scale
