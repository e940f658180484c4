import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sislab import Grid, ModelKind, ValidationError, incidence, preset_homogeneous, reaction, reaction_jacobian
from sislab.coeffs import NodeCoefficients

NODE = NodeCoefficients(lam=3.0, beta=1.0, gamma=1.0, mu=1.0)


def test_parse_and_flags():
    assert ModelKind.parse(" mw ") is ModelKind.MW
    with pytest.raises(ValidationError):
        ModelKind.parse("XY")
    assert ModelKind.MO.conserves_mass and ModelKind.SO.conserves_mass
    assert ModelKind.MW.mass_action and not ModelKind.SW.mass_action
    assert ModelKind.SW.has_recruitment


def test_incidence_values():
    assert incidence("MW", 2.0, 3.0, 1.0) == 6.0
    assert incidence("SO", 2.0, 3.0, 1.0) == pytest.approx(1.5)
    assert incidence("SW", 2.0, 0.0, 0.0) == 0.0
    with pytest.raises(ValidationError):
        incidence("MO", 1.0, -1.0, 1.0)


def test_homogeneous_endemic_point_is_a_zero():
    f_S, f_I = reaction("MW", NODE, 2.0, 1.0)
    assert f_S == 0.0 and f_I == 0.0


def test_mw_jacobian_at_endemic_point():
    # dfS/dS = -1 - beta I, dfS/dI = gamma - beta S, dfI/dS = beta I, dfI/dI = beta S - gamma - mu
    J = reaction_jacobian("MW", NODE, 2.0, 1.0)
    np.testing.assert_allclose(J, [[-2.0, -1.0], [1.0, 0.0]])


def test_standard_incidence_jacobian_at_origin():
    J = reaction_jacobian("SO", NODE, 0.0, 0.0)
    np.testing.assert_allclose(J, [[0.0, 1.0], [0.0, -1.0]])


def test_broadcasts_over_fields():
    c = preset_homogeneous(Grid(4), 3, 1, 1, 1)
    S = np.linspace(1, 2, 5)
    I = np.linspace(0.1, 0.5, 5)
    f = reaction("SW", c, S, I)
    assert f.f_S.shape == (5,)
    assert reaction_jacobian("SW", c, S, I).shape == (2, 2, 5)


positive = st.floats(0.05, 5.0)


@settings(max_examples=200, deadline=None)
@given(kind=st.sampled_from(list(ModelKind)), S=positive, I=positive,
       lam=positive, beta=positive, gamma=positive, mu=positive)
def test_jacobian_matches_central_differences(kind, S, I, lam, beta, gamma, mu):
    node = NodeCoefficients(lam, beta, gamma, mu)
    J = reaction_jacobian(kind, node, S, I)
    h = 1e-6
    dS = (np.array(reaction(kind, node, S + h, I)) - np.array(reaction(kind, node, S - h, I))) / (2 * h)
    dI = (np.array(reaction(kind, node, S, I + h)) - np.array(reaction(kind, node, S, I - h))) / (2 * h)
    fd = np.column_stack([dS, dI])
    np.testing.assert_allclose(J, fd, rtol=1e-6, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(kind=st.sampled_from([ModelKind.MO, ModelKind.SO]), S=st.floats(0, 1e3), I=st.floats(0, 1e3),
       beta=positive, gamma=positive)
def test_conserved_models_cancel_exactly(kind, S, I, beta, gamma):
    f_S, f_I = reaction(kind, NodeCoefficients(1.0, beta, gamma, 1.0), S, I)
    assert f_S + f_I == 0.0


@settings(max_examples=100, deadline=None)
@given(kind=st.sampled_from(list(ModelKind)), S=positive, lam=positive, beta=positive, gamma=positive, mu=positive)
def test_infection_vanishes_without_infecteds(kind, S, lam, beta, gamma, mu):
    _, f_I = reaction(kind, NodeCoefficients(lam, beta, gamma, mu), S, 0.0)
    assert f_I == 0.0
