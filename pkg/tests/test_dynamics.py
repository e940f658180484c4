import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sislab import (
    CoefficientSet,
    Grid,
    PositivityError,
    State,
    StepperConfig,
    ValidationError,
    default_initial_state,
    dissipation_check,
    homogeneous_equilibria,
    lyapunov_v,
    lyapunov_w,
    preset_homogeneous,
    run,
    step,
)
from sislab.dynamics import auto_lyapunov


def bumpy_state(grid, rng, s=(1.0, 3.0), i=(0.2, 1.5)):
    return State(rng.uniform(*s, grid.n_nodes), rng.uniform(*i, grid.n_nodes))


def test_homogeneous_equilibria(homog, homog_dfe):
    r0, dfe, ee = homogeneous_equilibria(homog)
    assert r0 == 1.5 and dfe == (3.0, 0.0)
    assert ee == pytest.approx((2.0, 1.0))
    r0, _, ee = homogeneous_equilibria(homog_dfe)
    assert r0 == 0.75 and ee is None


@pytest.mark.parametrize("scheme", ["imex_euler", "imex_trapezoid"])
def test_equilibria_are_fixed_points(homog, scheme):
    n = homog.grid.n_nodes
    cfg = StepperConfig(dt_initial=0.1, scheme=scheme)
    for S, I in ((2.0, 1.0), (3.0, 0.0)):
        s = State(np.full(n, S), np.full(n, I))
        for _ in range(20):
            s = step(s, "MW", homog, 1.0, 1.0, cfg)
        np.testing.assert_allclose(s.S, S, atol=1e-14)
        np.testing.assert_allclose(s.I, I, atol=1e-14)


@pytest.mark.parametrize("scheme,order", [("imex_euler", 1), ("imex_trapezoid", 2)])
def test_temporal_order(homog, scheme, order):
    g = Grid(16)
    c = preset_homogeneous(g, 3.0, 1.0, 1.0, 1.0)
    x = g.nodes
    s0 = State(2 + np.cos(np.pi * x), 0.5 + 0.4 * np.cos(2 * np.pi * x))

    def solve(dt, sch):
        cfg = StepperConfig(dt_initial=dt, dt_min=dt / 2, scheme=sch)
        s = s0
        for _ in range(int(round(1.0 / dt))):
            s = step(s, "MW", c, 1.0, 0.5, cfg)
        return np.concatenate([s.S, s.I])

    ref = solve(1e-4, "imex_trapezoid")
    errs = [np.abs(solve(dt, scheme) - ref).max() for dt in (0.05, 0.025, 0.0125)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - order) < 0.15), rates


def test_positivity_retry_halves_dt():
    g = Grid(10)
    c = preset_homogeneous(g, 3.0, 50.0, 1.0, 1.0)
    s = State(np.full(11, 1.0), np.full(11, 1.0))
    new = step(s, "MW", c, 1.0, 1.0, StepperConfig(dt_initial=0.05))
    assert new.t < 0.05 and np.all(new.S >= 0)
    with pytest.raises(PositivityError) as info:
        step(s, "MW", c, 1.0, 1.0, StepperConfig(dt_initial=0.05, positivity_retry=False))
    assert info.value.term == "S"


def test_strict_positivity_from_compact_infection(homog):
    g = homog.grid
    I0 = np.where(np.abs(g.nodes - 0.5) < 0.05, 1.0, 0.0)
    s = step(State(np.full(g.n_nodes, 3.0), I0), "MW", homog, 1.0, 1.0, StepperConfig(dt_initial=0.01))
    assert np.all(s.I > 0)


def test_state_validation():
    with pytest.raises(ValidationError):
        State(np.array([1.0, -1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValidationError):
        StepperConfig(scheme="rk4")


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_w_decreases_to_endemic(homog, seed):
    rng = np.random.default_rng(seed)
    out = run(bumpy_state(homog.grid, rng), "MW", homog, 1.0, 1.0,
              StepperConfig(steady_tol=1e-9, trace_stride=1), lyapunov="auto")
    assert out.verdict == "steady"
    np.testing.assert_allclose(out.state.S, 2.0, atol=1e-6)
    np.testing.assert_allclose(out.state.I, 1.0, atol=1e-6)
    W = out.trace.array("lyapunov")
    assert np.all(np.diff(W) <= 1e-12)


def test_v_decreases_to_dfe(homog_dfe):
    rng = np.random.default_rng(7)
    out = run(bumpy_state(homog_dfe.grid, rng), "MW", homog_dfe, 1.0, 1.0,
              StepperConfig(steady_tol=1e-9, trace_stride=1), lyapunov="auto")
    np.testing.assert_allclose(out.state.S, 3.0, atol=1e-6)
    assert out.state.I.max() < 1e-6
    assert np.all(np.diff(out.trace.array("lyapunov")) <= 1e-12)


def test_lyapunov_values(homog):
    n = homog.grid.n_nodes
    ee = State(np.full(n, 2.0), np.full(n, 1.0))
    assert lyapunov_w(ee, homog) == pytest.approx(0.0, abs=1e-15)
    # V at (3, 1): 1/2 * 1 + 2 * 1
    assert lyapunov_v(State(np.full(n, 3.0), np.full(n, 1.0)), homog) == pytest.approx(2.5)
    with pytest.raises(ValidationError):
        auto_lyapunov("MW", homog, 1.0, 2.0)


@settings(max_examples=15, deadline=None)
@given(kind=st.sampled_from(["MO", "SO"]), seed=st.integers(0, 2**31),
       scheme=st.sampled_from(["imex_euler", "imex_trapezoid"]), log_d=st.floats(-3, 1))
def test_mass_conservation_property(kind, seed, scheme, log_d):
    g = Grid(30)
    r = np.random.default_rng(seed)
    c = CoefficientSet(g, np.ones(31), r.uniform(0.5, 3, 31), r.uniform(0.5, 3, 31), np.ones(31), total_mass=1.0)
    s = bumpy_state(g, r)
    total0 = g.integrate(s.S + s.I)
    cfg = StepperConfig(dt_initial=0.01, scheme=scheme)
    for _ in range(100):
        s = step(s, kind, c, 10.0**log_d, 0.5, cfg)
    assert abs(g.integrate(s.S + s.I) - total0) <= 1e-12 * total0


def test_dissipation_check_and_negative_control(fig0a):
    s0 = default_initial_state("MW", fig0a, 1.0, scale=5.0)
    out = run(s0, "MW", fig0a, 1.0, 1.0, StepperConfig(t_max=20.0, trace_stride=5))
    rep = dissipation_check(out.trace, fig0a, "MW")
    assert rep.ok and rep.theta == 0.5
    bad = out.trace
    k = len(bad.t) // 2
    bad.total_S[k:] = [2 * v for v in bad.total_S[k:]]
    bad.total_I[k:] = [2 * v for v in bad.total_I[k:]]
    assert not dissipation_check(bad, fig0a, "MW").ok
    with pytest.raises(ValidationError):
        dissipation_check(out.trace, fig0a, "SW")


def test_default_initial_state_mass(fig0a):
    s = default_initial_state("SO", fig0a, 1.0)
    assert fig0a.grid.integrate(s.S + s.I) == pytest.approx(1.0, rel=1e-14)
    assert np.all(s.S > 0) and np.all(s.I >= 0) and s.I.max() > 0


def test_dissipation_homogeneous_constants(homog):
    rng = np.random.default_rng(3)
    out = run(bumpy_state(homog.grid, rng, s=(4, 6)), "MW", homog, 1.0, 1.0, StepperConfig(t_max=10.0))
    rep = dissipation_check(out.trace, homog, "MW")
    assert rep.ok and rep.theta == 1.0
    assert rep.absorbing_bound == pytest.approx(max(out.trace.total[0], 3.0))


def test_conserved_trace_is_flat(fig0a):
    out = run(default_initial_state("MO", fig0a, 1.0), "MO", fig0a, 1.0, 1.0, StepperConfig(t_max=5.0))
    assert dissipation_check(out.trace, fig0a, "MO").ok


def test_trace_csv(tmp_path, homog):
    out = run(State(np.full(41, 2.5), np.full(41, 0.5)), "MW", homog, 1.0, 1.0,
              StepperConfig(t_max=1.0), lyapunov="auto")
    p = tmp_path / "trace.csv"
    out.trace.write_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["t", "total_S", "total_I", "min_I", "max_S", "lyapunov"]
    assert len(rows) == len(out.trace) + 1
    assert out.verdict == "t_max_reached"
