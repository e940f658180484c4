import csv
import io
import os
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sislab import ValidationError
from sislab.cli import main
from sislab.config import FIGURES, ScenarioConfig, figure_config, parse_config, serialize_config
from sislab.experiments import continuation_plan, r0_report, recompute_summary, run_scenario
from sislab.svgplot import emit_svg, nice_ticks

MODELS = ["MO", "MW", "SO", "SW"]


configs = st.builds(
    ScenarioConfig,
    figure=st.sampled_from(["fig1", "fig2", "fig3", "fig4", "custom"]),
    models=st.lists(st.sampled_from(MODELS), min_size=1, max_size=4, unique=True).map(tuple),
    preset=st.sampled_from(["fig0a", "moderate"]),
    n_cells=st.integers(1, 300).map(lambda k: 4 * k),
    total_mass=st.floats(1e-3, 1e3),
    d_S=st.floats(1e-8, 1e3),
    d_I=st.floats(1e-8, 1e3),
    schedule=st.one_of(st.none(), st.lists(st.floats(1e-8, 1e3), min_size=1, max_size=6, unique=True)
                       .map(lambda v: tuple(sorted(v, reverse=True)))),
    tol=st.floats(1e-14, 1e-4),
    out_dir=st.text("abcxyz/_-0123456789", min_size=1, max_size=20),
)


@settings(max_examples=150, deadline=None)
@given(configs)
def test_config_round_trip(config):
    assert parse_config(serialize_config(config)) == config


def test_config_round_trip_expressions_and_file():
    c = ScenarioConfig(preset=None, expressions=("3", "1 + x", "1", "0.5"))
    assert parse_config(serialize_config(c)) == c
    c = ScenarioConfig(preset=None, coefficient_file="coeffs.csv")
    assert parse_config(serialize_config(c)) == c


def test_config_validation():
    with pytest.raises(ValidationError, match="unknown preset"):
        parse_config("[coefficients]\npreset = nowhere\n")
    with pytest.raises(ValidationError, match="divisible by 4"):
        ScenarioConfig(preset="moderate", n_cells=402)
    with pytest.raises(ValidationError):
        ScenarioConfig(schedule=(1.0, 1.0))
    with pytest.raises(ValidationError):
        parse_config("[scenario]\nmodels = MW, XX\n")
    with pytest.raises(ValidationError, match="unknown keys"):
        parse_config("[diffusion]\nd_X = 1\n")
    with pytest.raises(ValidationError):
        figure_config("fig7")


def test_figure_presets():
    assert (FIGURES["fig1"].d_S, FIGURES["fig1"].d_I, FIGURES["fig1"].n_cells) == (1e-6, 1.0, 400)
    assert FIGURES["fig4"].preset == "moderate" and FIGURES["fig4"].n_cells == 800
    assert FIGURES["fig3"].d_S == FIGURES["fig3"].d_I == 1e-5


def test_continuation_plan():
    t, sched, other, ratio = continuation_plan(1e-6, 1.0)
    assert t == "d_S_to_zero" and other == 1.0 and sched[0] == 1.0 and sched[-1] == 1e-6
    assert len(sched) == 13
    t, sched, _, _ = continuation_plan(1.0, 1e-5)
    assert t == "d_I_to_zero" and sched[-1] == 1e-5
    t, sched, other, ratio = continuation_plan(1e-5, 1e-5)
    assert t == "both" and ratio == 1.0 and sched[0] == 1.0


def test_nice_ticks():
    assert nice_ticks(0, 1) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(0.13, 2.7) == [0.0, 1.0, 2.0, 3.0]
    assert nice_ticks(0.13, 2.2) == [0.0, 0.5, 1.0, 1.5, 2.0, 2.5]
    t = nice_ticks(5, 5)
    assert t[0] < 5 < t[-1]


def points(svg):
    return re.findall(r'points="([^"]*)"', svg)


def test_svg_two_point_polyline():
    svg = emit_svg({"MW": ([0, 1], [1, 2])})
    (pts,) = points(svg)
    assert len(pts.split()) == 2


def test_svg_deterministic_and_empty():
    data = {m: (np.linspace(0, 1, 11), np.linspace(0, k, 11)) for k, m in enumerate(MODELS)}
    assert emit_svg(data, title="t") == emit_svg(dict(data), title="t")
    with pytest.raises(ValidationError):
        emit_svg({})
    with pytest.raises(ValidationError):
        emit_svg({"MW": ([], [])})


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig")
    config = ScenarioConfig(figure="custom", n_cells=100, d_S=1e-2, d_I=1.0)
    return run_scenario(config, out_dir=str(out))


def test_bundle_contents(bundle):
    files = sorted(os.listdir(bundle.out_dir))
    assert files == sorted(["README.txt", "panel_I.svg", "panel_S.svg", "scenario.ini", "summary.csv"]
                           + [f"profile_{m}.csv" for m in MODELS])
    polylines = 0
    for panel in ("panel_S.svg", "panel_I.svg"):
        with open(os.path.join(bundle.out_dir, panel)) as fh:
            pts = points(fh.read())
        polylines += len(pts)
        assert all(len(p.split()) == 101 for p in pts)
    assert polylines == 8
    with open(os.path.join(bundle.out_dir, "profile_MW.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "S", "I"] and len(rows) == 102


def test_summary_recomputable(bundle):
    grid = bundle.config.grid()
    with open(os.path.join(bundle.out_dir, "summary.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["model"] for r in rows] == MODELS
    for r in rows:
        again = recompute_summary(bundle.out_dir, r["model"], float(r["d_S"]), float(r["d_I"]), float(r["R0"]), grid)
        for key in ("min_S", "max_S", "min_I", "max_I", "int_I", "support_frac"):
            assert abs(again[key] - float(r[key])) <= 1e-12


def test_bundle_byte_identical(bundle, tmp_path):
    again = run_scenario(bundle.config, out_dir=str(tmp_path))
    for name in os.listdir(bundle.out_dir):
        with open(os.path.join(bundle.out_dir, name), "rb") as a, open(os.path.join(again.out_dir, name), "rb") as b:
            assert a.read() == b.read(), name


def test_r0_report_rows():
    rows = r0_report(ScenarioConfig(report_d_I=(1.0,)))
    by = {r["model"]: r for r in rows}
    assert by["SO"]["R0"] == pytest.approx(by["MO"]["R0"], rel=1e-12)
    assert all(r["R0"] > 1 for r in rows)
    for r in rows:
        assert np.sign(r["R0"] - 1) == -np.sign(r["lambda_star"])
        assert r["R0_low_limit"] >= r["R0"] >= r["R0_high_limit"]
    mw = [r0_report(ScenarioConfig(models=("MW",), d_S=d, report_d_I=(0.1,)))[0]["R0"] for d in (1e-3, 1.0, 10.0)]
    assert mw[0] == mw[1] == mw[2]


def test_r0_report_homogeneous():
    c = ScenarioConfig(preset=None, expressions=("3", "1", "1", "1"), models=("MW",), n_cells=40)
    assert all(r["R0"] == pytest.approx(1.5, rel=1e-13) for r in r0_report(c))


def test_cli_r0_stdout(capsys):
    assert main(["r0", "--model", "MW,SO", "--d-I", "1", "--grid", "100"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["model", "d_I", "d_S", "R0", "lambda_star"] and len(rows) == 3


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["r0", "--preset", "nowhere"]) == 2
    assert main(["steady", "--preset", "moderate", "--grid", "402"]) == 2
    code = main(["sweep", "--model", "MW", "--target", "d_I_to_zero", "--schedule", "1,1e-2,1e-4",
                 "--other", "1", "--grid", "40", "--out", str(tmp_path)])
    assert code == 3
    assert "n_cells" in capsys.readouterr().err
    with open(tmp_path / "sweep_MW.csv") as fh:
        assert next(csv.reader(fh)) == ["diffusivity", "min_S", "max_S", "min_I", "max_I", "int_I", "support_frac"]


def test_cli_limit_and_simulate(tmp_path):
    assert main(["limit", "wu_zou", "--d", "1", "--N", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "limit_wu_zou.csv").exists()
    assert main(["simulate", "--model", "MO", "--grid", "40", "--t-max", "1", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "trace_MO.csv") as fh:
        assert next(csv.reader(fh)) == ["t", "total_S", "total_I", "min_I", "max_S", "lyapunov"]


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text(serialize_config(ScenarioConfig(models=("SW",), n_cells=80, d_S=0.1, d_I=1.0,
                                                   out_dir=str(tmp_path / "o"))))
    assert main(["steady", "--config", str(cfg)]) == 0
    assert (tmp_path / "o" / "steady_SW.csv").exists()
