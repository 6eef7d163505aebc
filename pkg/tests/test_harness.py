"""Generators, run specs, persistence, the identity suite, and the CLI."""

import json
import math

import numpy as np
import pytest

from csflow import __version__, cli
from csflow.dynamics import KIND_UNNORMALIZED, TERM_END, FlowConfig
from csflow.errors import ConfigError, NotEmbedded
from csflow.geometry import (
    DiscreteCurve,
    build_frame,
    canonical_scale,
    is_embedded,
    load_curve,
    save_curve,
)
from csflow.harness import (
    ALL_CHECKS,
    SERIES_HEADER,
    RunSpec,
    bench,
    execute,
    gen_circle,
    gen_dumbbell,
    gen_ellipse,
    gen_fourier,
    generate,
    materialize_curve,
    profile_curve,
    run_directory,
    verify_identities,
)

TWO_PI = 2.0 * math.pi

# frozen in test_comparison.py from a brute-force per-pair sweep
ELL512_ABAR = 2.0623351705740145


@pytest.fixture(scope="module")
def fig8_path(tmp_path_factory):
    u = TWO_PI * np.arange(64) / 64
    curve = DiscreteCurve(
        np.column_stack([np.sin(2.0 * u), np.sin(u)]), name="figure-eight"
    )
    path = tmp_path_factory.mktemp("curves") / "fig8.json"
    save_curve(curve, path)
    return path


@pytest.fixture(scope="module")
def ellipse_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("curves") / "ellipse.json"
    save_curve(gen_ellipse(2.0, 1.0, 512), path)
    return path


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("runs") / "circle-small"
    spec = RunSpec(
        generator="circle",
        flow=FlowConfig(n=64, t_end=0.3),
        outdir=str(outdir),
    )
    return execute(spec)


# -- generators -----------------------------------------------------------------


def test_unit_ellipse_is_a_circle():
    circle = gen_circle(1.0, 256)
    ellipse = gen_ellipse(1.0, 1.0, 256)
    assert np.max(np.abs(circle.vertices - ellipse.vertices)) < 1e-12


def test_fourier_curves_are_reproducible():
    one = gen_fourier(seed=3)
    two = gen_fourier(seed=3)
    other = gen_fourier(seed=4)
    assert np.array_equal(one.vertices, two.vertices)
    assert not np.array_equal(one.vertices, other.vertices)
    assert is_embedded(one)
    assert one.name == "fourier-3"


def test_dumbbell_is_nonconvex_but_embedded():
    curve = gen_dumbbell(neck=0.2, n=256)
    assert is_embedded(curve)
    assert build_frame(curve).k_min < 0.0


@pytest.mark.parametrize(
    "bad",
    [
        lambda: gen_circle(r=-1.0),
        lambda: gen_ellipse(a=0.0),
        lambda: gen_dumbbell(neck=1.5),
        lambda: gen_fourier(modes=0),
        lambda: generate("heptagon"),
        lambda: generate("circle", {"radius": 1.0}),
    ],
)
def test_generator_rejects_bad_configuration(bad):
    with pytest.raises(ConfigError):
        bad()


# -- run specs ------------------------------------------------------------------


def test_run_spec_survives_json():
    spec = RunSpec(
        generator="fourier",
        params={"modes": 4},
        flow=FlowConfig(n=128, dt=5e-4, t_end=2.0),
        checks=("distance-comparison",),
        seed=9,
    )
    wire = json.loads(json.dumps(spec.to_json_dict()))
    assert RunSpec.from_json_dict(wire) == spec


def test_run_spec_validation():
    with pytest.raises(ConfigError):
        RunSpec(generator="circle", input_path="x.json")
    with pytest.raises(ConfigError):
        RunSpec(generator=None, input_path=None)
    with pytest.raises(ConfigError):
        RunSpec(generator="heptagon")
    with pytest.raises(ConfigError):
        RunSpec(checks=("distance-comparison", "vibes"))
    with pytest.raises(ConfigError):
        RunSpec.from_json_dict({"generator": "circle", "colour": "red"})


def test_materialize_fills_vertex_count_and_seed():
    spec = RunSpec(generator="fourier", flow=FlowConfig(n=96), seed=7)
    curve = materialize_curve(spec)
    assert curve.n == 96
    assert curve.name == "fourier-7"


# -- execution and persistence ----------------------------------------------------


def test_run_directory_layout(small_run):
    outdir = small_run.outdir
    assert outdir is not None and outdir.is_dir()

    config = json.loads((outdir / "config.json").read_text())
    assert set(config) == {
        "run_spec",
        "initial_curve_sha256",
        "version",
        "termination",
        "passed",
    }
    assert config["version"] == __version__
    assert config["termination"] == TERM_END
    assert config["passed"] is True
    assert RunSpec.from_json_dict(config["run_spec"]) == small_run.spec
    assert len(config["initial_curve_sha256"]) == 64

    snaps = sorted((outdir / "snapshots").iterdir())
    assert len(snaps) == len(small_run.trajectory.snapshots)
    assert snaps[0].name == "curve_000000.json"
    first = load_curve(snaps[0])
    want = canonical_scale(gen_circle(1.0, 64))
    assert np.array_equal(first.vertices, want.vertices)

    report_names = {p.name for p in (outdir / "reports").iterdir()}
    assert report_names == {
        "distance-comparison.json",
        "abar-decay.json",
        "curvature-bound.json",
        "l2-curvature-bound.json",
    }
    for path in (outdir / "reports").iterdir():
        doc = json.loads(path.read_text())
        assert doc["pass"] is True


def test_series_csv_contents(small_run):
    lines = (small_run.outdir / "series.csv").read_text().splitlines()
    assert lines[0] == SERIES_HEADER
    assert len(lines) == 1 + len(small_run.trajectory.snapshots)

    first = lines[1].split(",")
    assert len(first) == 11
    assert first[0] == "0"
    assert float(first[1]) == 0.0
    assert abs(float(first[2]) - TWO_PI) < 1e-12
    assert float(first[7]) == 0.0  # sup a on a circle
    assert float(first[8]) == -math.inf
    assert math.isfinite(float(first[10]))


def test_execute_wires_results(small_run):
    assert small_run.passed
    assert set(small_run.reports) == {
        "distance-comparison",
        "abar-decay",
        "curvature-bound",
        "l2-curvature-bound",
    }
    assert small_run.metrics is not None
    assert len(small_run.profiles) == len(small_run.trajectory.snapshots)


def test_execute_without_checks_or_persistence():
    spec = RunSpec(generator="circle", flow=FlowConfig(n=64, t_end=0.05), checks=())
    res = execute(spec, persist=False)
    assert res.outdir is None
    assert res.reports == {} and res.profiles is None and res.metrics is None
    assert res.passed  # reduces to: the flow reached its end time


def test_unnormalized_runs_skip_bound_checks():
    spec = RunSpec(
        generator="circle",
        flow=FlowConfig(kind=KIND_UNNORMALIZED, n=64, dt=1e-4, t_end=0.05),
    )
    res = execute(spec, persist=False)
    assert res.passed
    assert res.reports == {} and res.profiles is None


def test_run_directory_roots(tmp_path, monkeypatch):
    explicit = RunSpec(generator="circle", outdir=str(tmp_path / "here"))
    assert run_directory(explicit) == tmp_path / "here"

    monkeypatch.setenv("CSFLOW_OUTPUT_ROOT", str(tmp_path / "root"))
    slugged = RunSpec(generator="circle")
    path = run_directory(slugged)
    assert path.parent == tmp_path / "root"
    assert path.name.startswith("circle-")
    # the slug is a stable function of the spec, and only of the spec
    assert run_directory(slugged) == path
    other = RunSpec(generator="circle", flow=FlowConfig(t_end=1.0))
    assert run_directory(other) != path


def test_identical_specs_persist_identical_bytes(tmp_path):
    def go(sub):
        spec = RunSpec(
            generator="ellipse",
            params={"a": 2.0, "b": 1.0},
            flow=FlowConfig(n=64, t_end=0.2),
            outdir=str(tmp_path / sub),
        )
        return execute(spec).outdir

    one, two = go("one"), go("two")
    assert (one / "series.csv").read_bytes() == (two / "series.csv").read_bytes()
    assert (one / "snapshots" / "curve_000200.json").read_bytes() == (
        two / "snapshots" / "curve_000200.json"
    ).read_bytes()


# -- identity suite, static profile, bench ---------------------------------------


def test_identity_suite_reports():
    reports = verify_identities(80, 21)
    assert [r.name for r in reports] == [
        "L-tilde annihilates f",
        "L dominates L-tilde",
        "f shape (monotone/concave/symmetric)",
        "g positivity",
        "h convexity",
        "small-separation Taylor limit (circle)",
        "small-separation Taylor limit (ellipse pole, k=2)",
        "small-separation Taylor limit (ellipse flat, k=1/4)",
    ]
    assert all(r.passed for r in reports)


def test_identity_suite_catches_a_seeded_fault():
    reports = verify_identities(80, 21, perturb_scale=1e-6)
    by_name = {r.name: r for r in reports}
    assert not by_name["L-tilde annihilates f"].passed
    assert not by_name["f shape (monotone/concave/symmetric)"].passed
    assert by_name["g positivity"].passed
    assert by_name["h convexity"].passed


def test_profile_curve_writes_pair_table(ellipse_path, tmp_path):
    out = tmp_path / "pairs.csv"
    summary, out_csv = profile_curve(ellipse_path, out)
    assert out_csv == out
    assert summary.a_bar == pytest.approx(ELL512_ABAR, rel=1e-12)
    assert summary.attained == (256, 256)

    lines = out.read_text().splitlines()
    assert lines[0] == "l,d,a"
    assert len(lines) == 1 + 512 * 511 // 2
    # adjacent vertices: chord equals arc, so the ratio clamps to zero
    first = lines[1].split(",")
    assert float(first[2]) == 0.0
    assert float(first[0]) == pytest.approx(TWO_PI / 512, rel=1e-2)


def test_profile_curve_default_output_path(ellipse_path):
    _, out_csv = profile_curve(ellipse_path)
    assert out_csv == ellipse_path.with_suffix(".profile.csv")
    assert out_csv.exists()


def test_profile_rejects_self_intersection(fig8_path):
    with pytest.raises(NotEmbedded):
        profile_curve(fig8_path)


def test_bench_reports_both_schemes():
    rates = bench(n=64, steps=3)
    assert set(rates) == {"explicit", "semi-implicit"}
    assert all(v > 0.0 for v in rates.values())


# -- command line ----------------------------------------------------------------


def test_cli_run_passes_and_persists(tmp_path, capsys):
    rc = cli.main(
        [
            "run",
            "--generator",
            "circle",
            "--n",
            "64",
            "--t-end",
            "0.3",
            "--outdir",
            str(tmp_path / "out"),
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "termination: reached-end-time" in out
    assert "distance-comparison: pass" in out
    assert "quadrature-identity: pass" in out
    assert (tmp_path / "out" / "series.csv").exists()


def test_cli_run_exit_one_when_run_fails(capsys):
    # past the extinction time with a fixed step: curvature blow-up
    rc = cli.main(
        [
            "run",
            "--kind",
            "unnormalized",
            "--n",
            "64",
            "--dt",
            "1e-3",
            "--t-end",
            "0.6",
            "--snapshot-every",
            "50",
            "--no-persist",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 1
    assert "termination: curvature-blow-up" in out


def test_cli_error_contract(fig8_path, capsys):
    rc = cli.main(["run", "--input", str(fig8_path), "--no-persist"])
    captured = capsys.readouterr()
    assert rc == 2
    assert json.loads(captured.err) == {
        "kind": "NotEmbedded",
        "message": "initial curve self-intersects",
        "context": {},
    }


def test_cli_verify_identities(capsys):
    rc = cli.main(["verify-identities", "--grid-x", "80", "--grid-t", "21"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("pass") >= 8

    rc = cli.main(
        ["verify-identities", "--grid-x", "80", "--grid-t", "21", "--_perturb-f", "1e-6"]
    )
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out


def test_cli_profile_prints_summary(ellipse_path, tmp_path, capsys):
    rc = cli.main(["profile", str(ellipse_path), "--out", str(tmp_path / "t.csv")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "a_bar = 2.06233517057" in out
    assert "pair table:" in out


def test_cli_bench(capsys):
    rc = cli.main(["bench", "--n", "64", "--steps", "2"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "steps/s" in out
