"""Run orchestration: test-curve generators, run directories, bench.

The CLI in :mod:`csflow.cli` is a thin argument layer over this module.
A run is described by a :class:`RunSpec` (initial curve, flow settings,
requested bound checks, output directory), executed by :func:`execute`,
and persisted as a directory holding ``config.json`` (spec echo, initial
curve hash, code version), ``snapshots/curve_NNNNNN.json``, ``series.csv``
(one row per snapshot), and one JSON report per bound check.

Bound checks apply to normalized runs; an un-normalized run records the
flow columns of the series and skips them.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time as _time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .comparison import (
    AnalyticEllipse,
    IdentityReport,
    ProfileSummary,
    a_solve,
    check_f_shape,
    check_g_positive,
    check_h_convex,
    check_L_dominates,
    check_Ltilde,
    check_small_sep_taylor,
    profile,
)
from .diagnostics import (
    BoundReport,
    ConvergenceMetrics,
    check_abar_decay,
    check_curvature_bound,
    check_distance_comparison,
    convergence_metrics,
    snapshot_profiles,
)
from .dynamics import (
    KIND_NORMALIZED,
    SCHEME_EXPLICIT,
    SCHEME_SEMI_IMPLICIT,
    TERM_END,
    FlowConfig,
    Snapshot,
    Trajectory,
    run,
    step_normalized,
)
from .errors import ConfigError, GenerationFailure, NotEmbedded
from .geometry import (
    DiscreteCurve,
    all_pairs_chord_arc,
    build_frame,
    canonical_scale,
    is_embedded,
    load_curve,
    resample_uniform,
    save_curve,
    signed_area,
)

TWO_PI = 2.0 * math.pi

ALL_CHECKS = ("distance-comparison", "abar-decay", "curvature-bound", "convergence")

_FOURIER_AMPLITUDE = 0.15
_FOURIER_ATTEMPTS = 100


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _code_version() -> str:
    from csflow import __version__

    return __version__


# -- generators ---------------------------------------------------------------

def gen_circle(r: float = 1.0, n: int = 512) -> DiscreteCurve:
    """Regular n-gon on the radius-r circle."""
    if not (r > 0.0 and math.isfinite(r)):
        raise ConfigError(f"circle radius must be positive, got {r}")
    u = TWO_PI * np.arange(n) / n
    return DiscreteCurve.from_vertices(
        np.column_stack([r * np.cos(u), r * np.sin(u)]), name="circle"
    )


def gen_ellipse(a: float = 2.0, b: float = 1.0, n: int = 512) -> DiscreteCurve:
    """Axis-aligned ellipse with semi-axes a (x) and b (y), vertices equally
    spaced in arclength (by exact elliptic-integral inversion, so two
    samplings of the same ellipse describe the same curve to rounding)."""
    if not (a > 0.0 and b > 0.0 and math.isfinite(a) and math.isfinite(b)):
        raise ConfigError(f"ellipse axes must be positive, got a={a}, b={b}")
    swap = b > a
    ell = AnalyticEllipse(b, a) if swap else AnalyticEllipse(a, b)
    targets = ell.perimeter * np.arange(n) / n
    phi = np.array([ell.param_at_arc(0.0, s) for s in targets])
    x = ell.a * np.cos(phi)
    y = ell.b * np.sin(phi)
    vertices = np.column_stack([-y, x]) if swap else np.column_stack([x, y])
    return DiscreteCurve.from_vertices(vertices, name="ellipse")


def gen_dumbbell(neck: float = 0.2, n: int = 512) -> DiscreteCurve:
    """Two-lobed embedded curve with a waist; non-convex for small necks.

    Single-valued polar profile r(theta)^2 = c^2 cos(2 theta)
    + sqrt(1 - c^4 sin^2(2 theta)) (a Cassini oval), with c chosen so the
    waist half-width is ``neck`` times the lobe half-length; resampled to
    uniform arclength.
    """
    if not (0.0 < neck < 1.0):
        raise ConfigError(f"neck must lie in (0, 1), got {neck}")
    c2 = (1.0 - neck**2) / (1.0 + neck**2)
    theta = TWO_PI * np.arange(8192) / 8192
    r = np.sqrt(
        c2 * np.cos(2.0 * theta)
        + np.sqrt(np.maximum(1.0 - c2**2 * np.sin(2.0 * theta) ** 2, 0.0))
    )
    dense = DiscreteCurve(
        np.column_stack([r * np.cos(theta), r * np.sin(theta)]), name="dumbbell"
    )
    out = resample_uniform(dense, n)
    if not is_embedded(out):
        raise GenerationFailure("dumbbell sampling self-intersects", neck=neck, n=n)
    return out


def gen_fourier(seed: int = 1, modes: int = 6, n: int = 512) -> DiscreteCurve:
    """Random smooth perturbation of the unit circle, rejection-sampled
    until embedded.

    Coordinate Fourier coefficients for wavenumbers 2..modes+1 are drawn
    independently with standard deviation 0.15 m^-2; the same seed
    reproduces the same vertices bit for bit.
    """
    if modes < 1:
        raise ConfigError(f"need at least one mode, got {modes}")
    rng = np.random.default_rng(seed)
    u = TWO_PI * np.arange(n) / n
    m = np.arange(2, modes + 2)
    basis_c = np.cos(np.outer(m, u))
    basis_s = np.sin(np.outer(m, u))
    for _ in range(_FOURIER_ATTEMPTS):
        coef = rng.normal(0.0, 1.0, size=(4, modes)) * (_FOURIER_AMPLITUDE / m**2)
        x = np.cos(u) + coef[0] @ basis_c + coef[1] @ basis_s
        y = np.sin(u) + coef[2] @ basis_c + coef[3] @ basis_s
        curve = DiscreteCurve.from_vertices(
            np.column_stack([x, y]), name=f"fourier-{seed}"
        )
        if is_embedded(curve):
            return curve
    raise GenerationFailure(
        "no embedded curve found", seed=seed, modes=modes, attempts=_FOURIER_ATTEMPTS
    )


_GENERATORS = {
    "circle": gen_circle,
    "ellipse": gen_ellipse,
    "dumbbell": gen_dumbbell,
    "fourier": gen_fourier,
}


def generate(name: str, params: dict | None = None) -> DiscreteCurve:
    """Dispatch to a named generator; unknown names or parameters are
    configuration errors."""
    if name not in _GENERATORS:
        raise ConfigError(
            f"unknown generator {name!r}", known=sorted(_GENERATORS)
        )
    try:
        return _GENERATORS[name](**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for generator {name!r}: {exc}") from exc


# -- run specification and execution ------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    """One reproducible run: initial curve source, flow, checks, output.

    Exactly one of ``generator``/``input_path`` must be set. ``seed`` feeds
    the fourier generator and is echoed for provenance either way.
    """

    generator: str | None = "circle"
    params: dict = field(default_factory=dict)
    input_path: str | None = None
    flow: FlowConfig = field(default_factory=FlowConfig)
    checks: tuple[str, ...] = ALL_CHECKS
    outdir: str | None = None
    seed: int = 1

    def __post_init__(self):
        if (self.generator is None) == (self.input_path is None):
            raise ConfigError("exactly one of generator/input_path must be set")
        if self.generator is not None and self.generator not in _GENERATORS:
            raise ConfigError(
                f"unknown generator {self.generator!r}", known=sorted(_GENERATORS)
            )
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {sorted(unknown)}", known=ALL_CHECKS)

    def to_json_dict(self) -> dict:
        return {
            "generator": self.generator,
            "params": dict(self.params),
            "input_path": self.input_path,
            "flow": self.flow.to_json_dict(),
            "checks": list(self.checks),
            "outdir": self.outdir,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown run spec fields: {sorted(extra)}")
        data = dict(data)
        if "flow" in data:
            data["flow"] = FlowConfig.from_json_dict(data["flow"])
        if "checks" in data:
            data["checks"] = tuple(data["checks"])
        return cls(**data)


def materialize_curve(spec: RunSpec) -> DiscreteCurve:
    """Load or generate the initial curve of a spec (not yet rescaled)."""
    if spec.input_path is not None:
        return load_curve(spec.input_path)
    params = dict(spec.params)
    params.setdefault("n", spec.flow.n)
    if spec.generator == "fourier":
        params.setdefault("seed", spec.seed)
    return generate(spec.generator, params)


@dataclass
class RunResult:
    """Everything a finished run produced, before/after persistence."""

    spec: RunSpec
    initial: DiscreteCurve
    trajectory: Trajectory
    profiles: list[ProfileSummary] | None
    reports: dict[str, BoundReport]
    metrics: ConvergenceMetrics | None
    passed: bool
    outdir: Path | None = None


def execute(spec: RunSpec, persist: bool = True) -> RunResult:
    """Run a spec end to end: curve, flow, checks, optional persistence.

    ``passed`` requires the flow to reach its end time, every requested
    bound check to hold, and (when convergence metrics are requested) the
    quadrature identity to hold.
    """
    initial = materialize_curve(spec)
    traj = run(spec.flow, initial)

    profiles = None
    reports: dict[str, BoundReport] = {}
    metrics = None
    passed = traj.termination == TERM_END
    if spec.checks and traj.kind == KIND_NORMALIZED:
        profiles = snapshot_profiles(traj)
        if "distance-comparison" in spec.checks:
            rep = check_distance_comparison(traj, profiles)
            reports[rep.name] = rep
        if "abar-decay" in spec.checks:
            rep = check_abar_decay(traj, profiles)
            reports[rep.name] = rep
        if "curvature-bound" in spec.checks:
            rep = check_curvature_bound(traj, profiles)
            reports[rep.name] = rep
        if "convergence" in spec.checks:
            metrics = convergence_metrics(traj, profiles)
            rep = metrics.l2_report()
            reports[rep.name] = rep
            passed = passed and metrics.identity_pass
        passed = passed and all(r.passed for r in reports.values())

    result = RunResult(
        spec=spec,
        initial=initial,
        trajectory=traj,
        profiles=profiles,
        reports=reports,
        metrics=metrics,
        passed=passed,
    )
    if persist:
        result.outdir = persist_run(result)
    return result


def run_directory(spec: RunSpec) -> Path:
    """Deterministic run directory: explicit outdir, or a slug under the
    output root ($CSFLOW_OUTPUT_ROOT or ./runs) keyed by the spec hash."""
    if spec.outdir is not None:
        return Path(spec.outdir)
    root = Path(os.environ.get("CSFLOW_OUTPUT_ROOT", "runs"))
    blob = json.dumps(spec.to_json_dict(), sort_keys=True).encode()
    stem = spec.generator or Path(spec.input_path).stem
    return root / f"{stem}-{hashlib.sha256(blob).hexdigest()[:8]}"


def _series_rows(result: RunResult):
    traj = result.trajectory
    for i, snap in enumerate(traj.snapshots):
        fr = snap.frame
        prof = result.profiles[i] if result.profiles is not None else None
        l2 = result.metrics.l2_dev[i] if result.metrics is not None else math.nan
        yield (
            snap.step,
            snap.time,
            fr.length,
            fr.k_max,
            fr.k_min,
            fr.avg_k2,
            signed_area(fr.vertices),
            prof.a_bar if prof else math.nan,
            prof.t_bar if prof else math.nan,
            prof.min_z if prof else math.nan,
            l2,
        )


SERIES_HEADER = "step,time,L,k_max,k_min,avg_k2,area,a_bar,t_bar,min_Z,l2_dev"


def write_series_csv(result: RunResult, path: Path) -> None:
    lines = [SERIES_HEADER]
    for row in _series_rows(result):
        lines.append(",".join([str(row[0])] + [_fmt(v) for v in row[1:]]))
    path.write_text("\n".join(lines) + "\n")


def persist_run(result: RunResult) -> Path:
    """Write config echo, snapshot curves, series.csv, and check reports."""
    outdir = run_directory(result.spec)
    outdir.mkdir(parents=True, exist_ok=True)

    curve_hash = hashlib.sha256(
        np.ascontiguousarray(result.initial.vertices).tobytes()
    ).hexdigest()
    config = {
        "run_spec": result.spec.to_json_dict(),
        "initial_curve_sha256": curve_hash,
        "version": _code_version(),
        "termination": result.trajectory.termination,
        "passed": result.passed,
    }
    (outdir / "config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n"
    )

    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    for snap in result.trajectory.snapshots:
        save_curve(snap.curve, snapdir / f"curve_{snap.step:06d}.json")

    write_series_csv(result, outdir / "series.csv")

    reportdir = outdir / "reports"
    reportdir.mkdir(exist_ok=True)
    for name, report in result.reports.items():
        (reportdir / f"{name}.json").write_text(
            json.dumps(report.to_json_dict(), indent=2) + "\n"
        )
    return outdir


# -- identity suite, static profiling, bench ----------------------------------

def verify_identities(
    nx: int = 400, nt: int = 101, perturb_scale: float | None = None
) -> list[IdentityReport]:
    """The full closed-form check suite on analytic inputs.

    ``perturb_scale`` adds scale*x to the barrier in the three f-based
    checks (a deliberate fault, used to prove the suite can fail).
    """
    perturb = None
    if perturb_scale is not None:
        perturb = lambda X, T: perturb_scale * np.asarray(X)  # noqa: E731
    circle = AnalyticEllipse(1.0, 1.0)
    ellipse = AnalyticEllipse(2.0, 1.0)
    return [
        check_Ltilde(nx, nt, perturb=perturb),
        check_L_dominates(nx, nt, perturb=perturb),
        check_f_shape(nx, nt, perturb=perturb),
        check_g_positive(),
        check_h_convex(),
        replace(
            check_small_sep_taylor(circle, 0.0),
            name="small-separation Taylor limit (circle)",
        ),
        replace(
            check_small_sep_taylor(ellipse, 0.0),
            name="small-separation Taylor limit (ellipse pole, k=2)",
        ),
        replace(
            check_small_sep_taylor(ellipse, 0.5 * math.pi),
            name="small-separation Taylor limit (ellipse flat, k=1/4)",
        ),
    ]


def profile_curve(path: str | Path, out_csv: str | Path | None = None):
    """Profile a curve file: summary plus the per-pair (l, d, a) table.

    The curve is rescaled to length 2*pi first. Returns the summary and the
    CSV path written.
    """
    curve = load_curve(path)
    if not is_embedded(curve):
        raise NotEmbedded("cannot profile a self-intersecting curve", path=str(path))
    frame = build_frame(canonical_scale(curve))
    summary = profile(frame)

    _, _, d, ell = all_pairs_chord_arc(frame)
    ell = np.minimum(ell, math.pi)
    a = a_solve(d, ell)
    out_csv = (
        Path(out_csv)
        if out_csv is not None
        else Path(path).with_suffix(".profile.csv")
    )
    lines = ["l,d,a"]
    for row in zip(ell, d, a):
        lines.append(",".join(_fmt(v) for v in row))
    out_csv.write_text("\n".join(lines) + "\n")
    return summary, out_csv


def bench(n: int = 512, steps: int = 200) -> dict[str, float]:
    """Steps per second of both schemes on a normalized ellipse; rough."""
    results = {}
    for scheme in (SCHEME_EXPLICIT, SCHEME_SEMI_IMPLICIT):
        curve = canonical_scale(gen_ellipse(2.0, 1.0, n))
        snap = Snapshot(0.0, 0, curve, build_frame(curve))
        dt = 1e-5 if scheme == SCHEME_EXPLICIT else 1e-3
        t0 = _time.perf_counter()
        for _ in range(steps):
            snap = step_normalized(snap, dt, scheme=scheme, check_embedded=False)
        results[scheme] = steps / (_time.perf_counter() - t0)
    return results
