"""Command line entry point.

Subcommands: ``run`` (integrate a flow and check the bounds along it),
``verify-identities`` (the closed-form check suite), ``profile`` (static
chord/arc profile of a curve file), ``bench`` (steps/second).

Failures surface as a single-line JSON object {kind, message, context} on
standard error with exit status 2; checks that ran but did not hold exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dynamics import (
    KIND_NORMALIZED,
    KIND_UNNORMALIZED,
    SCHEME_EXPLICIT,
    SCHEME_SEMI_IMPLICIT,
    FlowConfig,
)
from .errors import CsflowError
from .harness import (
    ALL_CHECKS,
    RunSpec,
    bench,
    execute,
    profile_curve,
    verify_identities,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csflow",
        description="Shortening-flow laboratory: runs, bound checks, identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a flow and check bounds")
    src = p_run.add_mutually_exclusive_group()
    src.add_argument(
        "--generator",
        choices=["circle", "ellipse", "dumbbell", "fourier"],
        default=None,
        help="initial curve family (default: circle)",
    )
    src.add_argument("--input", default=None, help="curve file (.json or .csv)")
    p_run.add_argument("--r", type=float, default=1.0, help="circle radius")
    p_run.add_argument("--a", type=float, default=2.0, help="ellipse x semi-axis")
    p_run.add_argument("--b", type=float, default=1.0, help="ellipse y semi-axis")
    p_run.add_argument("--neck", type=float, default=0.2, help="dumbbell waist ratio")
    p_run.add_argument("--modes", type=int, default=6, help="fourier mode count")
    p_run.add_argument("--seed", type=int, default=1, help="generator RNG seed")
    p_run.add_argument("--n", type=int, default=512, help="vertex count")
    p_run.add_argument(
        "--kind",
        choices=[KIND_NORMALIZED, KIND_UNNORMALIZED],
        default=KIND_NORMALIZED,
    )
    p_run.add_argument(
        "--scheme",
        choices=[SCHEME_EXPLICIT, SCHEME_SEMI_IMPLICIT],
        default=SCHEME_SEMI_IMPLICIT,
    )
    p_run.add_argument("--dt", type=float, default=1e-3, help="step (or adaptive cap)")
    p_run.add_argument("--adaptive", action="store_true", help="adapt dt to k_max")
    p_run.add_argument("--safety", type=float, default=0.25, help="adaptive factor")
    p_run.add_argument("--t-end", type=float, default=6.0, help="end time")
    p_run.add_argument("--resample-every", type=int, default=20, metavar="STEPS")
    p_run.add_argument("--snapshot-every", type=int, default=10, metavar="STEPS")
    p_run.add_argument("--embed-check-every", type=int, default=10, metavar="STEPS")
    p_run.add_argument(
        "--check",
        action="append",
        choices=list(ALL_CHECKS) + ["all", "none"],
        default=None,
        help="bound check to run (repeatable; default all)",
    )
    p_run.add_argument("--outdir", default=None, help="run directory (default: slug)")
    p_run.add_argument(
        "--no-persist", action="store_true", help="skip writing the run directory"
    )
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify-identities", help="closed-form check suite")
    p_ver.add_argument("--grid-x", type=int, default=400, help="x resolution")
    p_ver.add_argument("--grid-t", type=int, default=101, help="t resolution")
    p_ver.add_argument(
        "--_perturb-f", dest="perturb_f", type=float, default=None,
        help=argparse.SUPPRESS,  # fault injection for testing the suite itself
    )
    p_ver.set_defaults(func=_cmd_verify)

    p_prof = sub.add_parser("profile", help="chord/arc profile of a curve file")
    p_prof.add_argument("input", help="curve file (.json or .csv)")
    p_prof.add_argument("--out", default=None, help="pair table CSV path")
    p_prof.set_defaults(func=_cmd_profile)

    p_bench = sub.add_parser("bench", help="steps/second of both schemes")
    p_bench.add_argument("--n", type=int, default=512)
    p_bench.add_argument("--steps", type=int, default=200)
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def _resolve_checks(raw: list[str] | None) -> tuple[str, ...]:
    if raw is None or "all" in raw:
        return ALL_CHECKS
    if "none" in raw:
        return ()
    # keep canonical order, drop duplicates
    return tuple(c for c in ALL_CHECKS if c in raw)


def _cmd_run(args) -> int:
    generator = args.generator
    if generator is None and args.input is None:
        generator = "circle"
    params = {}
    if generator == "circle":
        params = {"r": args.r}
    elif generator == "ellipse":
        params = {"a": args.a, "b": args.b}
    elif generator == "dumbbell":
        params = {"neck": args.neck}
    elif generator == "fourier":
        params = {"modes": args.modes}
    flow = FlowConfig(
        kind=args.kind,
        n=args.n,
        scheme=args.scheme,
        dt=args.dt,
        adaptive=args.adaptive,
        safety=args.safety,
        t_end=args.t_end,
        resample_every=args.resample_every,
        snapshot_every=args.snapshot_every,
        embed_check_every=args.embed_check_every,
    )
    spec = RunSpec(
        generator=generator,
        params=params,
        input_path=args.input,
        flow=flow,
        checks=_resolve_checks(args.check),
        outdir=args.outdir,
        seed=args.seed,
    )
    result = execute(spec, persist=not args.no_persist)
    print(f"termination: {result.trajectory.termination}")
    final = result.trajectory.final
    print(f"final: t = {final.time:.6g}, steps = {final.step}")
    for name, report in result.reports.items():
        status = "pass" if report.passed else "FAIL"
        print(f"{name}: {status} (worst margin {report.worst_margin:.3e})")
    if result.metrics is not None:
        status = "pass" if result.metrics.identity_pass else "FAIL"
        worst = float(max(result.metrics.identity_residual))
        print(f"quadrature-identity: {status} (worst residual {worst:.3e})")
    if result.outdir is not None:
        print(f"run directory: {result.outdir}")
    return 0 if result.passed else 1


def _cmd_verify(args) -> int:
    reports = verify_identities(args.grid_x, args.grid_t, perturb_scale=args.perturb_f)
    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(
            f"{r.name:<{width}}  residual {r.max_residual:9.3e}  "
            f"violation {r.max_violation:9.3e}  tol {r.tolerance:7.1e}  {status}"
        )
    print(json.dumps([r.to_json_dict() for r in reports]))
    return 0 if all(r.passed for r in reports) else 1


def _cmd_profile(args) -> int:
    summary, out_csv = profile_curve(args.input, args.out)
    if summary.round_circle:
        print("a_bar = 0 (round-circle: every chord at or above 2 sin(l/2))")
        print("t_bar = -inf")
    else:
        print(f"a_bar = {summary.a_bar:.12g}")
        print(f"t_bar = {summary.t_bar:.12g}")
    print(f"attained at pair {summary.attained}")
    print(f"diagonal max = {summary.diagonal_max:.12g}")
    print(f"off-diagonal max = {summary.offdiagonal_max:.12g}")
    print(f"active pairs: {summary.n_active}")
    print(f"pair table: {out_csv}")
    return 0


def _cmd_bench(args) -> int:
    for scheme, rate in bench(args.n, args.steps).items():
        print(f"{scheme}: {rate:.0f} steps/s at n = {args.n}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CsflowError as exc:
        print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
