"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 bound violation, 4 no progress.
JSON goes to stdout (or ``--out``); diagnostics go to stderr. Angles are in
radians throughout.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .exceptions import BoundViolation, GeometryError, NoProgress, ParseError
from .grid import (
    CERTIFIED_ALPHA_MAX,
    CERTIFY_SWEEP_N,
    Perturbation,
    build_grid,
    certify_grid_bound,
    optimal_pair,
    perturbation_factor,
)
from .mesh import filter_outlier_faces, read_obj, read_trajectory
from .montecarlo import (
    NoiseSpec,
    SimGeometry,
    pixel_to_alpha,
    ratio_two_vs_all,
    run_simulation,
)
from .multires import coverage_report, select_views
from .uncertainty import (
    eps2_upper_bound,
    optimal_diag1,
    optimal_pair_config,
    ratio_bound,
    worst_case_pair,
)

EXIT_OK, EXIT_INPUT, EXIT_BOUND, EXIT_NO_PROGRESS = 0, 2, 3, 4
#: Largest perturbation fraction accepted on the command line.
LAMBDA_MAX = 0.5


class InputError(Exception):
    pass


def _positive(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _alpha(text):
    v = float(text)
    if not 0 < v < 0.25:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.25), got {text!r}")
    return v


def _lambda(text):
    v = float(text)
    if not 0 <= v <= LAMBDA_MAX:
        raise argparse.ArgumentTypeError(f"perturbation must lie in [0, {LAMBDA_MAX}], got {text!r}")
    return v


def _nonneg(text):
    v = float(text)
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def parse_alpha_list(text):
    """Comma-separated values; ``lo..hi`` expands in steps of 0.01."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (float(x) for x in part.split(".."))
            n = int(round((hi - lo) / 0.01))
            if n < 0 or not math.isclose(lo + 0.01 * n, hi, abs_tol=1e-9):
                raise argparse.ArgumentTypeError(f"range {part!r} is not a multiple of 0.01")
            out.extend(round(lo + 0.01 * k, 10) for k in range(n + 1))
        elif part:
            out.append(float(part))
    if not out:
        raise argparse.ArgumentTypeError("empty alpha list")
    for a in out:
        if not 0 < a <= CERTIFIED_ALPHA_MAX:
            raise argparse.ArgumentTypeError(
                f"alpha values must lie in (0, {CERTIFIED_ALPHA_MAX}], got {a!r}"
            )
    return out


def _scaled(value, h):
    return {"value": value, "over_h": value / h}


def _point(p):
    return [float(v) for v in p]


def _emit(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(path, header, rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def cmd_plan_pair(args):
    h, alpha = args.h, args.alpha
    gx, gy = args.target
    pair = optimal_pair((gx, gy), h, alpha)
    cfg = optimal_pair_config(h, alpha, (gx, gy))
    worst = worst_case_pair(cfg, args.sweep_n)
    diag1 = optimal_diag1(h, alpha)
    bound = eps2_upper_bound(h, alpha)
    return EXIT_OK, {
        "command": "plan-pair",
        "h": h,
        "alpha": alpha,
        "target": [gx, gy],
        "s_p": _point(pair.s_p),
        "s_q": _point(pair.s_q),
        "theta": pair.theta,
        "t": _scaled(pair.t, h),
        "diag1": _scaled(diag1, h),
        "eps2_sweep": _scaled(worst.eps, h),
        "eps2_bound": _scaled(bound, h),
        "argmax_thetas": list(worst.argmax_thetas),
        "ratio": worst.eps / diag1,
        "ratio_bound": ratio_bound(alpha),
    }


def cmd_certify_grid(args):
    h = args.h
    extent_y = args.extent if args.dims == 3 else None
    grid = build_grid(args.extent, extent_y, h)
    p = Perturbation(args.lambda_v, args.lambda_h)
    payload = {
        "command": "certify-grid",
        "dims": args.dims,
        "h": h,
        "extent": args.extent,
        "samples": args.samples,
        "sweep_n": args.sweep_n,
        "lambda_v": p.lambda_v,
        "lambda_h": p.lambda_h,
        "perturbation_factor": perturbation_factor(p),
    }
    code = EXIT_OK
    try:
        report = certify_grid_bound(grid, args.alpha_list, p, args.dims, args.samples, args.sweep_n)
        witness = None
    except BoundViolation as exc:
        report, witness, code = exc.report, exc.witness, EXIT_BOUND
    rows = [
        {
            "alpha": r["alpha"],
            "cell": r["cell"],
            "ratio": r["ratio"],
            "bound": r["bound"],
            "eps": _scaled(r["eps"], h),
            "target": r["target"],
            "pair": r["pair"],
        }
        for r in report.rows
    ]
    payload.update(
        constant=report.constant,
        bound=report.bound,
        max_ratio=report.max_ratio,
        passed=code == EXIT_OK,
        rows=rows,
        witness=None if witness is None else next(
            row for row in rows if row["alpha"] == witness["alpha"] and row["cell"] == witness["cell"]
        ),
    )
    if args.csv:
        _write_csv(
            args.csv,
            ["alpha", "cell", "ratio", "bound"],
            [[_fmt(r["alpha"]), " ".join(str(c) for c in r["cell"]), _fmt(r["ratio"]), _fmt(r["bound"])]
             for r in rows],
        )
    if code != EXIT_OK:
        print(f"bound violated: ratio {witness['ratio']:.6f} > {report.bound:.6f}", file=sys.stderr)
    return code, payload


def _selection_payload(sel, mesh, traj, h):
    stats = coverage_report(sel, mesh)
    for lvl in stats["per_level"]:
        lvl["resolution_over_h"] = lvl["resolution"] / h
        if lvl["min_spacing"] is not None:
            lvl["min_spacing_over_h"] = lvl["min_spacing"] / h
    ids = traj.ids
    return {
        "chosen": sorted(int(ids[k]) for k in sel.chosen),
        "levels": [
            {
                "level": r.level,
                "resolution": _scaled(r.resolution, h),
                "added": [int(ids[k]) for k in r.added],
                "faces_covered": r.faces_covered,
                "coverage": float(r.coverage),
            }
            for r in sel.levels
        ],
        "uncovered": sorted(int(f) for f in sel.uncovered),
        "excluded": sorted(int(f) for f in sel.excluded),
        "per_face_cover": {str(f): [int(ids[k]) for k in sel.per_face_cover[f]]
                           for f in sorted(sel.per_face_cover)},
        "stats": stats,
    }


def cmd_select_views(args):
    mesh = read_obj(args.mesh)
    kept = np.arange(len(mesh))
    if args.filter_outliers:
        mesh, kept = filter_outlier_faces(mesh)
    traj = read_trajectory(args.traj)
    h = args.h
    if h is None:
        h = float(np.median(traj.positions[:, 2]) - mesh.vertices[:, 2].min())
        if not h > 0:
            raise InputError("cameras must lie above the mesh; pass --h explicitly")
    code = EXIT_OK
    try:
        sel = select_views(mesh, traj, args.r0, args.coverage, args.k_min,
                           aperture=args.aperture, coverage_mode=args.coverage_mode)
    except NoProgress as exc:
        sel, code = exc.selection, EXIT_NO_PROGRESS
        print(str(exc), file=sys.stderr)
    payload = {
        "command": "select-views",
        "h": h,
        "r0": _scaled(args.r0, h),
        "coverage_target": args.coverage,
        "k_min": args.k_min,
        "coverage_mode": args.coverage_mode,
        "trajectory_size": len(traj),
        "filtered_faces": len(kept) if args.filter_outliers else None,
        "reached": code == EXIT_OK,
    }
    payload.update(_selection_payload(sel, mesh, traj, h))
    return code, payload


def cmd_simulate(args):
    geometry = SimGeometry(args.h, args.alpha)
    noise = NoiseSpec(args.n_p, args.n_s, args.n_theta)
    payload = {
        "command": "simulate",
        "mode": args.mode,
        "trials": args.trials,
        "seed": args.seed,
        "h": args.h,
        "alpha": args.alpha,
        "noise": {"n_p_max": args.n_p, "n_s_max": args.n_s, "n_theta_max": args.n_theta},
        "pixel_alpha_linear": pixel_to_alpha(args.n_p, geometry.camera),
    }
    if args.mode == "hist":
        s = run_simulation(geometry, noise, args.trials, args.seed)
        q = np.quantile(s.errors, [0.5, 0.9, 0.99, 1.0])
        payload.update(
            predicted_worst=_scaled(s.predicted_worst, args.h),
            sweep_worst=_scaled(s.sweep_worst, args.h),
            exceed_fraction=s.exceed_fraction,
            error_quantiles={k: _scaled(float(v), args.h) for k, v in zip(["p50", "p90", "p99", "max"], q)},
        )
        rows = [[k, _fmt(e)] for k, e in enumerate(s.errors)]
        header = ["trial_index", "error"]
    else:
        if args.n_cameras is None:
            raise InputError("--n-cameras is required with --mode ratio")
        r = ratio_two_vs_all(geometry, noise, args.trials, args.n_cameras, args.seed)
        valid = r.ratios[~np.isnan(r.ratios)]
        payload.update(
            n_cameras=r.n_cameras,
            excluded=r.excluded,
            max_ratio=None if math.isnan(r.max_ratio) else r.max_ratio,
            min_ratio=None if math.isnan(r.min_ratio) else r.min_ratio,
            median_ratio=float(np.median(valid)) if valid.size else None,
            exceeds_3_5=bool(valid.size and r.max_ratio > 3.5),
        )
        rows = [[k, _fmt(a), _fmt(b), _fmt(c)]
                for k, (a, b, c) in enumerate(zip(r.errors_pair, r.errors_all, r.ratios))]
        header = ["trial_index", "error", "error_all", "ratio"]
    if args.csv:
        _write_csv(args.csv, header, rows)
    return EXIT_OK, payload


def build_parser():
    parser = argparse.ArgumentParser(
        prog="viewselect",
        description="Camera placement and view selection with worst-case triangulation bounds. "
                    "All angles are in radians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-pair", help="optimal two-camera placement for one target")
    p.add_argument("--h", type=_positive, required=True, help="camera height above the ground")
    p.add_argument("--alpha", type=_alpha, required=True, help="angular error bound (rad)")
    p.add_argument("--target", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    p.add_argument("--sweep-n", type=int, default=256)
    p.set_defaults(func=cmd_plan_pair)

    p = sub.add_parser("certify-grid", help="check the grid ratio bound cell by cell")
    p.add_argument("--dims", type=int, choices=(2, 3), required=True)
    p.add_argument("--alpha-list", type=parse_alpha_list, required=True,
                   help="comma-separated values, or lo..hi in steps of 0.01")
    p.add_argument("--lambda-v", type=_lambda, default=0.0)
    p.add_argument("--lambda-h", type=_lambda, default=0.0)
    p.add_argument("--h", type=_positive, default=1.0)
    p.add_argument("--extent", type=_positive, default=10.0, help="grid extent per axis")
    p.add_argument("--samples", type=int, default=33, help="target samples per cell axis")
    p.add_argument("--sweep-n", type=int, default=CERTIFY_SWEEP_N)
    p.add_argument("--csv", help="write per-cell ratios to this CSV file")
    p.set_defaults(func=cmd_certify_grid)

    p = sub.add_parser("select-views", help="multi-resolution view selection over a mesh")
    p.add_argument("--mesh", required=True, help="triangulated ASCII OBJ")
    p.add_argument("--traj", required=True, help="JSON list of {id, x, y, z}")
    p.add_argument("--r0", type=_positive, required=True, help="initial lattice size")
    p.add_argument("--coverage", type=float, default=0.95)
    p.add_argument("--k-min", type=_count, default=3)
    p.add_argument("--h", type=_positive, default=None,
                   help="length scale for normalised output (default: median camera height)")
    p.add_argument("--aperture", choices=("mean_deviation", "mean_pairwise"), default="mean_deviation")
    p.add_argument("--coverage-mode", choices=("area", "faces"), default="area")
    p.add_argument("--filter-outliers", action="store_true",
                   help="drop faces far from their 8 nearest neighbours (3 sigma)")
    p.set_defaults(func=cmd_select_views)

    p = sub.add_parser("simulate", help="Monte Carlo triangulation study")
    p.add_argument("--mode", choices=("hist", "ratio"), default="hist")
    p.add_argument("--trials", type=_count, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=_positive, default=10.0)
    p.add_argument("--alpha", type=_alpha, default=0.1, help="error bound behind the prediction (rad)")
    p.add_argument("--n-p", type=_nonneg, default=10.0, help="pixel noise bound per axis")
    p.add_argument("--n-s", type=_nonneg, default=0.1, help="position noise bound, fraction of h")
    p.add_argument("--n-theta", type=_nonneg, default=1.0, help="orientation noise bound, degrees")
    p.add_argument("--n-cameras", type=int, default=None, help="cameras used in ratio mode (>= 3)")
    p.add_argument("--csv", help="write per-trial rows to this CSV file")
    p.set_defaults(func=cmd_simulate)

    for name in ("plan-pair", "certify-grid", "select-views", "simulate"):
        sub.choices[name].add_argument("--out", help="write JSON here instead of stdout")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, payload = args.func(args)
    except (InputError, ParseError, GeometryError, ValueError, OSError) as exc:
        print(f"viewselect {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(payload, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
