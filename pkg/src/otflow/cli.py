"""Command-line entry point.

Subcommands: construct, model, run, diag, verify.  Exit codes:
0 success, 1 parse/validation error, 2 construct validation failure,
3 solver failure, 4 diagnostics red flag, 5 verification failure.
OTFLOW_THREADS caps the kernel worker count (0 = auto); OTFLOW_BACKEND
selects numba or numpy kernels.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import diagnostics, snapshots
from .config import load_config
from .construct import analyze_matrix, parse_matrix
from .errors import (
    CannotSatisfyPositivity,
    ConfigError,
    NotPositive,
    OtflowError,
    ResolutionTooCoarse,
    UnstableStep,
)
from .modelgeom import (
    ModelParams,
    bismut_ricci_model,
    chern_curvature_model,
    model_flow,
    unnormalize_time,
)
from .runner import red_flags, run


def _structure_json(structure) -> dict:
    return {
        "matrix": [[int(structure.M[i, j]) for j in range(3)] for i in range(3)],
        "lambda": structure.lam,
        "mu": {"re": structure.mu.real, "im": structure.mu.imag},
        "abs_mu_sq": abs(structure.mu) ** 2,
        "a_vec": [float(v) for v in structure.a_vec],
        "b_vec": [{"re": v.real, "im": v.imag} for v in structure.b_vec],
        "V": [[float(structure.V[i, j]) for j in range(3)] for i in range(3)],
        "det_V": float(np.linalg.det(structure.V)),
        "glue_matrix": [[int(structure.glue_matrix[i, j]) for j in range(3)]
                        for i in range(3)],
    }


def cmd_construct(args) -> int:
    try:
        matrix = parse_matrix(args.matrix)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        structure = analyze_matrix(matrix)
    except OtflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(_structure_json(structure), indent=2))
    return 0


def cmd_model(args) -> int:
    try:
        params = ModelParams(a=args.a, b=args.b)
        if len(args.imw) != params.s:
            raise ValueError("need one --imw per factor")
        if args.t < 0:
            raise ValueError("t must be >= 0")
        point = [complex(0.0, v) for v in args.imw]
        metric = model_flow(params, args.t, point)
        curv = chern_curvature_model(params, point)
        rho = bismut_ricci_model(point)
        s_time, scale = unnormalize_time(args.t)
    except (ValueError, OtflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {
        "t": args.t,
        "s_time": s_time,
        "scale": scale,
        "gH": [float(v) for v in metric.gH],
        "gC": [float(v) for v in metric.gC],
        "chern_ww_ww": [float(v) for v in curv.ww_ww],
        "chern_ww_zz": [float(v) for v in curv.ww_zz],
        "bismut_ricci": [float(v) for v in rho],
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run(cfg)
    except (NotPositive, UnstableStep, CannotSatisfyPositivity) as exc:
        t = getattr(exc, "t", None)
        where = f" (t = {t:.6g})" if t is not None else ""
        print(f"solver failure{where}: {exc}", file=sys.stderr)
        return 3
    except OtflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, report in sorted(result.reports.items()):
        print(f"{name}: {'PASS' if report.passed else 'FAIL'} ({report.detail})")
    flags = red_flags(result.reports)
    if flags:
        print(f"red flag: {flags[0].name}: {flags[0].detail}", file=sys.stderr)
        return 4
    return 0


def cmd_diag(args) -> int:
    """Recompute diagnostics rows from snapshot files."""
    paths = sorted(args.snapshots)
    if not paths:
        print("error: no snapshot files given", file=sys.stderr)
        return 1
    try:
        loaded = [snapshots.read_snapshot(p) for p in paths]
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    from .construct import lattice_chart
    from .solver import make_state, _rhs_raw

    header0 = loaded[0][0]
    try:
        structure = analyze_matrix(np.array(header0["matrix"], dtype=object).reshape(3, 3))
        chart = lattice_chart(structure, header0["grid"]["y0"],
                              header0["grid"]["N_u"], header0["grid"]["N_f"])
        params = ModelParams(a=[header0["params"]["a"]], b=[header0["params"]["b"]])
    except (KeyError, OtflowError) as exc:
        print(f"error: bad snapshot header: {exc}", file=sys.stderr)
        return 1

    loaded.sort(key=lambda pair: pair[0]["t"])
    series = []
    rows = []
    try:
        for header, phi in loaded:
            state = make_state(chart, params, phi, t=header["t"],
                               norm_mode=header.get("norm_mode", "improved"),
                               c1=header.get("c1"))
            dphi, g_ww, g_zz = _rhs_raw(state)
            series.append((header["t"], phi, dphi, g_ww, g_zz))
        for k, (t, phi, dphi, g_ww, g_zz) in enumerate(series):
            if len(series) == 1:
                res = math.nan
            elif k == 0:
                tn, _, _, gwn, gzn = series[1]
                res = diagnostics.flow_residual_field(
                    chart, params, t, g_ww, g_zz,
                    (gwn - g_ww) / (tn - t), (gzn - g_zz) / (tn - t))
            elif k == len(series) - 1:
                tp, _, _, gwp, gzp = series[k - 1]
                res = diagnostics.flow_residual_field(
                    chart, params, t, g_ww, g_zz,
                    (g_ww - gwp) / (t - tp), (g_zz - gzp) / (t - tp))
            else:
                from .runner import _uneven_dt

                tp, _, _, gwp, gzp = series[k - 1]
                tn, _, _, gwn, gzn = series[k + 1]
                h1, h2 = t - tp, tn - t
                res = diagnostics.flow_residual_field(
                    chart, params, t, g_ww, g_zz,
                    _uneven_dt(gwp, g_ww, gwn, h1, h2),
                    _uneven_dt(gzp, g_zz, gzn, h1, h2))
            rows.append(diagnostics.compute_row(chart, params, t, phi, dphi,
                                                g_ww, g_zz, res, args.stretch))
    except ResolutionTooCoarse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OtflowError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    diagnostics.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_verify(args) -> int:
    from . import verify

    checks = verify.suite(args.suite)
    width = max(len(c.name) for c in checks)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {status}  [{c.seconds:7.2f}s]  {c.detail}")
    if failed:
        print(f"\nFAILED: {failed[0].name}: {failed[0].detail}", file=sys.stderr)
        return 5
    print(f"\nall {len(checks)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otflow",
        description="Pluriclosed-flow laboratory on Inoue surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="analyze an SL(3,Z) matrix")
    p.add_argument("matrix", help='row-major "m11,m12,m13;m21,m22,m23;m31,m32,m33"')
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("model", help="evaluate the model metric and curvature")
    p.add_argument("--a", type=float, nargs="+", required=True)
    p.add_argument("--b", type=float, nargs="+", required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--imw", type=float, nargs="+", required=True)
    p.set_defaults(fn=cmd_model)

    p = sub.add_parser("run", help="integrate a flow configuration")
    p.add_argument("config", help="path to a JSON run configuration")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diag", help="recompute diagnostics from snapshots")
    p.add_argument("snapshots", nargs="+", help="snapshot files")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--stretch", action="store_true",
                   help="include weighted curvature")
    p.set_defaults(fn=cmd_diag)

    p = sub.add_parser("verify", help="run the acceptance suites")
    p.add_argument("suite", choices=["formulas", "flow", "estimates", "all"])
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
