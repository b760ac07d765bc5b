"""Monitored quantities along a run and the estimate reports built from them.

The max-principle trace envelopes are bounds along the *unnormalized* flow,
so the monitored traces are rescaled by e^-t and compared at the time
s = e^t - 1; the normalized traces themselves (which tend to finite limits
on model runs) are what the rows record.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InsufficientSamples, ResolutionTooCoarse
from .solver import GridGeometry, beta_coef, geometry_of, reconstruct_metric

TRACE_TOL = 0.05

CSV_COLUMNS = [
    "t", "sup_phi", "inf_phi", "sup_phidot", "inf_phidot", "sup_trgH_hH",
    "inf_trhH_gH", "sup_trg_h", "min_ratio_H", "min_ratio_C", "osc_trace",
    "collapse_w", "collapse_z", "flow_residual", "psi_min", "psi_max",
    "R_weighted_min",
]


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    sup_phi: float
    inf_phi: float
    sup_phidot: float
    inf_phidot: float
    sup_trgH_hH: float
    inf_trhH_gH: float
    sup_trg_h: float
    min_ratio_H: float
    min_ratio_C: float
    osc_trace: float
    collapse_w: float
    collapse_z: float
    flow_residual: float
    psi_min: float
    psi_max: float
    R_weighted_min: float | None = None


@dataclass(frozen=True)
class Report:
    name: str
    passed: bool
    detail: str


def _ycol(chart):
    return geometry_of(chart).y_u.reshape(-1, 1, 1, 1)


def trace_fields(state):
    """Per-point trace fields and their extrema.

    tr_{g_H} h_H and tr_g h are taken against the fixed unit model metric;
    the ratio fields compare against the model flow with the run's own (a, b).
    """
    metric = reconstruct_metric(state)
    return _trace_entries(metric.g_ww, metric.g_zz, state.chart, state.params, state.t)


def _trace_entries(g_ww, g_zz, chart, params, t):
    y = _ycol(chart)
    e = math.exp(-t)
    a, b = params.a[0], params.b[0]
    trgH_hH = 1.0 / (y**2 * g_ww)
    trhH_gH = g_ww * y**2
    trg_h = trgH_hH + y / g_zz
    ratio_H = g_ww * y**2 / beta_coef(t, a)
    ratio_C = g_zz / (e * b * y)
    beta1 = beta_coef(t, 1.0)
    trace_mov = beta1 / (y**2 * g_ww) + e * y / g_zz
    return {
        "trgH_hH": trgH_hH,
        "trhH_gH": trhH_gH,
        "trg_h": trg_h,
        "ratio_H": ratio_H,
        "ratio_C": ratio_C,
        "trace_moving": trace_mov,
        "sup_trgH_hH": float(trgH_hH.max()),
        "inf_trhH_gH": float(trhH_gH.min()),
        "sup_trg_h": float(trg_h.max()),
        "min_ratio_H": float(ratio_H.min()),
        "min_ratio_C": float(ratio_C.min()),
        "osc_trace": float(trace_mov.max() - trace_mov.min()),
    }


def collapse_indicators(g_ww, g_zz, chart, t):
    """(collapse_w, collapse_z, osc_trace): blowdown indicators of the
    normalized flow; g_ww*y^2 -> 3/4 and g_zz decays like e^-t."""
    y = _ycol(chart)
    collapse_w = float(np.max(np.abs(g_ww * y**2 - 0.75)))
    collapse_z = float(np.max(g_zz)) * math.exp(t)
    beta1 = beta_coef(t, 1.0)
    trace_mov = beta1 / (y**2 * g_ww) + math.exp(-t) * y / g_zz
    osc = float(trace_mov.max() - trace_mov.min())
    return collapse_w, collapse_z, osc


def dilaton_field(g_ww, g_zz, chart, t):
    y = _ycol(chart)
    return (np.log(g_ww * y**2) + 2.0 * np.log(g_zz / (math.exp(-t) * y))) / 9.0


def dilaton(state):
    """psi = (1/9)(log det g_H/det h_H + 2 log det g_C/det(e^-t h_C))."""
    metric = reconstruct_metric(state)
    return dilaton_field(metric.g_ww, metric.g_zz, state.chart, state.t)


# -- weighted scalar curvature (stretch tier) -------------------------------

def _cartesian_first(field, geom: GridGeometry, weight):
    d_u, d1, d2, d3 = kernels.first_diffs(field, geom, weight)
    ycol = geom.y_u.reshape(-1, 1, 1, 1)
    W = geom.W
    f_y = d_u / (ycol * geom.lnlam)
    f_x = W[0, 0] * d1 + W[1, 0] * d2 + W[2, 0] * d3
    f_p = W[0, 1] * d1 + W[1, 1] * d2 + W[2, 1] * d3
    f_q = W[0, 2] * d1 + W[1, 2] * d2 + W[2, 2] * d3
    return f_x, f_y, f_p, f_q


def _block_laplacians(field, geom: GridGeometry, weight):
    hw, hz = kernels.twisted_hessian(field, geom, weight)
    return 4.0 * hw, 4.0 * hz  # d_xx + d_yy, d_pp + d_qq


def weighted_scalar_fields(A, B, psi, geom: GridGeometry,
                           weights=(1.0, 1.0, 1.0)):
    """R - |H|^2/12 + 2*Lap(psi) - |grad psi|^2 for the diagonal metric
    diag(A, A, B, B) in the (x, y, p, q) frame.

    `weights` are the per-crossing gauge factors of (A, B, psi) over the glued
    u seam (lambda^-2, lambda, 1 on a genuine chart)."""
    wA, wB, wP = weights
    Ax, Ay, Ap, Aq = _cartesian_first(A, geom, wA)
    Bx, By, Bp, Bq = _cartesian_first(B, geom, wB)
    Px, Py, Pp, Pq = _cartesian_first(psi, geom, wP)
    lapH_A, lapC_A = _block_laplacians(A, geom, wA)
    lapH_B, lapC_B = _block_laplacians(B, geom, wB)
    lapH_P, lapC_P = _block_laplacians(psi, geom, wP)

    gradH_A = Ax**2 + Ay**2
    gradC_A = Ap**2 + Aq**2
    gradH_B = Bx**2 + By**2
    gradC_B = Bp**2 + Bq**2

    R = (gradH_A / A**3 - lapH_A / A**2
         + gradC_B / B**3 - lapC_B / B**2
         + gradC_A / (2.0 * A**2 * B) + gradH_B / (2.0 * A * B**2)
         - 2.0 * (lapC_A + lapH_B) / (A * B))
    H2 = 6.0 * ((Ap**2 + Aq**2) / (A**2 * B) + (Bx**2 + By**2) / (A * B**2))
    lap_psi = (lapH_P / A + lapC_P / B
               + (Bx * Px + By * Py) / (A * B)
               + (Ap * Pp + Aq * Pq) / (A * B))
    grad_psi2 = (Px**2 + Py**2) / A + (Pp**2 + Pq**2) / B
    return R - H2 / 12.0 + 2.0 * lap_psi - grad_psi2


def weighted_scalar(state, psi=None):
    """Weighted scalar curvature field of the reconstructed metric."""
    chart = state.chart
    if chart.N_u < 8 or chart.N_f < 8:
        raise ResolutionTooCoarse(
            f"weighted_scalar needs >= 8 points per axis, got ({chart.N_u}, {chart.N_f})")
    geom = geometry_of(chart)
    metric = reconstruct_metric(state)
    if psi is None:
        psi = dilaton_field(metric.g_ww, metric.g_zz, chart, state.t)
    lam = geom.lam
    return weighted_scalar_fields(2.0 * metric.g_ww, 2.0 * metric.g_zz, psi,
                                  geom, weights=(lam**-2, lam, 1.0))


# -- row assembly ------------------------------------------------------------

def compute_row(chart, params, t, phi, dphi, g_ww, g_zz, flow_residual,
                stretch=False) -> DiagnosticsRow:
    entries = _trace_entries(g_ww, g_zz, chart, params, t)
    collapse_w, collapse_z, osc = collapse_indicators(g_ww, g_zz, chart, t)
    psi = dilaton_field(g_ww, g_zz, chart, t)
    r_min = None
    if stretch:
        if chart.N_u < 8 or chart.N_f < 8:
            raise ResolutionTooCoarse(
                f"stretch tier needs >= 8 points per axis, got ({chart.N_u}, {chart.N_f})")
        geom = geometry_of(chart)
        lam = geom.lam
        field = weighted_scalar_fields(2.0 * g_ww, 2.0 * g_zz, psi, geom,
                                       weights=(lam**-2, lam, 1.0))
        r_min = float(field.min())
    return DiagnosticsRow(
        t=float(t),
        sup_phi=float(phi.max()),
        inf_phi=float(phi.min()),
        sup_phidot=float(dphi.max()),
        inf_phidot=float(dphi.min()),
        sup_trgH_hH=entries["sup_trgH_hH"],
        inf_trhH_gH=entries["inf_trhH_gH"],
        sup_trg_h=entries["sup_trg_h"],
        min_ratio_H=entries["min_ratio_H"],
        min_ratio_C=entries["min_ratio_C"],
        osc_trace=osc,
        collapse_w=collapse_w,
        collapse_z=collapse_z,
        flow_residual=float(flow_residual),
        psi_min=float(psi.min()),
        psi_max=float(psi.max()),
        R_weighted_min=r_min,
    )


def flow_residual_field(chart, params, t, g_ww, g_zz, dg_ww, dg_zz):
    """Sup-norm residual of d/dt g + rho_B(g) + g with rho_B from the
    transgression against the unit model metric."""
    geom = geometry_of(chart)
    y = _ycol(chart)
    f = np.log(g_zz / y) - np.log(g_ww * y**2)
    hw, hz = kernels.twisted_hessian(np.ascontiguousarray(f), geom)
    res_ww = dg_ww + (-0.75 / y**2 + hw) + g_ww
    res_zz = dg_zz - hz + g_zz
    return max(float(np.max(np.abs(res_ww))), float(np.max(np.abs(res_zz))))


# -- trajectory reports -------------------------------------------------------

def _sorted_rows(rows):
    return sorted(rows, key=lambda r: r.t)


def c0_envelope(rows) -> Report:
    """Boundedness of m(t) = sup|phi| e^t/(1+t): the two-sided decay bound."""
    rows = _sorted_rows(rows)
    if len(rows) < 10 or rows[-1].t < 5.0:
        raise InsufficientSamples(
            f"need >= 10 rows spanning t >= 5, got {len(rows)} rows to t = {rows[-1].t if rows else 0}")
    m = [(r.t, max(abs(r.sup_phi), abs(r.inf_phi)) * math.exp(r.t) / (1.0 + r.t))
         for r in rows]
    tail = [(t, v) for t, v in m if t >= 1.0]
    m1 = tail[0][1]
    worst_t, worst = max(tail, key=lambda p: p[1])
    bound = 3.0 * max(m1, 1e-12)
    passed = worst <= bound
    return Report("c0_envelope", passed,
                  f"max m(t) = {worst:.3e} at t = {worst_t:.3g}, bound {bound:.3e}")


def phidot_bounds(rows) -> Report:
    """No late-time growth of sup|phidot| beyond 1.5x its early maximum."""
    rows = _sorted_rows(rows)
    early = [max(abs(r.sup_phidot), abs(r.inf_phidot)) for r in rows if r.t <= 2.0]
    late = [(r.t, max(abs(r.sup_phidot), abs(r.inf_phidot))) for r in rows if r.t >= 2.0]
    if not early or not late:
        raise InsufficientSamples("need rows on both sides of t = 2")
    bound = 1.5 * max(early) + 0.1
    worst_t, worst = max(late, key=lambda p: p[1])
    passed = worst <= bound
    return Report("phidot_bounds", passed,
                  f"max sup|phidot| = {worst:.3e} at t = {worst_t:.3g}, bound {bound:.3e}")


def metric_lower_bound(rows) -> Report:
    """The metric stays above a fixed multiple of the model flow."""
    rows = _sorted_rows(rows)
    early = [min(r.min_ratio_H, r.min_ratio_C) for r in rows if r.t <= 1.0]
    if not early:
        raise InsufficientSamples("need rows with t <= 1")
    c_early = min(early)
    vals = [(r.t, min(r.min_ratio_H, r.min_ratio_C)) for r in rows]
    worst_t, c_min = min(vals, key=lambda p: p[1])
    passed = c_min >= 0.5 * c_early
    return Report("metric_lower_bound", passed,
                  f"c_min = {c_min:.4g} at t = {worst_t:.3g}, early c_min = {c_early:.4g}")


def trace_bounds(rows, tol: float = TRACE_TOL) -> Report:
    """Max-principle envelopes, evaluated along the unnormalized flow
    (trace scaled by e^-t, time s = e^t - 1, constants calibrated at t=0)."""
    rows = _sorted_rows(rows)
    if not rows or rows[0].t > 1e-12:
        raise InsufficientSamples("need a t = 0 row to calibrate the envelopes")
    u0 = rows[0].sup_trgH_hH
    f0 = rows[0].sup_trg_h
    worst = (-math.inf, 0.0, "")
    ok = True
    for r in rows:
        s = math.expm1(r.t)
        qh = math.exp(-r.t) * r.sup_trgH_hH
        env_h = (1.0 + tol) / (1.0 / u0 + 0.5 * s)
        qf = math.exp(-r.t) * r.sup_trg_h
        env_f = (1.0 + tol) * f0 * math.sqrt(1.0 + 0.5 * s * u0)
        if qh > env_h:
            ok = False
            worst = max(worst, (qh - env_h, r.t, "tr_gH hH"))
        if qf > env_f:
            ok = False
            worst = max(worst, (qf - env_f, r.t, "tr_g h"))
    detail = "all rows inside the envelopes" if ok else (
        f"{worst[2]} exceeds its envelope by {worst[0]:.3e} at t = {worst[1]:.3g}")
    return Report("trace_bounds", ok, detail)


def collapse_warnings(rows) -> Report:
    """Homogenization indicators at the final time; informative only."""
    rows = _sorted_rows(rows)
    last = rows[-1]
    ok = last.collapse_w <= 0.1 and last.osc_trace <= 0.1
    return Report("collapse_warning", ok,
                  f"collapse_w({last.t:.3g}) = {last.collapse_w:.3e}, "
                  f"osc_trace = {last.osc_trace:.3e} (threshold 0.1)")


def monotonicity_check(rows) -> Report:
    """min R^{H,psi}(t) against inf_0 * e^t with additive slack."""
    vals = [(r.t, r.R_weighted_min) for r in _sorted_rows(rows)
            if r.R_weighted_min is not None]
    if len(vals) < 2:
        raise InsufficientSamples("need >= 2 rows with weighted curvature")
    inf0 = vals[0][1]
    slack = 0.05 * abs(inf0) + 0.05
    ok = True
    worst = (math.inf, 0.0)
    for t, v in vals:
        bound = inf0 * math.exp(t) - slack
        if v - bound < worst[0]:
            worst = (v - bound, t)
        if v < bound:
            ok = False
    return Report("monotonicity", ok,
                  f"min margin {worst[0]:.3e} at t = {worst[1]:.3g} (inf_0 = {inf0:.4g})")


def write_csv(rows, path):
    """One row per diagnostics time; stretch-tier blanks stay empty."""
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        vals = []
        for col in CSV_COLUMNS:
            v = getattr(r, col)
            vals.append("" if v is None else repr(float(v)))
        lines.append(",".join(vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            kw = {}
            for col, raw in zip(CSV_COLUMNS, parts):
                kw[col] = None if raw == "" else float(raw)
            rows.append(DiagnosticsRow(**kw))
    return rows
