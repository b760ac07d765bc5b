"""Time integration driver: stability-limited RK2 stepping with snapshot and
diagnostics emission at fixed multiples of snapshot_dt / diag_dt."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics, snapshots
from .config import RunConfig, validate_config
from .construct import analyze_matrix, lattice_chart
from .errors import InsufficientSamples, UnstableStep
from .modelgeom import ModelParams
from .solver import (
    _check_positive,
    _rhs_raw,
    geometry_of,
    initial_potential,
    make_state,
    stable_dt_from_metric,
)

_T_SNAP = 1e-12


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    chart: object
    params: ModelParams
    rows: list
    snapshots: list          # (t, phi) pairs
    reports: dict
    final_t: float


def _stop_times(t_end, *steps):
    stops = {0.0, t_end}
    for h in steps:
        n = int(math.floor(t_end / h + _T_SNAP))
        stops.update(round(k * h, 12) for k in range(n + 1))
    return sorted(s for s in stops if s <= t_end + _T_SNAP)


def _is_multiple(t, h):
    r = t / h
    return abs(r - round(r)) <= 1e-9


def _uneven_dt(f_prev, f_mid, f_next, h1, h2):
    # first derivative at the middle of three unevenly spaced samples
    return (h1**2 * f_next - h2**2 * f_prev + (h2**2 - h1**2) * f_mid) / (
        h1 * h2 * (h1 + h2))


def run(config: RunConfig) -> RunResult:
    """Integrate from t = 0 to t_end with dt = min(stable_dt, dt_max),
    deterministic for a fixed config and seed."""
    cfg = validate_config(config)
    structure = analyze_matrix(np.array(cfg.matrix, dtype=object).reshape(3, 3))
    chart = lattice_chart(structure, cfg.y0, cfg.N_u, cfg.N_f)
    params = ModelParams(a=[cfg.a], b=[cfg.b])
    geom = geometry_of(chart)

    phi0 = initial_potential(chart, cfg.init.mode, params,
                             amplitude=cfg.init.amplitude, seed=cfg.init.seed,
                             path=cfg.init.path)
    c1 = None if cfg.c1_policy == "auto" else float(cfg.c1_policy)
    state = make_state(chart, params, phi0, t=0.0, norm_mode=cfg.norm_mode, c1=c1)

    rows = []
    snaps = []
    pending = None           # diag row waiting for the next step's metric
    prev_metric = None       # (t, g_ww, g_zz) at the previous step

    def flush_pending(next_metric):
        nonlocal pending
        if pending is None:
            return
        tau, phi_c, dphi_c, gw, gz, before = pending
        if next_metric is not None and next_metric[0] - tau < _T_SNAP:
            return  # wait for a strictly later sample
        if before is None and next_metric is None:
            res = math.nan
        else:
            if before is None:
                tn, gwn, gzn = next_metric
                h2 = tn - tau
                dg_ww = (gwn - gw) / h2
                dg_zz = (gzn - gz) / h2
            elif next_metric is None:
                tp, gwp, gzp = before
                h1 = tau - tp
                dg_ww = (gw - gwp) / h1
                dg_zz = (gz - gzp) / h1
            else:
                tp, gwp, gzp = before
                tn, gwn, gzn = next_metric
                h1, h2 = tau - tp, tn - tau
                dg_ww = _uneven_dt(gwp, gw, gwn, h1, h2)
                dg_zz = _uneven_dt(gzp, gz, gzn, h1, h2)
            res = diagnostics.flow_residual_field(chart, params, tau, gw, gz,
                                                  dg_ww, dg_zz)
        rows.append(diagnostics.compute_row(chart, params, tau, phi_c, dphi_c,
                                            gw, gz, res, cfg.stretch_tier))
        pending = None

    stops = _stop_times(cfg.t_end, cfg.snapshot_dt, cfg.diag_dt)
    for i_stop, t_stop in enumerate(stops):
        # integrate up to t_stop
        while state.t < t_stop - _T_SNAP:
            dphi, g_ww, g_zz = _rhs_raw(state)
            _check_positive(g_ww, g_zz, state.t)
            flush_pending((state.t, g_ww, g_zz))
            sdt = stable_dt_from_metric(g_ww, g_zz, geom)
            dt = min(sdt, cfg.dt_max)
            remaining = t_stop - state.t
            # stretch slightly rather than leave a sliver step (sigma = 0.2
            # leaves ample stability headroom)
            if dt >= remaining or remaining - dt < 0.25 * dt:
                dt = remaining
            mid = replace(state, t=state.t + 0.5 * dt, phi=state.phi + 0.5 * dt * dphi)
            k2, g_ww2, g_zz2 = _rhs_raw(mid)
            _check_positive(g_ww2, g_zz2, mid.t)
            new_phi = state.phi + dt * k2
            if not np.all(np.isfinite(new_phi)):
                raise UnstableStep(f"non-finite potential at t = {state.t + dt:.6g}")
            t_new = t_stop if t_stop - (state.t + dt) < _T_SNAP else state.t + dt
            prev_metric = (state.t, g_ww, g_zz)
            state = replace(state, t=t_new, phi=new_phi)

        # at the stop time: emit snapshot and/or queue the diagnostics row
        dphi, g_ww, g_zz = _rhs_raw(state)
        _check_positive(g_ww, g_zz, state.t)
        flush_pending((state.t, g_ww, g_zz))
        if _is_multiple(t_stop, cfg.snapshot_dt) or i_stop in (0, len(stops) - 1):
            snaps.append((state.t, state.phi.copy()))
        if _is_multiple(t_stop, cfg.diag_dt) or i_stop in (0, len(stops) - 1):
            pending = (state.t, state.phi.copy(), dphi, g_ww, g_zz, prev_metric)
        if i_stop == len(stops) - 1:
            flush_pending(None)

    reports = trajectory_reports(rows, stretch=cfg.stretch_tier)

    if cfg.output.snapshot_dir:
        os.makedirs(cfg.output.snapshot_dir, exist_ok=True)
        for k, (t, phi) in enumerate(snaps):
            path = os.path.join(cfg.output.snapshot_dir, f"snapshot_{k:04d}.snap")
            snapshots.write_snapshot(path, t, phi, chart, params,
                                     cfg.norm_mode, state.c1)
    if cfg.output.csv_path:
        out_dir = os.path.dirname(cfg.output.csv_path)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        diagnostics.write_csv(rows, cfg.output.csv_path)

    return RunResult(config=cfg, chart=chart, params=params, rows=rows,
                     snapshots=snaps, reports=reports, final_t=state.t)


def trajectory_reports(rows, stretch=False) -> dict:
    """Estimate reports; reports whose sampling preconditions fail are omitted."""
    reports = {}
    producers = [("c0_envelope", diagnostics.c0_envelope),
                 ("phidot_bounds", diagnostics.phidot_bounds),
                 ("metric_lower_bound", diagnostics.metric_lower_bound),
                 ("trace_bounds", diagnostics.trace_bounds),
                 ("collapse_warning", diagnostics.collapse_warnings)]
    if stretch:
        producers.append(("monotonicity", diagnostics.monotonicity_check))
    for name, fn in producers:
        try:
            reports[name] = fn(rows)
        except InsufficientSamples:
            continue
    return reports


def red_flags(reports: dict) -> list:
    """Hard failures (max-principle machinery); collapse warnings excluded."""
    hard = ("c0_envelope", "phidot_bounds", "metric_lower_bound", "trace_bounds")
    return [r for name, r in reports.items() if name in hard and not r.passed]
