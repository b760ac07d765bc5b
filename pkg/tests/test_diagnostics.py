import math

import numpy as np
import pytest

from otflow.construct import lattice_chart
from otflow.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRow,
    GridGeometry,
    c0_envelope,
    collapse_indicators,
    compute_row,
    dilaton,
    metric_lower_bound,
    monotonicity_check,
    phidot_bounds,
    read_csv,
    trace_bounds,
    trace_fields,
    weighted_scalar,
    weighted_scalar_fields,
    write_csv,
)
from otflow.errors import InsufficientSamples, ResolutionTooCoarse
from otflow.modelgeom import ModelParams
from otflow.solver import beta_coef, make_state, reconstruct_metric, rhs


def _model_row(chart, params, t, stretch=False):
    state = make_state(chart, params, t=t)
    metric = reconstruct_metric(state)
    dphi = rhs(state)
    return compute_row(chart, params, t, state.phi, dphi, metric.g_ww,
                       metric.g_zz, 0.0, stretch)


def test_trace_fields_model(chart_small, params11):
    state = make_state(chart_small, params11)
    f = trace_fields(state)
    assert abs(f["sup_trgH_hH"] - 1.0) <= 1e-12
    assert abs(f["inf_trhH_gH"] - 1.0) <= 1e-12
    assert abs(f["min_ratio_H"] - 1.0) <= 1e-12
    assert abs(f["min_ratio_C"] - 1.0) <= 1e-12
    # tr_omega omega_h(t) is identically 2 on unit-coefficient model runs
    assert f["osc_trace"] <= 1e-12
    late = trace_fields(make_state(chart_small, params11, t=20.0))
    assert abs(late["sup_trgH_hH"] - 4.0 / 3.0) <= 1e-8


def test_collapse_indicators_model(chart_small, params11):
    for t in (0.0, 1.0, 2.5):
        state = make_state(chart_small, params11, t=t)
        m = reconstruct_metric(state)
        cw, cz, osc = collapse_indicators(m.g_ww, m.g_zz, chart_small, t)
        assert abs(cw - 0.25 * math.exp(-t)) <= 1e-12
        zmax = chart_small.y0 * chart_small.structure.lam ** ((chart_small.N_u - 1) / chart_small.N_u)
        assert abs(cz - zmax) <= 1e-12
        assert osc <= 1e-12
    a_state = make_state(chart_small, ModelParams(a=[2.0], b=[1.0]), t=1.0)
    m = reconstruct_metric(a_state)
    cw, _, _ = collapse_indicators(m.g_ww, m.g_zz, chart_small, 1.0)
    assert abs(cw - math.exp(-1.0) * abs(2.0 - 0.75)) <= 1e-12


def test_dilaton_model(chart_small):
    p = ModelParams(a=[1.0], b=[1.0])
    psi = dilaton(make_state(chart_small, p))
    assert np.max(np.abs(psi)) <= 1e-12
    psi_t = dilaton(make_state(chart_small, p, t=1.3))
    expect = math.log(beta_coef(1.3, 1.0)) / 9.0
    assert np.max(np.abs(psi_t - expect)) <= 1e-12
    assert psi_t.max() - psi_t.min() <= 1e-13  # spatially constant on model flow
    pa = ModelParams(a=[math.exp(9.0)], b=[1.0])
    psi_a = dilaton(make_state(chart_small, pa))
    assert np.max(np.abs(psi_a - 1.0)) <= 1e-12


def test_weighted_scalar_model_value(plastic_structure):
    # homogeneous oracle: R^{H,psi} = -1/alpha with alpha the H-block coefficient
    params = ModelParams(a=[1.0], b=[1.0])
    chart = lattice_chart(plastic_structure, 1.0, 16, 16)
    field = weighted_scalar(make_state(chart, params))
    assert np.max(np.abs(field - (-1.0))) <= 0.05
    t = 1.0
    field_t = weighted_scalar(make_state(chart, params, t=t))
    expect = -1.0 / beta_coef(t, 1.0)
    assert np.max(np.abs(field_t - expect)) <= 0.05 * abs(expect)


def test_weighted_scalar_resolution_guard(chart_small, params11):
    with pytest.raises(ResolutionTooCoarse):
        weighted_scalar(make_state(chart_small, params11))


def test_weighted_scalar_flat_torus_harness():
    # twist disabled: identity frame, periodic seam, constant blocks => flat
    n = 8
    eye_perm = np.arange(n**3, dtype=np.int64)
    geom = GridGeometry(y_u=np.ones(n), lnlam=1.0, du=1.0 / n, dth=1.0 / n,
                        cx=np.diag([1.0, 0.0, 0.0]), cz=np.diag([0.0, 1.0, 1.0]),
                        perm_fwd=eye_perm, perm_bwd=eye_perm,
                        qH=np.ones(n), qC=1.0, lam=math.e, W=np.eye(3))
    shape = (n, n, n, n)
    A = np.full(shape, 2.0)
    B = np.full(shape, 0.7)
    psi = np.full(shape, 0.3)
    field = weighted_scalar_fields(A, B, psi, geom)
    assert np.max(np.abs(field)) <= 1e-12


def test_compute_row_and_csv(tmp_path, chart_small, params11):
    rows = [_model_row(chart_small, params11, t) for t in (0.0, 0.5)]
    path = tmp_path / "diag.csv"
    write_csv(rows, path)
    text = path.read_text().splitlines()
    assert text[0] == ",".join(CSV_COLUMNS)
    assert text[1].endswith(",")  # empty stretch cell
    back = read_csv(path)
    assert back[0].sup_phi == rows[0].sup_phi
    assert back[1].R_weighted_min is None


def _rows_from(ts, phi_of_t, phidot_of_t=lambda t: 0.0, ratio_of_t=lambda t: 1.0,
               trace_of_t=lambda t: 1.0, r_weighted=None):
    rows = []
    for t in ts:
        v = phi_of_t(t)
        pd = phidot_of_t(t)
        rows.append(DiagnosticsRow(
            t=t, sup_phi=v, inf_phi=-v, sup_phidot=pd, inf_phidot=-pd,
            sup_trgH_hH=trace_of_t(t), inf_trhH_gH=1.0,
            sup_trg_h=trace_of_t(t) + 1.0,
            min_ratio_H=ratio_of_t(t), min_ratio_C=ratio_of_t(t),
            osc_trace=0.0, collapse_w=0.0, collapse_z=1.0, flow_residual=0.0,
            psi_min=0.0, psi_max=0.0,
            R_weighted_min=None if r_weighted is None else r_weighted(t)))
    return rows


def test_c0_envelope_reports():
    ts = [0.25 * k for k in range(33)]  # up to t = 8
    good = _rows_from(ts, lambda t: (t / 3.0) * math.exp(-t))
    assert c0_envelope(good).passed
    bad = _rows_from(ts, lambda t: 0.01 * (1.0 + t))  # no decay
    assert not c0_envelope(bad).passed
    with pytest.raises(InsufficientSamples):
        c0_envelope(_rows_from([0.0, 1.0], lambda t: 0.0))


def test_phidot_reports():
    ts = [0.25 * k for k in range(33)]
    good = _rows_from(ts, lambda t: 0.0, phidot_of_t=lambda t: 0.3 * math.exp(-t))
    assert phidot_bounds(good).passed
    bad = _rows_from(ts, lambda t: 0.0, phidot_of_t=lambda t: 0.1 * (1.0 + t**2))
    assert not phidot_bounds(bad).passed


def test_metric_lower_bound_reports():
    ts = [0.25 * k for k in range(33)]
    good = _rows_from(ts, lambda t: 0.0, ratio_of_t=lambda t: 0.8 + 0.1 * math.exp(-t))
    assert metric_lower_bound(good).passed
    bad = _rows_from(ts, lambda t: 0.0, ratio_of_t=lambda t: 0.9 * math.exp(-t))
    assert not metric_lower_bound(bad).passed


def test_trace_bounds_reports():
    ts = [0.25 * k for k in range(33)]
    # the model run profile: normalized trace 1/beta(t), growing to 4/3
    good = _rows_from(ts, lambda t: 0.0,
                      trace_of_t=lambda t: 1.0 / beta_coef(t, 1.0))
    assert trace_bounds(good).passed
    # a trace violating the unnormalized max principle: grows like e^t/(1+t)
    bad = _rows_from(ts, lambda t: 0.0,
                     trace_of_t=lambda t: math.exp(t) / (1.0 + t))
    assert not trace_bounds(bad).passed


def test_monotonicity_reports():
    ts = [0.25 * k for k in range(9)]
    good = _rows_from(ts, lambda t: 0.0, r_weighted=lambda t: -1.0 / beta_coef(t, 1.0))
    assert monotonicity_check(good).passed
    bad = _rows_from(ts, lambda t: 0.0, r_weighted=lambda t: -2.0 * math.exp(2.0 * t))
    assert not monotonicity_check(bad).passed
    with pytest.raises(InsufficientSamples):
        monotonicity_check(_rows_from(ts, lambda t: 0.0))
