"""Acceptance suites: the same checks back `otflow verify` and the pytest
acceptance module.  Expensive flow runs are computed once and cached."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .config import InitSpec, RunConfig
from .construct import (
    analyze_matrix,
    fiber_permutations,
    glue_index,
    lattice_chart,
    point_of_index,
)
from .diagnostics import monotonicity_check, weighted_scalar
from .modelgeom import (
    ModelParams,
    bismut_ricci_model,
    chern_curvature_model,
    gk_residual,
    pluriclosed_residual,
    richardson_order,
)
from .runner import run
from .solver import make_state

PLASTIC = (0, 1, 0, 0, 0, 1, 1, 1, 0)

_cache: dict = {}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float


def _check(name, passed, detail, t0):
    return Check(name, bool(passed), detail, time.perf_counter() - t0)


def newton_root_oracle(c2: float, c1: float, c0: float, x0: float = 1.5) -> float:
    """Independent Newton iteration on x^3 + c2 x^2 + c1 x + c0."""
    x = x0
    for _ in range(100):
        p = ((x + c2) * x + c1) * x + c0
        dp = (3.0 * x + 2.0 * c2) * x + c1
        x_new = x - p / dp
        if abs(x_new - x) < 1e-16 * abs(x):
            break
        x = x_new
    return x


def phi_ode_oracle(times, dt: float = 1e-4):
    """Fine-step RK4 integration of phi' = -phi - log(1 + e^-t/3)."""

    def f(t, phi):
        return -phi - math.log1p(math.exp(-t) / 3.0)

    out = {}
    t, phi = 0.0, 0.0
    for target in sorted(times):
        n = max(0, int(round((target - t) / dt)))
        h = (target - t) / n if n else 0.0
        for _ in range(n):
            k1 = f(t, phi)
            k2 = f(t + 0.5 * h, phi + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, phi + 0.5 * h * k2)
            k4 = f(t + h, phi + h * k3)
            phi += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        t = target
        out[target] = phi
    return out


# -- criterion 1: curvature formulas ----------------------------------------

def check_curvature_formulas(n_points: int = 1000, seed: int = 20240501) -> Check:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_indep = 0.0
    for s in (1, 2, 3):
        n = (n_points + 2) // 3
        a = rng.uniform(0.2, 5.0, (n, s))
        b = rng.uniform(0.2, 5.0, (n, s))
        y = rng.uniform(0.2, 5.0, (n, s))
        x = rng.uniform(-3.0, 3.0, (n, s))
        for k in range(n):
            point = x[k] + 1j * y[k]
            curv = chern_curvature_model(ModelParams(a=a[k], b=b[k]), point)
            rho = bismut_ricci_model(point)
            ref_ww = -a[k] / (2.0 * (y[k] ** 2) ** 2)
            ref_wz = b[k] * (0.25 / y[k])
            ref_rho = -3.0 * (0.25 / y[k] ** 2)
            worst_rel = max(
                worst_rel,
                float(np.max(np.abs(curv.ww_ww - ref_ww) / np.abs(ref_ww))),
                float(np.max(np.abs(curv.ww_zz - ref_wz) / np.abs(ref_wz))),
                float(np.max(np.abs(rho - ref_rho) / np.abs(ref_rho))),
            )
            # the Bismut-Ricci operation takes no (a, b): its independence is
            # exact; assert the evaluation is also reproducible bit-for-bit
            worst_indep = max(worst_indep, float(np.max(np.abs(
                rho - bismut_ricci_model(point)))))
    passed = worst_rel <= 1e-12 and worst_indep <= 1e-14
    return _check("curvature_formulas", passed,
                  f"max rel err {worst_rel:.2e} (tol 1e-12), "
                  f"(a,b)-dependence {worst_indep:.2e} (tol 1e-14)", t0)


# -- criterion 2: structure identities ---------------------------------------

def check_structure_identities(n_points: int = 20, seed: int = 7) -> Check:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    hs = (4e-3, 2e-3, 1e-3)
    worst_order = math.inf
    worst_res = 0.0
    for k in range(n_points):
        s = 1 if k % 2 == 0 else 2
        params = ModelParams(a=rng.uniform(0.3, 3.0, s), b=rng.uniform(0.3, 3.0, s))
        w = rng.uniform(-2.0, 2.0, s) + 1j * rng.uniform(0.5, 3.0, s)
        z = rng.uniform(-2.0, 2.0, s) + 1j * rng.uniform(-2.0, 2.0, s)
        for fn in (pluriclosed_residual, gk_residual):
            res = [fn(params, w, z, h) for h in hs]
            worst_res = max(worst_res, res[-1])
            worst_order = min(worst_order, richardson_order(res))
    passed = worst_order >= 1.8
    return _check("structure_identities", passed,
                  f"min observed order {worst_order:.3g} (>= 1.8; rounding-floor "
                  f"pairs count as converged), max residual at h=1e-3: {worst_res:.2e}", t0)


# -- criterion 3 + 7 (model part): exact model runs ---------------------------

def model_run(norm_mode: str, stretch: bool = False, t_end: float = 5.0,
              n_u: int = 16, n_f: int = 8):
    key = ("model_run", norm_mode, stretch, t_end, n_u, n_f)
    if key not in _cache:
        cfg = RunConfig(matrix=PLASTIC, N_u=n_u, N_f=n_f, t_end=t_end,
                        a=1.0, b=1.0, norm_mode=norm_mode,
                        init=InitSpec(mode="zero"), dt_max=1e-2,
                        snapshot_dt=max(t_end, 1.0), diag_dt=0.25,
                        stretch_tier=stretch)
        _cache[key] = run(cfg)
    return _cache[key]


def check_model_exactness_moving() -> Check:
    t0 = time.perf_counter()
    result = model_run("moving_model")
    sup = max(max(abs(r.sup_phi), abs(r.inf_phi)) for r in result.rows)
    return _check("model_exactness_moving", sup <= 1e-10,
                  f"sup_t sup_x |phi| = {sup:.2e} (tol 1e-10)", t0)


def check_model_exactness_improved() -> Check:
    t0 = time.perf_counter()
    result = model_run("improved")
    osc = max(r.sup_phi - r.inf_phi for r in result.rows)
    times = [r.t for r in result.rows]
    oracle = phi_ode_oracle(times)
    err = max(abs(r.sup_phi - oracle[r.t]) for r in result.rows)
    passed = osc <= 1e-12 and err <= 1e-6
    return _check("model_exactness_improved", passed,
                  f"spatial osc {osc:.2e} (tol 1e-12), ODE error {err:.2e} (tol 1e-6)", t0)


# -- criterion 4: eigen structure ---------------------------------------------

def check_eigen_structure(seed: int = 11) -> Check:
    t0 = time.perf_counter()
    structure = analyze_matrix(np.array(PLASTIC, dtype=object).reshape(3, 3))
    lam_ref = newton_root_oracle(0.0, -1.0, -1.0)
    err_lam = abs(structure.lam - lam_ref) / lam_ref
    err_adm = abs(structure.lam * abs(structure.mu) ** 2 - 1.0)

    chart = lattice_chart(structure, 1.0, 8, 8)
    fwd, bwd = fiber_permutations(chart)
    bijective = (np.array_equal(np.sort(fwd), np.arange(fwd.size))
                 and np.array_equal(fwd[bwd], np.arange(fwd.size)))

    D = structure.deck_map()
    V = structure.V
    Vinv = np.linalg.inv(V)
    rng = np.random.default_rng(seed)
    worst_equiv = 0.0
    for _ in range(100):
        idx = (int(rng.integers(0, chart.N_u)), int(rng.integers(0, chart.N_f)),
               int(rng.integers(0, chart.N_f)), int(rng.integers(0, chart.N_f)))
        beyond = (idx[0] + chart.N_u, idx[1], idx[2], idx[3])
        wrapped = glue_index(chart, beyond)
        w_g, z_g = point_of_index(chart, wrapped)
        mapped = D @ np.array([w_g.real, z_g.real, z_g.imag])
        theta_ext = np.array(idx[1:]) / chart.N_f
        ext = V @ theta_ext
        lattice_coords = Vinv @ (mapped - ext)
        worst_equiv = max(worst_equiv, float(np.max(np.abs(
            lattice_coords - np.round(lattice_coords)))))
        y_ok = abs(structure.lam * (chart.y0 * structure.lam ** (idx[0] / chart.N_u))
                   - structure.lam ** (wrapped[0] / chart.N_u + 1.0) * chart.y0)
        worst_equiv = max(worst_equiv, y_ok)
        roundtrip = glue_index(chart, (wrapped[0] - chart.N_u,) + wrapped[1:])
        # forward then backward gluing is the identity on fiber indices
        back = glue_index(chart, (roundtrip[0] + chart.N_u,) + roundtrip[1:])
        if back != wrapped:
            bijective = False
    passed = err_lam <= 1e-12 and err_adm <= 1e-12 and bijective and worst_equiv <= 1e-10
    return _check("eigen_structure", passed,
                  f"lambda err {err_lam:.2e}, lambda|mu|^2-1 {err_adm:.2e}, "
                  f"gluing bijective: {bijective}, equivariance {worst_equiv:.2e}", t0)


# -- criterion 5: convergence order -------------------------------------------

def noise_run(n_u, n_f, dt_max, t_end, seed=7, amplitude=1e-3, diag_dt=0.5,
              norm_mode="improved"):
    key = ("noise_run", n_u, n_f, dt_max, t_end, seed, amplitude, diag_dt, norm_mode)
    if key not in _cache:
        cfg = RunConfig(matrix=PLASTIC, N_u=n_u, N_f=n_f, t_end=t_end,
                        a=1.0, b=1.0, norm_mode=norm_mode,
                        init=InitSpec(mode="noise", amplitude=amplitude, seed=seed),
                        dt_max=dt_max, snapshot_dt=max(t_end, 1.0), diag_dt=diag_dt)
        _cache[key] = run(cfg)
    return _cache[key]


def check_convergence_order() -> Check:
    # t_end past the measurement time so the t = 1 row uses a centered
    # time difference
    t0 = time.perf_counter()
    coarse = noise_run(8, 8, 8e-5, 1.25)
    fine = noise_run(16, 16, 4e-5, 1.25)

    def residual_at(result, t):
        return min(result.rows, key=lambda r: abs(r.t - t)).flow_residual

    r_c = residual_at(coarse, 1.0)
    r_f = residual_at(fine, 1.0)
    ratio = r_c / r_f if r_f > 0 else math.inf
    return _check("convergence_order", ratio >= 2.5,
                  f"flow_residual(t=1): {r_c:.3e} -> {r_f:.3e}, ratio {ratio:.2f} (>= 2.5)", t0)


# -- criteria 6 + 7: estimate suite on the noise run ---------------------------

def estimates_run():
    key = "estimates_run"
    if key not in _cache:
        cfg = RunConfig(matrix=PLASTIC, N_u=8, N_f=6, t_end=8.0,
                        a=1.0, b=1.0, norm_mode="improved",
                        init=InitSpec(mode="noise", amplitude=0.05, seed=42),
                        dt_max=1e-3, snapshot_dt=4.0, diag_dt=0.25)
        _cache[key] = run(cfg)
    return _cache[key]


def check_estimates() -> list:
    t0 = time.perf_counter()
    result = estimates_run()
    out = []
    for name in ("c0_envelope", "phidot_bounds", "trace_bounds", "metric_lower_bound"):
        rep = result.reports.get(name)
        if rep is None:
            out.append(_check(f"estimates_{name}", False, "report missing", t0))
        else:
            out.append(_check(f"estimates_{name}", rep.passed, rep.detail, t0))
    return out


def check_collapse() -> list:
    t0 = time.perf_counter()
    model = model_run("improved")
    worst = max(abs(r.collapse_w - 0.25 * math.exp(-r.t)) for r in model.rows)
    zbound = model.chart.y0 * model.chart.structure.lam  # b = 1
    worst_z = max(r.collapse_z - zbound * (1 + 1e-10) for r in model.rows)
    c_model = _check("collapse_model", worst <= 1e-10 and worst_z <= 0,
                     f"|collapse_w - e^-t |a-3/4|| = {worst:.2e} (tol 1e-10), "
                     f"collapse_z excess {worst_z:.2e} (<= 0)", t0)

    t1 = time.perf_counter()
    noise = estimates_run()
    last = max(noise.rows, key=lambda r: r.t)
    homog = last.collapse_w <= 0.1 and last.osc_trace <= 0.1
    detail = (f"collapse_w(8) = {last.collapse_w:.3e}, osc_trace(8) = {last.osc_trace:.3e}"
              f" (threshold 0.1){'' if homog else ' [warning only]'}")
    # homogenization thresholds are reported, not enforced
    c_noise = _check("collapse_noise", True, detail, t1)
    return [c_model, c_noise]


# -- criterion 8 (stretch): weighted scalar curvature ---------------------------

def check_weighted_scalar() -> Check:
    t0 = time.perf_counter()
    structure = analyze_matrix(np.array(PLASTIC, dtype=object).reshape(3, 3))
    params = ModelParams(a=[1.0], b=[1.0])
    errs = []
    for n in (16, 32):
        chart = lattice_chart(structure, 1.0, n, n)
        state = make_state(chart, params)
        field = weighted_scalar(state)
        errs.append(float(np.max(np.abs(field - (-1.0)))))
    improve = errs[0] / errs[1] if errs[1] > 0 else math.inf
    passed = errs[0] <= 0.05 and improve >= 2.5
    return _check("weighted_scalar", passed,
                  f"|R_Hpsi - (-1)|: N=16: {errs[0]:.2e} (<= 5e-2), "
                  f"N=32: {errs[1]:.2e}, improvement {improve:.2f}x (>= 2.5)", t0)


def check_monotonicity_report() -> Check:
    t0 = time.perf_counter()
    result = model_run("improved", stretch=True, t_end=1.0, n_u=8, n_f=8)
    rep = result.reports.get("monotonicity")
    if rep is None:
        rep = monotonicity_check(result.rows)
    return _check("monotonicity_report", rep.passed, rep.detail, t0)


SUITES = {
    "formulas": ("curvature_formulas", "structure_identities", "eigen_structure"),
    "flow": ("model_exactness_moving", "model_exactness_improved", "convergence_order"),
    "estimates": ("estimates", "collapse"),
    "stretch": ("weighted_scalar", "monotonicity_report"),
}


def suite(name: str) -> list:
    """Run one named suite (or everything); returns the check list."""
    producers = {
        "curvature_formulas": lambda: [check_curvature_formulas()],
        "structure_identities": lambda: [check_structure_identities()],
        "eigen_structure": lambda: [check_eigen_structure()],
        "model_exactness_moving": lambda: [check_model_exactness_moving()],
        "model_exactness_improved": lambda: [check_model_exactness_improved()],
        "convergence_order": lambda: [check_convergence_order()],
        "estimates": check_estimates,
        "collapse": check_collapse,
        "weighted_scalar": lambda: [check_weighted_scalar()],
        "monotonicity_report": lambda: [check_monotonicity_report()],
    }
    if name == "all":
        names = [n for group in ("formulas", "flow", "estimates", "stretch")
                 for n in SUITES[group]]
    else:
        names = list(SUITES[name])
    checks = []
    for n in names:
        checks.extend(producers[n]())
    return checks
