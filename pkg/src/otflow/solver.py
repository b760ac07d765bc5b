"""Scalar reduction of the normalized flow on the 4D grid chart.

The state is the potential phi; the metric is reconstructed per point as

    g_ww = beta(t)/y^2 - phi_ww,   g_zz = e^-t b y + phi_zz,
    beta(t) = e^-t a + (3/4)(1 - e^-t),

and phi evolves by dphi/dt = -phi + log(g_zz/y) - log(g_ww y^2) + c(t) with
the normalization constant c(t) selected by norm_mode.  Time stepping is
explicit midpoint (RK2) with a per-step stability bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .construct import GridChart, fiber_permutations
from .errors import (
    CannotSatisfyPositivity,
    NotPositive,
    ResolutionMismatch,
    UnstableStep,
)
from .modelgeom import ModelParams
from .snapshots import read_snapshot

POSITIVITY_EPS = 1e-10
STABILITY_SAFETY = 0.2

NORM_MODES = ("static_c1", "improved", "moving_model")


@dataclass(frozen=True)
class GridGeometry:
    """Precomputed chart data consumed by the stencil kernels."""

    y_u: np.ndarray      # Im w per u layer
    lnlam: float
    du: float
    dth: float
    cx: np.ndarray       # theta-Hessian congruence coefficients for d_xx
    cz: np.ndarray       # ... for d_pp + d_qq
    perm_fwd: np.ndarray
    perm_bwd: np.ndarray
    qH: np.ndarray       # stability weights multiplying 1/(4 g_ww), per layer
    qC: float            # stability weight multiplying 1/(4 g_zz)
    lam: float
    W: np.ndarray        # V^{-1}


_geom_cache: dict[int, tuple[GridChart, GridGeometry]] = {}


def geometry_of(chart: GridChart) -> GridGeometry:
    hit = _geom_cache.get(id(chart))
    if hit is not None and hit[0] is chart:
        return hit[1]
    lam = chart.structure.lam
    lnlam = math.log(lam)
    y_u = chart.y_of_u()
    W = np.linalg.inv(chart.structure.V)
    cx = np.outer(W[:, 0], W[:, 0])
    cz = np.outer(W[:, 1], W[:, 1]) + np.outer(W[:, 2], W[:, 2])
    perm_fwd, perm_bwd = fiber_permutations(chart)
    qH = 1.0 / (y_u * lnlam) ** 2 / chart.du**2 + np.trace(cx) / chart.dth**2
    qC = float(np.trace(cz)) / chart.dth**2
    geom = GridGeometry(y_u=y_u, lnlam=lnlam, du=chart.du, dth=chart.dth,
                        cx=cx, cz=cz, perm_fwd=perm_fwd, perm_bwd=perm_bwd,
                        qH=qH, qC=qC, lam=lam, W=W)
    _geom_cache[id(chart)] = (chart, geom)
    return geom


@dataclass(frozen=True)
class TwistedHessian:
    phi_ww: np.ndarray
    phi_zz: np.ndarray


@dataclass(frozen=True)
class SplitMetricField:
    """Per-point metric blocks over the whole grid."""

    g_ww: np.ndarray
    g_zz: np.ndarray


@dataclass(frozen=True)
class PotentialState:
    chart: GridChart
    t: float
    phi: np.ndarray
    params: ModelParams
    norm_mode: str = "improved"
    c1: float | None = None


def make_state(chart: GridChart, params: ModelParams, phi=None, t: float = 0.0,
               norm_mode: str = "improved", c1=None) -> PotentialState:
    if params.s != 1:
        raise ValueError(f"the solver handles s = 1 only, got s = {params.s}")
    if norm_mode not in NORM_MODES:
        raise ValueError(f"norm_mode must be one of {NORM_MODES}, got {norm_mode!r}")
    if phi is None:
        phi = np.zeros(chart.shape)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    if phi.shape != chart.shape:
        raise ResolutionMismatch(f"phi shape {phi.shape} != grid {chart.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi must be finite")
    state = PotentialState(chart=chart, t=float(t), phi=phi, params=params,
                           norm_mode=norm_mode,
                           c1=None if c1 is None else float(c1))
    if norm_mode == "static_c1" and state.c1 is None:
        if t != 0.0:
            raise ValueError("auto c1 needs a t = 0 state")
        metric = reconstruct_metric(state)
        ycol = geometry_of(chart).y_u.reshape(-1, 1, 1, 1)
        state = replace(state, c1=float(np.max(metric.g_zz / ycol)))
    return state


def beta_coef(t: float, a: float) -> float:
    e = math.exp(-t)
    return e * a + 0.75 * (1.0 - e)


def c_eff(t: float, norm_mode: str, c1=None) -> float:
    """Normalization constant of the potential equation (s = 1)."""
    base = t + math.log(0.75)
    if norm_mode == "improved":
        return base
    if norm_mode == "static_c1":
        if c1 is None or c1 <= 0:
            raise ValueError("static_c1 mode needs a positive c1")
        return base - math.log(c1)
    if norm_mode == "moving_model":
        # measure both blocks against the unit model flow h(t)
        return t + math.log(0.75 + 0.25 * math.exp(-t))
    raise ValueError(f"unknown norm_mode {norm_mode!r}")


def twisted_hessian(phi, chart: GridChart) -> TwistedHessian:
    """Centered second-order twisted Hessian; u-boundary samples fetched
    through the exact integer gluing."""
    geom = geometry_of(chart)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    if phi.shape != chart.shape:
        raise ResolutionMismatch(f"phi shape {phi.shape} != grid {chart.shape}")
    hw, hz = kernels.twisted_hessian(phi, geom)
    return TwistedHessian(phi_ww=hw, phi_zz=hz)


def _check_positive(g_ww, g_zz, t):
    mn_w = float(g_ww.min())
    if mn_w <= POSITIVITY_EPS:
        idx = np.unravel_index(int(np.argmin(g_ww)), g_ww.shape)
        raise NotPositive("g_ww", mn_w, tuple(int(i) for i in idx), t)
    mn_z = float(g_zz.min())
    if mn_z <= POSITIVITY_EPS:
        idx = np.unravel_index(int(np.argmin(g_zz)), g_zz.shape)
        raise NotPositive("g_zz", mn_z, tuple(int(i) for i in idx), t)


def _rhs_raw(state: PotentialState):
    geom = geometry_of(state.chart)
    beta = beta_coef(state.t, state.params.a[0])
    eb = math.exp(-state.t) * state.params.b[0]
    c = c_eff(state.t, state.norm_mode, state.c1)
    return kernels.rhs_core(state.phi, geom, beta, eb, c)


def reconstruct_metric(state: PotentialState) -> SplitMetricField:
    geom = geometry_of(state.chart)
    th = twisted_hessian(state.phi, state.chart)
    ycol = geom.y_u.reshape(-1, 1, 1, 1)
    beta = beta_coef(state.t, state.params.a[0])
    g_ww = beta / ycol**2 - th.phi_ww
    g_zz = math.exp(-state.t) * state.params.b[0] * ycol + th.phi_zz
    _check_positive(g_ww, g_zz, state.t)
    return SplitMetricField(g_ww=g_ww, g_zz=g_zz)


def rhs(state: PotentialState) -> np.ndarray:
    """d(phi)/dt field; raises NotPositive on a degenerate metric."""
    dphi, g_ww, g_zz = _rhs_raw(state)
    _check_positive(g_ww, g_zz, state.t)
    return dphi


def stable_dt_from_metric(g_ww, g_zz, geom: GridGeometry,
                          sigma: float = STABILITY_SAFETY) -> float:
    """sigma / max over points of the summed diffusion-over-spacing^2 load."""
    qH = geom.qH.reshape(-1, 1, 1, 1)
    load = qH / (4.0 * g_ww) + geom.qC / (4.0 * g_zz)
    return sigma / float(load.max())


def stable_dt(state: PotentialState, sigma: float = STABILITY_SAFETY) -> float:
    metric = reconstruct_metric(state)
    return stable_dt_from_metric(metric.g_ww, metric.g_zz, geometry_of(state.chart), sigma)


def step(state: PotentialState, dt: float) -> PotentialState:
    """One explicit midpoint step.  NaN/Inf, or positivity loss caused by an
    over-large dt, surface as UnstableStep; genuine metric degeneration of an
    in-bounds step stays NotPositive."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1, g_ww, g_zz = _rhs_raw(state)
    _check_positive(g_ww, g_zz, state.t)
    geom = geometry_of(state.chart)
    dt_ok = dt <= stable_dt_from_metric(g_ww, g_zz, geom)

    def advance(phi, t, h, k):
        out = phi + h * k
        if not np.all(np.isfinite(out)):
            raise UnstableStep(f"non-finite potential at t = {t + h:.6g}")
        return out

    try:
        mid = replace(state, t=state.t + 0.5 * dt,
                      phi=advance(state.phi, state.t, 0.5 * dt, k1))
        k2, g_ww2, g_zz2 = _rhs_raw(mid)
        _check_positive(g_ww2, g_zz2, mid.t)
        if not np.all(np.isfinite(k2)):
            raise UnstableStep(f"non-finite rhs at t = {mid.t:.6g}")
        out = replace(state, t=state.t + dt,
                      phi=advance(state.phi, state.t, dt, k2))
        _, g_ww3, g_zz3 = _rhs_raw(out)
        _check_positive(g_ww3, g_zz3, out.t)
    except NotPositive as exc:
        if not dt_ok:
            raise UnstableStep(f"dt = {dt:.3g} above the stability bound: {exc}") from exc
        raise
    return out


# -- initial data -----------------------------------------------------------

def model_block_minima(chart: GridChart, params: ModelParams):
    y = chart.y_of_u()
    return float(np.min(params.a[0] / y**2)), float(np.min(params.b[0] * y))


def _bandlimited_noise(chart: GridChart, seed) -> np.ndarray:
    """Random field from the lowest index-space Fourier modes (|k| <= 3 per
    axis), drawn in a fixed order so equal seeds give bit-identical fields.

    Index-space fiber modes are not equivariant under the integer gluing, so
    they carry a window vanishing to high order at the u seam; pure-u modes
    are exactly invariant and stay unwindowed.  Without the window the glued
    boundary keeps an O(amplitude) derivative mismatch whose stencil response
    grows like the resolution squared."""
    rng = np.random.default_rng(seed)
    n_u, n_f = chart.N_u, chart.N_f
    xi_u = np.arange(n_u) / n_u
    xi_f = np.arange(n_f) / n_f
    window = np.sin(np.pi * xi_u) ** 6
    phi = np.zeros(chart.shape)
    kmax = 3
    for ku in range(0, kmax + 1):
        for k1 in range(-kmax, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                for k3 in range(-kmax, kmax + 1):
                    k = (ku, k1, k2, k3)
                    if k == (0, 0, 0, 0):
                        continue
                    # half-space: first nonzero component positive
                    first = next(v for v in k if v != 0)
                    if first < 0:
                        continue
                    amp = rng.standard_normal() / (1.0 + ku**2 + k1**2 + k2**2 + k3**2)
                    phase = rng.uniform(0.0, 2.0 * np.pi)
                    arg = (2.0 * np.pi) * (
                        ku * xi_u[:, None, None, None]
                        + k1 * xi_f[None, :, None, None]
                        + k2 * xi_f[None, None, :, None]
                        + k3 * xi_f[None, None, None, :]
                    )
                    mode = amp * np.cos(arg + phase)
                    if (k1, k2, k3) != (0, 0, 0):
                        mode *= window[:, None, None, None]
                    phi += mode
    return phi


def initial_potential(chart: GridChart, mode: str, params: ModelParams,
                      amplitude: float | None = None, seed=None,
                      path: str | None = None) -> np.ndarray:
    """Admissible initial potential: zero, seeded band-limited noise, or a
    snapshot file.  Noise is smoothed across the glued u-boundary and halved
    until the t = 0 metric keeps a 10% positivity margin."""
    if mode == "zero":
        return np.zeros(chart.shape)
    if mode == "file":
        if not path:
            raise ValueError("file mode needs a path")
        header, phi = read_snapshot(path)
        if (header["grid"]["N_u"], header["grid"]["N_f"]) != (chart.N_u, chart.N_f):
            raise ResolutionMismatch(
                f"snapshot grid {header['grid']} does not match chart "
                f"({chart.N_u}, {chart.N_f})")
        return phi
    if mode != "noise":
        raise ValueError(f"unknown initial-potential mode {mode!r}")
    if amplitude is None or amplitude <= 0:
        raise ValueError("noise mode needs a positive amplitude")

    geom = geometry_of(chart)
    phi = _bandlimited_noise(chart, seed)
    for _ in range(5):
        phi = kernels.smooth_pass(phi, geom)
    peak = float(np.max(np.abs(phi)))
    if peak > 0:
        phi *= amplitude / peak

    min_w, min_z = model_block_minima(chart, params)
    for _ in range(41):
        try:
            state = PotentialState(chart=chart, t=0.0, phi=phi, params=params)
            metric = reconstruct_metric(state)
            if (float(metric.g_ww.min()) >= 0.1 * min_w
                    and float(metric.g_zz.min()) >= 0.1 * min_z):
                return phi
        except NotPositive:
            pass
        phi = 0.5 * phi
    raise CannotSatisfyPositivity(
        "noise amplitude still breaks positivity after 40 halvings")


def __getattr__(name):
    # run() lives in runner.py to keep imports acyclic, but belongs to the
    # solver surface
    if name == "run":
        from .runner import run
        return run
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
