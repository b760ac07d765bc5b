"""Closed-form model metrics on H^s x C^s, their curvature, the exact
normalized flow through them, and finite-difference residuals for the
pluriclosed and commuting generalized-Kahler identities.

Conventions.  A (1,1)-form sqrt(-1)*alpha*dw^dwbar has metric coefficient
g_{w wbar} = alpha.  The Bismut-Ricci form of the model is read as
-(3/4) * h_{w wbar} per factor, the unique convention under which the
closed-form flow solves d/dt omega = -rho_B - omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NonPositiveHeight, StencilOutOfDomain


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (a_i, b_i) of the two-parameter family of model metrics."""

    a: tuple
    b: tuple

    def __init__(self, a, b):
        a = tuple(float(v) for v in np.atleast_1d(a))
        b = tuple(float(v) for v in np.atleast_1d(b))
        if len(a) != len(b):
            raise ValueError(f"a and b must have equal length, got {len(a)}, {len(b)}")
        if any(v <= 0 for v in a) or any(v <= 0 for v in b):
            raise ValueError("all model coefficients must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def s(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class BlockMetric:
    """Per-factor diagonal metric blocks g_{w_i wbar_i} and g_{z_i zbar_i}."""

    gH: np.ndarray
    gC: np.ndarray

    def __post_init__(self):
        for name, arr in (("gH", self.gH), ("gC", self.gC)):
            a = np.asarray(arr, dtype=float)
            if not np.all(np.isfinite(a)) or np.any(a <= 0):
                raise ValueError(f"{name} must be strictly positive and finite")
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class ChernCurvature:
    """The two nonvanishing Chern-curvature component families of the model."""

    ww_ww: np.ndarray  # Omega_{w_i wbar_i w_i wbar_i}
    ww_zz: np.ndarray  # Omega_{w_i wbar_i z_i zbar_i}


def _heights(point) -> np.ndarray:
    w = np.atleast_1d(np.asarray(point, dtype=complex))
    y = w.imag
    if np.any(y <= 0):
        raise NonPositiveHeight(f"Im w must be positive, got {y}")
    return y


def model_metric(params: ModelParams, point) -> BlockMetric:
    """g_{w_i wbar_i} = a_i / (Im w_i)^2,  g_{z_i zbar_i} = b_i * Im w_i."""
    y = _heights(point)
    a = np.asarray(params.a)
    b = np.asarray(params.b)
    return BlockMetric(gH=a / y**2, gC=b * y)


def chern_curvature_model(params: ModelParams, point) -> ChernCurvature:
    """Only nonvanishing components: -a_i/(2 y^4) and b_i/(4 y)."""
    y = _heights(point)
    a = np.asarray(params.a)
    b = np.asarray(params.b)
    return ChernCurvature(ww_ww=-a / (2.0 * y**4), ww_zz=b / (4.0 * y))


def bismut_ricci_model(point) -> np.ndarray:
    """Coefficient of sqrt(-1) dw_i^dwbar_i in the Bismut-Ricci form:
    -3/(4 y^2) per factor, independent of the (a, b) coefficients."""
    y = _heights(point)
    return -3.0 / (4.0 * y**2)


def model_flow(params: ModelParams, t: float, point) -> BlockMetric:
    """Exact normalized-flow solution through the model metric."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    y = _heights(point)
    a = np.asarray(params.a)
    b = np.asarray(params.b)
    e = math.exp(-t)
    gH = ((1.0 - e) * 0.75 + e * a) / y**2
    gC = e * b * y
    return BlockMetric(gH=gH, gC=gC)


def unnormalize_time(t: float) -> tuple[float, float]:
    """Map normalized flow time to the unnormalized parameter s = e^t - 1 and
    the blowdown scale 1/(s+1) = e^-t."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    s_time = math.expm1(t)
    return s_time, math.exp(-t)


def model_sampler(params: ModelParams):
    """Continuum sampler of the model metric for the residual operators."""

    def sample(w, z):
        y = np.atleast_1d(np.asarray(w, dtype=complex)).imag
        return np.asarray(params.a) / y**2, np.asarray(params.b) * y

    return sample


# -- finite-difference residuals ------------------------------------------
#
# Points live on H^s x C^s.  Real coordinate slots are ordered
# (x_1, y_1, ..., x_s, y_s, p_1, q_1, ..., p_s, q_s) where w = x + iy and
# z = p + iq.  Holomorphic index alpha in [0, 2s): alpha < s is w_alpha,
# alpha >= s is z_{alpha-s}; its real slots are (2*alpha, 2*alpha + 1).


def _point_to_real(w, z) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.concatenate([np.column_stack([w.real, w.imag]).ravel(),
                           np.column_stack([z.real, z.imag]).ravel()])


def _eval_real(sampler, r: np.ndarray, s: int) -> np.ndarray:
    w = r[: 2 * s : 2] + 1j * r[1 : 2 * s : 2]
    z = r[2 * s :: 2] + 1j * r[2 * s + 1 :: 2]
    F, G = sampler(w, z)
    return np.concatenate([np.atleast_1d(F), np.atleast_1d(G)]).astype(float)


def _as_sampler(metric):
    if callable(metric):
        return metric
    return model_sampler(metric)


def _check_stencil_domain(w, h: float):
    y = np.atleast_1d(np.asarray(w, dtype=complex)).imag
    if np.any(y - 4.0 * h <= 0):
        raise StencilOutOfDomain(
            f"stencil of radius 4h = {4 * h:g} leaves the upper half plane (min Im w = {y.min():g})"
        )


def _real_hessian(sampler, r0: np.ndarray, s: int, h: float) -> np.ndarray:
    """Full real Hessian of every diagonal coefficient; shape (n, n, 2s)."""
    n = r0.size
    f0 = _eval_real(sampler, r0, s)
    H = np.zeros((n, n, 2 * s))
    shifted = {}

    def ev(*shifts):
        key = tuple(sorted(shifts))
        if key not in shifted:
            r = r0.copy()
            for ax, sign in shifts:
                r[ax] += sign * h
            shifted[key] = _eval_real(sampler, r, s)
        return shifted[key]

    for a in range(n):
        H[a, a] = (ev((a, +1)) - 2.0 * f0 + ev((a, -1))) / h**2
    for a, b in combinations(range(n), 2):
        mixed = (ev((a, +1), (b, +1)) - ev((a, +1), (b, -1))
                 - ev((a, -1), (b, +1)) + ev((a, -1), (b, -1))) / (4.0 * h**2)
        H[a, b] = mixed
        H[b, a] = mixed
    return H


def _complex_hessian(Hreal: np.ndarray, s: int) -> np.ndarray:
    """d_alpha d_betabar of each coefficient from the real Hessian."""
    m = 2 * s
    D = np.zeros((m, m, m), dtype=complex)
    for al in range(m):
        a, b = 2 * al, 2 * al + 1
        for be in range(m):
            c, d = 2 * be, 2 * be + 1
            re = Hreal[a, c] + Hreal[b, d]
            im = Hreal[a, d] - Hreal[b, c]
            D[al, be] = 0.25 * (re + 1j * im)
    return D


def _ddbar_components(sampler, point_w, point_z, s: int, h: float) -> dict:
    """Components of ddbar(omega) on the basis dz^al ^ dz^ga ^ dzbar^be ^ dzbar^de
    (al < ga, be < de), for the diagonal (1,1)-form with the sampled coefficients."""
    r0 = _point_to_real(point_w, point_z)
    D = _complex_hessian(_real_hessian(sampler, r0, s, h), s)
    comp: dict = {}
    m = 2 * s
    for rho in range(m):
        for al in range(m):
            if al == rho:
                continue
            s1 = 1.0 if al < rho else -1.0
            for be in range(m):
                if be == rho:
                    continue
                s2 = 1.0 if be < rho else -1.0
                key = (tuple(sorted((al, rho))), tuple(sorted((be, rho))))
                comp[key] = comp.get(key, 0.0) - s1 * s2 * D[al, be, rho]
    return comp


def pluriclosed_residual(metric, point_w, point_z=None, h: float | None = None) -> float:
    """Max-norm of ddbar(omega) assembled from centered second differences of
    the sampled metric coefficients.  Exactly zero for pluriclosed metrics up
    to stencil truncation and rounding."""
    sampler = _as_sampler(metric)
    w = np.atleast_1d(np.asarray(point_w, dtype=complex))
    s = w.size
    z = np.zeros(s, dtype=complex) if point_z is None else np.atleast_1d(np.asarray(point_z, dtype=complex))
    if h is None:
        h = 1e-3 * float(np.min(w.imag))
    _check_stencil_domain(w, h)
    comp = _ddbar_components(sampler, w, z, s, h)
    return max(abs(v) for v in comp.values()) if comp else 0.0


def _real_gradients(sampler, r0: np.ndarray, s: int, h: float) -> np.ndarray:
    """Centered first differences of every coefficient; shape (n, 2s)."""
    n = r0.size
    grad = np.zeros((n, 2 * s))
    for a in range(n):
        rp = r0.copy(); rp[a] += h
        rm = r0.copy(); rm[a] -= h
        grad[a] = (_eval_real(sampler, rp, s) - _eval_real(sampler, rm, s)) / (2.0 * h)
    return grad


def _dc_form(grad: np.ndarray, s: int, conjugate_fibers: bool) -> dict:
    """Real components of d^c omega for the diagonal metric, on sorted real
    triples.  With conjugate_fibers the z-factors carry the opposite complex
    structure (the J side of the commuting pair)."""
    m = 2 * s
    comp: dict = {}

    def slots(al):
        # (re_axis, re_sign), (im_axis, im_sign) of holomorphic index al
        if al < s or not conjugate_fibers:
            return (2 * al, 1.0), (2 * al + 1, 1.0)
        return (2 * al, 1.0), (2 * al + 1, -1.0)  # eta = zbar: im slot is -q

    def add(axes, sign, value):
        order = np.argsort(axes)
        key = tuple(axes[i] for i in order)
        if len(set(key)) < 3:
            return
        perm = list(order)
        swaps = 0
        for i in range(len(perm)):
            while perm[i] != i:
                j = perm[i]
                perm[i], perm[j] = perm[j], perm[i]
                swaps += 1
        comp[key] = comp.get(key, 0.0) + sign * (-1.0) ** swaps * value

    for rho in range(m):
        (r_ax, r_sg), (s_ax, s_sg) = slots(rho)
        pair_sign = r_sg * s_sg
        for al in range(m):
            if al == rho:
                continue
            (a_ax, a_sg), (b_ax, b_sg) = slots(al)
            # 2 * [ d_a(omega_rho) db - d_b(omega_rho) da ] ^ dr ^ ds
            add((b_ax, r_ax, s_ax), 2.0 * a_sg * b_sg * pair_sign, grad[a_ax, rho])
            add((a_ax, r_ax, s_ax), -2.0 * b_sg * a_sg * pair_sign, grad[b_ax, rho])
    return comp


def gk_residual(metric, point_w, point_z=None, h: float | None = None) -> float:
    """Residual of the commuting generalized-Kahler identities for the split
    diagonal metric: max of the 3-form d_I^c(omega_I) + d_J^c(omega_J) and the
    4-form d d_I^c(omega_I) = 2 ddbar(omega_I), both by centered differences."""
    sampler = _as_sampler(metric)
    w = np.atleast_1d(np.asarray(point_w, dtype=complex))
    s = w.size
    z = np.zeros(s, dtype=complex) if point_z is None else np.atleast_1d(np.asarray(point_z, dtype=complex))
    if h is None:
        h = 1e-3 * float(np.min(w.imag))
    _check_stencil_domain(w, h)
    r0 = _point_to_real(w, z)
    grad = _real_gradients(sampler, r0, s, h)
    ci = _dc_form(grad, s, conjugate_fibers=False)
    cj = _dc_form(grad, s, conjugate_fibers=True)
    keys = set(ci) | set(cj)
    part_3form = max(abs(ci.get(k, 0.0) + cj.get(k, 0.0)) for k in keys) if keys else 0.0
    comp = _ddbar_components(sampler, w, z, s, h)
    part_4form = 2.0 * (max(abs(v) for v in comp.values()) if comp else 0.0)
    return max(part_3form, part_4form)


def richardson_order(residuals, floor: float = 1e-8) -> float:
    """Observed convergence order of a residual sequence under h -> h/2.

    Pairs where either value sits at or below the rounding floor are not
    measurable; a sequence entirely at the floor counts as converged (inf)."""
    vals = [float(v) for v in residuals]
    orders = []
    for r0, r1 in zip(vals, vals[1:]):
        if r0 > floor and r1 > floor:
            orders.append(math.log2(r0 / r1))
    if not orders:
        return math.inf
    return min(orders)
