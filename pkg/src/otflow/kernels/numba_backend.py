"""Numba-jitted stencil kernels; same contracts as numpy_backend.

The inner loops run over the flattened fiber block so one prange covers the
whole grid.  No cross-point reductions: results are independent of the
thread schedule."""
from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange


def _twisted_hessian_py(phi2, y_u, lnlam, du, dth, cx, cz,
                        perm_fwd, perm_bwd, weight, out_ww, out_zz):
    n_u, nf = phi2.shape
    n = int(round(nf ** (1.0 / 3.0)))
    while n * n * n < nf:
        n += 1
    n2 = n * n
    inv_du2 = 1.0 / (du * du)
    inv_2du = 0.5 / du
    inv_dth2 = 1.0 / (dth * dth)
    inv_w = 1.0 / weight
    for idx in prange(n_u * nf):
        iu = idx // nf
        f = idx % nf
        j1 = f // n2
        j2 = (f // n) % n
        j3 = f % n
        c0 = phi2[iu, f]

        if iu + 1 < n_u:
            up = phi2[iu + 1, f]
        else:
            up = weight * phi2[0, perm_fwd[f]]
        if iu - 1 >= 0:
            dn = phi2[iu - 1, f]
        else:
            dn = inv_w * phi2[n_u - 1, perm_bwd[f]]
        d_u = (up - dn) * inv_2du
        d_uu = (up - 2.0 * c0 + dn) * inv_du2
        y = y_u[iu]
        f_yy = d_uu / (y * lnlam) ** 2 - d_u / (y * y * lnlam)

        j1p = (j1 + 1) % n; j1m = (j1 - 1) % n
        j2p = (j2 + 1) % n; j2m = (j2 - 1) % n
        j3p = (j3 + 1) % n; j3m = (j3 - 1) % n

        h11 = (phi2[iu, (j1p * n + j2) * n + j3] - 2.0 * c0 + phi2[iu, (j1m * n + j2) * n + j3]) * inv_dth2
        h22 = (phi2[iu, (j1 * n + j2p) * n + j3] - 2.0 * c0 + phi2[iu, (j1 * n + j2m) * n + j3]) * inv_dth2
        h33 = (phi2[iu, (j1 * n + j2) * n + j3p] - 2.0 * c0 + phi2[iu, (j1 * n + j2) * n + j3m]) * inv_dth2
        h12 = (phi2[iu, (j1p * n + j2p) * n + j3] - phi2[iu, (j1p * n + j2m) * n + j3]
               - phi2[iu, (j1m * n + j2p) * n + j3] + phi2[iu, (j1m * n + j2m) * n + j3]) * 0.25 * inv_dth2
        h13 = (phi2[iu, (j1p * n + j2) * n + j3p] - phi2[iu, (j1p * n + j2) * n + j3m]
               - phi2[iu, (j1m * n + j2) * n + j3p] + phi2[iu, (j1m * n + j2) * n + j3m]) * 0.25 * inv_dth2
        h23 = (phi2[iu, (j1 * n + j2p) * n + j3p] - phi2[iu, (j1 * n + j2p) * n + j3m]
               - phi2[iu, (j1 * n + j2m) * n + j3p] + phi2[iu, (j1 * n + j2m) * n + j3m]) * 0.25 * inv_dth2

        s_x = (cx[0, 0] * h11 + cx[1, 1] * h22 + cx[2, 2] * h33
               + 2.0 * (cx[0, 1] * h12 + cx[0, 2] * h13 + cx[1, 2] * h23))
        s_z = (cz[0, 0] * h11 + cz[1, 1] * h22 + cz[2, 2] * h33
               + 2.0 * (cz[0, 1] * h12 + cz[0, 2] * h13 + cz[1, 2] * h23))

        out_ww[iu, f] = 0.25 * (s_x + f_yy)
        out_zz[iu, f] = 0.25 * s_z


def _rhs_core_py(phi2, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd,
                 beta, eb_coef, c_eff, out_dphi, out_gww, out_gzz):
    n_u, nf = phi2.shape
    n = int(round(nf ** (1.0 / 3.0)))
    while n * n * n < nf:
        n += 1
    n2 = n * n
    inv_du2 = 1.0 / (du * du)
    inv_2du = 0.5 / du
    inv_dth2 = 1.0 / (dth * dth)
    for idx in prange(n_u * nf):
        iu = idx // nf
        f = idx % nf
        j1 = f // n2
        j2 = (f // n) % n
        j3 = f % n
        c0 = phi2[iu, f]

        if iu + 1 < n_u:
            up = phi2[iu + 1, f]
        else:
            up = phi2[0, perm_fwd[f]]
        if iu - 1 >= 0:
            dn = phi2[iu - 1, f]
        else:
            dn = phi2[n_u - 1, perm_bwd[f]]
        d_u = (up - dn) * inv_2du
        d_uu = (up - 2.0 * c0 + dn) * inv_du2
        y = y_u[iu]
        f_yy = d_uu / (y * lnlam) ** 2 - d_u / (y * y * lnlam)

        j1p = (j1 + 1) % n; j1m = (j1 - 1) % n
        j2p = (j2 + 1) % n; j2m = (j2 - 1) % n
        j3p = (j3 + 1) % n; j3m = (j3 - 1) % n

        h11 = (phi2[iu, (j1p * n + j2) * n + j3] - 2.0 * c0 + phi2[iu, (j1m * n + j2) * n + j3]) * inv_dth2
        h22 = (phi2[iu, (j1 * n + j2p) * n + j3] - 2.0 * c0 + phi2[iu, (j1 * n + j2m) * n + j3]) * inv_dth2
        h33 = (phi2[iu, (j1 * n + j2) * n + j3p] - 2.0 * c0 + phi2[iu, (j1 * n + j2) * n + j3m]) * inv_dth2
        h12 = (phi2[iu, (j1p * n + j2p) * n + j3] - phi2[iu, (j1p * n + j2m) * n + j3]
               - phi2[iu, (j1m * n + j2p) * n + j3] + phi2[iu, (j1m * n + j2m) * n + j3]) * 0.25 * inv_dth2
        h13 = (phi2[iu, (j1p * n + j2) * n + j3p] - phi2[iu, (j1p * n + j2) * n + j3m]
               - phi2[iu, (j1m * n + j2) * n + j3p] + phi2[iu, (j1m * n + j2) * n + j3m]) * 0.25 * inv_dth2
        h23 = (phi2[iu, (j1 * n + j2p) * n + j3p] - phi2[iu, (j1 * n + j2p) * n + j3m]
               - phi2[iu, (j1 * n + j2m) * n + j3p] + phi2[iu, (j1 * n + j2m) * n + j3m]) * 0.25 * inv_dth2

        s_x = (cx[0, 0] * h11 + cx[1, 1] * h22 + cx[2, 2] * h33
               + 2.0 * (cx[0, 1] * h12 + cx[0, 2] * h13 + cx[1, 2] * h23))
        s_z = (cz[0, 0] * h11 + cz[1, 1] * h22 + cz[2, 2] * h33
               + 2.0 * (cz[0, 1] * h12 + cz[0, 2] * h13 + cz[1, 2] * h23))

        hw = 0.25 * (s_x + f_yy)
        hz = 0.25 * s_z
        g_ww = beta / (y * y) - hw
        g_zz = eb_coef * y + hz
        out_gww[iu, f] = g_ww
        out_gzz[iu, f] = g_zz
        if g_ww > 0.0 and g_zz > 0.0:
            out_dphi[iu, f] = -c0 + np.log(g_zz / y) - np.log(g_ww * y * y) + c_eff
        else:
            out_dphi[iu, f] = np.nan


_TH_PARALLEL = njit(cache=True, parallel=True)(_twisted_hessian_py)
_TH_SERIAL = njit(cache=True)(_twisted_hessian_py)
_RHS_PARALLEL = njit(cache=True, parallel=True)(_rhs_core_py)
_RHS_SERIAL = njit(cache=True)(_rhs_core_py)

# below this point count the thread-launch overhead outweighs the work
PARALLEL_CUTOFF = 32768


def twisted_hessian(phi, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd, weight=1.0):
    shape = phi.shape
    phi2 = np.ascontiguousarray(phi, dtype=np.float64).reshape(shape[0], -1)
    out_ww = np.empty_like(phi2)
    out_zz = np.empty_like(phi2)
    impl = _TH_PARALLEL if phi2.size >= PARALLEL_CUTOFF else _TH_SERIAL
    impl(phi2, y_u, lnlam, du, dth, cx, cz,
         perm_fwd, perm_bwd, float(weight), out_ww, out_zz)
    return out_ww.reshape(shape), out_zz.reshape(shape)


def rhs_core(phi, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd,
             beta, eb_coef, c_eff):
    shape = phi.shape
    phi2 = np.ascontiguousarray(phi, dtype=np.float64).reshape(shape[0], -1)
    out_dphi = np.empty_like(phi2)
    out_gww = np.empty_like(phi2)
    out_gzz = np.empty_like(phi2)
    impl = _RHS_PARALLEL if phi2.size >= PARALLEL_CUTOFF else _RHS_SERIAL
    impl(phi2, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd,
         float(beta), float(eb_coef), float(c_eff),
         out_dphi, out_gww, out_gzz)
    return (out_dphi.reshape(shape), out_gww.reshape(shape), out_gzz.reshape(shape))


def set_threads(n: int):
    if n > 0:
        numba.set_num_threads(n)
