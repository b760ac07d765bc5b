"""Pure-numpy stencil kernels.

Grid fields have shape (N_u, N_f, N_f, N_f).  Fiber axes are plainly
periodic; the u axis is glued over the seam through the integer fiber
permutations, with a per-crossing gauge factor `weight` (lambda**w for a
field of weight w; scalars use weight 1).
"""
from __future__ import annotations

import numpy as np


def u_shift(field, k, perm_fwd, perm_bwd, weight=1.0):
    """Field sampled one layer in the +u (k=1) or -u (k=-1) direction."""
    out = np.empty_like(field)
    fib = field.shape[1:]
    if k == 1:
        out[:-1] = field[1:]
        out[-1] = weight * field[0].reshape(-1)[perm_fwd].reshape(fib)
    elif k == -1:
        out[1:] = field[:-1]
        out[0] = (1.0 / weight) * field[-1].reshape(-1)[perm_bwd].reshape(fib)
    else:
        raise ValueError(f"k must be +-1, got {k}")
    return out


def _fiber_second(field, axis, dth):
    return (np.roll(field, -1, axis) - 2.0 * field + np.roll(field, 1, axis)) / dth**2


def _fiber_mixed(field, ax_k, ax_l, dth):
    pp = np.roll(np.roll(field, -1, ax_k), -1, ax_l)
    pm = np.roll(np.roll(field, -1, ax_k), 1, ax_l)
    mp = np.roll(np.roll(field, 1, ax_k), -1, ax_l)
    mm = np.roll(np.roll(field, 1, ax_k), 1, ax_l)
    return (pp - pm - mp + mm) / (4.0 * dth**2)


def twisted_hessian(phi, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd, weight=1.0):
    """Quarter-Laplacians in the two complex directions:
    (phi_ww, phi_zz) = (1/4 (d_xx + d_yy) phi, 1/4 (d_pp + d_qq) phi)."""
    up = u_shift(phi, 1, perm_fwd, perm_bwd, weight)
    dn = u_shift(phi, -1, perm_fwd, perm_bwd, weight)
    d_u = (up - dn) / (2.0 * du)
    d_uu = (up - 2.0 * phi + dn) / du**2
    ycol = y_u.reshape(-1, 1, 1, 1)
    f_yy = d_uu / (ycol * lnlam) ** 2 - d_u / (ycol**2 * lnlam)

    s_x = np.zeros_like(phi)
    s_z = np.zeros_like(phi)
    for k in range(3):
        Hkk = _fiber_second(phi, k + 1, dth)
        s_x += cx[k, k] * Hkk
        s_z += cz[k, k] * Hkk
    for k in range(3):
        for l in range(k + 1, 3):
            Hkl = _fiber_mixed(phi, k + 1, l + 1, dth)
            s_x += 2.0 * cx[k, l] * Hkl
            s_z += 2.0 * cz[k, l] * Hkl

    return 0.25 * (s_x + f_yy), 0.25 * s_z


def rhs_core(phi, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd,
             beta, eb_coef, c_eff):
    """Potential-flow right-hand side and the reconstructed metric blocks.

    g_ww = beta/y^2 - phi_ww, g_zz = eb_coef*y + phi_zz,
    dphi = -phi + log(g_zz/y) - log(g_ww*y^2) + c_eff."""
    hw, hz = twisted_hessian(phi, y_u, lnlam, du, dth, cx, cz, perm_fwd, perm_bwd)
    ycol = y_u.reshape(-1, 1, 1, 1)
    g_ww = beta / ycol**2 - hw
    g_zz = eb_coef * ycol + hz
    with np.errstate(invalid="ignore", divide="ignore"):
        dphi = -phi + np.log(g_zz / ycol) - np.log(g_ww * ycol**2) + c_eff
    return dphi, g_ww, g_zz


def first_diffs(field, du, dth, perm_fwd, perm_bwd, weight=1.0):
    """Centered first differences (d_u, d_th1, d_th2, d_th3)."""
    up = u_shift(field, 1, perm_fwd, perm_bwd, weight)
    dn = u_shift(field, -1, perm_fwd, perm_bwd, weight)
    d_u = (up - dn) / (2.0 * du)
    fiber = [
        (np.roll(field, -1, ax) - np.roll(field, 1, ax)) / (2.0 * dth)
        for ax in (1, 2, 3)
    ]
    return d_u, fiber[0], fiber[1], fiber[2]


def smooth_pass(field, perm_fwd, perm_bwd):
    """One 9-point star average over the four grid axes, glue-aware in u."""
    acc = field.copy()
    acc += u_shift(field, 1, perm_fwd, perm_bwd, 1.0)
    acc += u_shift(field, -1, perm_fwd, perm_bwd, 1.0)
    for ax in (1, 2, 3):
        acc += np.roll(field, -1, ax)
        acc += np.roll(field, 1, ax)
    return acc / 9.0
