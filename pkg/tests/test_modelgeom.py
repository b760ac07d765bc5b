import math

import numpy as np
import pytest

from otflow.errors import NonPositiveHeight, StencilOutOfDomain
from otflow.modelgeom import (
    BlockMetric,
    ModelParams,
    bismut_ricci_model,
    chern_curvature_model,
    gk_residual,
    model_flow,
    model_metric,
    model_sampler,
    pluriclosed_residual,
    richardson_order,
    unnormalize_time,
)


def test_model_metric_values():
    p = ModelParams(a=[1.0], b=[1.0])
    m = model_metric(p, [1j])
    assert m.gH[0] == 1.0 and m.gC[0] == 1.0
    m = model_metric(p, [2j])
    assert m.gH[0] == 0.25 and m.gC[0] == 2.0
    p2 = ModelParams(a=[2.0, 3.0], b=[5.0, 7.0])
    m = model_metric(p2, [1j, 1j])
    assert np.allclose(m.gH, [2.0, 3.0]) and np.allclose(m.gC, [5.0, 7.0])
    with pytest.raises(NonPositiveHeight):
        model_metric(p, [1.0 + 0j])


def test_chern_curvature_values():
    p = ModelParams(a=[1.0], b=[1.0])
    c = chern_curvature_model(p, [1j])
    assert c.ww_ww[0] == -0.5
    assert c.ww_zz[0] == 0.25
    c = chern_curvature_model(p, [2j])
    assert c.ww_ww[0] == -1.0 / 32.0


def test_bismut_ricci_values():
    assert bismut_ricci_model([1j])[0] == -0.75
    assert bismut_ricci_model([2j])[0] == -3.0 / 16.0
    # the operation takes no model coefficients: (a,b)-independence is exact
    assert bismut_ricci_model([1.5j])[0] == bismut_ricci_model([1.5j])[0]


def test_model_flow_values():
    p = ModelParams(a=[1.0], b=[1.0])
    m0 = model_flow(p, 0.0, [1j])
    mm = model_metric(p, [1j])
    assert m0.gH[0] == mm.gH[0] and m0.gC[0] == mm.gC[0]
    m = model_flow(p, math.log(2.0), [1j])
    assert abs(m.gH[0] - 7.0 / 8.0) <= 1e-15
    assert abs(m.gC[0] - 0.5) <= 1e-15
    m_late = model_flow(p, 50.0, [1j])
    assert abs(m_late.gH[0] - 0.75) <= 1e-12
    assert m_late.gC[0] <= 1e-12 or m_late.gC[0] > 0


def test_model_flow_solves_normalized_ode():
    # d/dt gH = -gH + (3/4)/y^2 and d/dt gC = -gC, by centered differences
    p = ModelParams(a=[2.0, 0.5], b=[3.0, 1.5])
    dt = 1e-4
    for t in (0.3, 0.7, 2.3):
        pts = [1.3j, 0.8 + 2.1j]
        up = model_flow(p, t + dt, pts)
        dn = model_flow(p, t - dt, pts)
        mid = model_flow(p, t, pts)
        dgH = (up.gH - dn.gH) / (2.0 * dt)
        dgC = (up.gC - dn.gC) / (2.0 * dt)
        y = np.array([1.3, 2.1])
        assert np.max(np.abs(dgH - (-mid.gH + 0.75 / y**2))) <= 1e-8
        assert np.max(np.abs(dgC - (-mid.gC))) <= 1e-8


def test_unnormalize_time():
    assert unnormalize_time(0.0) == (0.0, 1.0)
    s, scale = unnormalize_time(math.log(2.0))
    assert abs(s - 1.0) <= 1e-15 and abs(scale - 0.5) <= 1e-15
    for t in (0.1, 1.0, 4.2):
        s, _ = unnormalize_time(t)
        assert abs(math.log(s + 1.0) - t) <= 1e-14


def test_pluriclosed_residual_model():
    p = ModelParams(a=[1.3], b=[0.7])
    res = pluriclosed_residual(p, [0.2 + 1.0j], [0.1 + 0.4j], h=1e-3)
    assert res <= 1e-4
    p2 = ModelParams(a=[1.3, 0.5], b=[0.7, 2.0])
    res2 = pluriclosed_residual(p2, [1j, 0.5 + 2j], [0j, 1j], h=1e-3)
    assert res2 <= 1e-4


def test_pluriclosed_residual_constant_metric():
    def const_sampler(w, z):
        return np.array([2.0]), np.array([3.0])

    res = pluriclosed_residual(const_sampler, [1j], [0j], h=1e-3)
    assert res <= 1e-12


def test_pluriclosed_residual_cubic_perturbation():
    # omega_h + (Im w)^3 dz^dzbar: ddbar component is (1/4) d2/dy2 (y^3) = 3y/2;
    # a centered stencil is exact on cubics
    def perturbed(w, z):
        y = np.atleast_1d(w).imag
        return 1.0 / y**2, y + y**3

    res = pluriclosed_residual(perturbed, [1j], [0j], h=1e-3)
    assert abs(res - 1.5) <= 1e-6
    res2 = pluriclosed_residual(perturbed, [2j], [0j], h=1e-3)
    assert abs(res2 - 3.0) <= 1e-6


def _harmonic_sampler(w, z):
    # exact ddbar omega = 0 (the perturbations are harmonic in their pair),
    # but with nonzero fourth derivatives so the stencils show their h^2 error
    y = np.atleast_1d(w).imag
    zz = np.atleast_1d(z)
    p, q = zz.real, zz.imag
    F = 1.0 / y**2 + 0.3 * np.exp(p) * np.sin(q)
    G = y
    return F, G


def test_pluriclosed_residual_observed_order():
    hs = (4e-3, 2e-3, 1e-3)
    res = [pluriclosed_residual(_harmonic_sampler, [1j], [0.3 + 0.2j], h=h) for h in hs]
    assert res[0] > 1e-8  # genuinely measurable, not at the rounding floor
    order = richardson_order(res)
    assert 1.8 <= order <= 2.2


def test_gk_residual_model():
    p = ModelParams(a=[1.0], b=[1.0])
    assert gk_residual(p, [1j], [0j], h=1e-3) <= 1e-6
    # doubling h keeps an exactly-zero residual at rounding level
    assert gk_residual(p, [1j], [0j], h=2e-3) <= 1e-8


def test_gk_residual_violation():
    # gC = (Im w)^2 breaks pluriclosedness: dd^c component 2*(1/4)d2/dy2(y^2) = 1
    def bad(w, z):
        y = np.atleast_1d(w).imag
        return 1.0 / y**2, y**2

    res = gk_residual(bad, [1j], [0j], h=1e-3)
    assert abs(res - 1.0) <= 1e-6


def test_gk_residual_three_form_part():
    # s = 2 with F_1 = Im(w_2): the d^c sum no longer cancels; its only
    # component is 4 on dx1^dy1^dx2 (first derivatives of a linear function
    # are stencil-exact)
    def cross(w, z):
        ww = np.atleast_1d(w)
        return np.array([ww[1].imag, 1.0]), np.array([1.0, 1.0])

    res = gk_residual(cross, [1j, 1j], [0j, 0j], h=1e-3)
    assert abs(res - 4.0) <= 1e-8


def test_gk_residual_order_on_harmonic():
    hs = (4e-3, 2e-3, 1e-3)
    res = [gk_residual(_harmonic_sampler, [1j], [0.3 + 0.2j], h=h) for h in hs]
    assert res[0] > 1e-8
    order = richardson_order(res)
    assert 1.8 <= order <= 2.2


def test_stencil_domain_guard():
    p = ModelParams(a=[1.0], b=[1.0])
    with pytest.raises(StencilOutOfDomain):
        pluriclosed_residual(p, [0.003j], [0j], h=1e-3)


def test_richardson_order():
    assert abs(richardson_order([4e-4, 1e-4, 2.5e-5]) - 2.0) <= 1e-12
    assert richardson_order([1e-12, 1e-11, 1e-10]) == math.inf  # rounding floor
    assert richardson_order([1e-3, 9e-4, 8.5e-4]) < 0.3


def test_block_metric_validation():
    with pytest.raises(ValueError):
        BlockMetric(gH=np.array([1.0]), gC=np.array([-1.0]))
    with pytest.raises(ValueError):
        ModelParams(a=[0.0], b=[1.0])


def test_model_sampler_matches_metric():
    p = ModelParams(a=[1.5], b=[0.4])
    F, G = model_sampler(p)([0.3 + 2j], [1 + 1j])
    m = model_metric(p, [0.3 + 2j])
    assert np.allclose(F, m.gH) and np.allclose(G, m.gC)
