import numpy as np
import pytest

from otflow.construct import (
    admissibility_check,
    analyze_matrix,
    fiber_permutations,
    glue_index,
    lattice_chart,
    parse_matrix,
    point_of_index,
)
from otflow.errors import (
    DetNotOne,
    IndexOutOfRange,
    LambdaNotExpanding,
    RealSpectrum,
    ResolutionMismatch,
)

from conftest import PLASTIC, SUPERGOLDEN


def newton_root(c2, c1, c0, x0=1.5):
    # independent oracle: Newton on x^3 + c2 x^2 + c1 x + c0
    x = x0
    for _ in range(100):
        p = ((x + c2) * x + c1) * x + c0
        dp = (3 * x + 2 * c2) * x + c1
        xn = x - p / dp
        if abs(xn - x) < 1e-16 * abs(x):
            break
        x = xn
    return x


def test_plastic_eigenvalues(plastic_structure):
    lam_ref = newton_root(0.0, -1.0, -1.0)  # x^3 - x - 1
    assert abs(plastic_structure.lam - lam_ref) <= 1e-12 * lam_ref
    assert abs(plastic_structure.lam - 1.324717957244746) <= 1e-12
    assert abs(abs(plastic_structure.mu) ** 2 - 1.0 / plastic_structure.lam) <= 1e-12
    assert abs(abs(plastic_structure.mu) ** 2 - 0.754877666) <= 1e-9


def test_supergolden_lambda():
    s = analyze_matrix(SUPERGOLDEN)  # x^3 - x^2 - 1
    lam_ref = newton_root(-1.0, 0.0, -1.0)
    assert abs(s.lam - 1.465571231876768) <= 1e-12
    assert abs(s.lam - lam_ref) <= 1e-12


def test_identity_is_real_spectrum():
    with pytest.raises(RealSpectrum):
        analyze_matrix(np.eye(3, dtype=int))


def test_det_not_one():
    with pytest.raises(DetNotOne):
        analyze_matrix(np.diag([2, 1, 1]))


def test_inverse_matrix_not_expanding():
    # inverse of the plastic matrix has real eigenvalue 1/lambda < 1
    Minv = np.array([[-1, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=object)
    with pytest.raises((LambdaNotExpanding, RealSpectrum)):
        analyze_matrix(Minv)


def test_admissibility_examples():
    ok, res = admissibility_check(2.0, (1.0 / np.sqrt(2.0)) * np.exp(1j * np.pi / 5))
    assert ok and res <= 1e-12
    ok, res = admissibility_check(2.0, 0.8)
    assert not ok
    assert abs(res - 0.28) <= 1e-12


def test_analyze_output_is_admissible(plastic_structure):
    ok, _ = admissibility_check(plastic_structure.lam, plastic_structure.mu)
    assert ok


def test_eigen_residuals_and_lattice(plastic_structure):
    s = plastic_structure
    Mf = np.array([[float(s.M[i, j]) for j in range(3)] for i in range(3)])
    assert np.max(np.abs(Mf @ s.a_vec - s.lam * s.a_vec)) <= 1e-10
    assert np.max(np.abs(Mf @ s.b_vec - s.mu * s.b_vec)) <= 1e-10
    assert abs(np.linalg.norm(s.a_vec) - 1.0) <= 1e-12
    assert abs(np.linalg.norm(s.b_vec) - 1.0) <= 1e-12
    assert abs(np.linalg.det(s.V)) > 1e-10


def test_deck_map_intertwines(plastic_structure):
    # D V = V M^T is the eigenvector relation in lattice form
    s = plastic_structure
    Mf = np.array([[float(s.M[i, j]) for j in range(3)] for i in range(3)])
    assert np.allclose(s.deck_map() @ s.V, s.V @ Mf.T, atol=1e-12)


def _random_unimodular(rng):
    # rejection over small integer matrices
    while True:
        G = rng.integers(-2, 3, size=(3, 3))
        d = int(round(np.linalg.det(G.astype(float))))
        if abs(d) == 1 and np.max(np.abs(G)) <= 2:
            return G.astype(object)


def test_conjugation_invariance(plastic_structure):
    rng = np.random.default_rng(3)
    M = PLASTIC
    for _ in range(5):
        G = _random_unimodular(rng)
        Ginv = np.linalg.inv(G.astype(float))
        conj = G.astype(float) @ M.astype(float) @ Ginv
        conj_int = np.vectorize(lambda v: int(round(v)))(conj).astype(object)
        s = analyze_matrix(conj_int)
        assert abs(s.lam - plastic_structure.lam) <= 1e-12
        assert abs(abs(s.mu) - abs(plastic_structure.mu)) <= 1e-12


def test_glue_matrix_unimodular(chart8, plastic_structure):
    A = chart8.A
    Mt = plastic_structure.M.T
    prod = A @ Mt
    assert all(int(prod[i, j]) == (1 if i == j else 0) for i in range(3) for j in range(3))


def test_chart_rejects_coarse():
    s = analyze_matrix(PLASTIC)
    with pytest.raises(ResolutionMismatch):
        lattice_chart(s, 1.0, 3, 8)
    with pytest.raises(ResolutionMismatch):
        lattice_chart(s, 1.0, 8, 3)


def test_point_of_index_examples(chart8):
    w, z = point_of_index(chart8, (0, 0, 0, 0))
    assert w == 1j * chart8.y0 and z == 0
    w, z = point_of_index(chart8, (0, chart8.N_f // 2, 0, 0))
    half_col = 0.5 * chart8.structure.V[:, 0]
    assert np.allclose([w.real, z.real, z.imag], half_col, atol=1e-14)
    with pytest.raises(IndexOutOfRange):
        point_of_index(chart8, (chart8.N_u, 0, 0, 0))
    with pytest.raises(IndexOutOfRange):
        point_of_index(chart8, (0, 0, -1, 0))


def test_glue_index_basics(chart8):
    assert glue_index(chart8, (3, 1, 2, 3)) == (3, 1, 2, 3)
    assert glue_index(chart8, (chart8.N_u, 0, 0, 0)) == (0, 0, 0, 0)
    rng = np.random.default_rng(5)
    for _ in range(50):
        idx = tuple(int(v) for v in rng.integers(0, chart8.N_f, 4))
        idx = (idx[0] % chart8.N_u,) + idx[1:]
        fwd = glue_index(chart8, (idx[0] + chart8.N_u,) + idx[1:])
        back = glue_index(chart8, (fwd[0] - chart8.N_u,) + fwd[1:])
        assert back == idx


def test_fiber_permutation_bijection(chart8):
    fwd, bwd = fiber_permutations(chart8)
    n = chart8.N_f ** 3
    assert np.array_equal(np.sort(fwd), np.arange(n))
    assert np.array_equal(fwd[bwd], np.arange(n))
    assert np.array_equal(bwd[fwd], np.arange(n))


def test_glue_equivariance(chart8):
    # points of glue-equivalent indices are related by (x, z) -> (lam x, mu z),
    # Im w -> lam Im w, modulo the lattice
    s = chart8.structure
    D = s.deck_map()
    Vinv = np.linalg.inv(s.V)
    rng = np.random.default_rng(17)
    for _ in range(100):
        idx = (int(rng.integers(0, chart8.N_u)),
               int(rng.integers(0, chart8.N_f)),
               int(rng.integers(0, chart8.N_f)),
               int(rng.integers(0, chart8.N_f)))
        wrapped = glue_index(chart8, (idx[0] + chart8.N_u,) + idx[1:])
        assert wrapped[0] == idx[0]
        w_g, z_g = point_of_index(chart8, wrapped)
        mapped = D @ np.array([w_g.real, z_g.real, z_g.imag])
        ext = s.V @ (np.array(idx[1:]) / chart8.N_f)
        frac = Vinv @ (mapped - ext)
        assert np.max(np.abs(frac - np.round(frac))) <= 1e-10
        assert abs(s.lam * w_g.imag - chart8.y0 * s.lam ** (1.0 + idx[0] / chart8.N_u)) <= 1e-10


def test_parse_matrix():
    m = parse_matrix("0,1,0;0,0,1;1,1,0")
    assert all(int(m[i, j]) == int(PLASTIC[i, j]) for i in range(3) for j in range(3))
    with pytest.raises(ValueError):
        parse_matrix("1,2;3,4")
    with pytest.raises(ValueError):
        parse_matrix("a,b,c;0,0,1;1,1,0")
