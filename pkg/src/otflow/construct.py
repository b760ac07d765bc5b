"""Inoue-surface data from an SL(3,Z) matrix and the grid chart of the quotient.

The surface is the quotient of H x C by the group generated by
(z, w) -> (mu z, lambda w) and the three lattice translations
(z, w) -> (z + b_i, w + a_i), where lambda, mu, mu-bar are the eigenvalues
of the integer matrix and (a, b) the corresponding eigenvectors.  The chart
covers one fundamental domain: u in [0,1) with Im w = y0 * lambda**u, and a
fiber 3-torus parameterized by theta in [0,1)^3 through the lattice basis V.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateEigenvectors,
    DetNotOne,
    IndexOutOfRange,
    LambdaNotExpanding,
    RealSpectrum,
    ResolutionMismatch,
)

EIG_TOL = 1e-10


def _as_int_matrix(M) -> np.ndarray:
    M = np.asarray(M)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    Mi = np.asarray(M, dtype=object)
    out = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            v = Mi[i, j]
            iv = int(round(float(v)))
            if iv != v:
                raise ValueError(f"matrix entry {v!r} is not an integer")
            out[i, j] = iv
    return out


def _int_det3(M) -> int:
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


def _int_adjugate3(M) -> np.ndarray:
    adj = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = M[r[0], c[0]] * M[r[1], c[1]] - M[r[0], c[1]] * M[r[1], c[0]]
            adj[i, j] = (-1) ** (i + j) * minor
    return adj


def char_poly_coeffs(M) -> tuple[int, int, int]:
    """Integer coefficients (c2, c1, c0) in det(xI - M) = x^3 + c2 x^2 + c1 x + c0."""
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    m2 = (
        M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    )
    return (-tr, m2, -_int_det3(M))


def _cubic_discriminant(b: int, c: int, d: int) -> int:
    # x^3 + b x^2 + c x + d; >= 0 iff all roots real
    return 18 * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * c**3 - 27 * d**2


def _newton_real_root(b: float, c: float, d: float, x0: float) -> float:
    x = x0
    for _ in range(200):
        p = ((x + b) * x + c) * x + d
        dp = (3.0 * x + 2.0 * b) * x + c
        if dp == 0.0:
            break
        step = p / dp
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


@dataclass(frozen=True)
class InoueStructure:
    """Eigen-data of an SL(3,Z) matrix of Inoue type.

    V stacks the lattice generators column-wise: column i is
    (a_i, Re b_i, Im b_i), so the fiber lattice is V . Z^3 inside
    R x C = {(Re w, Re z, Im z)}.
    """

    M: np.ndarray          # 3x3, object dtype with python ints
    lam: float             # real eigenvalue > 1
    mu: complex            # complex eigenvalue, Im mu > 0
    a_vec: np.ndarray      # unit real eigenvector for lam
    b_vec: np.ndarray      # unit complex eigenvector for mu
    V: np.ndarray          # 3x3 real lattice basis

    @property
    def glue_matrix(self) -> np.ndarray:
        """A = (M^-1)^T with integer entries; fiber index gluing over the seam."""
        return _int_adjugate3(self.M).T.copy()

    def deck_map(self) -> np.ndarray:
        """Linear action of the expanding generator on (Re w, Re z, Im z)."""
        D = np.zeros((3, 3))
        D[0, 0] = self.lam
        D[1, 1] = self.mu.real
        D[1, 2] = -self.mu.imag
        D[2, 1] = self.mu.imag
        D[2, 2] = self.mu.real
        return D


def _normalized_null_vector(A: np.ndarray) -> np.ndarray:
    # smallest right singular vector (rows of vh are conjugated); fix scale so
    # the first nonzero entry is real positive, then normalize to unit length
    _, _, vh = np.linalg.svd(A)
    v = vh[-1].conj()
    k = int(np.argmax(np.abs(v) > 1e-8))
    v = v / v[k]
    v = v / np.linalg.norm(v)
    if v[k].real < 0:
        v = -v
    return v


def analyze_matrix(M) -> InoueStructure:
    """Validate an integer matrix and extract lambda, mu and the lattice basis.

    Eigenvalues come from the integer characteristic polynomial with a Newton
    polish; eigenvectors from the SVD null space of M - eig*I, normalized so
    the first nonzero component is real positive, then unit length.
    """
    Mi = _as_int_matrix(M)
    det = _int_det3(Mi)
    if det != 1:
        raise DetNotOne(f"det M = {det}, expected exactly 1")
    b, c, d = char_poly_coeffs(Mi)
    if _cubic_discriminant(b, c, d) >= 0:
        raise RealSpectrum("all three eigenvalues are real; not Inoue type")
    bf, cf, df = float(b), float(c), float(d)
    # the single real root lies below 1 + max|coef|; Newton from the right is monotone
    x0 = 1.0 + max(abs(bf), abs(cf), abs(df))
    lam = _newton_real_root(bf, cf, df, x0)
    if lam <= 1.0:
        raise LambdaNotExpanding(f"real eigenvalue {lam:.12g} <= 1")
    # quadratic cofactor x^2 + P x + Q; complex pair with positive imaginary part
    P = bf + lam
    Q = -df / lam
    disc = 4.0 * Q - P * P
    if disc <= 0:
        raise RealSpectrum("quadratic cofactor has real roots")
    mu = complex(-P / 2.0, np.sqrt(disc) / 2.0)

    Mf = np.array([[float(Mi[i, j]) for j in range(3)] for i in range(3)])
    a_vec = _normalized_null_vector(Mf - lam * np.eye(3)).real
    if a_vec[int(np.argmax(np.abs(a_vec) > 1e-8))] < 0:
        a_vec = -a_vec
    b_vec = _normalized_null_vector(Mf - mu * np.eye(3)).astype(complex)

    res_a = np.max(np.abs(Mf @ a_vec - lam * a_vec))
    res_b = np.max(np.abs(Mf @ b_vec - mu * b_vec))
    if max(res_a, res_b) > EIG_TOL:
        raise DegenerateEigenvectors(
            f"eigenvector residual {max(res_a, res_b):.3g} exceeds {EIG_TOL:g}"
        )

    V = np.vstack([a_vec, b_vec.real, b_vec.imag])
    if abs(np.linalg.det(V)) <= 1e-10:
        raise DegenerateEigenvectors(f"|det V| = {abs(np.linalg.det(V)):.3g} <= 1e-10")

    if abs(lam * abs(mu) ** 2 - 1.0) > EIG_TOL:
        raise DegenerateEigenvectors(
            f"lambda*|mu|^2 = {lam * abs(mu) ** 2:.15g} deviates from 1"
        )
    return InoueStructure(M=Mi, lam=lam, mu=mu, a_vec=a_vec, b_vec=b_vec, V=V)


def admissibility_check(lam: float, mu: complex) -> tuple[bool, float]:
    """Pluriclosed admissibility predicate: lambda*|mu|^2 = 1 within 1e-10."""
    residual = abs(lam * abs(mu) ** 2 - 1.0)
    return residual <= 1e-10, residual


@dataclass(frozen=True)
class GridChart:
    """Discretized fundamental domain: N_u layers in u, N_f^3 fiber points."""

    structure: InoueStructure
    y0: float
    N_u: int
    N_f: int
    A: np.ndarray  # (M^-1)^T, python-int entries

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.N_u, self.N_f, self.N_f, self.N_f)

    @property
    def du(self) -> float:
        return 1.0 / self.N_u

    @property
    def dth(self) -> float:
        return 1.0 / self.N_f

    def y_of_u(self) -> np.ndarray:
        """Im w on each u layer."""
        u = np.arange(self.N_u) / self.N_u
        return self.y0 * self.structure.lam ** u


def lattice_chart(structure: InoueStructure, y0: float, N_u: int, N_f: int) -> GridChart:
    """Build the grid chart; the three fiber axes share one resolution so the
    integer gluing j -> A.j mod N_f lands exactly on grid points."""
    if y0 <= 0:
        raise ValueError(f"y0 must be positive, got {y0}")
    if N_u < 4 or N_f < 4:
        raise ResolutionMismatch(f"need N_u >= 4 and N_f >= 4, got {N_u}, {N_f}")
    A = structure.glue_matrix
    if abs(_int_det3(A)) != 1:
        raise DegenerateEigenvectors("glue matrix is not unimodular")
    return GridChart(structure=structure, y0=float(y0), N_u=int(N_u), N_f=int(N_f), A=A)


def point_of_index(chart: GridChart, idx) -> tuple[complex, complex]:
    """Map a grid index to (w, z) in H x C.  Pure and deterministic."""
    i_u, j1, j2, j3 = idx
    if not (0 <= i_u < chart.N_u):
        raise IndexOutOfRange(f"i_u = {i_u} outside [0, {chart.N_u})")
    for jk in (j1, j2, j3):
        if not (0 <= jk < chart.N_f):
            raise IndexOutOfRange(f"fiber index {jk} outside [0, {chart.N_f})")
    theta = np.array([j1, j2, j3], dtype=float) / chart.N_f
    x, rez, imz = chart.structure.V @ theta
    y = chart.y0 * chart.structure.lam ** (i_u / chart.N_u)
    return complex(x, y), complex(rez, imz)


def glue_index(chart: GridChart, idx) -> tuple[int, int, int, int]:
    """Wrap an index that crossed the u-boundary.

    A grid function satisfies phi(i_u + N_u, j) = phi(i_u, A.j mod N_f), so an
    index k layers past the boundary comes back as (i_u mod N_u, A^k.j mod N_f).
    All arithmetic is integer, hence exact."""
    i_u, j1, j2, j3 = (int(v) for v in idx)
    k, i_w = divmod(i_u, chart.N_u)
    j = np.array([j1, j2, j3], dtype=object)
    if k != 0:
        A = chart.A if k > 0 else chart.structure.M.T  # A^-1 = M^T exactly
        for _ in range(abs(k)):
            j = A @ j
    j = [int(v) % chart.N_f for v in j]
    return (i_w, j[0], j[1], j[2])


def fiber_permutations(chart: GridChart) -> tuple[np.ndarray, np.ndarray]:
    """Flat gather maps over the seam.

    perm_fwd satisfies phi(N_u, j) = phi(0)[perm_fwd][j]; perm_bwd the inverse
    crossing, phi(-1, j) = phi(N_u - 1)[perm_bwd][j].  Both are permutations of
    range(N_f^3) because A is unimodular."""
    n = chart.N_f
    J = np.indices((n, n, n)).reshape(3, -1)
    A = np.array([[int(chart.A[i, j]) for j in range(3)] for i in range(3)], dtype=np.int64)
    Ainv = np.array([[int(chart.structure.M.T[i, j]) for j in range(3)] for i in range(3)],
                    dtype=np.int64)
    fwd = np.ravel_multi_index(tuple((A @ J) % n), (n, n, n))
    bwd = np.ravel_multi_index(tuple((Ainv @ J) % n), (n, n, n))
    return fwd.astype(np.int64), bwd.astype(np.int64)


def parse_matrix(text: str) -> np.ndarray:
    """Row-major matrix string "m11,m12,m13;m21,m22,m23;m31,m32,m33"."""
    rows = text.strip().split(";")
    if len(rows) != 3:
        raise ValueError(f"expected 3 rows separated by ';', got {len(rows)}")
    out = np.empty((3, 3), dtype=object)
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != 3:
            raise ValueError(f"row {i + 1} has {len(parts)} entries, expected 3")
        for j, part in enumerate(parts):
            out[i, j] = int(part.strip())
    return out
