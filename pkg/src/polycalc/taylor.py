"""Coefficients of 1/prod_j(1 - conj(xi_j) z) and the truncated inverses
S_k built from them.

a_0 = 1 and the a_m satisfy the convolution recursion against the c_i of
prod_j(1 - conj(xi_j) z); independently they admit the partial-fraction
form a_m = sum_i beta_i conj(xi_i)^m with beta_i = 1/prod_{j!=i}
(1 - conj(xi_j) xi_i), which keeps the whole sequence bounded by
sum_i |beta_i|.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned
from .numerics import as_matrix, as_vector
from .polygonal import PointSetE


def c_coeffs(E):
    """Coefficients (c_0..c_N) of prod_j (1 - conj(xi_j) z); c_0 = 1."""
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    c = np.array([1.0 + 0.0j])
    for xi in E.points:
        c = np.convolve(c, np.array([1.0, -np.conj(xi)]))
    return c


def a_coeffs_recursive(E, m_max):
    """a_0..a_{m_max} via the convolution recursion sum_i c_i a_{r-i} = 0."""
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    c = c_coeffs(E)
    N = c.size - 1
    a = np.zeros(m_max + 1, dtype=complex)
    a[0] = 1.0
    for r in range(1, m_max + 1):
        k = min(r, N)
        a[r] = -np.dot(c[1:k + 1], a[r - 1::-1][:k])
    return a


def beta_weights(E):
    """Partial-fraction weights beta_i = 1/prod_{j!=i}(1 - conj(xi_j) xi_i).

    Raises IllConditioned when two peripheral points are closer than 1e-6
    (the weights blow up like the inverse gap).
    """
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    pts = E.points
    N = pts.size
    if N > 1:
        diffs = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() < 1e-6:
            raise IllConditioned("peripheral gap %.2e < 1e-6" % diffs.min())
    beta = np.empty(N, dtype=complex)
    for i in range(N):
        fac = 1.0 + 0.0j
        for j in range(N):
            if j != i:
                fac *= 1.0 - np.conj(pts[j]) * pts[i]
        beta[i] = 1.0 / fac
    return beta


def a_coeffs_partial_fraction(E, m_max):
    """a_m = sum_i beta_i conj(xi_i)^m; the closed-form route."""
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    beta = beta_weights(E)
    m = np.arange(m_max + 1)
    return (np.conj(E.points)[None, :] ** m[:, None]) @ beta


@dataclass(eq=False)
class TaylorCoeffs:
    """Bundled coefficient data for one peripheral set."""

    E: PointSetE
    a: np.ndarray          # a_0..a_{m_max}
    beta: np.ndarray       # beta_1..beta_N
    c: np.ndarray          # c_0..c_N

    @classmethod
    def build(cls, E, m_max, check_tol=1e-12):
        if not isinstance(E, PointSetE):
            E = PointSetE(E)
        a = a_coeffs_recursive(E, m_max)
        beta = beta_weights(E)
        c = c_coeffs(E)
        apf = a_coeffs_partial_fraction(E, min(m_max, 200))
        err = np.max(np.abs(a[:apf.size] - apf))
        if err > check_tol:
            raise ArithmeticError("recursion vs partial fractions differ "
                                  "by %.3e" % err)
        if np.max(np.abs(a)) > np.sum(np.abs(beta)) + check_tol:
            raise ArithmeticError("boundedness |a_m| <= sum|beta_i| violated")
        return cls(E=E, a=a, beta=beta, c=c)

    @property
    def sup_a(self):
        return float(np.sum(np.abs(self.beta)))

    @property
    def m_max(self):
        return self.a.size - 1


def gamma_coeffs(coeffs, k):
    """The surviving high-order coefficients gamma_{r,k}, r = k+1..k+N,
    of the truncated product S_k(z) = (sum c_i z^i)(sum_{m<=k} a_m z^m).

    All lower coefficients cancel: gamma_{0,k} = 1 and gamma_{r,k} = 0
    for 1 <= r <= k.
    """
    c, a = coeffs.c, coeffs.a
    N = c.size - 1
    if k < N:
        raise ValueError("need k >= N (k=%d, N=%d)" % (k, N))
    if k > coeffs.m_max:
        raise ValueError("coefficients only stored up to m=%d" % coeffs.m_max)
    out = {}
    for r in range(k + 1, k + N + 1):
        s = 0.0 + 0.0j
        for m in range(r - N, k + 1):
            s += c[r - m] * a[m]
        out[r] = s
    return out


def _power_vectors(T, x, n):
    """[x, Tx, ..., T^n x] without materializing matrix powers."""
    out = np.empty((n + 1, x.size), dtype=complex)
    out[0] = x
    for i in range(1, n + 1):
        out[i] = T @ out[i - 1]
    return out


def sk_apply(T, coeffs, k, x, consistency_tol=1e-10):
    """S_k(T) x, evaluated both as sum_{m<=k} a_m T^m prod_j(I - conj(xi_j)T) x
    and as x + sum_{r=k+1}^{k+N} gamma_{r,k} T^r x.

    The two forms must agree within consistency_tol * ||x||; the direct
    form is returned.
    """
    T = as_matrix(T)
    x = as_vector(x, T.shape[0])
    E, a = coeffs.E, coeffs.a
    N = E.size
    if k < N:
        raise ValueError("need k >= N (k=%d, N=%d)" % (k, N))
    if k > coeffs.m_max:
        raise ValueError("coefficients only stored up to m=%d" % coeffs.m_max)
    n = T.shape[0]
    Bx = x.copy()
    for xi in E.points:
        Bx = Bx - np.conj(xi) * (T @ Bx)
    pv = _power_vectors(T, Bx, k)
    direct = a[:k + 1] @ pv

    gam = gamma_coeffs(coeffs, k)
    pvx = _power_vectors(T, x, k + N)
    tail = x.astype(complex).copy()
    for r, g in gam.items():
        tail = tail + g * pvx[r]

    gap = np.linalg.norm(direct - tail)
    if gap > consistency_tol * max(np.linalg.norm(x), 1e-300):
        raise ArithmeticError("S_k forms disagree by %.3e" % gap)
    return direct


def lemma34_residual(T, E, x, k, coeffs=None):
    """||S_k(T) x - x|| for x already projected onto the closure of the
    range of prod_j (I - conj(xi_j) T)."""
    T = as_matrix(T)
    x = as_vector(x, T.shape[0])
    if coeffs is None:
        if not isinstance(E, PointSetE):
            E = PointSetE(E)
        coeffs = TaylorCoeffs.build(E, max(k + E.size, 8))
    return float(np.linalg.norm(sk_apply(T, coeffs, k, x) - x))
