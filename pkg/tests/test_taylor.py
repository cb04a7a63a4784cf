import numpy as np
import pytest

from polycalc import taylor
from polycalc.errors import IllConditioned
from polycalc.polygonal import PointSetE
from conftest import diagonalizable, make_rng, separated_angles


def beta_by_induction(points):
    """Independent oracle: the inductive partial-fraction construction.

    For N = 1 the weight is 1; appending xi_N maps the previous weights
    alpha_i to -alpha_i conj(xi_i) xi_N / (1 - conj(xi_i) xi_N) and adds
    beta_N = sum_i alpha_i / (1 - conj(xi_i) xi_N).
    """
    pts = list(points)
    beta = np.array([1.0 + 0.0j])
    for n in range(1, len(pts)):
        xi_n = pts[n]
        prev = pts[:n]
        newb = np.empty(n + 1, dtype=complex)
        for i, (al, xi_i) in enumerate(zip(beta, prev)):
            newb[i] = -al * np.conj(xi_i) * xi_n / (1 - np.conj(xi_i) * xi_n)
        newb[n] = np.sum(beta / (1 - np.conj(prev) * xi_n))
        beta = newb
    return beta


def random_sets(rng, count, n_max=5, min_gap=0.05):
    out = []
    for _ in range(count):
        N = int(rng.integers(1, n_max + 1))
        out.append(PointSetE(np.exp(1j * separated_angles(rng, N, min_gap))))
    return out


# ---------------------------------------------------------------------------
# closed forms

def test_c_coeffs_closed_forms():
    assert np.allclose(taylor.c_coeffs([1.0]), [1.0, -1.0])
    assert np.allclose(taylor.c_coeffs([1.0, -1.0]), [1.0, 0.0, -1.0])
    # single factor (1 - conj(i) z) = (1 + i z)
    assert np.allclose(taylor.c_coeffs([1j]), [1.0, 1j])


def test_a_coeffs_closed_forms():
    assert np.allclose(taylor.a_coeffs_recursive([1.0], 5), np.ones(6))
    assert np.allclose(taylor.a_coeffs_recursive([1.0, -1.0], 5),
                       [1, 0, 1, 0, 1, 0])
    # 1/(1 + i z) = sum (-i)^m z^m
    assert np.allclose(taylor.a_coeffs_recursive([1j], 3), [1, -1j, -1, 1j])


def test_beta_closed_forms():
    assert np.allclose(taylor.beta_weights([1.0]), [1.0])
    assert np.allclose(taylor.beta_weights([1.0, -1.0]), [0.5, 0.5])
    # recursion-consistency: sum beta = a_0 = 1
    assert np.sum(taylor.beta_weights([1.0, 1j])) == pytest.approx(1.0, abs=1e-12)


def test_beta_ill_conditioned():
    with pytest.raises(IllConditioned):
        taylor.beta_weights(PointSetE([1.0, np.exp(1e-8 * 1j)]))


def test_beta_matches_inductive_oracle(rng):
    for E in random_sets(rng, 25):
        closed = taylor.beta_weights(E)
        inductive = beta_by_induction(E.points)
        assert np.max(np.abs(closed - inductive)) <= \
            1e-9 * max(1.0, np.max(np.abs(closed)))


# ---------------------------------------------------------------------------
# consistency invariants

def test_recursion_vs_partial_fraction(rng):
    for E in random_sets(rng, 50):
        a = taylor.a_coeffs_recursive(E, 200)
        apf = taylor.a_coeffs_partial_fraction(E, 200)
        assert np.max(np.abs(a - apf)) <= 1e-12


def test_convolution_identity(rng):
    for E in random_sets(rng, 20):
        c = taylor.c_coeffs(E)
        a = taylor.a_coeffs_recursive(E, 300)
        N = c.size - 1
        for r in range(1, 301):
            k = min(r, N)
            val = a[r] + np.dot(c[1:k + 1], a[r - 1::-1][:k])
            assert abs(val) <= 1e-12


def test_boundedness(rng):
    for E in random_sets(rng, 10, min_gap=0.2):
        a = taylor.a_coeffs_partial_fraction(E, 10_000)
        cap = np.sum(np.abs(taylor.beta_weights(E)))
        assert np.max(np.abs(a)) <= cap + 1e-10


def test_gamma_boundedness(rng):
    # |gamma_{r,k}| <= (N+1) * max|c_i| * sup|a_m| uniformly in k
    for E in random_sets(rng, 6, n_max=4, min_gap=0.3):
        coeffs = taylor.TaylorCoeffs.build(E, 520)
        cap = (E.size + 1) * np.max(np.abs(coeffs.c)) * coeffs.sup_a
        for k in range(E.size, 501, 25):
            for g in taylor.gamma_coeffs(coeffs, k).values():
                assert abs(g) <= cap + 1e-10


# ---------------------------------------------------------------------------
# S_k application

def test_sk_zero_matrix(rng):
    E = PointSetE([1.0, -1.0])
    coeffs = taylor.TaylorCoeffs.build(E, 64)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    out = taylor.sk_apply(np.zeros((4, 4)), coeffs, 10, x)
    assert np.allclose(out, x, atol=1e-14)


def test_sk_scalar_oracle(rng):
    # T = xi_1 I acts like the scalar S_k(xi_1)
    E = PointSetE([np.exp(0.4j), np.exp(2.5j)])
    coeffs = taylor.TaylorCoeffs.build(E, 64)
    xi = E.points[0]
    k = 9
    # scalar oracle by direct coefficient evaluation
    c, a = coeffs.c, coeffs.a
    sk = sum(a[m] * xi ** m for m in range(k + 1)) * \
        np.prod([1 - np.conj(p) * xi for p in E.points])
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    out = taylor.sk_apply(xi * np.eye(3), coeffs, k, x)
    assert np.allclose(out, sk * x, atol=1e-12)


def test_sk_geometric_residual():
    # T = diag(0.5), E = {1}: 1 - S_k(0.5) = 0.5^{k+1}
    E = PointSetE([1.0])
    coeffs = taylor.TaylorCoeffs.build(E, 64)
    x = np.array([1.0 + 0j])
    for k in (5, 10, 20):
        out = taylor.sk_apply(np.diag([0.5 + 0j]), coeffs, k, x)
        assert abs(out[0] - (1 - 0.5 ** (k + 1))) <= 1e-13


def test_lemma34_residual_cases(rng):
    E = PointSetE([1.0])
    assert taylor.lemma34_residual(np.diag([0.5 + 0j]), E,
                                   np.zeros(1), 10) == 0.0
    r = taylor.lemma34_residual(np.diag([0.5 + 0j]), E,
                                np.array([1.0 + 0j]), 40)
    assert r == pytest.approx(0.5 ** 41, rel=1e-6)
    assert r <= 1e-10


def test_lemma34_after_projection(rng):
    # peripheral component never converges; the projected component does
    from polycalc import ergodic
    T = diagonalizable([1.0, 0.4, 0.2], rng)
    E = PointSetE([1.0])
    dec = ergodic.full_decomposition(T, E)
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    x_range = dec.range_projection @ x
    res = taylor.lemma34_residual(T, E, x_range, 60)
    assert res <= 1e-8 * max(np.linalg.norm(x_range), 1.0)
