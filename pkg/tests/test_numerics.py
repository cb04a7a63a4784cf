import json

import numpy as np
import pytest

from polycalc import numerics
from polycalc.errors import DimensionOverflow, NotSectorial, SingularResolvent
from conftest import diagonalizable, make_rng, random_matrix, rand_unitary


def test_opnorm_identity_and_zero():
    assert numerics.opnorm(np.eye(3)) == pytest.approx(1.0, abs=1e-14)
    assert numerics.opnorm(np.zeros((4, 4))) == 0.0


def test_opnorm_diagonal_reads_moduli():
    # singular values of a diagonal matrix are the entry moduli
    A = np.diag([0.5, -0.25j])
    assert numerics.opnorm(A) == pytest.approx(0.5, rel=1e-12)


def test_spectrum_diagonal_and_nilpotent():
    assert sorted(numerics.spectrum(np.diag([1.0, 0.5])).real) == \
        pytest.approx([0.5, 1.0])
    lam = numerics.spectrum(np.array([[0, 1], [0, 0]], dtype=complex))
    assert np.max(np.abs(lam)) < 1e-12
    assert lam.size == 2


def test_spectrum_triangular_reads_diagonal():
    lam = np.sort_complex(numerics.spectrum(np.array([[1, 1], [0, 0.5]],
                                                     dtype=complex)))
    assert np.allclose(lam, [0.5, 1.0], atol=1e-12)


def test_resolvent_trivial_cases():
    assert np.allclose(numerics.resolvent(2.0, np.eye(2)), np.eye(2))
    R = numerics.resolvent(2.0, np.diag([1.0, 0.0]))
    assert np.allclose(R, np.diag([1.0, 0.5]), atol=1e-13)


def test_resolvent_singular_raises():
    with pytest.raises(SingularResolvent):
        numerics.resolvent(1.0, np.diag([1.0, 0.0]))


def test_resolvent_residual_and_identity(rng):
    for _ in range(25):
        n = int(rng.integers(2, 7))
        A = random_matrix(n, rng)
        z, w = 3 + rng.normal() + 1j * rng.normal(), -4 + rng.normal() * 1j
        Rz = numerics.resolvent(z, A)
        Rw = numerics.resolvent(w, A)
        assert numerics.opnorm((z * np.eye(n) - A) @ Rz - np.eye(n)) <= 1e-10
        # resolvent identity R(z) - R(w) = (w - z) R(z) R(w)
        assert numerics.opnorm(Rz - Rw - (w - z) * Rz @ Rw) <= 1e-9


def test_principal_sqrt_trivial():
    assert np.allclose(numerics.principal_sqrt(np.eye(2)), np.eye(2))
    assert np.allclose(numerics.principal_sqrt(np.diag([4.0, 9.0])),
                       np.diag([2.0, 3.0]))


def test_principal_sqrt_negative_axis_raises():
    with pytest.raises(NotSectorial):
        numerics.principal_sqrt(np.diag([-1.0, 1.0]))


def test_principal_sqrt_jordan_zero_raises():
    with pytest.raises(NotSectorial):
        numerics.principal_sqrt(np.array([[0, 1], [0, 0]], dtype=complex))


def test_principal_sqrt_random_right_half_plane(rng):
    for _ in range(40):
        n = int(rng.integers(2, 9))
        lam = rng.uniform(0.05, 2, n) + 1j * rng.uniform(-1, 1, n)
        A = diagonalizable(lam, rng)
        X = numerics.principal_sqrt(A)
        res = numerics.opnorm(X @ X - A)
        assert res <= 1e-9 * (1 + numerics.opnorm(A))
        assert (numerics.spectrum(X).real > -1e-10).all()


def test_principal_sqrt_semisimple_zero(rng):
    # factors I - conj(xi) T with xi in the spectrum are singular but
    # semisimple at zero; the root must exist and square back
    for _ in range(20):
        n = 5
        xi = np.exp(2j * np.pi * rng.uniform())
        lam = np.concatenate([[xi],
                              0.7 * rng.uniform(size=n - 1) *
                              np.exp(2j * np.pi * rng.uniform(size=n - 1))])
        T = diagonalizable(lam, rng)
        A = np.eye(n) - np.conj(xi) * T
        X = numerics.principal_sqrt(A)
        assert numerics.opnorm(X @ X - A) <= 1e-9 * (1 + numerics.opnorm(A))


def test_kron_block_structure(rng):
    B = random_matrix(3, rng)
    K = numerics.kron(np.eye(2), B)
    assert np.allclose(K[:3, :3], B) and np.allclose(K[3:, 3:], B)
    assert np.allclose(K[:3, 3:], 0)
    A = random_matrix(4, rng)
    assert np.allclose(numerics.kron(A, np.eye(1)), A)


def test_kron_norm_multiplicative(rng):
    for _ in range(20):
        A = random_matrix(int(rng.integers(1, 7)), rng)
        B = random_matrix(int(rng.integers(1, 7)), rng)
        lhs = numerics.opnorm(numerics.kron(A, B))
        rhs = numerics.opnorm(A) * numerics.opnorm(B)
        assert abs(lhs - rhs) <= 1e-10 * max(rhs, 1.0)


def test_kron_of_unitaries_is_unitary(rng):
    U, V = rand_unitary(3, rng), rand_unitary(4, rng)
    assert numerics.opnorm(numerics.kron(U, V)) == pytest.approx(1.0, abs=1e-10)


def test_kron_cap():
    with pytest.raises(DimensionOverflow):
        numerics.kron(np.eye(100), np.eye(100), dim_cap=4096)


def test_json_roundtrip(rng):
    A = random_matrix(5, rng)
    obj = numerics.matrix_to_json(A)
    s = json.dumps(obj)
    back = numerics.matrix_from_json(json.loads(s))
    assert np.array_equal(back, A)
    assert obj["dim"] == 5
