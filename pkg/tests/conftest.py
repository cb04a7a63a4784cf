import numpy as np
import pytest

from polycalc.generators import rand_similarity, rand_unitary


def make_rng(seed):
    return np.random.default_rng(seed)


def random_matrix(n, rng, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def random_contraction(n, rng, norm=0.95):
    T = random_matrix(n, rng)
    return norm * T / np.linalg.norm(T, 2)


def diagonalizable(lam, rng, cond=10.0):
    """S diag(lam) S^{-1} with condition-capped similarity."""
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    S = rand_similarity(n, cond, rng)
    return S @ np.diag(lam) @ np.linalg.inv(S)


def separated_angles(rng, N, min_gap=0.3):
    """N angles on the circle with pairwise circular gaps >= min_gap."""
    while True:
        a = np.sort(rng.uniform(0.0, 2 * np.pi, N))
        gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
        if N == 1 or gaps.min() >= min_gap:
            return a


def ritt_instance(rng, N=None, dim=None, peripheral=None, interior_radius=0.8,
                  cond=10.0):
    """Diagonalizable matrix with peripheral eigenvalues on a separated set
    E and the rest strictly inside; returns (T, points)."""
    N = N or int(rng.integers(1, 4))
    dim = dim or int(rng.integers(2, 11))
    peripheral = peripheral if peripheral is not None \
        else int(rng.integers(1, min(N, dim) + 1))
    xis = np.exp(1j * separated_angles(rng, N))
    inner = interior_radius * np.sqrt(rng.uniform(size=dim - peripheral)) \
        * np.exp(2j * np.pi * rng.uniform(size=dim - peripheral))
    lam = np.concatenate([xis[:peripheral], inner])
    return diagonalizable(lam, rng, cond), xis


@pytest.fixture
def rng():
    return make_rng(20240817)
