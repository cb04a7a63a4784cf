"""The l^2 square function built from the sectorial factors I - conj(xi) T.

For A = prod_j (I - conj(xi_j) T)^{1/2} the quantity reported is
( sum_k ||T^k A x||^2 )^{1/2}, truncated adaptively once the terms decay,
together with a geometric tail estimate.  The largest value over random
unit vectors gives an empirical lower bound for the best constant C in
the bound by C ||x||; the true constant is non-constructive, so only the
empirical maximum is ever reported.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotConverged, NotSectorial
from .numerics import as_matrix, as_vector, opnorm, principal_sqrt
from .polygonal import PointSetE, check_sectorial

K_CAP = 100_000
DECAY_RUN = 16


def sectorial_factor(T, E, check_tol=1e-8):
    """A = prod_j principal_sqrt(I - conj(xi_j) T), factors in index order.

    Each factor is gated by the sector-angle test (< pi/2).  Although the
    factors commute (all are functions of T), the order is fixed for
    reproducibility, and A^2 is checked against prod_j (I - conj(xi_j) T).
    """
    T = as_matrix(T)
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    n = T.shape[0]
    eye = np.eye(n, dtype=complex)
    A = eye.copy()
    B = eye.copy()
    for xi in E.points:
        sect = check_sectorial(T, xi)
        if not sect.within_half_plane:
            raise NotSectorial("sector angle %.4f >= pi/2 for xi=%s"
                               % (sect.angle, xi))
        F = eye - np.conj(xi) * T
        A = A @ principal_sqrt(F)
        B = B @ F
    err = opnorm(A @ A - B)
    if err > max(check_tol, 1e-6) * (1.0 + opnorm(B)):
        raise ArithmeticError("A^2 drifts from the product by %.3e" % err)
    return A


@dataclass(eq=False)
class SquareFunctionReport:
    value: float
    K: int
    tail_bound: float
    factor_A: np.ndarray
    terms: np.ndarray      # squared norms ||T^k A x||^2, k = 0..K

    def to_json(self):
        return {"value": self.value, "K": self.K,
                "tail_bound": self.tail_bound}


def square_function(T, E, x, tol=1e-10, k_cap=K_CAP, factor=None):
    """(sum_{k<=K} ||T^k A x||^2)^{1/2} with adaptive truncation.

    Stops once ||T^k A x||^2 < tol * (running sum)/(k+1) for 16
    consecutive k; raises NotConverged if the cap is reached without that
    decay.  The tail bound extrapolates the observed geometric rate.
    """
    T = as_matrix(T)
    x = as_vector(x, T.shape[0])
    A = sectorial_factor(T, E) if factor is None else factor
    v = A @ x
    terms = []
    total = 0.0
    run = 0
    k = 0
    while k <= k_cap:
        t = float(np.vdot(v, v).real)
        terms.append(t)
        total += t
        decayed = (t < tol * total / (k + 1)) if total > 0.0 else (t <= 1e-300)
        if decayed:
            run += 1
            if run >= DECAY_RUN:
                break
        else:
            run = 0
        v = T @ v
        k += 1
    else:
        raise NotConverged("no decay after %d terms" % k_cap)
    terms = np.array(terms)
    K = terms.size - 1
    # geometric tail estimate from the trailing window
    tail = 0.0
    w = terms[-DECAY_RUN:]
    if w[0] > 0.0 and w[-1] > 0.0:
        rho = (w[-1] / w[0]) ** (1.0 / max(DECAY_RUN - 1, 1))
        if rho < 1.0:
            tail = w[-1] * rho / (1.0 - rho)
        else:
            tail = math.inf
    return SquareFunctionReport(value=math.sqrt(total), K=K,
                                tail_bound=tail, factor_A=A, terms=terms)


def square_constant_estimate(T, E, trials=64, seed=0, tol=1e-10):
    """Empirical lower bound for the best C with value <= C ||x||.

    Maximum of the square function over `trials` random unit vectors plus
    the standard basis (so diagonal cases hit their exact extremum).
    Per-trial seeds are split off the master seed.
    """
    T = as_matrix(T)
    n = T.shape[0]
    A = sectorial_factor(T, E)
    vecs = [np.eye(n, dtype=complex)[:, i] for i in range(n)]
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        vecs.append(v / np.linalg.norm(v))
    best = 0.0
    for v in vecs:
        rep = square_function(T, E, v, tol=tol, factor=A)
        best = max(best, rep.value / np.linalg.norm(v))
    return best
