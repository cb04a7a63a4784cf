"""Multivariate polynomials on commuting tuples, sup-norms over the
polydisc and over powers of a region, von Neumann ratios, and joint
similarity to contractions.

The similarity solver looks for P > 0 with T_k P T_k* <= P for every k;
then S = P^{1/2} conjugates each T_k to a contraction S^{-1} T_k S.  The
search runs alternating projections between the affine graph
{(P, S_1..S_d) : S_k = P - T_k P T_k*} and the product of semidefinite
cones, warm-started from the averaged word matrix
(1/|W|) sum_{|w|<=L} T_w T_w* (the finite surrogate for a limit-average
argument).  A margin that refuses to reach 1 within the budget is
reported as Infeasible; no choice of S is canonical, so only the
contraction property of this particular S is ever asserted.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DegeneratePoly, Infeasible, NotCommuting
from .numerics import as_matrix, hermitian_sqrt_psd, opnorm
from .polygonal import ContourRegion

TWO_PI = 2.0 * math.pi


@dataclass(eq=False)
class MultiPoly:
    """Complex polynomial in d variables: exponent tuple -> coefficient."""

    d: int
    terms: dict

    def __post_init__(self):
        clean = {}
        for expo, coef in self.terms.items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != self.d or any(e < 0 for e in expo):
                raise ValueError("bad exponent tuple %r for d=%d"
                                 % (expo, self.d))
            coef = complex(coef)
            if coef != 0:
                clean[expo] = clean.get(expo, 0.0) + coef
        self.terms = {e: c for e, c in clean.items() if c != 0}

    @property
    def degree(self):
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def max_exponents(self):
        out = [0] * self.d
        for e in self.terms:
            for i, ei in enumerate(e):
                out[i] = max(out[i], ei)
        return out

    def scaled(self, c):
        return MultiPoly(self.d, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            if other.d != self.d:
                raise ValueError("dimension mismatch")
            out = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, 0.0) + c1 * c2
            return MultiPoly(self.d, out)
        return self.scaled(other)

    def eval_scalar(self, *zs):
        """Evaluate on scalars or broadcastable arrays, one per variable."""
        if len(zs) != self.d:
            raise ValueError("expected %d arguments" % self.d)
        zs = [np.asarray(z, dtype=complex) for z in zs]
        shape = np.broadcast_shapes(*[z.shape for z in zs])
        maxe = self.max_exponents()
        pows = []
        for z, me in zip(zs, maxe):
            table = [np.ones(shape, dtype=complex)]
            for _ in range(me):
                table.append(table[-1] * z)
            pows.append(table)
        out = np.zeros(shape, dtype=complex)
        for e, c in self.terms.items():
            term = np.full(shape, c, dtype=complex)
            for i, ei in enumerate(e):
                if ei:
                    term = term * pows[i][ei]
            out = out + term
        return out

    def to_json(self):
        return {"d": self.d,
                "terms": [{"exp": list(e), "re": c.real, "im": c.imag}
                          for e, c in sorted(self.terms.items())]}

    @staticmethod
    def from_json(obj):
        return MultiPoly(int(obj["d"]),
                         {tuple(t["exp"]): t["re"] + 1j * t["im"]
                          for t in obj["terms"]})


def check_commuting(T_list, tol=1e-12):
    Ts = [as_matrix(T) for T in T_list]
    scale = max(max(opnorm(T) for T in Ts), 1.0)
    for i in range(len(Ts)):
        for j in range(i + 1, len(Ts)):
            c = opnorm(Ts[i] @ Ts[j] - Ts[j] @ Ts[i])
            if c > tol * scale:
                raise NotCommuting("operators %d,%d: commutator %.3e > %.1e"
                                   % (i, j, c, tol * scale))
    return Ts


def eval_multipoly(phi, T_list):
    """phi(T_1, ..., T_d) with cached powers per operator."""
    Ts = check_commuting(T_list)
    if len(Ts) != phi.d:
        raise ValueError("polynomial has d=%d but %d operators given"
                         % (phi.d, len(Ts)))
    n = Ts[0].shape[0]
    maxe = phi.max_exponents()
    pows = []
    for T, me in zip(Ts, maxe):
        table = [np.eye(n, dtype=complex)]
        for _ in range(me):
            table.append(table[-1] @ T)
        pows.append(table)
    out = np.zeros((n, n), dtype=complex)
    for e, c in phi.terms.items():
        term = np.eye(n, dtype=complex) * c
        for i, ei in enumerate(e):
            if ei:
                term = term @ pows[i][ei]
        out = out + term
    return out


def _refine_axis(phi, point, axis, halfwidth):
    """1-D local maximization of |phi| along one torus angle."""
    angles = np.angle(point)

    def neg(th):
        z = list(np.exp(1j * angles))
        z[axis] = np.exp(1j * th)
        return -abs(phi.eval_scalar(*z))

    th0 = angles[axis]
    res = scipy.optimize.minimize_scalar(
        neg, bounds=(th0 - halfwidth, th0 + halfwidth), method="bounded",
        options={"xatol": 1e-13})
    out = point.copy()
    out[axis] = np.exp(1j * res.x)
    return out, -res.fun


def supnorm_on_torus(phi, grid_per_dim=64, refine=True):
    """max |phi| over the polydisc = max over the distinguished boundary,
    estimated on a uniform torus grid plus local refinement.

    The grid value is a lower bound; refinement closes the gap by
    coordinate-wise bounded scalar maximization.  The grid spacing is
    2*pi/grid_per_dim per axis.
    """
    g = int(grid_per_dim)
    axes = [np.exp(2j * math.pi * np.arange(g) / g) for _ in range(phi.d)]
    mesh = np.meshgrid(*axes, indexing="ij") if phi.d > 1 else [axes[0]]
    vals = np.abs(phi.eval_scalar(*mesh))
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[idx])
    if not refine:
        return best
    point = np.array([mesh[k][idx] for k in range(phi.d)], dtype=complex)
    half = TWO_PI / g
    for _ in range(4):
        for ax in range(phi.d):
            point, val = _refine_axis(phi, point, ax, half)
            best = max(best, val)
        half *= 0.35
    return best


def supnorm_on_region_power(phi, region, samples=256, rng=None):
    """max |phi| over the d-fold power of a convex region, sampled on the
    d-fold product of its boundary (maximum principle on product domains).

    For d <= 2 the full product grid is used; for d = 3 a strided product
    plus random tuples (seeded) keeps the budget bounded.
    """
    if not isinstance(region, ContourRegion):
        raise ValueError("expected a ContourRegion")
    pts = region.boundary_samples(max(2, int(math.ceil(samples / len(region.pieces)))))
    d = phi.d
    if d == 1:
        return float(np.max(np.abs(phi.eval_scalar(pts))))
    if d == 2:
        Z1, Z2 = np.meshgrid(pts, pts, indexing="ij")
        return float(np.max(np.abs(phi.eval_scalar(Z1, Z2))))
    if d == 3:
        stride = max(1, pts.size // 40)
        sub = pts[::stride]
        Z1, Z2, Z3 = np.meshgrid(sub, sub, sub, indexing="ij")
        best = float(np.max(np.abs(phi.eval_scalar(Z1, Z2, Z3))))
        rng = rng or np.random.default_rng(0)
        draw = rng.integers(0, pts.size, size=(20000, 3))
        tup = pts[draw]
        best = max(best, float(np.max(np.abs(
            phi.eval_scalar(tup[:, 0], tup[:, 1], tup[:, 2])))))
        return best
    raise ValueError("d <= 3 supported, got %d" % d)


def vn_ratio(T_list, phi, domain="polydisc", grid_per_dim=64,
             region_samples=256):
    """||phi(T_1..T_d)|| divided by the sup norm of phi over the domain
    (the polydisc, or the d-fold power of a given region)."""
    val = opnorm(eval_multipoly(phi, T_list))
    if isinstance(domain, ContourRegion):
        sup = supnorm_on_region_power(phi, domain, samples=region_samples)
    elif domain == "polydisc":
        sup = supnorm_on_torus(phi, grid_per_dim=grid_per_dim)
    else:
        raise ValueError("domain must be 'polydisc' or a ContourRegion")
    if sup < 1e-14:
        raise DegeneratePoly("sup norm %.3e below floor" % sup)
    return val / sup


# ---------------------------------------------------------------------------
# joint similarity

@dataclass(eq=False)
class SimilarityResult:
    P: np.ndarray
    S: np.ndarray
    margins: list
    iterations: int
    feasible: bool

    def to_json(self):
        return {"margins": [float(m) for m in self.margins],
                "iterations": self.iterations, "feasible": self.feasible}


def _herm(X):
    return 0.5 * (X + X.conj().T)


def _psd_clip(X, floor=0.0):
    w, V = np.linalg.eigh(_herm(X))
    return (V * np.maximum(w, floor)) @ V.conj().T


def _word_average(Ts, length):
    n = Ts[0].shape[0]
    d = len(Ts)
    P = np.zeros((n, n), dtype=complex)
    count = 0
    for L in range(length + 1):
        for w in itertools.product(range(d), repeat=L):
            W = np.eye(n, dtype=complex)
            for i in w:
                W = W @ Ts[i]
            P += W @ W.conj().T
            count += 1
    return P / count


def _margins(P, Ts):
    S = hermitian_sqrt_psd(P)
    Si = np.linalg.inv(S)
    return S, [opnorm(Si @ T @ S) for T in Ts]


def joint_similarity(T_list, eps=1e-8, max_iter=2000, word_len=6,
                     check_every=25):
    """Single similarity taking every operator of a commuting tuple to a
    contraction, via semidefinite feasibility.

    Solves T_k P T_k* <= P, P >= eps*I (normalized so ||P|| ~ 1).  On
    success S = principal_sqrt(P) satisfies ||S^{-1} T_k S|| <= 1 + 1e-8
    for every k.  Raises Infeasible when the margin stops improving
    within max_iter (a numerical certificate, not an impossibility proof).
    """
    Ts = check_commuting(T_list)
    n = Ts[0].shape[0]
    d = len(Ts)

    P = _word_average(Ts, word_len)
    P = P / max(opnorm(P), 1e-300)

    def Lk(P, Tk):
        return P - Tk @ P @ Tk.conj().T

    def LkS(Y, Tk):
        return Y - Tk.conj().T @ Y @ Tk

    # normal-equation matrix of the graph projection, built once
    sz = n * n
    M = np.zeros((sz, sz), dtype=complex)
    eye_flat = np.eye(sz, dtype=complex)
    for col in range(sz):
        X = eye_flat[:, col].reshape(n, n)
        Y = X + sum(LkS(Lk(X, Tk), Tk) for Tk in Ts)
        M[:, col] = Y.ravel()
    M_inv = np.linalg.inv(M)

    Ss = [Lk(P, Tk) for Tk in Ts]
    best_margin = math.inf
    best = None
    for it in range(max_iter):
        rhs = P + sum(LkS(Sk, Tk) for Sk, Tk in zip(Ss, Ts))
        Pg = (M_inv @ rhs.ravel()).reshape(n, n)
        Sg = [Lk(Pg, Tk) for Tk in Ts]
        P = _psd_clip(Pg, eps)
        P = P / max(opnorm(P), 1e-300)
        Ss = [_psd_clip(S) for S in Sg]
        if it % check_every == 0 or it == max_iter - 1:
            S, margins = _margins(P, Ts)
            worst = max(margins)
            if worst < best_margin:
                best_margin = worst
                best = (P.copy(), S, margins, it)
            if worst <= 1.0 + 1e-9:
                return SimilarityResult(P=P, S=S, margins=margins,
                                        iterations=it + 1, feasible=True)
    P, S, margins, it = best
    raise Infeasible(
        "margin stalled at %.12f after %d iterations (d=%d, n=%d)"
        % (best_margin, max_iter, d, n))


def joint_similarity_result(T_list, **kw):
    """Like joint_similarity but returns an infeasible SimilarityResult
    instead of raising (handy for reports)."""
    try:
        return joint_similarity(T_list, **kw)
    except Infeasible:
        Ts = check_commuting(T_list)
        P = _word_average(Ts, kw.get("word_len", 6))
        P = P / max(opnorm(P), 1e-300)
        P = _psd_clip(P, kw.get("eps", 1e-8))
        S, margins = _margins(P, Ts)
        return SimilarityResult(P=P, S=S, margins=margins,
                                iterations=kw.get("max_iter", 2000),
                                feasible=False)
