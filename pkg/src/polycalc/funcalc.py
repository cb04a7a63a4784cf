"""Contour-integral functional calculus on mixed arc/segment regions,
single and multivariate, plus the bounded-ratio certificate for the
polygonal functional-calculus inequality.

Quadrature is Gauss-Legendre per boundary piece, with arcs parametrized
by angle and the dz Jacobian folded into the weights, so the winding
integral (1/2 pi i) times the contour integral of dz/(z - z0) calibrates
to 1 for interior points.  Peripheral eigenvalues are split off through
the mean-ergodic projections before integrating, because the boundary of
E_r passes through the peripheral points themselves.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import BudgetExceeded, SpectrumOnContour
from . import ergodic
from .multivar import (MultiPoly, eval_multipoly, joint_similarity_result,
                       supnorm_on_region_power)
from .numerics import as_matrix, opnorm, spectrum
from .polygonal import (Arc, ContourRegion, PointSetE, Segment, build_Er,
                        classify_ritt, enclosing_polygon)

MULTI_NODE_CAP = 2_000_000


@dataclass(eq=False)
class ContourQuadrature:
    """Gauss-Legendre nodes and complex dz-weights along a closed contour."""

    region: ContourRegion
    nodes_per_piece: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, region, nodes_per_piece=64):
        t, w = np.polynomial.legendre.leggauss(int(nodes_per_piece))
        zs, ws = [], []
        for p in region.pieces:
            if isinstance(p, Segment):
                mid, half = 0.5 * (p.a + p.b), 0.5 * (p.b - p.a)
                zs.append(mid + half * t)
                ws.append(half * w)
            elif isinstance(p, Arc):
                th0, th1 = p.theta_start, p.theta_end
                mid, half = 0.5 * (th0 + th1), 0.5 * (th1 - th0)
                th = mid + half * t
                z = p.center + p.radius * np.exp(1j * th)
                zs.append(z)
                ws.append(1j * p.radius * np.exp(1j * th) * half * w)
            else:
                raise ValueError("unknown piece %r" % (p,))
        return cls(region=region, nodes_per_piece=int(nodes_per_piece),
                   nodes=np.concatenate(zs), weights=np.concatenate(ws))

    def winding(self, z0):
        """(1/2 pi i) contour integral of dz/(z - z0); 1 inside, 0 outside."""
        return complex(np.sum(self.weights / (self.nodes - z0))
                       / (2j * math.pi))

    def integrate_scalar(self, f):
        return complex(np.sum(self.weights * f(self.nodes)) / (2j * math.pi))


def _resolvent_stack(points, T):
    """R(z_i, T) for all nodes, batched."""
    T = as_matrix(T)
    n = T.shape[0]
    z = np.asarray(points, dtype=complex)
    shifted = z[:, None, None] * np.eye(n) - T[None, :, :]
    rhs = np.broadcast_to(np.eye(n, dtype=complex), (z.size, n, n))
    return np.linalg.solve(shifted, rhs)


def _gap_check(T, region, min_gap=1e-6):
    lam = spectrum(T)
    inside = region.contains(lam, tol=0.0)
    gaps = region.distance_to_boundary(lam)
    if not inside.all() or gaps.min() <= min_gap:
        raise SpectrumOnContour(
            "eigenvalue within %.1e of the contour (min gap %.3e)"
            % (min_gap, float(gaps.min())))


def contour_eval_1d(phi, T, quad):
    """(1/2 pi i) contour integral of phi(z) R(z,T) dz = phi(T) for
    spectrum strictly inside the region."""
    if isinstance(phi, MultiPoly) and phi.d != 1:
        raise ValueError("need a univariate polynomial")
    T = as_matrix(T)
    _gap_check(T, quad.region)
    R = _resolvent_stack(quad.nodes, T)
    vals = phi.eval_scalar(quad.nodes) if isinstance(phi, MultiPoly) \
        else np.asarray([phi(z) for z in quad.nodes], dtype=complex)
    coef = quad.weights * vals / (2j * math.pi)
    return np.einsum("k,kab->ab", coef, R)


def polygonal_calculus(phi, T, E, r, quad=None, decomposition=None,
                       nodes_per_piece=64):
    """phi(T) through the peripheral splitting: the peripheral eigenvalues
    contribute phi(xi_j) P_j directly, and the range component is handled
    by the contour integral over the boundary of E_r on the invariant
    subspace (where the spectrum is strictly interior)."""
    T = as_matrix(T)
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    dec = decomposition or ergodic.full_decomposition(T, E)
    n = T.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for xi, P in zip(E.points, dec.projections):
        out = out + complex(phi.eval_scalar(np.array(xi))) * P

    Pr = dec.range_projection
    scale = max(opnorm(T), 1.0)
    U, s, _ = np.linalg.svd(Pr)
    k = int(np.sum(s > 1e-10 * max(s[0] if s.size else 0.0, 1.0)))
    if k > 0:
        W = U[:, :k]                      # orthonormal basis of Ran(Pr)
        M = W.conj().T @ T @ W            # T restricted to its invariant range
        if quad is None:
            quad = ContourQuadrature.build(build_Er(E, r), nodes_per_piece)
        phiM = contour_eval_1d(phi, M, quad)
        out = out + W @ phiM @ W.conj().T @ Pr
    return out


def contour_eval_multi(phi, T_list, quad, node_cap=MULTI_NODE_CAP):
    """Tensor-product contour quadrature of
    (1/2 pi i)^d  int ... int  phi(z_1..z_d) prod_k R(z_k, T_k) dz.

    d <= 3; the resolvent stacks are shared across the product grid and
    the phi tensor is contracted one axis at a time.
    """
    d = phi.d
    if d < 1 or d > 3:
        raise BudgetExceeded("d <= 3 supported, got %d" % d)
    Ts = [as_matrix(T) for T in T_list]
    if len(Ts) != d:
        raise ValueError("need %d operators" % d)
    nn = quad.nodes.size
    if nn ** d > node_cap:
        raise BudgetExceeded("node tuple count %d exceeds cap %d"
                             % (nn ** d, node_cap))
    for T in Ts:
        _gap_check(T, quad.region)
    if d == 1:
        return contour_eval_1d(phi, Ts[0], quad)

    stacks = [_resolvent_stack(quad.nodes, T) for T in Ts]
    wz = quad.weights / (2j * math.pi)
    if d == 2:
        Z1, Z2 = np.meshgrid(quad.nodes, quad.nodes, indexing="ij")
        F = phi.eval_scalar(Z1, Z2) * np.outer(wz, wz)
        # C[j] = sum_i F[i, j] R1[i]; out = sum_j C[j] @ R2[j]
        C = np.einsum("ij,iab->jab", F, stacks[0])
        return np.einsum("jab,jbc->ac", C, stacks[1])
    Z1, Z2, Z3 = np.meshgrid(quad.nodes, quad.nodes, quad.nodes, indexing="ij")
    F = phi.eval_scalar(Z1, Z2, Z3) * \
        wz[:, None, None] * wz[None, :, None] * wz[None, None, :]
    C = np.einsum("ijk,iab->jkab", F, stacks[0])
    Dm = np.einsum("jkab,jbc->kac", C, stacks[1])
    return np.einsum("kab,kbc->ac", Dm, stacks[2])


@dataclass(eq=False)
class RatioCertificate:
    degrees: np.ndarray
    ratios: np.ndarray
    slope: float
    p_value: float
    passed: bool
    polygon: ContourRegion
    max_ratio: float

    def to_json(self):
        return {"slope": self.slope, "p_value": self.p_value,
                "passed": self.passed, "max_ratio": self.max_ratio,
                "n_samples": int(self.ratios.size),
                "per_degree": {int(dg): float(np.max(self.ratios[self.degrees == dg]))
                               for dg in np.unique(self.degrees)}}


def _random_poly(d, degree, rng, n_terms=None):
    n_terms = n_terms or min(3 * degree + 2, 14)
    terms = {}
    for _ in range(n_terms):
        total = int(rng.integers(0, degree + 1))
        cuts = np.sort(rng.integers(0, total + 1, size=d - 1)) if d > 1 else []
        parts = np.diff(np.concatenate([[0], cuts, [total]])) if d > 1 \
            else np.array([total])
        coef = rng.normal() + 1j * rng.normal()
        terms[tuple(int(p) for p in parts)] = coef
    # guarantee the requested top degree appears
    top = [0] * d
    top[int(rng.integers(0, d))] = degree
    terms[tuple(top)] = rng.normal() + 1j * rng.normal()
    return MultiPoly(d, terms)


def theorem51_certificate(T_list, E, r, phi_samples=200, seed=0, deg_max=8,
                          region_samples=256, check_gates=True):
    """Bounded-ratio certificate for the polygonal functional-calculus
    inequality: the enclosing polygon Delta is built for (E, r), random
    polynomials of degrees 1..deg_max are sampled, and the certificate
    passes when the ratio ||phi(T)|| / sup_{Delta^d} |phi| shows no
    positive trend across degree (one-sided slope test at 5%).

    Gates: every operator classifies as Ritt-type for E, and the tuple is
    jointly similar to contractions (the polynomial-boundedness surrogate).
    """
    Ts = [as_matrix(T) for T in T_list]
    d = len(Ts)
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    if check_gates:
        for T in Ts:
            cert = classify_ritt(T, E)
            if cert.verdict == "fail":
                raise SpectrumOnContour("operator failed the Ritt gate")
        sim = joint_similarity_result(Ts)
        if not sim.feasible:
            raise SpectrumOnContour("tuple is not (numerically) jointly "
                                    "similar to contractions")
    polygon = enclosing_polygon(E, r)
    rng = np.random.default_rng(seed)
    degrees, ratios = [], []
    per_degree = max(1, int(math.ceil(phi_samples / deg_max)))
    for dg in range(1, deg_max + 1):
        for _ in range(per_degree):
            phi = _random_poly(d, dg, rng)
            val = opnorm(eval_multipoly(phi, Ts))
            sup = supnorm_on_region_power(phi, polygon,
                                          samples=region_samples, rng=rng)
            if sup < 1e-14:
                continue
            degrees.append(dg)
            ratios.append(val / sup)
    degrees = np.array(degrees)
    ratios = np.array(ratios)
    fit = scipy.stats.linregress(degrees.astype(float), ratios)
    one_sided_p = fit.pvalue / 2.0 if fit.slope > 0 else 1.0 - fit.pvalue / 2.0
    passed = (fit.slope <= 0.0) or (one_sided_p > 0.05)
    return RatioCertificate(degrees=degrees, ratios=ratios,
                            slope=float(fit.slope),
                            p_value=float(one_sided_p), passed=passed,
                            polygon=polygon, max_ratio=float(np.max(ratios)))
