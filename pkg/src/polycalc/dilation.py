"""Finite unitary dilations.

Three constructions live here:

* the explicit peripheral-plus-shift dilation of a polynomially bounded
  operator with peripheral set E: the embedding J interleaves T^k A x
  (duplicated along even/odd slots), the left inverse Q is the adjoint of
  a weight-interleaved embedding built from the Taylor coefficients a_m,
  and V is the diagonal of peripheral points joined with the SQUARE of a
  shift.  The doubly-infinite shift is truncated to a circulant with
  period large enough that supports never wrap on the certified window,
  which keeps V exactly unitary;

* the classical finite-window single-contraction dilation (block
  companion form with defect couplings in the wrap column), exact for
  exponents up to (blocks - 1);

* a commuting-pair dilation for contraction pairs that are doubly
  commuting or simultaneously diagonalizable (the similarity route mirrors
  the classical reduction: dilate the diagonal pair, conjugate J and Q).

A tensor combinator assembles these one-variable/pair bundles into
commuting unitaries dilating a whole commuting tuple.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (AndoUnsupported, DimensionOverflow, IntertwineFailed,
                     NotCommuting, NotContraction, NotConverged)
from . import ergodic
from .numerics import (DEFAULT_KRON_CAP, as_matrix, hermitian_sqrt_psd,
                       matrix_to_json, opnorm)
from .polygonal import PointSetE
from .taylor import TaylorCoeffs


# ---------------------------------------------------------------------------
# factored tensor-leg unitaries

@dataclass(eq=False)
class KronUnitary:
    """Unitary acting on one factor of a tensor product C^{d_0} x ... x C^{d_k}.

    Kept factored so commutators, unitarity defects, and applications cost
    only the single-factor size; dense materialization is guarded by a cap.
    """

    dims: tuple
    index: int
    core: np.ndarray

    @property
    def total_dim(self):
        return int(np.prod(self.dims))

    def apply(self, X):
        """Left-multiply a (total_dim x cols) matrix."""
        cols = X.shape[1] if X.ndim == 2 else 1
        Xt = X.reshape(self.dims + (cols,))
        Xt = np.tensordot(self.core, Xt, axes=([1], [self.index]))
        Xt = np.moveaxis(Xt, 0, self.index)
        return Xt.reshape(self.total_dim, cols)

    def unitary_defect(self):
        n = self.core.shape[0]
        return opnorm(self.core.conj().T @ self.core - np.eye(n))

    def commutator_norm(self, other):
        if self.index != other.index:
            return 0.0
        return opnorm(self.core @ other.core - other.core @ self.core)

    def materialize(self, cap=DEFAULT_KRON_CAP):
        if self.total_dim > cap:
            raise DimensionOverflow("dense unitary would be %d x %d"
                                    % (self.total_dim, self.total_dim))
        left = int(np.prod(self.dims[:self.index], dtype=int))
        right = int(np.prod(self.dims[self.index + 1:], dtype=int))
        return np.kron(np.kron(np.eye(left), self.core), np.eye(right))


# ---------------------------------------------------------------------------
# the explicit peripheral/shift dilation

@dataclass(eq=False)
class TruncatedDilation:
    """Finite realization (J, Q, V) with T^n = Q V^n J on 0 <= n <= n_max."""

    kind: str                  # "specific" | "schaffer"
    inner_dim: int
    J: np.ndarray
    Q: np.ndarray
    n_max: int
    certified_error: float
    N: int = 0
    period: int = 0
    K_max: int = 0
    V_scalar: np.ndarray = None    # (N+P) unitary; V = kron(V_scalar, I)
    V_full: np.ndarray = None      # dense V for non-tensor kinds
    E: PointSetE = None

    @property
    def total_dim(self):
        return self.J.shape[0]

    def v_dense(self, cap=DEFAULT_KRON_CAP):
        if self.V_full is not None:
            return self.V_full
        if self.total_dim > cap:
            raise DimensionOverflow("dense V would be %d x %d"
                                    % (self.total_dim, self.total_dim))
        return np.kron(self.V_scalar, np.eye(self.inner_dim))

    def apply_v(self, X):
        """V @ X without materializing V."""
        if self.V_full is not None:
            return self.V_full @ X
        h = self.inner_dim
        blocks = X.reshape(self.V_scalar.shape[0], h, -1)
        out = np.einsum("ik,kab->iab", self.V_scalar, blocks)
        return out.reshape(X.shape)

    def coordinate_blocks(self):
        """The h x h coordinate operators of J, one per tensor slot."""
        h = self.inner_dim
        return [self.J[i * h:(i + 1) * h] for i in range(self.J.shape[0] // h)]

    def to_json(self):
        return {"kind": self.kind, "inner_dim": self.inner_dim,
                "n_max": self.n_max, "certified_error": self.certified_error,
                "N": self.N, "period": self.period, "K_max": self.K_max,
                "J": matrix_to_json_rect(self.J), "Q": matrix_to_json_rect(self.Q)}


def matrix_to_json_rect(A):
    A = np.asarray(A, dtype=complex)
    return {"shape": list(A.shape), "re": A.real.tolist(), "im": A.imag.tolist()}


def _series_cutoff(T, seed_matrix, sup_a, tol, cap=20000):
    """Smallest m with sup|a| * sum_{k>m} ||T^k seed|| below tol/10,
    bounding the tail geometrically from the trailing decay window.

    The final certificate comes from the direct identity check, so the
    geometric extrapolation only has to be a good working estimate.
    """
    target = tol / (10.0 * max(sup_a, 1.0))
    norms = [opnorm(seed_matrix)]
    if norms[0] <= min(target, 1e-300):
        return 2, norms
    X = seed_matrix
    for m in range(1, cap):
        X = T @ X
        nm = opnorm(X)
        norms.append(nm)
        if nm <= 1e-300:
            return m, norms
        if m >= 8:
            w = norms[-6:]
            ratios = [w[i + 1] / w[i] for i in range(len(w) - 1) if w[i] > 0]
            rho = min(max(ratios), 0.999) if ratios else 1.0
            if rho < 1.0 and nm * rho / (1.0 - rho) <= target:
                return m, norms
    raise NotConverged("series tail will not meet %.3e within %d terms "
                       "(last %.3e)" % (target, cap, norms[-1]))


def specific_dilation(T, E, n_max=20, tol=1e-8, k_max=None, decomposition=None):
    """The explicit unitary dilation for a polynomially bounded operator
    with peripheral set E.

    The caller is responsible for the classification gate; the builder
    enforces power boundedness and a convergent ergodic decomposition.
    ``k_max`` overrides the adaptive series cutoff (used to align several
    dilations on a shared scalar space).
    """
    T = as_matrix(T)
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    from .squarefn import sectorial_factor
    h = T.shape[0]
    N = E.size
    dec = decomposition or ergodic.full_decomposition(T, E)
    Ps = dec.projections
    Pr = dec.range_projection
    A = sectorial_factor(T, E)

    probe = TaylorCoeffs.build(E, 512)
    sup_a = probe.sup_a
    cut, _ = _series_cutoff(T, A @ A @ Pr, sup_a, tol)
    # truncated series length at the worst power is 2K+1-2n_max >= cut+1
    K = k_max if k_max is not None else n_max + (cut + 1) // 2
    K += K % 2
    P = 2 * (n_max + K) + 4
    coeffs = TaylorCoeffs.build(E, 2 * K + 1)
    a = coeffs.a

    D = (N + P) * h
    J = np.zeros((D, h), dtype=complex)
    for j in range(N):
        J[j * h:(j + 1) * h] = Ps[j]
    # z block: slot 2k holds T^k A x_range, slot 2k+1 holds T^{k+1} A x_range
    W = A @ Pr
    for k in range(K + 1):
        p = 2 * k
        if p <= 2 * K + 1:
            J[(N + p) * h:(N + p + 1) * h] = W
        W1 = T @ W
        p = 2 * k + 1
        if p <= 2 * K + 1:
            J[(N + p) * h:(N + p + 1) * h] = W1
        W = W1

    Jt = np.zeros((D, h), dtype=complex)
    for j in range(N):
        Jt[j * h:(j + 1) * h] = Ps[j].conj().T
    # slots 2k and 2k+1 both hold T*^k A* y_range, weighted conj(a_m)
    Ts = T.conj().T
    W = A.conj().T @ Pr.conj().T
    for k in range(K + 1):
        for p in (2 * k, 2 * k + 1):
            if p <= 2 * K + 1:
                Jt[(N + p) * h:(N + p + 1) * h] = np.conj(a[p]) * W
        W = Ts @ W
    Q = Jt.conj().T

    Vs = np.zeros((N + P, N + P), dtype=complex)
    for j in range(N):
        Vs[j, j] = E.points[j]
    for p in range(P):
        Vs[N + p, N + (p + 2) % P] = 1.0    # (V u)_p = u_{p+2 mod P}

    dil = TruncatedDilation(kind="specific", inner_dim=h, J=J, Q=Q,
                            n_max=n_max, certified_error=math.nan,
                            N=N, period=P, K_max=K, V_scalar=Vs, E=E)
    dil.certified_error = dilation_check(dil, T, n_max)
    if dil.certified_error > tol:
        raise NotConverged("dilation error %.3e exceeds tol %.1e"
                           % (dil.certified_error, tol))
    return dil


def dilation_check(dil, T, n_max):
    """max over 0 <= n <= n_max of ||T^n - Q V^n J||."""
    T = as_matrix(T)
    h = T.shape[0]
    worst = 0.0
    Tn = np.eye(h, dtype=complex)
    VnJ = dil.J.copy()
    for n in range(n_max + 1):
        worst = max(worst, opnorm(Tn - dil.Q @ VnJ))
        if n < n_max:
            VnJ = dil.apply_v(VnJ)
            Tn = T @ Tn
    return worst


# ---------------------------------------------------------------------------
# classical single-contraction window dilation

def _defects(T, tol=1e-12):
    n = T.shape[0]
    nrm = opnorm(T)
    if nrm > 1.0 + tol:
        raise NotContraction("||T|| = %.12f > 1" % nrm)
    Dt = hermitian_sqrt_psd(np.eye(n) - T.conj().T @ T)
    Dts = hermitian_sqrt_psd(np.eye(n) - T @ T.conj().T)
    return Dt, Dts


def schaffer_dilation(T, window=12):
    """Finite-window unitary power dilation of a contraction.

    Block companion layout on (2*window + 1) slots: the first column
    couples T with its defect, the wrap column couples the co-defect with
    -T*, interior slots shift.  Exact (to roundoff) for exponents up to
    2*window.
    """
    T = as_matrix(T)
    h = T.shape[0]
    Dt, Dts = _defects(T)
    B = 2 * window + 1
    if B < 2:
        raise ValueError("window must be >= 1")
    V = np.zeros((B * h, B * h), dtype=complex)

    def put(i, j, M):
        V[i * h:(i + 1) * h, j * h:(j + 1) * h] = M

    put(0, 0, T)
    put(1, 0, Dt)
    put(0, B - 1, Dts)
    put(1, B - 1, -T.conj().T)
    for p in range(2, B):
        put(p, p - 1, np.eye(h))
    J = np.zeros((B * h, h), dtype=complex)
    J[:h] = np.eye(h)
    Q = J.conj().T
    dil = TruncatedDilation(kind="schaffer", inner_dim=h, J=J, Q=Q,
                            n_max=2 * window, certified_error=math.nan,
                            V_full=V)
    dil.certified_error = dilation_check(dil, T, min(2 * window, 64))
    return dil


# ---------------------------------------------------------------------------
# commuting-pair dilation

@dataclass(eq=False)
class JointDilation:
    """Commuting unitaries U_1..U_d with T_1^{n_1}...T_d^{n_d} = Q U^n J."""

    d: int
    m: int
    dims: tuple
    U: list                     # KronUnitary per coordinate
    J: np.ndarray
    Q: np.ndarray
    budget: int
    max_error: float
    commutator_max: float
    method: str
    J_norm: float = 0.0
    Q_norm: float = 0.0

    @property
    def total_dim(self):
        return self.J.shape[0]

    def unitary_defect(self):
        return max(u.unitary_defect() for u in self.U)

    def to_json(self):
        return {"d": self.d, "m": self.m, "dims": list(self.dims),
                "budget": self.budget, "max_error": self.max_error,
                "commutator_max": self.commutator_max, "method": self.method,
                "J_norm": self.J_norm, "Q_norm": self.Q_norm}


def _block_companion_entries(C, B):
    """Sparse entry map (i, j) -> operator for the window dilation of C."""
    Dt, Dts = _defects(C)
    h = C.shape[0]
    ent = {(0, 0): C, (1, 0): Dt, (0, B - 1): Dts, (1, B - 1): -C.conj().T}
    for p in range(2, B):
        ent[(p, p - 1)] = np.eye(h, dtype=complex)
    return ent


def _tensor_pair_unitaries(C1, C2, budget):
    """Commuting window dilations for a doubly commuting contraction pair.

    Entry operators of the first factor's block matrix all commute with
    those of the second (products of C_i, adjoints, and defect roots),
    so placing them on separate block indices yields commuting unitaries.
    """
    h = C1.shape[0]
    B = budget + 1 if budget + 1 >= 2 else 2
    e1 = _block_companion_entries(C1, B)
    e2 = _block_companion_entries(C2, B)
    dim = B * B * h
    U1 = np.zeros((dim, dim), dtype=complex)
    U2 = np.zeros((dim, dim), dtype=complex)

    def slot(p, q):
        return (p * B + q) * h

    for (i, j), M in e1.items():
        for q in range(B):
            r, c = slot(i, q), slot(j, q)
            U1[r:r + h, c:c + h] = M
    for (i, j), M in e2.items():
        for p in range(B):
            r, c = slot(p, i), slot(p, j)
            U2[r:r + h, c:c + h] = M
    J0 = np.zeros((dim, h), dtype=complex)
    J0[:h] = np.eye(h)
    return U1, U2, J0, (B, B, h)


def _try_simultaneous_diagonalization(T1, T2, rng_seed=12345, tries=8,
                                      tol=1e-10):
    """Shared eigenbasis of a commuting pair via a generic combination."""
    n = T1.shape[0]
    scale = max(opnorm(T1), opnorm(T2), 1.0)
    rng = np.random.default_rng(rng_seed)
    for _ in range(tries):
        mu = rng.normal() + 1j * rng.normal()
        _, S = np.linalg.eig(T1 + mu * T2)
        try:
            Si = np.linalg.inv(S)
        except np.linalg.LinAlgError:
            continue
        A1 = Si @ T1 @ S
        A2 = Si @ T2 @ S
        off = max(opnorm(A1 - np.diag(np.diag(A1))),
                  opnorm(A2 - np.diag(np.diag(A2))))
        if off <= tol * scale:
            return S, Si, np.diag(A1), np.diag(A2)
    return None


def _pair_identity_error(U1, U2, J, Q, T1, T2, budget):
    worst = 0.0
    h = T1.shape[0]
    U1J = J.copy()
    T1m = np.eye(h, dtype=complex)
    for m in range(budget + 1):
        X = U1J
        Tmn = T1m.copy()
        for n in range(budget + 1 - m):
            worst = max(worst, opnorm(Tmn - Q @ X))
            if m + n < budget:
                X = U2 @ X
                Tmn = T2 @ Tmn
        if m < budget:
            U1J = U1 @ U1J
            T1m = T1 @ T1m
    return worst


def ando_dilation(T1, T2, budget=8, cap=DEFAULT_KRON_CAP):
    """Commuting unitary dilation of a commuting contraction pair;
    T1^m T2^n = Q U1^m U2^n J for m + n <= budget.

    Strategy: exact escape for unitary pairs; a tensor of two window
    dilations when the pair is doubly commuting (this includes any pair
    with a normal member, by Fuglede's theorem); otherwise simultaneous
    diagonalization plus the similarity-conjugation route.  Pairs outside
    those classes raise AndoUnsupported; the chosen route is recorded in
    ``method``.
    """
    T1, T2 = as_matrix(T1), as_matrix(T2)
    if T1.shape != T2.shape:
        raise ValueError("operators must share a space")
    h = T1.shape[0]
    scale = max(opnorm(T1), opnorm(T2), 1.0)
    comm = opnorm(T1 @ T2 - T2 @ T1)
    if comm > 1e-12 * scale:
        raise NotCommuting("||T1 T2 - T2 T1|| = %.3e" % comm)
    for T in (T1, T2):
        if opnorm(T) > 1.0 + 1e-12:
            raise NotContraction("||T|| = %.12f > 1" % opnorm(T))

    eye = np.eye(h, dtype=complex)
    unitary_defect = max(opnorm(T1.conj().T @ T1 - eye),
                         opnorm(T2.conj().T @ T2 - eye))
    doubly = opnorm(T1 @ T2.conj().T - T2.conj().T @ T1)

    if unitary_defect <= 1e-12:
        U1, U2, J0, dims = T1.copy(), T2.copy(), eye.copy(), (h,)
        method = "unitary"
        S = Si = None
    elif doubly <= 1e-12 * scale:
        U1, U2, J0, dims3 = _tensor_pair_unitaries(T1, T2, budget)
        dims = (dims3[0] * dims3[1] * dims3[2],)
        method = "schaffer_tensor"
        S = Si = None
    else:
        sim = _try_simultaneous_diagonalization(T1, T2)
        if sim is None:
            raise AndoUnsupported(
                "pair is neither doubly commuting nor simultaneously "
                "diagonalizable; the finite pair dilation covers only "
                "those classes")
        S, Si, d1, d2 = sim
        # eigenvalues of contractions lie in the closed disc
        D1, D2 = np.diag(d1), np.diag(d2)
        U1, U2, J0, dims3 = _tensor_pair_unitaries(D1, D2, budget)
        dims = (dims3[0] * dims3[1] * dims3[2],)
        method = "diagonal_similarity"

    if dims[0] > cap:
        raise DimensionOverflow("pair dilation dim %d exceeds cap %d"
                                % (dims[0], cap))

    if method == "unitary":
        J, Q = J0, J0.conj().T
    elif method == "schaffer_tensor":
        J, Q = J0, J0.conj().T
    else:
        J = J0 @ Si
        Q = S @ J0.conj().T

    err = _pair_identity_error(U1, U2, J, Q, T1, T2, budget)
    cnorm = opnorm(U1 @ U2 - U2 @ U1)
    Us = [KronUnitary(dims=dims, index=0, core=U1),
          KronUnitary(dims=dims, index=0, core=U2)]
    return JointDilation(d=2, m=0, dims=dims, U=Us, J=J, Q=Q, budget=budget,
                         max_error=err, commutator_max=cnorm, method=method,
                         J_norm=opnorm(J), Q_norm=opnorm(Q))


def _tail_bundle_from(parts_tail, d_tail):
    """Normalize the tail part: a JointDilation (pair) or a
    TruncatedDilation (single window dilation) or None."""
    if d_tail == 0:
        return None
    if d_tail == 1:
        if not isinstance(parts_tail, TruncatedDilation):
            raise ValueError("tail with one operator needs a window dilation")
        return parts_tail
    if d_tail == 2:
        if not isinstance(parts_tail, JointDilation) or parts_tail.d != 2:
            raise ValueError("tail with two operators needs a pair dilation")
        return parts_tail
    raise ValueError("tail supports at most two operators (got %d)" % d_tail)


def joint_dilation(T_list, m, parts, budget=6, intertwine_tol=1e-8,
                   cap=DEFAULT_KRON_CAP):
    """Tensor combinator: assemble commuting unitaries dilating the whole
    commuting tuple from per-operator bundles.

    ``parts`` is (ritt_dilations, tail_bundle): the first m operators come
    with shared-scalar-space specific dilations (V_k = scalar (N+P)
    unitary), the remaining d-m with a window/pair bundle (or None when
    m == d).  The coordinates of each ritt J_k must intertwine with every
    operator of the tuple; this is checked and enforced.

    U_k = I x...x V_k x...x I (x I_L) for k <= m, U_k = I^{(x)m} x V_k
    after; J and Q are the interleaved compositions of the parts.
    """
    Ts = [as_matrix(T) for T in T_list]
    d = len(Ts)
    if not (1 <= m <= d):
        raise ValueError("need 1 <= m <= d")
    h = Ts[0].shape[0]
    scale = max(max(opnorm(T) for T in Ts), 1.0)
    for i in range(d):
        for j in range(i + 1, d):
            c = opnorm(Ts[i] @ Ts[j] - Ts[j] @ Ts[i])
            if c > 1e-12 * scale:
                raise NotCommuting("operators %d,%d: commutator %.3e" % (i, j, c))

    ritt_parts, tail_part = parts
    if len(ritt_parts) != m:
        raise ValueError("need %d ritt dilations, got %d" % (m, len(ritt_parts)))
    kappa = None
    for dil in ritt_parts:
        if dil.kind != "specific" or dil.inner_dim != h:
            raise ValueError("ritt parts must be specific dilations on H")
        if kappa is None:
            kappa = dil.V_scalar.shape[0]
        elif dil.V_scalar.shape[0] != kappa:
            raise ValueError("ritt dilations must share the scalar space "
                             "(got %d vs %d)" % (dil.V_scalar.shape[0], kappa))
    tail = _tail_bundle_from(tail_part, d - m)
    ell = 1 if tail is None else tail.total_dim if isinstance(tail, JointDilation) \
        else tail.J.shape[0]

    # intertwining: coordinates of each ritt J commute with every T_j
    for i, dil in enumerate(ritt_parts):
        blocks = dil.coordinate_blocks()
        for j, Tj in enumerate(Ts):
            worst = max(opnorm(Bk @ Tj - Tj @ Bk) for Bk in blocks)
            if worst > intertwine_tol:
                raise IntertwineFailed(
                    "J_%d coordinates vs T_%d: %.3e > %.1e"
                    % (i + 1, j + 1, worst, intertwine_tol))

    if tail is None:
        dims = (kappa,) * m + (h,)
    else:
        dims = (kappa,) * m + (ell,)
    total = int(np.prod(dims))
    if total > cap:
        raise DimensionOverflow("assembled dim %d exceeds cap %d" % (total, cap))

    # J = (I x J_tail)(I x J_m)...(I x J_2) J_1 ; Q mirrors it
    J = ritt_parts[0].J
    Q = ritt_parts[0].Q
    for k in range(1, m):
        lift = int(kappa ** k)
        J = np.kron(np.eye(lift), ritt_parts[k].J) @ J
        Q = Q @ np.kron(np.eye(lift), ritt_parts[k].Q)
    if tail is not None:
        lift = int(kappa ** m)
        Jt = tail.J if isinstance(tail, JointDilation) else tail.J
        Qt = tail.Q if isinstance(tail, JointDilation) else tail.Q
        J = np.kron(np.eye(lift), Jt) @ J
        Q = Q @ np.kron(np.eye(lift), Qt)

    Us = []
    for k in range(m):
        Us.append(KronUnitary(dims=dims, index=k, core=ritt_parts[k].V_scalar))
    if tail is not None:
        if isinstance(tail, JointDilation):
            for u in tail.U:
                Us.append(KronUnitary(dims=dims, index=m, core=u.core))
        else:
            Us.append(KronUnitary(dims=dims, index=m, core=tail.V_full))

    cmax = max(Us[i].commutator_norm(Us[j])
               for i in range(d) for j in range(i + 1, d)) if d > 1 else 0.0

    dil = JointDilation(d=d, m=m, dims=dims, U=Us, J=J, Q=Q, budget=budget,
                        max_error=math.nan, commutator_max=cmax,
                        method="combinator",
                        J_norm=opnorm(J), Q_norm=opnorm(Q))
    dil.max_error = joint_dilation_check(dil, Ts, budget)
    return dil


def joint_dilation_check(dil, T_list, budget):
    """max over all exponent tuples with sum <= budget of
    ||prod T_k^{n_k} - Q U_1^{n_1}...U_d^{n_d} J||."""
    Ts = [as_matrix(T) for T in T_list]
    d = len(Ts)
    h = Ts[0].shape[0]
    worst = 0.0
    # depth-first over the exponent lattice, reusing partial applications
    def rec(k, X, Tprod, left):
        nonlocal worst
        if k == d:
            worst = max(worst, opnorm(Tprod - dil.Q @ X))
            return
        Xc, Tc = X, Tprod
        for n in range(left + 1):
            rec(k + 1, Xc, Tc, left - n)
            if n < left:
                Xc = dil.U[k].apply(Xc)
                Tc = Ts[k] @ Tc
    rec(0, dil.J, np.eye(h, dtype=complex), budget)
    return worst
