"""Dense complex-matrix foundation: norms, spectra, resolvents, principal
square roots, Kronecker products, JSON serialization.

All operations are pure functions of their inputs.  Matrices are plain
``numpy`` arrays of complex128; vectors are 1-D arrays.  Square roots go
through a complex Schur decomposition with the zero eigenvalues split into
their own (necessarily zero, when semisimple) trailing block, so that
factors like I - conj(xi)*T with xi in the spectrum stay computable.
"""

import numpy as np
import scipy.linalg as sla

from .errors import DimensionOverflow, NotSectorial, SingularResolvent

DEFAULT_KRON_CAP = 4096


def as_matrix(A):
    """Validate and return A as a square complex matrix."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix, got shape %s" % (A.shape,))
    if not np.isfinite(A).all():
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(x, dim=None):
    x = np.asarray(x, dtype=complex).ravel()
    if not np.isfinite(x).all():
        raise ValueError("vector has non-finite entries")
    if dim is not None and x.size != dim:
        raise ValueError("expected vector of length %d, got %d" % (dim, x.size))
    return x


def opnorm(A):
    """Operator (spectral) norm: largest singular value."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def spectrum(A):
    """Eigenvalues of A with algebraic multiplicity (length == dim)."""
    return np.linalg.eigvals(as_matrix(A))


def resolvent(z, A, tol=1e-13):
    """(z*I - A)^{-1}.

    Raises SingularResolvent when z is within tol*max(||A||,1) of an
    eigenvalue.  The returned matrix satisfies ||(zI-A)X - I|| <= 1e-10
    for inputs that pass the gate.
    """
    A = as_matrix(A)
    n = A.shape[0]
    gate = tol * max(opnorm(A), 1.0)
    if np.min(np.abs(spectrum(A) - z)) <= gate:
        raise SingularResolvent("z=%s is within %g of the spectrum" % (z, gate))
    return np.linalg.solve(z * np.eye(n) - A, np.eye(n, dtype=complex))


def resolvent_norms(points, A):
    """||R(z,A)|| for a batch of points, via 1/sigma_min(zI - A).

    Vectorized over the sample points; no inverses are formed.
    """
    A = as_matrix(A)
    n = A.shape[0]
    z = np.asarray(points, dtype=complex).ravel()
    shifted = z[:, None, None] * np.eye(n) - A[None, :, :]
    sigma = np.linalg.svd(shifted, compute_uv=False)
    smin = sigma[:, -1]
    out = np.full(z.shape, np.inf)
    nz = smin > 0
    out[nz] = 1.0 / smin[nz]
    return out


def _sqrt_principal_scalar(lam):
    # principal branch: argument in (-pi/2, pi/2]
    return np.sqrt(lam.astype(complex) if hasattr(lam, "astype") else complex(lam))


def principal_sqrt(A, tol=1e-10):
    """Principal matrix square root of A.

    Preconditions: no eigenvalue on the open negative real axis, and any
    zero eigenvalue is semisimple (rank(A) == rank(A^2) under threshold
    1e-10*||A||).  The result X satisfies X @ X = A with spectrum in the
    closed right half-plane.  Raises NotSectorial otherwise.
    """
    A = as_matrix(A)
    n = A.shape[0]
    scale = max(opnorm(A), 1.0)
    lam = spectrum(A)
    neg = (lam.real < -tol * scale) & (np.abs(lam.imag) <= tol * scale)
    if neg.any():
        raise NotSectorial("eigenvalue on the open negative real axis: %s"
                           % lam[neg][0])
    # semisimplicity at zero via rank(A) == rank(A^2)
    thresh = 1e-10 * scale
    rank_a = int(np.sum(np.linalg.svd(A, compute_uv=False) > thresh))
    rank_a2 = int(np.sum(np.linalg.svd(A @ A, compute_uv=False) > thresh * scale))
    if rank_a != rank_a2:
        raise NotSectorial("zero eigenvalue is not semisimple "
                           "(rank A=%d, rank A^2=%d)" % (rank_a, rank_a2))

    # Schur form sorted so the (numerically) nonzero eigenvalues lead.
    T, Z, k = sla.schur(A, output="complex",
                        sort=lambda l: abs(l) > tol * scale)
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    if T22.size and opnorm(T22) > 10 * tol * scale:
        raise NotSectorial("zero cluster is not negligible: %.3e"
                           % opnorm(T22))
    # Parlett recurrence on the invertible triangular block
    U = np.zeros_like(T11)
    for i in range(k):
        U[i, i] = np.sqrt(complex(T11[i, i]))
    for j in range(1, k):
        for i in range(j - 1, -1, -1):
            s = T11[i, j] - U[i, i + 1:j] @ U[i + 1:j, j]
            U[i, j] = s / (U[i, i] + U[j, j])
    X = np.zeros((n, n), dtype=complex)
    X[:k, :k] = U
    if k < n:
        # X^2 must reproduce the coupling block: U @ X12 = T12
        X[:k, k:] = np.linalg.solve(U, T12)
    return Z @ X @ Z.conj().T


def hermitian_sqrt_psd(A, clip_tol=1e-12):
    """Square root of a Hermitian PSD matrix, small negatives clipped to 0."""
    A = as_matrix(A)
    H = 0.5 * (A + A.conj().T)
    w, V = np.linalg.eigh(H)
    floor = -clip_tol * max(abs(w[-1]), 1.0)
    if w[0] < floor:
        raise NotSectorial("matrix is not PSD: min eigenvalue %.3e" % w[0])
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def kron(A, B, dim_cap=DEFAULT_KRON_CAP):
    """Kronecker product with a dimension cap."""
    A, B = as_matrix(A), as_matrix(B)
    out_dim = A.shape[0] * B.shape[0]
    if out_dim > dim_cap:
        raise DimensionOverflow("kron dim %d exceeds cap %d" % (out_dim, dim_cap))
    return np.kron(A, B)


def matrix_to_json(A):
    """Serialize to the wire format {"dim": n, "re": [[...]], "im": [[...]]}."""
    A = as_matrix(A)
    return {"dim": int(A.shape[0]),
            "re": A.real.tolist(),
            "im": A.imag.tolist()}


def matrix_from_json(obj):
    n = int(obj["dim"])
    A = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    if A.shape != (n, n):
        raise ValueError("entry arrays do not match declared dim %d" % n)
    return A
