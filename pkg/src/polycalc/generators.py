"""Seeded instance generators for the experiment harness.

All randomness flows from a single seed through numpy SeedSequence
splitting, so identical configurations reproduce identical instances.
"""

import numpy as np

from .numerics import as_matrix, opnorm
from .polygonal import PointSetE, build_Er

DIM_CAP = 16


def rng_from(seed):
    return np.random.default_rng(seed)


def rand_unitary(n, rng):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    d = np.diag(R)
    return Q * (d / np.abs(d))


def rand_similarity(n, cond, rng):
    """Random invertible with condition number exactly `cond` (log-spaced
    singular values)."""
    if cond < 1.0:
        raise ValueError("cond must be >= 1")
    s = np.exp(np.linspace(0.0, np.log(cond), n)) if n > 1 else np.array([1.0])
    return rand_unitary(n, rng) @ np.diag(s) @ rand_unitary(n, rng)


def _sample_region_points(region, count, rng, max_tries=10000):
    """Uniform rejection sampling inside a convex region's closure."""
    out = []
    tries = 0
    while len(out) < count:
        batch = max(4 * (count - len(out)), 16)
        z = rng.uniform(-1, 1, batch) + 1j * rng.uniform(-1, 1, batch)
        keep = region.contains(z, tol=0.0)
        out.extend(z[keep].tolist())
        tries += batch
        if tries > max_tries:
            raise RuntimeError("rejection sampling stalled")
    return np.array(out[:count])


def gen_ritt_matrix(E, r, dim, peripheral_count, cond_cap=10.0, seed=0,
                    verify=False):
    """Diagonalizable test matrix of the Ritt-type class: peripheral_count
    eigenvalues drawn from E (each at most once), the rest uniform in the
    closure of E_{0.95 r}, conjugated by a similarity with condition
    number <= cond_cap.

    With verify=True the result is classified and must pass.
    """
    if not isinstance(E, PointSetE):
        E = PointSetE(E)
    if dim > DIM_CAP:
        raise ValueError("dim %d exceeds cap %d" % (dim, DIM_CAP))
    if peripheral_count > min(dim, E.size):
        raise ValueError("peripheral_count %d > min(dim, N)" % peripheral_count)
    rng = rng_from(seed)
    periph = rng.choice(E.points, size=peripheral_count, replace=False) \
        if peripheral_count else np.array([], dtype=complex)
    interior_n = dim - peripheral_count
    if interior_n:
        region = build_Er(E, 0.95 * r)
        interior = _sample_region_points(region, interior_n, rng)
    else:
        interior = np.array([], dtype=complex)
    lam = np.concatenate([periph, interior])
    S = rand_similarity(dim, cond_cap, rng)
    T = S @ np.diag(lam) @ np.linalg.inv(S)
    if verify:
        from .polygonal import classify_ritt
        cert = classify_ritt(T, E)
        if cert.verdict != "pass":
            raise RuntimeError("generated matrix failed classification: %s"
                               % cert.verdict)
    return T


def gen_commuting_tuple(d, dim, spec="shared_diagonal", seed=0, cond_cap=8.0,
                        contractions=True, radius=0.95):
    """Commuting tuple via a shared similarity of diagonal or commuting
    upper-triangular factors; pairwise commutators land at roundoff.

    spec: "diagonal" (normal, exactly commuting), "shared_diagonal"
    (conjugated diagonals), or "shared_triangular" (conjugated commuting
    triangular factors built as polynomials in one nilpotent).
    """
    rng = rng_from(seed)
    if spec == "diagonal":
        S = np.eye(dim, dtype=complex)
        Si = S
    else:
        S = rand_similarity(dim, cond_cap, rng)
        Si = np.linalg.inv(S)
    Ts = []
    Nn = np.diag(np.ones(dim - 1), 1).astype(complex) if dim > 1 else None
    for _ in range(d):
        mods = radius * np.sqrt(rng.uniform(size=dim))
        diag = mods * np.exp(2j * np.pi * rng.uniform(size=dim))
        F = np.diag(diag)
        if spec == "shared_triangular" and dim > 1:
            F = F * 0
            # commuting triangular family: polynomials in scalar + nilpotent
            c0 = radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
            c1 = 0.3 * (rng.normal() + 1j * rng.normal())
            c2 = 0.1 * (rng.normal() + 1j * rng.normal())
            F = c0 * np.eye(dim) + c1 * Nn + c2 * (Nn @ Nn)
        T = S @ F @ Si
        if contractions:
            nrm = opnorm(T)
            if nrm > radius:
                T = T * (radius / nrm)
        Ts.append(T)
    return Ts


def random_unit_vector(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)
