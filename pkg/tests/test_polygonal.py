import io
import math

import numpy as np
import pytest

from polycalc import polygonal
from polycalc.errors import SpectrumOutside
from polycalc.polygonal import (Arc, ContourRegion, PointSetE, Segment,
                                build_Er, check_sectorial, classify_ritt,
                                enclosing_polygon, verify_peripheral_bound)
from conftest import diagonalizable, make_rng, rand_unitary, ritt_instance


def shoelace_area(pts):
    """Independent polygon-area oracle on a closed polyline."""
    x, y = pts.real, pts.imag
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


# ---------------------------------------------------------------------------
# point sets

def test_pointset_validation():
    PointSetE([1.0, 1j])
    with pytest.raises(ValueError):
        PointSetE([1.1])
    with pytest.raises(ValueError):
        PointSetE([1.0, 1.0 + 1e-12])
    with pytest.raises(ValueError):
        PointSetE([])


# ---------------------------------------------------------------------------
# E_r geometry

def test_build_Er_single_point_tangency():
    # tangent from a unit point to the circle of radius r touches at
    # angular offset alpha = arccos(r)
    r = 0.5
    region = build_Er([1.0], r)
    assert len(region.pieces) == 3
    seg_in, arc, seg_out = region.pieces
    assert isinstance(seg_in, Segment) and isinstance(arc, Arc)
    alpha = math.acos(r)
    assert seg_in.a == pytest.approx(1.0)
    assert seg_in.b == pytest.approx(r * np.exp(1j * alpha), abs=1e-12)
    assert arc.theta_start == pytest.approx(alpha)
    assert arc.theta_end == pytest.approx(2 * math.pi - alpha)
    assert seg_out.b == pytest.approx(1.0, abs=1e-12)


def test_build_Er_area_approaches_disc():
    # r -> 1 with E = {1, -1}: the region fills the disc
    region = build_Er([1.0, -1.0], 0.99)
    pts = region.boundary_samples(2000)
    area = shoelace_area(pts)
    assert abs(area - math.pi) / math.pi < 0.02
    # the exact piece-decomposition area agrees with the oracle
    assert region.area() == pytest.approx(area, rel=1e-4)


def test_build_Er_contains_origin(rng):
    for _ in range(10):
        N = int(rng.integers(1, 5))
        E = PointSetE(np.exp(2j * np.pi * np.sort(rng.uniform(size=N))
                             + 1j * 1e-3 * np.arange(N)))
        r = rng.uniform(0.1, 0.9)
        region = build_Er(E, r)
        assert region.contains(np.array([0.0 + 0j]))[0]


def test_build_Er_close_points_use_chord():
    # angular gap below 2*arccos(r) joins by a chord, no arc between
    r = 0.9
    E = PointSetE([np.exp(0.05j), np.exp(-0.05j)])
    region = build_Er(E, r)
    kinds = [type(p).__name__ for p in region.pieces]
    assert kinds.count("Arc") == 1   # only the far side keeps an arc


def test_build_Er_monotone(rng):
    for _ in range(5):
        N = int(rng.integers(1, 4))
        from conftest import separated_angles
        E = PointSetE(np.exp(1j * separated_angles(rng, N)))
        r1, r2 = sorted(rng.uniform(0.2, 0.95, 2))
        if abs(r2 - r1) < 1e-3:
            r2 = min(0.99, r1 + 0.05)
        inner = build_Er(E, r1)
        outer = build_Er(E, r2)
        samples = inner.boundary_samples(1000 // (3 * N) + 4)
        assert outer.contains(samples, tol=1e-9).all()


def test_region_json_roundtrip():
    region = build_Er([1.0, 1j], 0.6)
    back = ContourRegion.from_json(region.to_json())
    assert len(back.pieces) == len(region.pieces)
    z = region.boundary_samples(50)
    assert np.allclose(back.boundary_samples(50), z)


# ---------------------------------------------------------------------------
# enclosing polygon

def test_enclosing_polygon_structure():
    E = PointSetE([1.0])
    poly = enclosing_polygon(E, 0.5)
    verts = poly.vertices()
    on_circle = np.abs(np.abs(verts) - 1.0) < 1e-12
    assert on_circle.sum() == 1
    assert np.isclose(verts[on_circle][0], 1.0)
    assert (np.abs(verts[~on_circle]) < 1.0 - 1e-6).all()


def test_enclosing_polygon_contains_Er(rng):
    from conftest import separated_angles
    for _ in range(5):
        N = int(rng.integers(1, 4))
        E = PointSetE(np.exp(1j * separated_angles(rng, N)))
        r = rng.uniform(0.2, 0.9)
        poly = enclosing_polygon(E, r)
        er = build_Er(E, r)
        # point-in-convex-polygon oracle on sampled boundary
        samples = er.boundary_samples(200)
        assert poly.contains(samples, tol=1e-9).all()


def test_enclosing_polygon_convex():
    poly = enclosing_polygon(PointSetE([1.0, 1j, -1.0]), 0.7)
    verts = poly.vertices()
    n = len(verts)
    cross = []
    for i in range(n):
        a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
        cross.append((np.conj(b - a) * (c - b)).imag)
    cross = np.array(cross)
    assert (cross > -1e-12).all()    # all turns share the ccw sign


# ---------------------------------------------------------------------------
# classification

def test_classify_scalar_peripheral():
    # ||R(z, 1)|| = 1/|z-1| exactly, so the weighted sup is exactly 1
    cert = classify_ritt(np.diag([1.0 + 0j]), [1.0])
    assert cert.verdict == "pass"
    assert cert.M_estimate == pytest.approx(1.0, abs=1e-9)


def test_classify_offset_peripheral_fails():
    T = np.exp(1j * math.pi / 3) * np.eye(2)
    cert = classify_ritt(T, [1.0])
    assert cert.verdict == "fail"
    assert cert.refinement_ratio > 1.5


def test_classify_interior_passes():
    cert = classify_ritt(0.5 * np.eye(3), [1.0])
    assert cert.verdict == "pass"
    assert np.isfinite(cert.M_estimate)


def test_classify_jordan_block_at_peripheral_point_fails():
    T = np.array([[1, 1], [0, 1]], dtype=complex)
    cert = classify_ritt(T, [1.0])
    assert cert.verdict == "fail"


def test_classify_outside_disc_fails():
    cert = classify_ritt(np.diag([1.0 + 1e-6]), [1.0])
    assert cert.verdict == "fail"


def test_classify_unitary_conjugation_invariant(rng):
    T, xis = ritt_instance(rng, N=2, dim=5, peripheral=1)
    U = rand_unitary(5, rng)
    c1 = classify_ritt(T, xis)
    c2 = classify_ritt(U.conj().T @ T @ U, xis)
    assert c1.verdict == c2.verdict == "pass"
    assert abs(c1.M_estimate - c2.M_estimate) <= 1e-9 * max(c1.M_estimate, 1)


def test_certificate_csv(tmp_path):
    cert = classify_ritt(np.diag([0.5 + 0j]), [1.0])
    p = tmp_path / "cert.csv"
    cert.to_csv(str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "re_z,im_z,resolvent_norm,weighted_value"
    assert len(lines) == cert.samples_z.size + 1


# ---------------------------------------------------------------------------
# peripheral resolvent bound

def test_peripheral_bound_scalar_cancellation():
    # T = diag(1), E = {1}: |1 - z| * 1/|z - 1| = 1 on the whole boundary
    val = verify_peripheral_bound(np.diag([1.0 + 0j]), [1.0], 0.5)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_peripheral_bound_zero_matrix_brute_force():
    # ||R(z, 0)|| = 1/|z|: compare against a direct boundary maximization
    E = PointSetE([1.0])
    r = 0.5
    val = verify_peripheral_bound(np.zeros((2, 2)), E, r, nodes=256)
    region = build_Er(E, r)
    z = region.boundary_samples(256)
    z = z[np.abs(z - 1.0) > 1e-6]
    brute = np.max(np.abs(1.0 - z) / np.abs(z))
    assert val == pytest.approx(brute, rel=1e-12)
    assert val <= 2 * np.max(np.abs(1.0 - z))


def test_peripheral_bound_rotation_invariant(rng):
    T, xis = ritt_instance(rng, N=1, dim=4, peripheral=1, interior_radius=0.4)
    w = np.exp(0.7j)
    v1 = verify_peripheral_bound(T, xis, 0.5)
    v2 = verify_peripheral_bound(w * T, w * xis, 0.5)
    assert abs(v1 - v2) <= 1e-9 * max(v1, 1.0)


def test_peripheral_bound_node_doubling_stable(rng):
    T, xis = ritt_instance(rng, N=1, dim=5, peripheral=0, interior_radius=0.3)
    v1 = verify_peripheral_bound(T, xis, 0.5, nodes=256)
    v2 = verify_peripheral_bound(T, xis, 0.5, nodes=512)
    assert abs(v2 - v1) / v1 < 0.02


def test_peripheral_bound_spectrum_gate():
    with pytest.raises(SpectrumOutside):
        verify_peripheral_bound(np.diag([0.9j]), [1.0], 0.3)


# ---------------------------------------------------------------------------
# sectoriality

def test_sectorial_peripheral_identity():
    s = check_sectorial(np.diag([1.0 + 0j]), 1.0)
    assert s.angle == 0.0 and s.within_half_plane


def test_sectorial_interior():
    s = check_sectorial(0.5 * np.eye(2), 1.0)
    assert s.angle == pytest.approx(0.0, abs=1e-14)
    assert s.within_half_plane


def test_sectorial_complex_scalar():
    s = check_sectorial(np.diag([0.9j]), 1.0)
    assert s.angle == pytest.approx(abs(math.atan2(-0.9, 1.0)), abs=1e-12)
    assert s.within_half_plane
