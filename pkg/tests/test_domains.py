import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmcx import domains as D
from bmcx.errors import InvalidExponents, OutsideDomain, StencilOutsideDomain, UnsupportedVariant

rng = np.random.default_rng(11)


def interior_points(dom, n, lo, hi, margin=0.0):
    pts = rng.uniform(lo.real, hi.real, 20 * n) + 1j * rng.uniform(lo.imag, hi.imag, 20 * n)
    pts = pts[dom.contains(pts)]
    if margin:
        pts = pts[dom.dist_to_boundary(pts) > margin]
    return pts[:n]


def test_contains_examples():
    assert D.contains(D.Disk(0, 1), 0)
    assert D.contains(D.Cardioid(), 1)
    assert not D.contains(D.Annulus(1, 4), 0.5)
    assert not D.contains(D.Disk(0, 1), 1.0)


def test_dist_to_boundary_examples():
    assert D.dist_to_boundary(D.Disk(0, 1), 0) == 1
    assert abs(D.dist_to_boundary(D.Strip(), 0) - math.pi / 4) < 1e-15
    assert abs(D.dist_to_boundary(D.EquilateralTriangle(), 0) - 0.5) < 1e-15
    with pytest.raises(OutsideDomain):
        D.dist_to_boundary(D.Disk(0, 1), 2)


@pytest.mark.parametrize("dom, lo, hi", [
    (D.Disk(0.5j, 2), -2 - 2j, 2 + 3j),
    (D.Annulus(1, 4), -4 - 4j, 4 + 4j),
    (D.Strip(0, 1), -1 - 3j, 2 + 3j),
    (D.Wedge(0, math.pi / 2), -1 - 1j, 3 + 3j),
    (D.EquilateralTriangle(), -1 - 1j, 1 + 1j),
    (D.HalfPlane(), -3 + 0j, 3 + 3j),
    (D.Cardioid(), -1 - 3j, 4 + 3j),
])
def test_distance_is_a_valid_lower_bound(dom, lo, hi):
    pts = interior_points(dom, 300, lo, hi)
    d = dom.dist_to_boundary(pts)
    assert np.all(d > 0)
    bd = dom.boundary_samples(4000)
    true = np.min(np.abs(pts[:, None] - bd[None, :]), axis=1)
    # boundary samples are discrete, so allow their spacing
    assert np.all(d <= true + 0.02)


def test_closed_form_harmonic_examples():
    assert abs(D.closed_form_harmonic(D.Annulus(1, 4), 2) - 0.5) < 1e-15
    assert abs(D.closed_form_harmonic(D.Strip(0, 1), 0.5 + 3j) - 0.5) < 1e-15
    assert abs(D.closed_form_harmonic(D.Wedge(0, math.pi / 2), np.exp(1j * math.pi / 4)) - 0.5) < 1e-15
    with pytest.raises(UnsupportedVariant):
        D.closed_form_harmonic(D.Disk(), 0)


def test_torsion_examples():
    assert D.torsion_function(D.EquilateralTriangle(), 0) == 1 / 6
    assert D.torsion_function(D.Disk(0, 1), 0) == 0.5
    assert abs(D.torsion_function(D.Strip(), 0) - math.pi**2 / 16) < 1e-15
    with pytest.raises(UnsupportedVariant):
        D.torsion_function(D.Annulus(1, 2), 1.5)


def test_fd_laplacian_examples():
    tri = D.EquilateralTriangle()
    assert abs(D.fd_laplacian(tri.torsion, 0.1 + 0.05j, 1e-3) + 2) < 1e-5
    assert abs(D.fd_laplacian(lambda z: math.log(abs(z)), 1 + 1j)) < 1e-6
    assert abs(D.fd_laplacian(lambda z: abs(z) ** 2, -0.7 + 2j) - 4) < 1e-6
    with pytest.raises(StencilOutsideDomain):
        D.fd_laplacian(tri.torsion, 0.999 * tri.vertices[0], 1e-2, domain=tri)


@pytest.mark.parametrize("dom, lo, hi", [
    (D.Disk(), -1 - 1j, 1 + 1j),
    (D.EquilateralTriangle(), -1 - 1j, 1 + 1j),
    (D.Strip(), -1 - 3j, 1 + 3j),
])
def test_torsion_positive_vanishes_and_has_laplacian_minus_two(dom, lo, hi):
    pts = interior_points(dom, 1000, lo, hi)
    assert np.all(dom.torsion(pts) > 0)
    assert np.max(np.abs(dom.torsion(dom.boundary_samples(1000)))) < 1e-8
    for z in interior_points(dom, 100, lo, hi, margin=0.01):
        assert abs(D.fd_laplacian(dom.torsion, z, 1e-3) + 2) < 5e-4


@pytest.mark.parametrize("dom, lo, hi", [
    (D.Annulus(1, 4), -4 - 4j, 4 + 4j),
    (D.Wedge(0, math.pi / 2), 0j, 2 + 2j),
    (D.Strip(0, 1), -2j, 1 + 2j),
])
def test_closed_form_harmonic_is_harmonic_and_bounded(dom, lo, hi):
    pts = interior_points(dom, 100, lo, hi, margin=0.05)
    vals = dom.closed_form_harmonic(pts)
    assert np.all((vals > 0) & (vals < 1))
    for z in pts:
        assert abs(D.fd_laplacian(dom.closed_form_harmonic, z, 1e-3)) < 5e-4


def test_cardioid_membership_matches_conformal_image():
    w = np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(1j * rng.uniform(0, 2 * np.pi, 1000)) * (1 - 1e-6)
    assert np.all(D.Cardioid().contains((1 + w) ** 2))
    w = (1 + rng.uniform(1e-3, 0.05, 1000)) * np.exp(1j * rng.uniform(-3.0, 3.0, 1000))
    # near the cusp the other preimage -2 - w can fall inside the disk
    w = w[np.abs(w + 2) > 1 + 1e-3]
    assert not np.any(D.Cardioid().contains((1 + w) ** 2))


def test_cardioid_as_conformal_image():
    img = D.Cardioid().as_conformal_image()
    assert img.contains(1.0) and not img.contains(5.0)
    assert 0 < img.dist_to_boundary(1.0) <= D.Cardioid().dist_to_boundary(1.0) + 1e-12


def test_sc_single_corner():
    # integral_0^z zeta^(m-1) = z^m / m
    for z in (1j, 0.3 + 2j):
        f = D.sc_forward_map([0.0], [0.5], 1, 0, z)
        assert abs(f - 2 * np.sqrt(z)) < 1e-8


def test_sc_half_strip_is_arcsin():
    # principal branches give -i (arcsin z + pi/2); C = i, A = -pi/2 recovers arcsin
    for z in (0j + 1e-300j, 1j, 0.5 + 1j):
        f = D.sc_forward_map([-1.0, 1.0], [0.5, 0.5], 1j, -math.pi / 2, z)
        assert abs(f - np.arcsin(complex(z))) < 1e-7
    g = D.sc_forward_map([-1.0, 1.0], [0.5, 0.5], 1, 0, 1j)
    assert abs(g - (-1j) * (np.arcsin(1j) + math.pi / 2)) < 1e-7


def test_sc_prevertices_have_finite_images():
    for x in (-1.0, 1.0):
        f = D.sc_forward_map([-1.0, 1.0], [0.5, 0.5], 1j, -math.pi / 2, x)
        assert np.isfinite(f)
        assert abs(f - math.asin(x)) < 1e-7
    with pytest.raises(InvalidExponents):
        D.sc_forward_map([0.0], [0.0], 1, 0, 1j)


@pytest.mark.parametrize("text, expected", [
    ("disk:0,0,1", D.Disk(0, 1)),
    ("annulus:1,4", D.Annulus(1, 4)),
    ("halfplane", D.HalfPlane()),
    ("righthalf", D.RightHalfPlane()),
    ("strip:-pi/4,pi/4", D.Strip(-math.pi / 4, math.pi / 4)),
    ("wedge:0,pi/2", D.Wedge(0, math.pi / 2)),
    ("triangle", D.EquilateralTriangle()),
    ("cardioid", D.Cardioid()),
])
def test_parse_domain(text, expected):
    assert D.parse_domain(text) == expected


@pytest.mark.parametrize("text, token", [
    ("disk:0,0,-1", "radius must be positive"),
    ("ellipse:1,2", "ellipse"),
    ("strip:0,abc", "abc"),
    ("annulus:1", "annulus"),
])
def test_parse_errors_name_the_token(text, token):
    with pytest.raises(D.DomainParseError, match=token):
        D.parse_domain(text)


@given(st.floats(-0.49, 0.49), st.floats(-3, 3))
def test_strip_harmonic_is_linear_in_x(x, y):
    s = D.Strip(-0.5, 0.5)
    assert abs(s.closed_form_harmonic(complex(x, y)) - (0.5 - x)) < 1e-12
