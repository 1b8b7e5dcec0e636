import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmcx.cplx_geom import (
    INF, Circle, Line, MobiusTransform, SpherePoint, cross_ratio, disk_automorphism,
    ext_equal, is_inf, mobius_apply, mobius_compose, mobius_inverse, mobius_map_circle,
    mobius_three_point, reflect, same_generalized_circle, stereo_lift, stereo_project,
)
from bmcx.errors import DegenerateTriple, Indeterminate, OutOfDisk

finite = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)


def close(z, w, tol=1e-12):
    if is_inf(z) or is_inf(w):
        return ext_equal(z, w)
    return abs(complex(z) - complex(w)) <= tol * max(1.0, abs(complex(w)))


def random_mobius(rng):
    while True:
        a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
        if abs(a * d - b * c) > 0.1:
            return MobiusTransform(a, b, c, d)


def test_stereo_project_examples():
    assert stereo_project(SpherePoint(0, 0, -1)) == 0
    assert is_inf(stereo_project(SpherePoint(0, 0, 1)))
    assert abs(stereo_project(SpherePoint(1, 0, 0)) - 1) < 1e-15


@pytest.mark.parametrize("z, p", [(0, (0, 0, -1)), (1, (1, 0, 0)), (1j, (0, 1, 0)), (INF, (0, 0, 1))])
def test_stereo_lift_examples(z, p):
    np.testing.assert_allclose(stereo_lift(z).as_array(), p, atol=1e-15)


def test_stereo_round_trip_on_random_sphere_points():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(1000, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    for row in v:
        p = SpherePoint.from_vector(row)
        np.testing.assert_allclose(stereo_lift(stereo_project(p)).as_array(), row, atol=1e-10)


@given(finite)
def test_project_lift_is_identity(z):
    assert abs(stereo_project(stereo_lift(z)) - z) <= 1e-12 * max(1.0, abs(z)) ** 2


def test_mobius_apply_examples():
    inv = MobiusTransform(0, 1, 1, 0)
    assert mobius_apply(inv, 2) == 0.5
    assert is_inf(mobius_apply(inv, 0))
    assert mobius_apply(inv, INF) == 0
    assert abs(mobius_apply(disk_automorphism(0.5), 0.5)) < 1e-15
    assert is_inf(mobius_apply(MobiusTransform(2, 1, 0, 1), INF))


def test_compose_and_inverse():
    rng = np.random.default_rng(1)
    m1, m2 = random_mobius(rng), random_mobius(rng)
    for z in (0.3, 1j, -2 + 0.5j):
        assert abs(mobius_apply(mobius_compose(m1, mobius_inverse(m1)), z) - z) < 1e-10
        assert abs(mobius_apply(mobius_compose(m1, m2), z) - mobius_apply(m1, mobius_apply(m2, z))) < 1e-10
    np.testing.assert_allclose(mobius_compose(m1, m2).matrix, m1.matrix @ m2.matrix)
    assert mobius_inverse(MobiusTransform(1, -1, 1, 1)).equivalent(MobiusTransform(1, 1, -1, 1))


def test_compose_is_associative():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c = (random_mobius(rng) for _ in range(3))
        left = mobius_compose(mobius_compose(a, b), c)
        right = mobius_compose(a, mobius_compose(b, c))
        for z in rng.normal(size=3) + 1j * rng.normal(size=3):
            assert close(mobius_apply(left, z), mobius_apply(right, z), 1e-9)


def test_three_point_examples():
    assert mobius_three_point((0, 1, INF), (0, 1, INF)).equivalent(MobiusTransform.identity())
    m = mobius_three_point((-1, 0, 1), (0, 1, INF))
    assert abs(mobius_apply(m, -1)) < 1e-12
    assert abs(mobius_apply(m, 0) - 1) < 1e-12
    assert is_inf(mobius_apply(m, 1))
    a, b, c = 2j, -1.0, 3 + 1j
    phi = mobius_three_point((a, b, c), (0, 1, INF))
    assert abs(mobius_apply(phi, a)) < 1e-12 and abs(mobius_apply(phi, b) - 1) < 1e-12
    assert is_inf(mobius_apply(phi, c))


def test_three_point_uniqueness():
    rng = np.random.default_rng(3)
    for _ in range(20):
        src = list(rng.normal(size=3) + 1j * rng.normal(size=3))
        dst = list(rng.normal(size=3) + 1j * rng.normal(size=3))
        m = mobius_three_point(src, dst)
        for s, d in zip(src, dst):
            assert abs(mobius_apply(m, s) - d) < 1e-10
        # any map agreeing at three points agrees everywhere
        other = mobius_compose(mobius_three_point((0, 1, INF), dst), mobius_three_point(src, (0, 1, INF)))
        for z in rng.normal(size=10) + 1j * rng.normal(size=10):
            assert close(mobius_apply(m, z), mobius_apply(other, z), 1e-9)


def test_three_point_degenerate():
    with pytest.raises(DegenerateTriple):
        mobius_three_point((0, 0, 1), (0, 1, 2))
    with pytest.raises(DegenerateTriple):
        mobius_three_point((0, 1, 2), (INF, 1, INF))


def test_cross_ratio_examples():
    assert abs(cross_ratio(1, 1j, -1, -1j) - 2) < 1e-15
    assert cross_ratio(INF, 0, 1, 1) == 1
    with pytest.raises(Indeterminate):
        cross_ratio(1, 1, 1, 2)


def test_cross_ratio_invariance():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pts = rng.normal(size=4) + 1j * rng.normal(size=4)
        m = random_mobius(rng)
        img = [mobius_apply(m, z) for z in pts]
        assert close(cross_ratio(*img), cross_ratio(*pts), 1e-9)


def test_cross_ratio_real_for_concyclic_points():
    rng = np.random.default_rng(5)
    for _ in range(200):
        c = complex(*rng.normal(size=2))
        r = rng.uniform(0.1, 5)
        pts = c + r * np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        assert abs(complex(cross_ratio(*pts)).imag) < 1e-9


def test_disk_automorphism():
    assert disk_automorphism(0).equivalent(MobiusTransform.identity())
    assert abs(abs(mobius_apply(disk_automorphism(0.5), 1j)) - 1) < 1e-15
    a = 0.3 + 0.4j
    assert abs(mobius_apply(disk_automorphism(a), a)) < 1e-15
    with pytest.raises(OutOfDisk):
        disk_automorphism(1.0)


@given(st.floats(0, 2 * math.pi), st.complex_numbers(max_magnitude=0.99))
def test_disk_automorphism_preserves_circle(t, a):
    assert abs(abs(mobius_apply(disk_automorphism(a), cmath.exp(1j * t))) - 1) < 1e-9


def test_map_circle_examples():
    unit = Circle(0, 1)
    rot = MobiusTransform(cmath.exp(0.7j), 0, 0, 1)
    assert same_generalized_circle(mobius_map_circle(rot, unit), unit)
    img = mobius_map_circle(MobiusTransform(0, 1, 1, 0), Line(1, 1j))
    assert isinstance(img, Circle)
    assert abs(img.center - 0.5) < 1e-12 and abs(img.radius - 0.5) < 1e-12
    assert same_generalized_circle(mobius_map_circle(disk_automorphism(0.2 - 0.5j), unit), unit)
    # pole on the circle gives a line
    assert isinstance(mobius_map_circle(MobiusTransform(0, 1, 1, -1), unit), Line)


def test_map_circle_commutes_with_composition():
    rng = np.random.default_rng(6)
    for _ in range(50):
        m1, m2 = random_mobius(rng), random_mobius(rng)
        c = Circle(complex(*rng.normal(size=2)), rng.uniform(0.2, 3))
        direct = mobius_map_circle(mobius_compose(m2, m1), c)
        stepwise = mobius_map_circle(m2, mobius_map_circle(m1, c))
        assert same_generalized_circle(direct, stepwise, 1e-8)


def test_reflection_self_consistency():
    c = Circle(1 + 1j, 2.0)
    for z in (0.3j, 4 + 2j, -1 + 0j):
        w = reflect(c, z)
        # inversion in a circle: (w - c)(conj(z) - conj(c)) = r^2
        assert abs((w - c.center) * (z - c.center).conjugate() - 4) < 1e-9
        assert close(reflect(c, w), z, 1e-9)
    assert is_inf(reflect(c, c.center))
    line = Line(0, 1)
    assert abs(reflect(line, 2 + 3j) - (2 - 3j)) < 1e-12
