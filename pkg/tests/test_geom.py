import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domeforge.geom import (
    INF,
    GenCircle,
    GeometryError,
    H3Point,
    MobiusMap,
    chordal_distance,
    circle_angle,
    circle_through,
    from_sphere,
    h2_distance,
    h3_distance,
    horoball_radius,
    normalizing_map,
    random_mobius,
    to_sphere,
)

coord = st.floats(-50, 50, allow_nan=False)
cplx = st.builds(complex, coord, coord)


def close(a, b, tol=1e-9):
    if math.isinf(abs(a)) or math.isinf(abs(b)):
        return math.isinf(abs(a)) and math.isinf(abs(b))
    return abs(a - b) <= tol * (1 + abs(a) + abs(b))


@given(cplx)
def test_sphere_roundtrip(z):
    v = to_sphere(z)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert close(from_sphere(v), z, 1e-8)


def test_infinity_is_north_pole():
    assert np.allclose(to_sphere(INF), [0, 0, 1])
    assert math.isinf(abs(from_sphere([0, 0, 1])))
    assert chordal_distance(0j, INF) == pytest.approx(2.0)


@given(cplx, cplx, cplx)
def test_from_points_normalizes(a, b, c):
    if min(abs(a - b), abs(b - c), abs(a - c)) < 1e-2:
        return
    m = MobiusMap.from_points(a, b, c)
    assert abs(m(a)) < 1e-8
    assert close(m(b), 1, 1e-7)
    assert chordal_distance(m(c), INF) < 1e-7


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_mobius_extension_is_isometry(seed):
    rng = np.random.default_rng(seed)
    m = random_mobius(rng)
    p = H3Point(complex(*rng.normal(size=2)), float(rng.uniform(0.2, 3)))
    q = H3Point(complex(*rng.normal(size=2)), float(rng.uniform(0.2, 3)))
    assert h3_distance(m.extend(p), m.extend(q)) == pytest.approx(h3_distance(p, q), rel=1e-7, abs=1e-9)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_composition_and_inverse(seed):
    rng = np.random.default_rng(seed)
    f, g = random_mobius(rng), random_mobius(rng)
    z = complex(*rng.normal(size=2))
    assert close((f @ g)(z), f(g(z)), 1e-7)
    assert close(f.inverse()(f(z)), z, 1e-7)


def test_normalizing_map_sends_endpoints():
    m = normalizing_map(1 + 1j, -2j)
    assert abs(m(1 + 1j)) < 1e-12
    assert math.isinf(abs(m(-2j)))


def test_horoball_radius():
    # a horoball at 0 of radius r is the sphere of diameter 2r tangent at 0
    assert horoball_radius(0j, H3Point(0j, 2.0)) == pytest.approx(1.0)
    assert horoball_radius(0j, H3Point(1 + 0j, 1.0)) == pytest.approx(1.0)


def test_h2_distance_known():
    assert h2_distance(1j, math.e * 1j) == pytest.approx(1.0)
    assert h2_distance(1j, 2 + 1j) == pytest.approx(2 * math.asinh(1.0))


def test_circle_through_and_contains():
    c = circle_through(1, 1j, -1)
    assert c.center == pytest.approx(0)
    assert c.radius == pytest.approx(1)
    for z in (1, 1j, -1, -1j):
        assert abs(c.residual(z)) < 1e-12
    assert c.contains(0.5) != c.contains(2.0)


def test_line_through_infinity():
    c = circle_through(0, 1, INF)
    assert c.is_line
    assert abs(c.residual(5.0)) < 1e-12


def test_circle_angle_orthogonal():
    a = GenCircle.circle(0, 1)
    b = GenCircle.circle(1, 1)
    assert circle_angle(a, b) in (pytest.approx(math.pi / 3), pytest.approx(2 * math.pi / 3))
    c = GenCircle.circle(math.sqrt(2), 1)
    assert circle_angle(a, c) == pytest.approx(math.pi / 2)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_circle_image_is_circle_through_images(seed):
    rng = np.random.default_rng(seed)
    pts = [cmath.exp(1j * t) for t in rng.uniform(0, 2 * math.pi, 3)]
    if min(abs(pts[0] - pts[1]), abs(pts[1] - pts[2]), abs(pts[0] - pts[2])) < 1e-2:
        return
    m = random_mobius(rng)
    img = GenCircle.circle(0, 1).image(m)
    for z in pts:
        w = m(z)
        if not math.isinf(abs(w)):
            assert abs(img.residual(w)) < 1e-6


def test_degenerate_mobius_rejected():
    with pytest.raises(GeometryError):
        MobiusMap.from_coefficients(1, 2, 2, 4)
