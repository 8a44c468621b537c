import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domeforge import confmetric as cm
from domeforge.formulas import ASINH1
from domeforge.geom import INF
from domeforge.npr import FiniteDomain

from oracles import optimized_polyline_length


def test_qh_density_and_beta():
    X = [0, 1, INF]
    assert cm.qh_density(X, 0.1) == pytest.approx(10.0)
    assert cm.beta(X, 0.1) == pytest.approx(math.log(9.0))
    lo, hi = cm.bp_envelope(X, 0.1)
    assert 0 < lo < hi <= 2 * cm.qh_density(X, 0.1)
    with pytest.raises(cm.MetricError):
        cm.qh_density(X, 1.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_path_length_log_two():
    assert cm.path_length(lambda z: 1.0 / np.abs(z), [1.0, 2.0]) == pytest.approx(math.log(2.0), abs=1e-10)
    with pytest.raises(cm.MetricError):
        cm.path_length(lambda z: 1.0 / np.abs(z), [-1.0, 1.0])


@pytest.mark.parametrize("s", [0.5, 2.0, 6.0])
def test_annulus_core_poincare_length(s):
    r = math.exp(0.5 * s)
    ring = r * np.exp(1j * np.linspace(0, 2 * math.pi, 400))
    L = cm.path_length(lambda z: cm.annulus_poincare_density(s, z), ring, 1e-10)
    # chords sit slightly inside the core circle, so compare loosely
    assert L == pytest.approx(2 * math.pi**2 / s, rel=1e-4)
    assert cm.annulus_closed_forms(s).rho_core == pytest.approx(2 * math.pi**2 / s)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 4.0, 8.0])
def test_annulus_rho_inside_envelope(s):
    r = np.exp(np.linspace(1e-3, s - 1e-3, 501))
    rho = cm.annulus_poincare_density(s, r)
    q = cm.annulus_qh_density(s, r)
    for x, p in zip(r, rho):
        lo, hi = cm.annulus_bp_envelope(s, x)
        assert lo <= p <= hi
    assert np.all(rho <= 2 * q)


def test_annulus_thurston_density_is_limit_of_finite_domains():
    s = 2.0
    z = np.array([math.e, 1.5 * np.exp(0.3j), 5.0 * np.exp(0.01j)])
    exact = cm.annulus_thurston_density(s, z)
    prev = None
    for n in (64, 256):
        ratio = FiniteDomain(cm.annulus_points(s, n)).tau(z) / exact
        assert np.all(ratio <= 1 + 1e-12)
        if prev is not None:
            assert np.all(ratio >= prev - 1e-12)
        prev = ratio
    assert np.all(prev > 0.9999)


def test_annulus_closed_forms():
    cf = cm.annulus_closed_forms(2.0)
    assert cf.dome_core == pytest.approx(5.34648, abs=1e-5)
    assert cf.tau_core == pytest.approx(11.6297, abs=1e-4)
    assert cf.t_s_defined is False
    assert cm.annulus_closed_forms(12.0).t_s_defined


def test_annulus_points_layout():
    pts = cm.annulus_points(1.0, 5)
    assert len(pts) == 10
    assert np.allclose(np.abs(pts[:5]), 1.0)
    assert np.allclose(np.abs(pts[5:]), math.e)
    aligned = cm.annulus_points(1.0, 5, aligned=True)
    assert np.allclose(np.angle(aligned[5:]), np.angle(aligned[:5]))


@pytest.mark.parametrize("n", [1, 3, 8])
def test_mm_demo(n):
    d_rho, d_q = cm.mm_demo(n)
    assert d_rho == pytest.approx(2 * ASINH1, abs=1e-6)
    assert d_q >= n


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pointwise_sandwich(seed):
    rng = np.random.default_rng(seed)
    pts = [complex(*rng.normal(size=2)) for _ in range(6)] + [INF]
    D = FiniteDomain(pts)
    z = rng.normal(scale=2.0, size=50) + 1j * rng.normal(scale=2.0, size=50)
    tau = D.tau(z)
    q = np.array([cm.qh_density(pts, x) for x in z])
    assert np.all(0.5 * tau <= q * (1 + 1e-9))
    assert np.all(q <= tau * (1 + 1e-9))


def test_nearby_points_distance_is_local():
    D = FiniteDomain([0, 1, 1j, INF])
    z = 0.4 + 0.3j
    w = z + 1e-4
    d = cm.tau_distance(D, z, w)
    assert d == pytest.approx(float(D.tau(np.array([z]))[0]) * 1e-4, rel=1e-3)


def test_distance_symmetric():
    D = FiniteDomain([0, 1, 2j, -1 - 1j, INF])
    z, w = 0.3 + 0.2j, -0.5 + 1.5j
    assert cm.tau_distance(D, z, w) == pytest.approx(cm.tau_distance(D, w, z), rel=1e-7)


@pytest.mark.parametrize("seed", [5, 9])
def test_exact_distance_against_free_polyline(seed):
    rng = np.random.default_rng(seed)
    D = FiniteDomain(list(rng.normal(size=5) + 1j * rng.normal(size=5)))
    z, w = (complex(*rng.uniform(-1, 1, 2)) for _ in range(2))
    geo = cm.tau_geodesic(D, z, w)
    assert geo.certified
    ref = optimized_polyline_length(D, z, w, nodes=24)
    # the polyline is an admissible path: never shorter than the distance
    assert ref >= geo.length - 1e-7
    assert ref - geo.length < 5e-3 * geo.length
    # the geodesic's own polyline has the claimed length
    poly = geo.polyline(cm._Grafting(D), 0.01)
    assert cm.path_length(D.tau, poly, 1e-9) == pytest.approx(geo.length, rel=1e-3)


def test_bracket_orders_and_serializes():
    rng = np.random.default_rng(2)
    D = FiniteDomain(list(rng.normal(size=6) + 1j * rng.normal(size=6)))
    b = cm.tau_distance_bracket(D, 0.1 + 0.2j, -0.7 + 0.9j)
    assert 0 < b.lower <= b.upper
    assert b.gap < cm.GAP_TARGET
    out = b.to_json()
    assert {"lower", "upper", "dome", "gap", "levels"} <= set(out)
