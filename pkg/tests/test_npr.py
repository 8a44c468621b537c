import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domeforge.dome import trace_geodesic
from domeforge.geom import INF, h3_distance, horoball_radius, random_mobius
from domeforge.npr import FiniteDomain, RetractionError, cell_decomposition, pullback_path, retract, svg_export

from oracles import horoball_min

SQUARE = [1, 1j, -1, -1j]


def random_domain(seed, n, with_inf=False):
    rng = np.random.default_rng(seed)
    pts = [complex(*rng.normal(size=2)) for _ in range(n)]
    return FiniteDomain(pts + ([INF] if with_inf else []))


def random_z(rng, D):
    while True:
        z = complex(*rng.normal(scale=1.5, size=2))
        if min(abs(z - x) for x in D.finite_points) > 1e-3:
            return z


def test_three_points_edge_case():
    r = retract(FiniteDomain([0, 1, INF]), 1j)
    assert r.kind == "edge"
    assert r.h == pytest.approx(1.0)


def test_square_center_retracts_to_face():
    r = retract(FiniteDomain(SQUARE), 0j)
    assert r.kind == "face"
    assert r.h == pytest.approx(0.5)
    assert r.tau == pytest.approx(2.0)


def test_boundary_and_infinity_rejected():
    D = FiniteDomain(SQUARE)
    with pytest.raises(RetractionError):
        retract(D, 1j)
    with pytest.raises(RetractionError):
        retract(D, INF)


@pytest.mark.parametrize("seed", range(4))
def test_retraction_against_direct_minimization(seed):
    D = random_domain(seed, 6, with_inf=seed % 2 == 1)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        z = random_z(rng, D)
        r = retract(D, z)
        ref = horoball_min(D.surface, z)
        assert r.h <= ref * (1 + 1e-9)
        assert r.h == pytest.approx(ref, rel=1e-6)
        # the foot is on the dome and on the horosphere
        assert h3_distance(r.ambient, D.surface.ambient(r.foot)) < 1e-8
        assert horoball_radius(z, r.ambient) == pytest.approx(r.h, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_density_is_mobius_natural(seed):
    rng = np.random.default_rng(seed)
    pts = [complex(*rng.normal(size=2)) for _ in range(5)]
    m = random_mobius(rng)
    D = FiniteDomain(pts)
    Dm = FiniteDomain([m(x) for x in pts])
    z = random_z(rng, D)
    if abs(m(z)) > 1e6 or min(abs(z - x) for x in pts) < 1e-2:
        return
    lhs = float(Dm.tau(np.array([m(z)]))[0]) * abs(m.derivative(z))
    assert lhs == pytest.approx(float(D.tau(np.array([z]))[0]), rel=1e-7)


@pytest.mark.parametrize("seed", range(3))
def test_cells_agree_with_retraction(seed):
    D = random_domain(10 + seed, 7)
    C = cell_decomposition(D)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        z = random_z(rng, D)
        kind, idx = C.classify(z)
        assert (kind, idx) in C.cells_containing(z, tol=1e-9)
        assert C.density(kind, idx, z) == pytest.approx(float(D.tau(np.array([z]))[0]), rel=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_pullback_length_identity(seed):
    D = random_domain(20 + seed, 8)
    S = D.surface
    rng = np.random.default_rng(seed)
    a = S.random_point(rng)
    alpha = trace_geodesic(S, a, complex(*rng.normal(size=2)), 2.5)
    pb = pullback_path(D, alpha)
    assert pb.l_quadrature == pytest.approx(pb.l_structural, rel=1e-6)
    # every piece retracts back onto the path's faces and edges
    for pc in pb.pieces:
        lo, hi = pc.span
        mid = pc.points(np.array([0.5 * (lo + hi)]))[0]
        r = retract(D, mid)
        if hasattr(pc, "face"):
            assert r.kind == "face" and r.index == pc.face
        else:
            assert r.kind == "edge" and r.index == pc.edge


def test_svg_regions_and_markup():
    D = FiniteDomain(SQUARE)
    C = cell_decomposition(D)
    svg = svg_export(C)
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    paths = root.findall(f".//{ns}path")
    assert len(paths) == len(D.hull.faces) + len(D.hull.edges)
    assert {p.get("class") for p in paths} == {"face", "bigon"}
    assert len({p.get("id") for p in paths}) == len(paths)
