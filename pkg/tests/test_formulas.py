import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domeforge import formulas
from domeforge.formulas import F, G, R, arc_angle_lower, collar_width, isosceles_max_perimeter

from oracles import triangle_perimeter_max

mpmath.mp.dps = 40


def F_mp(x):
    x = mpmath.mpf(x)
    s = mpmath.sinh(x / 2)
    return x / 2 + mpmath.asinh(s / mpmath.sqrt(1 - s * s))


@given(st.floats(1e-6, formulas.F_DOMAIN_MAX - 1e-6))
def test_F_matches_high_precision(x):
    # relative conditioning grows like 1/(1 - sinh(x/2)) near the pole
    cond = 1.0 + 1.0 / (1.0 - math.sinh(x / 2))
    assert F(x) == pytest.approx(float(F_mp(x)), rel=1e-13 * cond)


@given(st.floats(1e-6, 5.0))
def test_G_inverts_F(y):
    assert F(G(y)) == pytest.approx(y, rel=1e-9)


@given(st.floats(1e-6, formulas.F_DOMAIN_MAX - 1e-3))
def test_F_inverts_G(x):
    # F blows up at the right end, so compare in the argument instead
    assert G(F(x)) == pytest.approx(x, rel=1e-12, abs=1e-14)


def test_G_at_asinh1_by_root_finding():
    ref = mpmath.findroot(lambda x: F_mp(x) - mpmath.asinh(1), 0.8)
    assert G(math.asinh(1.0)) == pytest.approx(float(ref), abs=1e-13)


def test_F_domain():
    for x in (0.0, -1.0, formulas.F_DOMAIN_MAX):
        with pytest.raises(ValueError):
            F(x)
    with pytest.raises(ValueError):
        G(0.0)


def test_R_branches_meet_at_right_angle():
    h = 1e-13
    left, right = R(math.pi / 2 - h), R(math.pi / 2 + h)
    assert abs(left - right) < 1e-12
    assert R(math.pi / 2) == pytest.approx(2 * math.asinh(1.0))


def test_arc_angle_endpoints():
    assert arc_angle_lower(0.0) == math.pi
    assert arc_angle_lower(2 * math.asinh(1.0)) == 0.0


def test_collar_width_fixed_point():
    # the collar of a geodesic of length 2 asinh 1 has width asinh 1
    assert collar_width(2 * math.asinh(1.0)) == pytest.approx(math.asinh(1.0))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(0.05, math.pi - 0.05))
def test_isosceles_is_the_maximum(C, gamma):
    brute = triangle_perimeter_max(C, gamma, n_scan=800)
    assert isosceles_max_perimeter(C, gamma) >= brute - 1e-9
    assert isosceles_max_perimeter(C, gamma) == pytest.approx(brute, abs=1e-4)


def test_constants_table():
    c = formulas.constants()
    assert c.G_at_asinh1 == pytest.approx(0.838682, abs=1e-5)
    assert c.K0 == pytest.approx(7.1219, abs=1e-3)
    assert c.K == pytest.approx(8.49, abs=1e-2)
    assert c.Kp == pytest.approx(4.56, abs=1e-2)
    assert c.K0p == pytest.approx(8.05, abs=1e-2)
    assert c.Phi == pytest.approx(0.4084, abs=1e-3)
    assert c.k == pytest.approx(5.76, abs=1e-2)
    assert c.m == pytest.approx(2.69, abs=1e-2)
    assert set(c.as_table()) == {"K", "K0", "Kprime", "K0prime", "Phi", "k", "m", "G_asinh1"}


def test_lift_constants_grow_as_nu_shrinks():
    L_big = formulas.lift_constants(1.0)[1]
    L_small = formulas.lift_constants(0.1)[1]
    assert L_small > L_big > 1


def test_qc_constants_overflow_is_reported():
    qc = formulas.qc_constants_log(0.5)
    assert qc.logN > 0
    assert qc.overflow and math.isinf(qc.logM)
