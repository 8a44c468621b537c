"""Scalar functions and explicit constants.

Everything here is a closed-form evaluation except :func:`G`, which inverts
:func:`F` by bisection.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

ASINH1 = math.asinh(1.0)
F_DOMAIN_MAX = 2.0 * ASINH1


def F(x: float) -> float:
    """``x/2 + asinh(sinh(x/2) / sqrt(1 - sinh^2(x/2)))`` on ``(0, 2 asinh 1)``.

    The second summand is rewritten as ``atanh(sinh(x/2))``, which is the same
    function and stays accurate near the right end of the domain.
    """
    if not 0.0 < x < F_DOMAIN_MAX:
        raise ValueError(f"F is defined on (0, {F_DOMAIN_MAX}), got {x}")
    s = math.sinh(x / 2.0)
    if s >= 1.0:
        return math.inf
    return x / 2.0 + math.atanh(s)


def G(y: float, rtol: float = 1e-15) -> float:
    """Inverse of :func:`F` by bisection (relative tolerance, so tiny
    arguments are resolved too)."""
    if not y > 0:
        raise ValueError(f"G is defined for positive arguments, got {y}")
    lo, hi = 0.0, F_DOMAIN_MAX
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rtol * hi:
            break
        if F(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def collar_width(length: float) -> float:
    if not length > 0:
        raise ValueError("geodesic length must be positive")
    return math.asinh(1.0 / math.sinh(length / 2.0))


def R(theta: float) -> float:
    """Lower bound for the length of a closed curve meeting three planes
    with consecutive boundary tangencies, given the interior angle ``theta``
    between the outer two."""
    if not 0.0 < theta < math.pi:
        raise ValueError("theta must lie in (0, pi)")
    if theta > math.pi / 2:
        return 2.0 * math.asinh(1.0 / math.tan(theta / 2.0))
    return 2.0 * math.asinh(math.sin(theta) / math.tan(theta / 2.0))


def isosceles_max_perimeter(C: float, gamma: float) -> float:
    """Largest perimeter of a hyperbolic triangle with a side of length ``C``
    opposite an angle ``gamma``."""
    if not C > 0 or not 0.0 < gamma < math.pi:
        raise ValueError("need C > 0 and 0 < gamma < pi")
    return C + 2.0 * math.asinh(math.sinh(C / 2.0) / math.sin(gamma / 2.0))


def arc_angle_lower(L: float) -> float:
    """``2 acos(sinh(L/2))`` for ``0 <= L <= 2 asinh 1``."""
    if not -1e-15 <= L <= F_DOMAIN_MAX + 1e-12:
        raise ValueError(f"L must lie in [0, {F_DOMAIN_MAX}], got {L}")
    s = math.sinh(max(L, 0.0) / 2.0)
    return 2.0 * math.acos(min(1.0, s))


@dataclass(frozen=True)
class ConstantTable:
    K: float
    K0: float
    Kp: float
    K0p: float
    Phi: float
    k: float
    m: float
    G_at_asinh1: float

    def as_table(self) -> dict[str, float]:
        d = asdict(self)
        return {
            "K": d["K"],
            "K0": d["K0"],
            "Kprime": d["Kp"],
            "K0prime": d["K0p"],
            "Phi": d["Phi"],
            "k": d["k"],
            "m": d["m"],
            "G_asinh1": d["G_at_asinh1"],
        }


BP_K = 4.0 + math.log(3.0 + 2.0 * math.sqrt(2.0))
M_CONST = math.acosh(math.e**2)
PHI = math.asin(4.0 / (5.0 * math.sqrt(2.0) + 3.0))


def constants() -> ConstantTable:
    g = G(ASINH1)
    k0 = 2.0 * math.pi + g
    k0p = 2.0 * math.pi + 2.0 * ASINH1
    return ConstantTable(
        K=k0 / g,
        K0=k0,
        Kp=k0p / (2.0 * ASINH1),
        K0p=k0p,
        Phi=PHI,
        k=BP_K,
        m=M_CONST,
        G_at_asinh1=g,
    )


def lift_constants(nu: float) -> tuple[float, float, float]:
    """``(g(nu), L(nu), L0(nu))`` for an injectivity radius lower bound ``nu``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    g = 0.5 * math.exp(-M_CONST) * math.exp(-(math.pi**2) / (2.0 * nu))
    Gg = G(g)
    return g, (2.0 * math.pi + Gg) / Gg, 2.0 * math.pi + Gg


def log_N(K: float, C: float) -> float:
    """Natural log of the quasisymmetry constant ``N(K, C)``."""
    return 1546.0 * K**4 * max(C, 1.0)


@dataclass(frozen=True)
class QCConstants:
    logN: float
    logM: float
    # logM = log_M_terms[0] + log_M_terms[1] * exp(log_M_terms[2])
    log_M_terms: tuple[float, float, float]
    overflow: bool


def qc_constants_log(nu: float) -> QCConstants:
    _, L, L0 = lift_constants(nu)
    K = max(2.0 * math.sqrt(2.0) * (BP_K + math.pi**2 / (2.0 * nu)), L)
    lN = log_N(K, L0)
    terms = (math.log(4e8), 70.0, lN)
    try:
        lM = terms[0] + terms[1] * math.exp(lN)
        overflow = math.isinf(lM)
    except OverflowError:
        lM, overflow = math.inf, True
    return QCConstants(lN, lM, terms, overflow)
