"""Numeric kernel: the Riemann sphere, Mobius maps, generalized circles and
the upper half-space model of hyperbolic 3-space.

Points of the extended plane are plain Python ``complex`` values; the point at
infinity is the constant :data:`INF` and is detected with :func:`is_inf`.

A generalized circle is stored as a normalized Hermitian form

    Q(z) = A|z|^2 + B conj(z) + conj(B) z + C,    |B|^2 - A C = 1,

whose open disk side is ``{Q < 0}``.  At infinity the sign of ``Q`` is the
sign of ``A``.  Lines are the forms with ``A == 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

INF = complex(math.inf, 0.0)

ExtPoint = complex


class GeometryError(ValueError):
    """Raised for degenerate geometric input (coincident points, tangency)."""


def is_inf(z) -> bool:
    return cmath.isinf(z)


def ext(z) -> complex:
    """Coerce ``z`` to an extended point; strings ``"inf"``/``"∞"`` and any
    infinite value map to :data:`INF`."""
    if isinstance(z, str):
        if z.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        return complex(z)
    z = complex(z)
    if cmath.isinf(z):
        return INF
    if cmath.isnan(z):
        raise GeometryError("NaN is not a point of the Riemann sphere")
    return z


# ---------------------------------------------------------------------------
# stereographic projection (0 -> south pole, inf -> north pole)


def to_sphere(z: complex) -> np.ndarray:
    if is_inf(z):
        return np.array([0.0, 0.0, 1.0])
    r = abs(z)
    if r > 1.0:
        # lift 1/conj(z) and reflect, so huge |z| cannot overflow
        u = 1.0 / z.conjugate()
        r2 = 1.0 / (r * r)
        d = r2 + 1.0
        return np.array([2.0 * u.real / d, 2.0 * u.imag / d, (1.0 - r2) / d])
    r2 = r * r
    d = r2 + 1.0
    return np.array([2.0 * z.real / d, 2.0 * z.imag / d, (r2 - 1.0) / d])


def from_sphere(v) -> complex:
    x, y, h = (float(c) for c in v)
    if h > 0.0:
        w = complex(x, -y)
        if w == 0:
            return INF
        return (1.0 + h) / w
    return complex(x, y) / (1.0 - h)


def chordal_distance(z: complex, w: complex) -> float:
    return float(np.linalg.norm(to_sphere(z) - to_sphere(w)))


# ---------------------------------------------------------------------------
# Mobius maps


@dataclass(frozen=True, slots=True)
class MobiusMap:
    """``z -> (a z + b) / (c z + d)`` normalized to ``ad - bc = 1``."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_coefficients(cls, a, b, c, d) -> MobiusMap:
        det = a * d - b * c
        if det == 0:
            raise GeometryError("singular Mobius matrix")
        s = cmath.sqrt(det)
        return cls(a / s, b / s, c / s, d / s)

    @classmethod
    def identity(cls) -> MobiusMap:
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)

    @classmethod
    def from_points(cls, z1: complex, z2: complex, z3: complex) -> MobiusMap:
        """The map sending ``z1, z2, z3`` to ``0, 1, inf``."""
        if is_inf(z1):
            return cls.from_coefficients(0, z2 - z3, 1, -z3)
        if is_inf(z2):
            return cls.from_coefficients(1, -z1, 1, -z3)
        if is_inf(z3):
            return cls.from_coefficients(1, -z1, 0, z2 - z1)
        return cls.from_coefficients(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))

    @classmethod
    def from_triples(cls, src, dst) -> MobiusMap:
        """The map sending the triple ``src`` to the triple ``dst``."""
        return cls.from_points(*dst).inverse() @ cls.from_points(*src)

    def __call__(self, z: complex) -> complex:
        a, b, c, d = self.a, self.b, self.c, self.d
        if is_inf(z):
            return INF if c == 0 else a / c
        den = c * z + d
        if den == 0:
            return INF
        return (a * z + b) / den

    def __matmul__(self, other: MobiusMap) -> MobiusMap:
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MobiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> MobiusMap:
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def derivative(self, z: complex) -> complex:
        return 1.0 / (self.c * z + self.d) ** 2

    def trace(self) -> complex:
        return self.a + self.d

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def apply_array(self, z: np.ndarray) -> np.ndarray:
        """Vectorized action on finite points (poles map to ``inf``)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative_array(self, z: np.ndarray) -> np.ndarray:
        return 1.0 / (self.c * z + self.d) ** 2

    def extend(self, p: H3Point) -> H3Point:
        """Poincare extension to the upper half-space."""
        a, b, c, d = self.a, self.b, self.c, self.d
        x, t = p.x, p.t
        cxd = c * x + d
        den = abs(cxd) ** 2 + abs(c) ** 2 * t * t
        xn = ((a * x + b) * cxd.conjugate() + a * c.conjugate() * t * t) / den
        return H3Point(complex(xn), t / den)

    def realified(self, tol: float = 1e-7) -> MobiusMap:
        """Rescale by a unit phase so that the entries are real; raises if the
        map does not preserve the real line."""
        k = max((self.a, self.b, self.c, self.d), key=abs)
        ph = abs(k) / k
        ents = [e * ph for e in (self.a, self.b, self.c, self.d)]
        scale = max(abs(e) for e in ents)
        if max(abs(e.imag) for e in ents) > tol * scale:
            raise GeometryError("map does not preserve the real line")
        a, b, c, d = (e.real for e in ents)
        det = a * d - b * c
        if det <= 0:
            raise GeometryError("map reverses the upper half-plane")
        s = math.sqrt(det)
        return MobiusMap(complex(a / s), complex(b / s), complex(c / s), complex(d / s))


def apply_mobius(m: MobiusMap, p: complex) -> complex:
    return m(p)


def cayley() -> MobiusMap:
    """Upper half-plane to unit disk, ``i -> 0``, ``inf -> 1``."""
    return MobiusMap.from_coefficients(1, -1j, 1, 1j)


def normalizing_map(u: complex, v: complex) -> MobiusMap:
    """A Mobius map sending ``u -> 0`` and ``v -> inf``."""
    if is_inf(v):
        return MobiusMap.from_coefficients(1, -u, 0, 1)
    if is_inf(u):
        return MobiusMap.from_coefficients(0, 1, 1, -v)
    return MobiusMap.from_coefficients(1, -u, 1, -v)


# ---------------------------------------------------------------------------
# upper half-space


@dataclass(frozen=True, slots=True)
class H3Point:
    x: complex
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise GeometryError(f"height must be positive, got {self.t}")


def h3_distance(p: H3Point, q: H3Point) -> float:
    dx = abs(p.x - q.x)
    dt = p.t - q.t
    return 2.0 * math.asinh(math.sqrt(dx * dx + dt * dt) / (2.0 * math.sqrt(p.t * q.t)))


def horoball_radius(z: complex, p: H3Point) -> float:
    """Euclidean radius of the horoball based at finite ``z`` through ``p``."""
    if is_inf(z):
        raise GeometryError("horoball radius needs a finite base point")
    dx = abs(p.x - z)
    return (dx * dx + p.t * p.t) / (2.0 * p.t)


def h2_distance(w1: complex, w2: complex) -> float:
    """Distance in the upper half-plane."""
    return 2.0 * math.asinh(abs(w1 - w2) / (2.0 * math.sqrt(w1.imag * w2.imag)))


# ---------------------------------------------------------------------------
# generalized circles


@dataclass(frozen=True, slots=True)
class GenCircle:
    A: float
    B: complex
    C: float

    @classmethod
    def from_form(cls, A, B, C) -> GenCircle:
        A, B, C = float(A), complex(B), float(C)
        disc = abs(B) ** 2 - A * C
        if not disc > 0:
            raise GeometryError("form does not describe a circle")
        s = math.sqrt(disc)
        return cls(A / s, B / s, C / s)

    @classmethod
    def circle(cls, center: complex, radius: float, inside: bool = True) -> GenCircle:
        if not radius > 0:
            raise GeometryError("radius must be positive")
        sgn = 1.0 if inside else -1.0
        c = complex(center)
        return cls(sgn / radius, -sgn * c / radius, sgn * (abs(c) ** 2 - radius**2) / radius)

    @classmethod
    def line(cls, point: complex, direction: complex) -> GenCircle:
        """The line through ``point`` along ``direction``; disk side on the
        right of the direction of travel."""
        u = complex(direction) / abs(direction)
        n = -1j * u
        return cls(0.0, -n, 2.0 * (n.conjugate() * complex(point)).real)

    @classmethod
    def from_sphere_plane(cls, normal, offset: float) -> GenCircle:
        """Circle cut by the plane ``normal . v = offset``; the disk side is
        ``normal . v > offset``."""
        nx, ny, nz = (float(c) for c in normal)
        nn = math.sqrt(nx * nx + ny * ny + nz * nz)
        nx, ny, nz, c = nx / nn, ny / nn, nz / nn, offset / nn
        return cls.from_form(c - nz, -complex(nx, ny), nz + c)

    # -- queries ---------------------------------------------------------

    @property
    def is_line(self) -> bool:
        return abs(self.A) < 1e-14 * max(1.0, abs(self.C))

    @property
    def center(self) -> complex:
        if self.is_line:
            raise GeometryError("a line has no center")
        return -self.B / self.A

    @property
    def radius(self) -> float:
        if self.is_line:
            raise GeometryError("a line has no radius")
        return 1.0 / abs(self.A)

    @property
    def disk_inside(self) -> bool:
        """For a circle, whether the disk side is the bounded component."""
        return self.A > 0

    @property
    def normal(self) -> complex:
        """Unit normal of a line pointing into the disk side."""
        return -self.B / abs(self.B)

    @property
    def offset(self) -> float:
        """Signed offset ``Re(conj(n) z)`` of points ``z`` on the line."""
        return self.C / (2.0 * abs(self.B))

    def value(self, z: complex) -> float:
        if is_inf(z):
            return self.A
        return self.A * abs(z) ** 2 + 2.0 * (self.B.conjugate() * z).real + self.C

    def values(self, z: np.ndarray) -> np.ndarray:
        return self.A * np.abs(z) ** 2 + 2.0 * (np.conj(self.B) * z).real + self.C

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        """Whether ``z`` lies in the open disk side (with slack ``tol``)."""
        return self.value(z) < -tol

    def residual(self, z: complex) -> float:
        """Chordal distance from ``z`` to the circle measured on the sphere."""
        n, c = self.sphere_plane()
        return abs(float(np.dot(n, to_sphere(z))) - c)

    def sphere_plane(self) -> tuple[np.ndarray, float]:
        """Inverse of :meth:`from_sphere_plane`: unit normal and offset."""
        A, B, C = self.A, self.B, self.C
        n = np.array([-B.real, -B.imag, (C - A) / 2.0])
        c = (A + C) / 2.0
        s = float(np.linalg.norm(n))
        return n / s, c / s

    def flipped(self) -> GenCircle:
        return GenCircle(-self.A, -self.B, -self.C)

    def oriented_away_from(self, z: complex) -> GenCircle:
        """Same circle, disk side chosen not to contain ``z``."""
        return self.flipped() if self.value(z) < 0 else self

    def image(self, m: MobiusMap) -> GenCircle:
        H = np.array([[self.A, self.B], [self.B.conjugate(), self.C]], dtype=complex)
        Mi = m.inverse().matrix()
        Hn = Mi.conj().T @ H @ Mi
        return GenCircle.from_form(Hn[0, 0].real, Hn[0, 1], Hn[1, 1].real)

    def interior_point(self) -> complex:
        """Some point of the open disk side."""
        if self.is_line:
            n = self.normal
            return n * (self.offset + 1.0)
        if self.A > 0:
            return self.center
        return INF

    def lift(self, z: complex) -> H3Point:
        """Point of the hyperbolic plane over this circle where the horoball
        at ``z`` first touches it."""
        if is_inf(z):
            raise GeometryError("cannot lift infinity")
        if self.is_line:
            n = self.normal
            s = (n.conjugate() * z).real - self.offset
            return H3Point(z - s * n, abs(s))
        c, R = self.center, self.radius
        zeta = (z - c) / R
        r2 = abs(zeta) ** 2
        return H3Point(c + R * 2.0 * zeta / (1.0 + r2), R * abs(1.0 - r2) / (1.0 + r2))


def circle_through(a: complex, b: complex, c: complex) -> GenCircle:
    va, vb, vc = to_sphere(a), to_sphere(b), to_sphere(c)
    n = np.cross(vb - va, vc - va)
    nn = float(np.linalg.norm(n))
    if nn < 1e-12:
        raise GeometryError("points are not distinct")
    n = n / nn
    return GenCircle.from_sphere_plane(n, float(np.dot(n, va)))


def inversive_product(c1: GenCircle, c2: GenCircle) -> float:
    return 0.5 * (c1.A * c2.C + c2.A * c1.C) - (c1.B * c2.B.conjugate()).real


def circle_angle(c1: GenCircle, c2: GenCircle, tol: float = 1e-12) -> float:
    """Angle between the inward normals of two transverse circles, in (0, pi].

    For the support circles of two adjacent hull faces (disk sides pointing
    away from the hull) this is the exterior dihedral angle of their edge."""
    cos_t = -inversive_product(c1, c2)
    if cos_t < -1.0 - 1e-9 or cos_t > 1.0 + 1e-9:
        raise GeometryError("circles are tangent or disjoint")
    if cos_t < 0.5:
        return math.acos(max(-1.0, cos_t))
    # nearly parallel normals: acos loses half the digits, the difference
    # of the forms does not (its norm is 4 sin^2(theta/2))
    d = GenCircle(c1.A - c2.A, c1.B - c2.B, c1.C - c2.C)
    q = -inversive_product(d, d)
    theta = 2.0 * math.asin(min(1.0, math.sqrt(max(q, 0.0)) / 2.0))
    if theta <= tol:
        raise GeometryError("circles are tangent or disjoint")
    return theta


def random_mobius(rng: np.random.Generator, scale: float = 1.0) -> MobiusMap:
    a, b, c, d = (complex(*rng.normal(scale=scale, size=2)) for _ in range(4))
    a += 1.0
    d += 1.0
    return MobiusMap.from_coefficients(a, b, c, d)
