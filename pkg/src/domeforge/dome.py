"""Intrinsic geometry of the dome of a finite set.

Each face gets a chart: a Mobius map sending its support disk onto the upper
half-plane, so that the face becomes an ideal polygon with finite real
vertices.  Adjacent charts are related by real Mobius gluings; walking the
dual graph and composing gluings develops galleries of faces into a single
chart, which is all the distance and closed-geodesic searches need.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import (
    INF,
    GeometryError,
    H3Point,
    MobiusMap,
    cayley,
    h2_distance,
    is_inf,
    normalizing_map,
)
from .hull import IdealPolyhedron

DEFAULT_BUDGET = 100_000
# traces this close to 2 are treated as parabolic (cusp loops)
PARABOLIC_TOL = 1e-8


class DomeError(GeometryError):
    pass


@dataclass(frozen=True)
class DomePoint:
    face: int
    w: complex  # chart coordinate, Im w > 0


@dataclass(frozen=True)
class Chart:
    face: int
    to_chart: MobiusMap
    from_chart: MobiusMap
    vertices: tuple[int, ...]  # hull vertex ids sorted by chart coordinate
    coords: tuple[float, ...]

    def contains(self, w: complex, tol: float = 1e-10) -> bool:
        return bool(polygon_contains(np.asarray(self.coords), np.array([w]), tol)[0])


@dataclass(frozen=True)
class EdgeFrame:
    """Coordinates ``S(z) = (z - u)/(z - v)`` around an edge ``(u, v)``.

    In these coordinates both support circles are lines through 0, the edge
    is the vertical axis over 0 and the edge point at height ``t`` has
    arclength parameter ``log t``.
    """

    S: MobiusMap
    normal: dict  # face -> inward unit normal of its support disk
    ray: dict  # face -> unit direction of the face half-plane
    sweep: float  # +1/-1: rotation sense from the left normal to the right one


def polygon_contains(xs: np.ndarray, w: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Membership of chart points in the closed ideal polygon with sorted
    finite vertices ``xs``."""
    w = np.asarray(w, dtype=complex)
    ok = w.imag > -tol
    c = 0.5 * (xs[:-1] + xs[1:])
    r = 0.5 * (xs[1:] - xs[:-1])
    d = np.abs(w[:, None] - c[None, :])
    ok &= np.all(d >= r[None, :] - tol, axis=1)
    cb = 0.5 * (xs[0] + xs[-1])
    rb = 0.5 * (xs[-1] - xs[0])
    ok &= np.abs(w - cb) <= rb + tol
    return ok


def dist_to_geodesic(w: complex, p: complex, q: complex) -> float:
    """Distance in the upper half-plane from ``w`` to the geodesic ``(p, q)``."""
    if is_inf(p):
        p, q = q, p
    if is_inf(q):
        return math.asinh(abs(w.real - p.real) / w.imag)
    p, q = p.real, q.real
    c = 0.5 * (p + q)
    r = 0.5 * abs(q - p)
    return math.asinh(abs(abs(w - c) ** 2 - r * r) / (2.0 * r * w.imag))


def _real(z: complex) -> complex:
    return z if is_inf(z) else complex(z.real, 0.0)


def point_frame(w: complex, u: complex) -> MobiusMap:
    """Real Mobius map sending ``w`` to ``i`` and the unit direction ``u`` at
    ``w`` to the upward direction."""
    A = MobiusMap.from_coefficients(1.0, -w.real, 0.0, w.imag)
    phi = 0.5 * math.pi - math.atan2(u.imag, u.real)
    c, s = math.cos(phi / 2.0), math.sin(phi / 2.0)
    K = MobiusMap(complex(c), complex(s), complex(-s), complex(c))
    return K @ A


def direction_to(w0: complex, w1: complex) -> complex:
    """Unit tangent at ``w0`` of the geodesic towards ``w1``."""
    D = (w1 - w0) / (w1 - w0.conjugate())
    u = 1j * D / abs(D)
    return u


def segment_frame(w0: complex, w1: complex) -> tuple[MobiusMap, float]:
    N = point_frame(w0, direction_to(w0, w1))
    return N, h2_distance(w0, w1)


def frame_crossing(N: MobiusMap, p: complex, q: complex):
    """Where the geodesic ``(p, q)`` meets the imaginary axis after ``N``.

    Returns ``(log height, crossing angle)`` or ``None``.
    """
    a, b = N(p), N(q)
    if is_inf(a) or is_inf(b):
        return None
    a, b = a.real, b.real
    if not a * b < 0:
        return None
    t = math.sqrt(-a * b)
    ang = math.acos(min(1.0, abs(a + b) / abs(b - a)))
    return math.log(t), ang


def _chart_for_face(P: IdealPolyhedron, f: int) -> Chart:
    face = P.faces[f]
    verts = face.vertices
    pts = [P.vertices[v] for v in verts]
    m = MobiusMap.from_points(pts[0], pts[1], pts[2])
    probe = face.circle.interior_point()
    wp = m(probe)
    if is_inf(wp) or wp.imag < 0:
        # fall back to a point just inside the circle if needed
        if is_inf(wp):
            wp = m(_inner_point(face.circle))
        if wp.imag < 0:
            m = MobiusMap(1j + 0j, 0j, 0j, -1j + 0j) @ m
    kap = cayley()
    ring = [kap(m(p)) for p in pts]
    ring = [z / abs(z) for z in ring]
    c = sum(ring) / len(ring)
    A = MobiusMap.from_coefficients(1.0, -c, -c.conjugate(), 1.0)
    ring2 = [A(z) for z in ring]
    ang = sorted(math.atan2(z.imag, z.real) % (2 * math.pi) for z in ring2)
    gaps = [(ang[(k + 1) % len(ang)] - ang[k]) % (2 * math.pi) for k in range(len(ang))]
    k = int(np.argmax(gaps))
    mid = ang[k] + 0.5 * gaps[k]
    rot = complex(math.cos(-mid), math.sin(-mid))
    Rm = MobiusMap.from_coefficients(rot, 0.0, 0.0, 1.0)
    to_chart = kap.inverse() @ Rm @ A @ kap @ m
    xs = []
    for p in pts:
        x = to_chart(p)
        if is_inf(x) or abs(x.imag) > 1e-6 * (1.0 + abs(x)):
            raise DomeError("chart normalization failed")
        xs.append(x.real)
    order = np.argsort(xs)
    return Chart(
        f,
        to_chart,
        to_chart.inverse(),
        tuple(verts[i] for i in order),
        tuple(float(xs[i]) for i in order),
    )


def _inner_point(circle) -> complex:
    if circle.is_line:
        return circle.normal * (circle.offset + 1.0)
    if circle.A > 0:
        return circle.center
    c = 0j if circle.is_line else circle.center
    return c + 2.0 * circle.radius + 1.0


@dataclass
class DomeSurface:
    hull: IdealPolyhedron
    charts: list[Chart]
    frames: list[EdgeFrame]
    gluings: dict = field(repr=False)  # (edge, src face) -> real map src chart -> dst chart
    lines: dict = field(repr=False)  # (face, edge) -> chart endpoints (p, q)
    _sides: list = field(repr=False, default_factory=list)

    @property
    def n_faces(self) -> int:
        return len(self.charts)

    def sides(self, f: int) -> list[int]:
        return self._sides[f]

    def other_face(self, e: int, f: int) -> int:
        return self.hull.other_face(e, f)

    def glue(self, e: int, src: int) -> MobiusMap:
        return self.gluings[(e, src)]

    def ambient(self, p: DomePoint) -> H3Point:
        return self.charts[p.face].from_chart.extend(H3Point(complex(p.w.real, 0.0), p.w.imag))

    def edge_point(self, e: int, s: float, face: int | None = None) -> DomePoint:
        """Edge point with arclength parameter ``s``, in ``face``'s chart."""
        fr = self.frames[e]
        ed = self.hull.edges[e]
        f = ed.left if face is None else face
        z = fr.S.inverse()(math.exp(s) * fr.normal[f])
        return DomePoint(f, self.charts[f].to_chart(z))

    def edge_ambient(self, e: int, s: float) -> H3Point:
        return self.frames[e].S.inverse().extend(H3Point(0j, math.exp(s)))

    def edge_param(self, e: int, face: int, w: complex) -> float:
        z = self.charts[face].from_chart(w)
        return math.log(abs(self.frames[e].S(z)))

    def chart_vertex(self, f: int, x: int) -> float:
        ch = self.charts[f]
        return ch.coords[ch.vertices.index(x)]

    def random_point(self, rng: np.random.Generator, face: int | None = None) -> DomePoint:
        """Random point of a face (Dirichlet weights in the Klein model)."""
        if face is None:
            face = int(rng.integers(self.n_faces))
        kap = cayley()
        ks = np.array([kap(complex(x)) for x in self.charts[face].coords])
        wts = rng.dirichlet(np.ones(len(ks)))
        k = complex(np.dot(wts, ks))
        r2 = abs(k) ** 2
        pz = k / (1.0 + math.sqrt(max(0.0, 1.0 - r2)))
        w = kap.inverse()(pz)
        return DomePoint(face, w)

    def holonomy_residuals(self) -> list[float]:
        """Per-vertex parabolicity residual of the composite gluing around it."""
        out = []
        P = self.hull
        for x in range(len(P.vertices)):
            f0 = next(f for f, F in enumerate(P.faces) if x in F.vertices)
            e0 = next(e for e in self.sides(f0) if x in P.edges[e].v)
            T = MobiusMap.identity()
            f, e = f0, e0
            for _ in range(4 * len(P.edges) + 4):
                nf = self.other_face(e, f)
                T = T @ self.glue(e, nf)
                e = next(e2 for e2 in self.sides(nf) if x in P.edges[e2].v and e2 != e)
                f = nf
                if f == f0 and e == e0:
                    break
            else:
                raise DomeError("vertex cycle does not close")
            xc = self.chart_vertex(f0, x)
            tr = abs(T.trace())
            out.append(max(abs(tr - 2.0), abs(T(complex(xc)) - xc) / (1.0 + abs(xc))))
        return out


def develop(P: IdealPolyhedron) -> DomeSurface:
    charts = [_chart_for_face(P, f) for f in range(len(P.faces))]
    sides: list[list[int]] = [[] for _ in P.faces]
    for e, ed in enumerate(P.edges):
        sides[ed.left].append(e)
        if ed.right != ed.left:
            sides[ed.right].append(e)
    frames = []
    gluings = {}
    lines = {}
    for e, ed in enumerate(P.edges):
        u, v = P.vertices[ed.v[0]], P.vertices[ed.v[1]]
        S = normalizing_map(u, v)
        normal, ray = {}, {}
        for f in (ed.left, ed.right):
            circ = P.faces[f].circle.image(S)
            # a line through 0: inward normal
            n = -circ.B / abs(circ.B)
            normal[f] = n
            other = next(w for w in P.faces[f].vertices if w not in ed.v)
            so = S(P.vertices[other])
            ray[f] = so / abs(so)
        nl = normal[ed.left]
        sweep = 1.0 if (-ray[ed.left] / nl).imag > 0 else -1.0
        frames.append(EdgeFrame(S, normal, ray, sweep))
        for src, dst in ((ed.left, ed.right), (ed.right, ed.left)):
            rot = normal[dst] / normal[src]
            R = MobiusMap.from_coefficients(rot, 0.0, 0.0, 1.0)
            g = charts[dst].to_chart @ S.inverse() @ R @ S @ charts[src].from_chart
            gluings[(e, src)] = g.realified(1e-6)
        for f in (ed.left, ed.right):
            lines[(f, e)] = (
                complex(charts[f].coords[charts[f].vertices.index(ed.v[0])]),
                complex(charts[f].coords[charts[f].vertices.index(ed.v[1])]),
            )
    return DomeSurface(P, charts, frames, gluings, lines, sides)


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class PathSegment:
    face: int
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return h2_distance(self.start, self.end)


@dataclass(frozen=True)
class Crossing:
    edge: int
    from_face: int
    to_face: int
    at: float  # arclength along the path
    angle: float  # in (0, pi/2]
    theta: float
    s: float  # arclength parameter along the edge


@dataclass
class DomePath:
    segments: list[PathSegment]
    crossings: list[Crossing]
    length: float
    certified: bool = True

    @property
    def intersection(self) -> float:
        return intersection_number(self)

    @property
    def start(self) -> DomePoint:
        s = self.segments[0]
        return DomePoint(s.face, s.start)

    @property
    def end(self) -> DomePoint:
        s = self.segments[-1]
        return DomePoint(s.face, s.end)


def intersection_number(path: DomePath, tol: float = 1e-12) -> float:
    total = 0.0
    for c in path.crossings:
        if c.angle <= tol:
            raise DomeError("path is not transverse to the edges")
        if tol < c.at < path.length - tol:
            total += c.theta
    return total


def _build_path(S: DomeSurface, a: DomePoint, b: DomePoint, steps, Ts, certified=True) -> DomePath:
    """Straight path from ``a`` to the developed image of ``b`` through the
    gallery ``steps`` = [(edge, next face), ...]; ``Ts[j]`` maps the chart of
    the j-th gallery face into the start chart."""
    bb = Ts[-1](b.w)
    N, L = segment_frame(a.w, bb)
    Ni = N.inverse()
    xs = []
    crossings = []
    face = a.face
    for j, (e, nf) in enumerate(steps):
        p, q = S.lines[(face, e)]
        hit = frame_crossing(N, Ts[j](p), Ts[j](q))
        if hit is None:
            raise DomeError("developed segment misses an edge of its gallery")
        ln_t, ang = hit
        X = Ni(1j * math.exp(ln_t))
        xs.append(X)
        wloc = Ts[j].inverse()(X)
        crossings.append(
            Crossing(e, face, nf, ln_t, ang, S.hull.edges[e].theta, S.edge_param(e, face, wloc))
        )
        face = nf
    segs = []
    pts = [a.w] + xs + [bb]
    faces = [a.face] + [nf for _, nf in steps]
    for j, f in enumerate(faces):
        Ti = Ts[j].inverse()
        w0 = a.w if j == 0 else Ti(pts[j])
        w1 = b.w if j == len(faces) - 1 else Ti(pts[j + 1])
        segs.append(PathSegment(f, complex(w0), complex(w1)))
    return DomePath(segs, crossings, L, certified)


def path_through(S: DomeSurface, a: DomePoint, b: DomePoint, faces_or_steps) -> DomePath:
    """Straight path from ``a`` to ``b`` through a prescribed gallery, given
    as a list of ``(edge, next face)`` steps."""
    Ts = [MobiusMap.identity()]
    f = a.face
    for e, nf in faces_or_steps:
        if S.other_face(e, f) != nf:
            raise DomeError("gallery steps are not adjacent")
        Ts.append(Ts[-1] @ S.glue(e, nf))
        f = nf
    if f != b.face:
        raise DomeError("gallery does not end at the target face")
    return _build_path(S, a, b, list(faces_or_steps), Ts)


def _gallery_search(S: DomeSurface, a: DomePoint, target_face: int, target_w, budget: int, nonempty: bool):
    """Best-first search over galleries from ``a.face``.

    Returns ``(best value, best steps, best transforms, certified)`` where the
    value is the developed distance from ``a`` to the image of ``target_w``.
    """
    best = math.inf
    best_steps: tuple = ()
    best_Ts: list = [MobiusMap.identity()]
    if a.face == target_face and not nonempty:
        best = h2_distance(a.w, target_w)
    counter = 0
    heap = [(0.0, counter, a.face, MobiusMap.identity(), -1, ())]
    expansions = 0
    certified = True
    while heap:
        bound, _, face, T, last, steps = heapq.heappop(heap)
        if bound >= best:
            break
        expansions += 1
        if expansions > budget:
            certified = False
            break
        for e in S.sides(face):
            if e == last:
                continue
            nf = S.other_face(e, face)
            p, q = S.lines[(face, e)]
            lb = max(bound, dist_to_geodesic(a.w, _real(T(p)), _real(T(q))))
            if lb >= best:
                continue
            Tn = T @ S.glue(e, nf)
            nsteps = steps + ((e, nf),)
            if nf == target_face:
                wt = Tn(target_w)
                if not is_inf(wt) and wt.imag > 0:
                    d = h2_distance(a.w, wt)
                    if d < best:
                        best, best_steps = d, nsteps
            counter += 1
            heapq.heappush(heap, (lb, counter, nf, Tn, e, nsteps))
    if best_steps:
        Ts = [MobiusMap.identity()]
        for e, nf in best_steps:
            Ts.append(Ts[-1] @ S.glue(e, nf))
        best_Ts = Ts
    return best, best_steps, best_Ts, certified


def geodesic_distance(S: DomeSurface, a: DomePoint, b: DomePoint, budget: int = DEFAULT_BUDGET):
    """Intrinsic distance between two dome points and a shortest path.

    The path carries ``certified=False`` when the search budget ran out; the
    length is then only an upper bound.
    """
    best, steps, Ts, cert = _gallery_search(S, a, b.face, b.w, budget, nonempty=False)
    if math.isinf(best):
        raise DomeError("no path found within budget")
    path = _build_path(S, a, b, list(steps), Ts, cert)
    return path.length, path


def trace_geodesic(S: DomeSurface, start: DomePoint, direction: complex, length: float, max_crossings: int = 100_000) -> DomePath:
    """Follow the geodesic from ``start`` in chart direction ``direction``."""
    if length < 0:
        raise ValueError("length must be nonnegative")
    face = start.face
    w = start.w
    u = direction / abs(direction)
    remaining = length
    entry = -1
    segs: list[PathSegment] = []
    crossings: list[Crossing] = []
    travelled = 0.0
    while True:
        N = point_frame(w, u)
        best = None
        for e in S.sides(face):
            if e == entry:
                continue
            p, q = S.lines[(face, e)]
            hit = frame_crossing(N, p, q)
            if hit is None or hit[0] <= 1e-13:
                continue
            if best is None or hit[0] < best[0]:
                best = (hit[0], hit[1], e)
        Ni = N.inverse()
        if best is None or best[0] >= remaining:
            end = Ni(1j * math.exp(remaining))
            segs.append(PathSegment(face, w, end))
            break
        ln_t, ang, e = best
        X = Ni(1j * math.exp(ln_t))
        segs.append(PathSegment(face, w, X))
        travelled += ln_t
        remaining -= ln_t
        nf = S.other_face(e, face)
        crossings.append(Crossing(e, face, nf, travelled, ang, S.hull.edges[e].theta, S.edge_param(e, face, X)))
        if len(crossings) > max_crossings:
            raise DomeError("too many crossings")
        tan = Ni.derivative(1j * math.exp(ln_t)) * 1j
        g = S.glue(e, face)
        tan = g.derivative(X) * tan
        w = g(X)
        u = tan / abs(tan)
        face, entry = nf, e
    return DomePath(segs, crossings, length, True)


# ---------------------------------------------------------------------------
# closed geodesics


@dataclass
class ClosedGeodesic:
    length: float
    intersection: float
    angles: tuple[float, ...]
    edges: tuple[int, ...]
    faces: tuple[int, ...]  # faces[j] --edges[j]--> faces[j+1]
    trace: float
    base: DomePoint  # a point of the geodesic in faces[0]
    direction: complex  # chart tangent at base

    @property
    def max_angle(self) -> float:
        return max(self.angles)

    @property
    def min_angle(self) -> float:
        return min(self.angles)


@dataclass
class ClosedGeodesicSearch:
    geodesics: list[ClosedGeodesic]
    exhausted: bool  # False if the budget or depth cap truncated the search


def _fixed_points(g: MobiusMap) -> tuple[complex, complex]:
    a, b, c, d = (x.real for x in (g.a, g.b, g.c, g.d))
    if abs(c) < 1e-300:
        return (complex(b / (d - a)), INF)
    disc = (d - a) ** 2 + 4.0 * b * c
    if disc <= 0:
        raise DomeError("not hyperbolic")
    s = math.sqrt(disc)
    return (complex((a - d + s) / (2 * c)), complex((a - d - s) / (2 * c)))


def _circle_angle(x: complex) -> float:
    if is_inf(x):
        return 0.0
    z = (x - 1j) / (x + 1j)
    return math.atan2(z.imag, z.real) % (2 * math.pi)


def _separates(p, q, f1, f2) -> bool:
    ap, aq, a1, a2 = (_circle_angle(x) for x in (p, q, f1, f2))
    lo, hi = min(ap, aq), max(ap, aq)
    in1 = lo < a1 < hi
    in2 = lo < a2 < hi
    return in1 != in2


def _line_distance(l0, l1) -> float:
    """Distance between two disjoint geodesics of the upper half-plane."""
    p0, q0 = l0
    p1, q1 = l1
    if is_inf(p0):
        p0, q0 = q0, p0
    N = normalizing_map(p0, q0)
    a, b = N(p1), N(q1)
    if is_inf(a) or is_inf(b):
        return 0.0
    a, b = a.real, b.real
    if abs(a) < 1e-300 or abs(b) < 1e-300 or a * b <= 0:
        return 0.0
    return math.acosh(max(1.0, abs(a + b) / abs(b - a)))


def closed_geodesic_for_cycle(S: DomeSurface, faces, edges) -> ClosedGeodesic | None:
    """Closed geodesic through a cyclic gallery, or ``None`` if the holonomy
    is not hyperbolic or its axis leaves the gallery."""
    k = len(edges)
    T = MobiusMap.identity()
    lines = []
    for j in range(k):
        f, e = faces[j], edges[j]
        nf = faces[(j + 1) % k]
        if S.other_face(e, f) != nf:
            raise DomeError("cycle steps are not adjacent")
        p, q = S.lines[(f, e)]
        lines.append((_real(T(p)), _real(T(q))))
        T = T @ S.glue(e, nf)
    g = T.realified(1e-6)
    tr = abs(g.trace().real)
    if tr <= 2.0 + PARABOLIC_TOL:
        return None
    length = 2.0 * math.acosh(tr / 2.0)
    f1, f2 = _fixed_points(g)
    for p, q in lines:
        if not _separates(p, q, f1, f2):
            return None
    # orient the axis towards the attracting point
    att, rep = (f1, f2)
    if not is_inf(f1) and abs(g.derivative(f1)) > 1.0:
        att, rep = f2, f1
    if is_inf(f1):
        att, rep = (f1, f2) if abs(g.a.real) > abs(g.d.real) else (f2, f1)
    N = normalizing_map(rep, att)
    try:
        N = N.realified(1e-9)
    except GeometryError:
        N = _flip(N)
    angles = []
    heights = []
    for p, q in lines:
        a, b = N(p), N(q)
        a, b = a.real, b.real
        angles.append(math.acos(min(1.0, abs(a + b) / abs(b - a))))
        heights.append(0.5 * math.log(-a * b) if a * b < 0 else 0.0)
    # base point: on the axis halfway between the entry and exit sides of faces[0]
    pe, qe = S.lines[(faces[0], edges[-1])]
    a, b = N(pe), N(qe)
    h_in = 0.5 * math.log(-(a.real * b.real)) if a.real * b.real < 0 else heights[0] - 1.0
    h_mid = 0.5 * (h_in + heights[0])
    Ni = N.inverse()
    base = Ni(1j * math.exp(h_mid))
    tan = Ni.derivative(1j * math.exp(h_mid)) * 1j
    theta = sum(S.hull.edges[e].theta for e in edges)
    return ClosedGeodesic(
        length,
        theta,
        tuple(angles),
        tuple(edges),
        tuple(faces),
        tr,
        DomePoint(faces[0], complex(base)),
        tan / abs(tan),
    )


def _flip(N: MobiusMap) -> MobiusMap:
    # normalizing_map(rep, att) may reverse the upper half-plane; post-compose
    # with z -> -z which keeps 0 and inf fixed
    M = MobiusMap(1j + 0j, 0j, 0j, -1j + 0j) @ N
    return M.realified(1e-9)


def _canonical(pairs: list[tuple[int, int]]) -> tuple:
    k = len(pairs)
    rev = [(pairs[0][0], pairs[-1][1])] + [(pairs[k - j][0], pairs[k - j - 1][1]) for j in range(1, k)]
    cands = []
    for seq in (pairs, rev):
        for r in range(k):
            cands.append(tuple(seq[r:] + seq[:r]))
    return min(cands)


def _is_power(pairs) -> bool:
    k = len(pairs)
    for d in range(1, k):
        if k % d == 0 and all(pairs[j] == pairs[j % d] for j in range(k)):
            return True
    return False


def closed_geodesics(
    S: DomeSurface,
    length_cap: float,
    budget: int = DEFAULT_BUDGET,
    max_depth: int | None = None,
) -> ClosedGeodesicSearch:
    """Primitive closed geodesics of length at most ``length_cap``.

    Depth-first over non-backtracking face cycles, each rooted at its
    smallest face id.  A branch is cut once the developed edge line is
    farther than ``length_cap`` from the first one.
    """
    if not length_cap > 0:
        raise ValueError("length_cap must be positive")
    if max_depth is None:
        max_depth = 2 * len(S.hull.vertices) + 4
    found: dict[tuple, ClosedGeodesic] = {}
    expansions = 0
    truncated = False
    for f0 in range(S.n_faces):
        # stack entries: faces, edges, T (current face chart -> start chart), first line
        stack = [((f0,), (), MobiusMap.identity(), None)]
        while stack:
            faces, edges, T, l0 = stack.pop()
            expansions += 1
            if expansions > budget:
                truncated = True
                break
            face = faces[-1]
            for e in S.sides(face):
                if edges and e == edges[-1]:
                    continue
                nf = S.other_face(e, face)
                if nf < f0:
                    continue
                p, q = S.lines[(face, e)]
                line = (_real(T(p)), _real(T(q)))
                if l0 is not None and _line_distance(l0, line) > length_cap:
                    continue
                nedges = edges + (e,)
                Tn = T @ S.glue(e, nf)
                if nf == f0 and len(nedges) >= 2 and e != nedges[0]:
                    pairs = list(zip(faces, nedges))
                    if not _is_power(pairs):
                        key = _canonical(pairs)
                        if key not in found:
                            cg = closed_geodesic_for_cycle(S, list(faces), list(nedges))
                            if cg is not None and cg.length <= length_cap:
                                found[key] = cg
                if len(nedges) >= max_depth:
                    truncated = True
                    continue
                stack.append((faces + (nf,), nedges, Tn, line if l0 is None else l0))
        if truncated and expansions > budget:
            break
    geos = sorted(found.values(), key=lambda g: (g.length, g.edges))
    return ClosedGeodesicSearch(geos, not truncated)


# ---------------------------------------------------------------------------
# injectivity radius


def loop_displacement(S: DomeSurface, x: DomePoint, faces, edges) -> float:
    """Length of the geodesic loop at ``x`` that runs once around the cyclic
    gallery ``faces``/``edges`` (which must start at ``x.face``)."""
    if faces[0] != x.face:
        raise DomeError("gallery must start at the base point's face")
    T = MobiusMap.identity()
    k = len(edges)
    for j in range(k):
        T = T @ S.glue(edges[j], faces[(j + 1) % k])
    return h2_distance(x.w, T(x.w))


def injectivity_radius(S: DomeSurface, x: DomePoint, budget: int = DEFAULT_BUDGET) -> tuple[float, bool]:
    """Half the shortest nontrivial developed loop displacement at ``x``."""
    best, _, _, cert = _gallery_search(S, x, x.face, x.w, budget, nonempty=True)
    return 0.5 * best, cert


def shortest_loop(S: DomeSurface, x: DomePoint, budget: int = DEFAULT_BUDGET) -> DomePath:
    """Shortest homotopically nontrivial geodesic loop based at ``x``."""
    best, steps, Ts, cert = _gallery_search(S, x, x.face, x.w, budget, nonempty=True)
    return _build_path(S, x, x, list(steps), Ts, cert)
