"""Ideal convex hulls of finite subsets of the Riemann sphere.

The hyperbolic hull of ideal points is, in the projective (Klein) ball, the
Euclidean hull of their stereographic lifts, so the combinatorics come from
an ordinary 3D hull.  Each face plane cuts the sphere in the face's support
circle; the support disk is the cap on the far side of the plane from the
hull.  Exterior dihedral angles are the angles between adjacent support
disks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .geom import GenCircle, GeometryError, circle_angle, ext, is_inf, to_sphere


class HullError(GeometryError):
    pass


@dataclass(frozen=True)
class Face:
    vertices: tuple[int, ...]  # counterclockwise seen from outside the hull
    circle: GenCircle


@dataclass(frozen=True)
class Edge:
    v: tuple[int, int]  # oriented as in the left face's cycle
    left: int
    right: int
    theta: float


@dataclass(frozen=True)
class IdealPolyhedron:
    vertices: tuple[complex, ...]
    faces: tuple[Face, ...]
    edges: tuple[Edge, ...]
    doubled: bool
    _edge_index: dict = field(default_factory=dict, repr=False, compare=False)

    def edge_id(self, i: int, j: int) -> int:
        return self._edge_index[frozenset((i, j))]

    def vertex_edges(self, x: int) -> list[int]:
        return [k for k, e in enumerate(self.edges) if x in e.v]

    def face_sides(self, f: int) -> list[tuple[int, int, int]]:
        """``(edge id, start vertex, end vertex)`` around face ``f``."""
        cyc = self.faces[f].vertices
        n = len(cyc)
        return [(self.edge_id(cyc[k], cyc[(k + 1) % n]), cyc[k], cyc[(k + 1) % n]) for k in range(n)]

    def other_face(self, e: int, f: int) -> int:
        ed = self.edges[e]
        return ed.right if ed.left == f else ed.left


def _check_points(points, min_chordal: float) -> list[complex]:
    pts = [ext(p) for p in points]
    if len(pts) < 3:
        raise HullError("need at least 3 points")
    lifts = np.array([to_sphere(p) for p in pts])
    d = np.linalg.norm(lifts[:, None, :] - lifts[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    if d.min() <= min_chordal:
        raise HullError("duplicate points")
    return pts


def _cyclic_order(idx: list[int], lifts: np.ndarray, normal: np.ndarray) -> list[int]:
    """Order points of a planar face counterclockwise about ``normal``."""
    P = lifts[idx]
    c = P.mean(axis=0)
    e1 = P[0] - c
    e1 -= normal * np.dot(e1, normal)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    ang = np.arctan2((P - c) @ e2, (P - c) @ e1)
    order = np.argsort(ang, kind="stable")
    return [idx[k] for k in order]


def _assemble(pts, faces, edges_theta, doubled) -> IdealPolyhedron:
    edges = []
    index = {}
    for (i, j), (left, right, theta) in edges_theta.items():
        index[frozenset((i, j))] = len(edges)
        edges.append(Edge((i, j), left, right, theta))
    return IdealPolyhedron(tuple(pts), tuple(faces), tuple(edges), doubled, index)


def build_hull(points, tol: float = 1e-10, min_chordal: float = 1e-8) -> IdealPolyhedron:
    """Ideal polyhedron spanned by ``points`` (complex numbers or ``INF``).

    Faces are maximal: coplanar lifted points within ``tol`` are merged into
    one polygonal face.  Concyclic input yields the doubled flat polygon with
    two mirror faces and all exterior angles equal to pi.
    """
    pts = _check_points(points, min_chordal)
    lifts = np.array([to_sphere(p) for p in pts])
    n = len(pts)

    centroid = lifts.mean(axis=0)
    _, sv, vt = np.linalg.svd(lifts - centroid)
    normal = vt[-1]
    off = float(np.dot(normal, centroid))
    if np.max(np.abs(lifts @ normal - off)) <= tol * 10:
        cyc = _cyclic_order(list(range(n)), lifts, normal)
        up = Face(tuple(cyc), GenCircle.from_sphere_plane(normal, off))
        down = Face(tuple(reversed(cyc)), GenCircle.from_sphere_plane(-normal, -off))
        et = {}
        for k in range(n):
            et[(cyc[k], cyc[(k + 1) % n])] = (0, 1, math.pi)
        return _assemble(pts, [up, down], et, True)

    try:
        ch = ConvexHull(lifts)
    except Exception as exc:  # qhull raises its own error type
        raise HullError(f"hull construction failed: {exc}") from exc

    # group coplanar simplices
    eqs = ch.equations
    m = len(eqs)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s in range(m):
        for nb in ch.neighbors[s]:
            if np.max(np.abs(eqs[s] - eqs[nb])) < max(tol * 100, 1e-9):
                parent[find(s)] = find(nb)
    groups: dict[int, list[int]] = {}
    for s in range(m):
        groups.setdefault(find(s), []).append(s)

    faces = []
    for g in sorted(groups.values(), key=min):
        nrm = eqs[g, :3].mean(axis=0)
        nrm /= np.linalg.norm(nrm)
        members = sorted({int(v) for s in g for v in ch.simplices[s]})
        c = float(np.mean(lifts[members] @ nrm))
        on = [i for i in range(n) if abs(float(lifts[i] @ nrm) - c) <= max(tol * 100, 1e-9)]
        cyc = _cyclic_order(on, lifts, nrm)
        faces.append(Face(tuple(cyc), GenCircle.from_sphere_plane(nrm, c)))

    # qhull drops nothing for points on a sphere, but check anyway
    used = {v for f in faces for v in f.vertices}
    if len(used) != n:
        raise HullError("some input points are not hull vertices")

    half: dict[tuple[int, int], int] = {}
    for fi, f in enumerate(faces):
        cyc = f.vertices
        for k in range(len(cyc)):
            key = (cyc[k], cyc[(k + 1) % len(cyc)])
            if key in half:
                raise HullError("inconsistent face orientation")
            half[key] = fi
    et = {}
    for (i, j), fl in half.items():
        if (j, i) not in half:
            raise HullError("hull is not closed")
        if (j, i) in et:
            continue
        fr = half[(j, i)]
        theta = circle_angle(faces[fl].circle, faces[fr].circle)
        et[(i, j)] = (fl, fr, theta)
    P = _assemble(pts, faces, et, False)
    V, E, F = n, len(P.edges), len(P.faces)
    if V - E + F != 2:
        raise HullError(f"Euler characteristic {V - E + F} != 2")
    return P


def support_circle(P: IdealPolyhedron, face: int) -> GenCircle:
    if not 0 <= face < len(P.faces):
        raise IndexError(f"no face {face}")
    return P.faces[face].circle


@dataclass
class HullDiagnostics:
    vertex_residuals: list[float]
    theta_sum_residual: float
    euler_ok: bool
    theta_range_ok: bool
    circle_residual: float
    emptiness_violation: float

    @property
    def max_vertex_residual(self) -> float:
        return max(self.vertex_residuals)

    def ok(self, tol: float = 1e-8) -> bool:
        return (
            self.max_vertex_residual < tol
            and self.theta_sum_residual < 10 * tol
            and self.euler_ok
            and self.theta_range_ok
            and self.circle_residual < 1e-9
            and self.emptiness_violation < 1e-9
        )


def validate(P: IdealPolyhedron) -> HullDiagnostics:
    n = len(P.vertices)
    sums = [0.0] * n
    for e in P.edges:
        for v in e.v:
            sums[v] += e.theta
    res = [abs(s - 2.0 * math.pi) for s in sums]
    total = abs(sum(e.theta for e in P.edges) - math.pi * n)
    if P.doubled:
        euler = len(P.faces) == 2 and P.faces[0].vertices == tuple(reversed(P.faces[1].vertices))
    else:
        euler = n - len(P.edges) + len(P.faces) == 2
    trange = all(0.0 < e.theta <= math.pi + 1e-12 for e in P.edges)
    cres = 0.0
    empt = 0.0
    for f in P.faces:
        n_, c = f.circle.sphere_plane()
        for v in f.vertices:
            cres = max(cres, f.circle.residual(P.vertices[v]))
        for x in P.vertices:
            # spherical signed distance of x into the open cap
            empt = max(empt, float(np.dot(n_, to_sphere(x))) - c)
    return HullDiagnostics(res, total, euler, trange, cres, empt)


def concyclic(P_or_points) -> bool:
    pts = P_or_points.vertices if isinstance(P_or_points, IdealPolyhedron) else P_or_points
    lifts = np.array([to_sphere(ext(p)) for p in pts])
    c = lifts.mean(axis=0)
    return np.linalg.svd(lifts - c, compute_uv=False)[-1] < 1e-9


def points_to_json(points) -> list:
    out = []
    for p in points:
        p = ext(p)
        out.append("inf" if is_inf(p) else {"re": p.real, "im": p.imag})
    return out


def points_from_json(data) -> list[complex]:
    out = []
    for p in data:
        if isinstance(p, str):
            out.append(ext(p))
        elif isinstance(p, dict):
            out.append(complex(float(p["re"]), float(p.get("im", 0.0))))
        elif isinstance(p, (list, tuple)):
            out.append(complex(float(p[0]), float(p[1])))
        else:
            out.append(ext(p))
    return out


def hull_to_json(P: IdealPolyhedron) -> dict:
    faces = []
    for f in P.faces:
        c = f.circle
        faces.append(
            {
                "vertices": list(f.vertices),
                "circle": {"A": c.A, "B": {"re": c.B.real, "im": c.B.imag}, "C": c.C},
            }
        )
    return {
        "vertices": points_to_json(P.vertices),
        "faces": faces,
        "edges": [{"v": list(e.v), "faces": [e.left, e.right], "theta": e.theta} for e in P.edges],
        "doubled": P.doubled,
    }
